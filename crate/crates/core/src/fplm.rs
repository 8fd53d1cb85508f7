//! Fixed-point Laplacian mapping.
//!
//! The embedding minimizes `tr(Y^T L Y)` with a subset of vertex images
//! pinned. On a strongly connected mesh the first round pins the vertices of
//! one seed simplex to a regular simplex; if the mesh has a boundary other
//! than that simplex, a second round re-pins the boundary vertices at their
//! first-round positions and frees everything else. Meshes with dividing
//! faces are instead embedded in one round with the boundary loop pinned to
//! a regular polygon.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laplacian::{
    assemble_system, build_weights, LaplacianError, WeightedGraph, DEFAULT_GAMMA,
};
use crate::matrix::Matrix;
use crate::simplicial::{
    detect_boundary_with, dividing_with, validate_mesh, BoundaryComplex, FaceTable, MeshError,
    SimplicialMesh, Violation, DEFAULT_VOLUME_TOLERANCE,
};
use crate::solver::{solve_spd, SolveConfig, SolveError, SolveMethod};

#[derive(Debug, Error)]
pub enum FplmError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh is not a valid simplex decomposition: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidMesh(Vec<Violation>),
    #[error(transparent)]
    Laplacian(#[from] LaplacianError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("mesh boundary has {0} components; only disk- or sphere-like meshes are supported")]
    MultipleBoundaryComponents(usize),
    #[error("mesh has {count} dividing faces; the polytope construction is only available for d = 2 (got d = {dim})")]
    DividingFacesUnsupported { dim: usize, count: usize },
    #[error("mesh has dividing faces but no boundary")]
    DividingWithoutBoundary,
    #[error("regular polygon targets need a triangle mesh (d = 2), got d = {0}")]
    PolygonDimension(usize),
    #[error("regular polygon targets need a single boundary loop, found {0}")]
    PolygonLoops(usize),
    #[error("seed simplex index {index} out of range ({count} simplices)")]
    SeedOutOfRange { index: usize, count: usize },
}

/// How the first-round seed simplex is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy", content = "value")]
pub enum SeedStrategy {
    /// Uniformly random simplex from a seeded generator.
    Random(u64),
    Index(usize),
    /// A simplex maximizing the graph distance of its nearest vertex to the
    /// boundary; ties go to the lowest index.
    MostInterior,
}

impl Default for SeedStrategy {
    fn default() -> Self {
        SeedStrategy::MostInterior
    }
}

impl std::str::FromStr for SeedStrategy {
    type Err = String;
    /// Accepts `most-interior`, `random`, `random:<seed>` and `index:<k>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let num = |t: Option<&str>| -> Result<u64, String> {
            t.ok_or_else(|| format!("'{s}' needs a value"))?
                .parse::<u64>()
                .map_err(|e| format!("'{s}': {e}"))
        };
        match head {
            "most-interior" if tail.is_none() => Ok(SeedStrategy::MostInterior),
            "random" => Ok(SeedStrategy::Random(match tail {
                Some(_) => num(tail)?,
                None => 0,
            })),
            "index" => Ok(SeedStrategy::Index(num(tail)? as usize)),
            _ => Err(format!(
                "unknown seed strategy '{s}' (expected most-interior, random[:seed] or index:<k>)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedKind {
    SelectedSimplex,
    InnerBoundary,
    RegularPolytope,
}

/// Pinned vertices and their target images (the rows of `C`).
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSet {
    pub indices: Vec<usize>,
    pub targets: Matrix,
    pub kind: FixedKind,
}

impl FixedPointSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// One round with a seed simplex (closed meshes, or meshes whose
    /// boundary is the seed simplex itself).
    #[serde(rename = "one-round")]
    OneRound,
    #[serde(rename = "two-round")]
    TwoRound,
    /// Boundary loop pinned to a regular polygon (meshes with dividing edges).
    #[serde(rename = "p-gon")]
    RegularPolygon,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::OneRound => "one-round",
            Branch::TwoRound => "two-round",
            Branch::RegularPolygon => "p-gon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonOrientation {
    Ccw,
    Cw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FplmOptions {
    pub gamma: f64,
    pub seed_strategy: SeedStrategy,
    pub solver: SolveConfig,
    pub polygon_orientation: PolygonOrientation,
    pub vol_tol: f64,
}

impl Default for FplmOptions {
    fn default() -> Self {
        FplmOptions {
            gamma: DEFAULT_GAMMA,
            seed_strategy: SeedStrategy::MostInterior,
            solver: SolveConfig::default(),
            polygon_orientation: PolygonOrientation::Ccw,
            vol_tol: DEFAULT_VOLUME_TOLERANCE,
        }
    }
}

/// Diagnostics of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub fixed: usize,
    pub free: usize,
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// The result of [`run_fplm`].
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `N x d` vertex images.
    pub coords: Matrix,
    pub rounds_run: usize,
    pub branch: Branch,
    pub seed_simplex: Option<usize>,
    /// For closed meshes: the seed simplex, conceptually removed to open
    /// the surface. Audits should exclude it.
    pub removed_simplex: Option<usize>,
    pub fixed_round1: FixedPointSet,
    pub fixed_round2: Option<FixedPointSet>,
    /// First-round coordinates when a second round ran.
    pub round1_coords: Option<Matrix>,
    pub stats: Vec<RoundStats>,
    pub graph: WeightedGraph,
    pub boundary: BoundaryComplex,
    /// The consistently oriented copy of the input the run worked on.
    pub oriented_mesh: SimplicialMesh,
}

impl Embedding {
    /// Fixed point set of the final solve.
    pub fn final_fixed(&self) -> &FixedPointSet {
        self.fixed_round2.as_ref().unwrap_or(&self.fixed_round1)
    }

    /// Mesh to audit against: the oriented input, minus the removed seed
    /// simplex for closed meshes.
    pub fn audit_mesh(&self) -> SimplicialMesh {
        without_simplex(&self.oriented_mesh, self.removed_simplex)
    }
}

pub(crate) fn without_simplex(mesh: &SimplicialMesh, drop: Option<usize>) -> SimplicialMesh {
    match drop {
        None => mesh.clone(),
        Some(k) => {
            let keep: Vec<usize> = mesh
                .simplices()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .flat_map(|(_, s)| s.iter().copied())
                .collect();
            SimplicialMesh::new(mesh.vertices().clone(), keep, mesh.intrinsic_dim())
                .expect("subset of a valid mesh")
        }
    }
}

/// Picks the seed simplex for the first round.
pub fn select_seed_simplex(
    mesh: &SimplicialMesh,
    strategy: SeedStrategy,
) -> Result<usize, FplmError> {
    let count = mesh.num_simplices();
    match strategy {
        SeedStrategy::Index(k) if k < count => Ok(k),
        SeedStrategy::Index(k) => Err(FplmError::SeedOutOfRange { index: k, count }),
        SeedStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(rng.gen_range(0..count))
        }
        SeedStrategy::MostInterior => {
            let boundary = detect_boundary_with(mesh, &FaceTable::build(mesh))?;
            Ok(most_interior(mesh, &boundary))
        }
    }
}

fn most_interior(mesh: &SimplicialMesh, boundary: &BoundaryComplex) -> usize {
    let n = mesh.num_vertices();
    let mut adj = vec![Vec::new(); n];
    for (i, j) in mesh.edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &v in &boundary.vertices {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut best = 0;
    let mut best_score = 0;
    for (k, s) in mesh.simplices().enumerate() {
        let score = s.iter().map(|&v| dist[v]).min().unwrap_or(0);
        if k == 0 || score > best_score {
            best = k;
            best_score = score;
        }
    }
    best
}

/// Vertices of a regular `d`-simplex with unit circumradius centered at the
/// origin. For `d = 2` the vertices sit at 90, 210 and 330 degrees.
pub fn regular_simplex(d: usize) -> Matrix {
    match d {
        1 => Matrix::from_rows(&[[-1.0], [1.0]]).unwrap(),
        2 => {
            let rows: Vec<[f64; 2]> = [90.0f64, 210.0, 330.0]
                .iter()
                .map(|deg| {
                    let t = deg.to_radians();
                    [t.cos(), t.sin()]
                })
                .collect();
            Matrix::from_rows(&rows).unwrap()
        }
        _ => {
            // Helmert basis of the hyperplane orthogonal to (1, ..., 1)
            let scale = ((d + 1) as f64 / d as f64).sqrt();
            let mut m = Matrix::zeros(d + 1, d);
            for j in 1..=d {
                let norm = ((j * (j + 1)) as f64).sqrt();
                for k in 0..=d {
                    let u = if k < j {
                        1.0
                    } else if k == j {
                        -(j as f64)
                    } else {
                        0.0
                    };
                    m.set(k, j - 1, scale * u / norm);
                }
            }
            m
        }
    }
}

/// First-round fixed points: the seed simplex's vertices, in their stored
/// order, pinned to a regular simplex.
pub fn make_c1(mesh: &SimplicialMesh, simplex: usize) -> FixedPointSet {
    FixedPointSet {
        indices: mesh.simplex(simplex).to_vec(),
        targets: regular_simplex(mesh.intrinsic_dim()),
        kind: FixedKind::SelectedSimplex,
    }
}

/// Pins the `k`-th vertex of the (single) boundary loop to angle `2 pi k / p`
/// on the unit circle.
pub fn make_regular_polygon(
    boundary: &BoundaryComplex,
    intrinsic_dim: usize,
    orientation: PolygonOrientation,
) -> Result<FixedPointSet, FplmError> {
    if intrinsic_dim != 2 {
        return Err(FplmError::PolygonDimension(intrinsic_dim));
    }
    if boundary.cycles.len() != 1 {
        return Err(FplmError::PolygonLoops(boundary.cycles.len()));
    }
    let cycle = &boundary.cycles[0];
    let p = cycle.len();
    let sign = match orientation {
        PolygonOrientation::Ccw => 1.0,
        PolygonOrientation::Cw => -1.0,
    };
    let mut targets = Matrix::zeros(p, 2);
    for k in 0..p {
        let t = 2.0 * PI * k as f64 / p as f64;
        targets.set(k, 0, t.cos());
        targets.set(k, 1, sign * t.sin());
    }
    Ok(FixedPointSet {
        indices: cycle.clone(),
        targets,
        kind: FixedKind::RegularPolytope,
    })
}

fn boundary_components(boundary: &BoundaryComplex) -> usize {
    // faces are connected when they share a (d-2)-face
    let nf = boundary.faces.len();
    if nf == 0 {
        return 0;
    }
    let mut parent: Vec<usize> = (0..nf).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut ridges: Vec<(Vec<usize>, usize)> = Vec::new();
    for (f, face) in boundary.faces.iter().enumerate() {
        if face.len() == 1 {
            continue;
        }
        for omit in 0..face.len() {
            let r: Vec<usize> = face
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != omit)
                .map(|(_, &v)| v)
                .collect();
            ridges.push((r, f));
        }
    }
    ridges.sort_unstable();
    for w in ridges.windows(2) {
        if w[0].0 == w[1].0 {
            let (a, b) = (find(&mut parent, w[0].1), find(&mut parent, w[1].1));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..nf).filter(|&f| find(&mut parent, f) == f).count()
}

fn solve_round(
    graph: &WeightedGraph,
    fixed: &FixedPointSet,
    config: &SolveConfig,
) -> Result<(Matrix, RoundStats), FplmError> {
    let system = assemble_system(graph, &fixed.indices)?;
    let rhs = system.rhs(&fixed.targets);
    let report = solve_spd(&system, &rhs, config)?;
    let coords = system.assemble_coords(&report.solution, &fixed.targets);
    let stats = RoundStats {
        fixed: fixed.len(),
        free: system.num_free(),
        method: report.method,
        iterations: report.iterations,
        relative_residual: report.relative_residual,
    };
    log::debug!(
        "solved {} free / {} fixed ({:?}, {} iterations, residual {:e})",
        stats.free,
        stats.fixed,
        stats.method,
        stats.iterations,
        stats.relative_residual
    );
    Ok((coords, stats))
}

/// Runs the two-round fixed-point Laplacian mapping on a mesh.
pub fn run_fplm(mesh: &SimplicialMesh, options: &FplmOptions) -> Result<Embedding, FplmError> {
    options.solver.validate()?;
    let violations = validate_mesh(mesh, options.vol_tol);
    if !violations.is_empty() {
        return Err(FplmError::InvalidMesh(violations));
    }
    let mesh = mesh.oriented()?;
    let d = mesh.intrinsic_dim();
    let table = FaceTable::build(&mesh);
    let boundary = detect_boundary_with(&mesh, &table)?;
    if d == 2 && boundary.cycles.len() > 1 {
        return Err(FplmError::MultipleBoundaryComponents(boundary.cycles.len()));
    }
    if d >= 3 {
        let parts = boundary_components(&boundary);
        if parts > 1 {
            return Err(FplmError::MultipleBoundaryComponents(parts));
        }
    }
    let graph = build_weights(&mesh, options.gamma)?;
    let dividing = dividing_with(&table, &boundary);

    if dividing.is_empty() {
        let seed = select_seed_simplex_with(&mesh, &boundary, options.seed_strategy)?;
        let c1 = make_c1(&mesh, seed);
        let (y1, stats1) = solve_round(&graph, &c1, &options.solver)?;

        let mut seed_vertices = c1.indices.clone();
        seed_vertices.sort_unstable();
        if boundary.is_empty() || boundary.vertices == seed_vertices {
            let removed = boundary.is_empty().then_some(seed);
            return Ok(Embedding {
                coords: y1,
                rounds_run: 1,
                branch: Branch::OneRound,
                seed_simplex: Some(seed),
                removed_simplex: removed,
                fixed_round1: c1,
                fixed_round2: None,
                round1_coords: None,
                stats: vec![stats1],
                graph,
                boundary,
                oriented_mesh: mesh,
            });
        }

        let indices = match boundary.cycles.first() {
            // keep loop order so the pinned polygon is easy to inspect
            Some(cycle) if d == 2 => cycle.clone(),
            _ => boundary.vertices.clone(),
        };
        let c2 = FixedPointSet {
            targets: y1.select_rows(&indices),
            indices,
            kind: FixedKind::InnerBoundary,
        };
        let (y2, stats2) = solve_round(&graph, &c2, &options.solver)?;
        return Ok(Embedding {
            coords: y2,
            rounds_run: 2,
            branch: Branch::TwoRound,
            seed_simplex: Some(seed),
            removed_simplex: None,
            fixed_round1: c1,
            fixed_round2: Some(c2),
            round1_coords: Some(y1),
            stats: vec![stats1, stats2],
            graph,
            boundary,
            oriented_mesh: mesh,
        });
    }

    if d != 2 {
        return Err(FplmError::DividingFacesUnsupported {
            dim: d,
            count: dividing.len(),
        });
    }
    if boundary.is_empty() {
        return Err(FplmError::DividingWithoutBoundary);
    }
    let c1 = make_regular_polygon(&boundary, d, options.polygon_orientation)?;
    let (y1, stats1) = solve_round(&graph, &c1, &options.solver)?;
    Ok(Embedding {
        coords: y1,
        rounds_run: 1,
        branch: Branch::RegularPolygon,
        seed_simplex: None,
        removed_simplex: None,
        fixed_round1: c1,
        fixed_round2: None,
        round1_coords: None,
        stats: vec![stats1],
        graph,
        boundary,
        oriented_mesh: mesh,
    })
}

fn select_seed_simplex_with(
    mesh: &SimplicialMesh,
    boundary: &BoundaryComplex,
    strategy: SeedStrategy,
) -> Result<usize, FplmError> {
    match strategy {
        SeedStrategy::MostInterior => Ok(most_interior(mesh, boundary)),
        other => select_seed_simplex(mesh, other),
    }
}

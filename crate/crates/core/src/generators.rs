//! Synthetic manifolds with ground-truth latent coordinates.
//!
//! Surfaces given as graphs of functions (and the swiss roll) are sampled on
//! a latent rectangle and triangulated there, so the latent drawing is itself
//! a valid embedding. The sphere is an icosphere and the 3-ball a voxelized
//! cube grid lifted onto a cap of a 3-sphere in `R^4`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::predicates::{incircle, orient2d};
use crate::simplicial::{
    detect_boundary, detect_dividing_simplices, split_faces, validate_mesh, MeshError,
    SimplicialMesh, Violation, DEFAULT_VOLUME_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("unknown generator kind {0:?}")]
    UnknownKind(String),
    #[error("cannot parse resolution {0:?}; expected NxM or a single integer")]
    BadResolution(String),
    #[error("resolution {resolution} is too small for {kind}: {reason}")]
    ResolutionTooSmall {
        kind: GeneratorKind,
        resolution: Resolution,
        reason: String,
    },
    #[error("{kind} does not support {triangulation} triangulation")]
    UnsupportedTriangulation {
        kind: GeneratorKind,
        triangulation: Triangulation,
    },
    #[error("generated mesh is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Degenerate(Vec<Violation>),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    SwissRoll,
    Paraboloid,
    MonkeySaddle,
    TwinPeaks,
    Sphere,
    Ball3,
    GridDisk,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        GeneratorKind::SwissRoll,
        GeneratorKind::Paraboloid,
        GeneratorKind::MonkeySaddle,
        GeneratorKind::TwinPeaks,
        GeneratorKind::Sphere,
        GeneratorKind::Ball3,
        GeneratorKind::GridDisk,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GeneratorKind::SwissRoll => "swiss-roll",
            GeneratorKind::Paraboloid => "paraboloid",
            GeneratorKind::MonkeySaddle => "monkey-saddle",
            GeneratorKind::TwinPeaks => "twin-peaks",
            GeneratorKind::Sphere => "sphere",
            GeneratorKind::Ball3 => "ball3",
            GeneratorKind::GridDisk => "grid-disk",
        }
    }

    pub fn default_resolution(&self) -> Resolution {
        match self {
            GeneratorKind::Sphere => Resolution::Level(3),
            GeneratorKind::Ball3 => Resolution::Level(5),
            _ => Resolution::Grid(30, 30),
        }
    }

    /// Whether the latent domain is a planar region sampled on a rectangle.
    pub fn is_planar_patch(&self) -> bool {
        !matches!(self, GeneratorKind::Sphere | GeneratorKind::Ball3)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorKind {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GeneratorError::UnknownKind(s.to_string()))
    }
}

/// Per-axis vertex counts, or a single level (icosphere subdivisions, cube
/// cells per axis for the ball, or `N` meaning `NxN` for grids).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    Grid(usize, usize),
    Level(usize),
}

impl Resolution {
    fn grid(&self) -> (usize, usize) {
        match *self {
            Resolution::Grid(a, b) => (a, b),
            Resolution::Level(n) => (n, n),
        }
    }

    fn level(&self) -> usize {
        match *self {
            Resolution::Grid(a, _) => a,
            Resolution::Level(n) => n,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Grid(a, b) => write!(f, "{a}x{b}"),
            Resolution::Level(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Resolution {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadResolution(s.to_string());
        let s = s.trim();
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(Resolution::Grid(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            )),
            None => Ok(Resolution::Level(s.parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Triangulation {
    #[default]
    StructuredGrid,
    Delaunay2d,
}

impl fmt::Display for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Triangulation::StructuredGrid => "structured-grid",
            Triangulation::Delaunay2d => "delaunay2d",
        })
    }
}

impl FromStr for Triangulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured-grid" | "grid" => Ok(Triangulation::StructuredGrid),
            "delaunay2d" | "delaunay" => Ok(Triangulation::Delaunay2d),
            _ => Err(format!(
                "unknown triangulation {s:?}; expected structured-grid or delaunay2d"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub resolution: Resolution,
    pub seed: u64,
    pub triangulation: Triangulation,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        GeneratorSpec {
            kind,
            resolution: kind.default_resolution(),
            seed: 0,
            triangulation: Triangulation::StructuredGrid,
        }
    }

    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }
}

/// A generated mesh in ambient space plus the latent coordinates of its
/// vertices.
#[derive(Debug, Clone)]
pub struct GeneratedMesh {
    pub mesh: SimplicialMesh,
    pub latent: Matrix,
}

/// Builds the manifold sample described by `spec`. Every output passes
/// [`validate_mesh`] with the default tolerance.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedMesh, GeneratorError> {
    let out = match spec.kind {
        GeneratorKind::Sphere => {
            require_grid_triangulation(spec)?;
            icosphere(spec.resolution.level())
        }
        GeneratorKind::Ball3 => {
            require_grid_triangulation(spec)?;
            let r = spec.resolution.level();
            if r < 2 {
                return Err(too_small(spec, "need at least 2 cells per axis"));
            }
            ball3(r)?
        }
        kind => {
            let (nx, ny) = spec.resolution.grid();
            if nx < 2 || ny < 2 {
                return Err(too_small(spec, "need at least 2 samples per axis"));
            }
            let (lo, hi) = latent_domain(kind);
            let (latent, tris) = match spec.triangulation {
                Triangulation::StructuredGrid => structured_grid(nx, ny, lo, hi),
                Triangulation::Delaunay2d => {
                    let pts = jittered_samples(nx, ny, lo, hi, spec.seed);
                    let tris = delaunay2d(&pts)?;
                    (pts, tris)
                }
            };
            let mut ambient = Matrix::zeros(0, 3);
            for p in latent.rows_iter() {
                ambient.push_row(&surface_point(kind, p[0], p[1]));
            }
            let mesh = SimplicialMesh::from_simplex_list(ambient, &tris, 2)?;
            GeneratedMesh { mesh, latent }
        }
    };
    let violations = validate_mesh(&out.mesh, DEFAULT_VOLUME_TOLERANCE);
    if !violations.is_empty() {
        return Err(GeneratorError::Degenerate(violations));
    }
    Ok(out)
}

fn too_small(spec: &GeneratorSpec, reason: &str) -> GeneratorError {
    GeneratorError::ResolutionTooSmall {
        kind: spec.kind,
        resolution: spec.resolution,
        reason: reason.to_string(),
    }
}

fn require_grid_triangulation(spec: &GeneratorSpec) -> Result<(), GeneratorError> {
    if spec.triangulation != Triangulation::StructuredGrid {
        return Err(GeneratorError::UnsupportedTriangulation {
            kind: spec.kind,
            triangulation: spec.triangulation,
        });
    }
    Ok(())
}

fn latent_domain(kind: GeneratorKind) -> ([f64; 2], [f64; 2]) {
    match kind {
        GeneratorKind::SwissRoll => ([1.5 * PI, 0.0], [4.5 * PI, 10.0]),
        GeneratorKind::GridDisk => ([0.0, 0.0], [1.0, 1.0]),
        _ => ([-1.0, -1.0], [1.0, 1.0]),
    }
}

/// Maps latent `(u, v)` to `R^3`.
pub fn surface_point(kind: GeneratorKind, u: f64, v: f64) -> [f64; 3] {
    match kind {
        GeneratorKind::SwissRoll => [u * u.cos(), v, u * u.sin()],
        GeneratorKind::Paraboloid => [u, v, u * u + v * v],
        GeneratorKind::MonkeySaddle => [u, v, u * u * u - 3.0 * u * v * v],
        GeneratorKind::TwinPeaks => [u, v, (PI * u).sin() * (3.0 * v).tanh()],
        GeneratorKind::GridDisk => [u, v, 0.0],
        GeneratorKind::Sphere | GeneratorKind::Ball3 => {
            panic!("{kind} is not a graph-of-function surface")
        }
    }
}

/// `nx * ny` lattice points over the rectangle `[lo, hi]`, row-major in `y`,
/// each cell split along the diagonal that points away from the grid centre.
/// For `nx, ny >= 3` no interior edge joins two boundary vertices.
pub fn structured_grid(
    nx: usize,
    ny: usize,
    lo: [f64; 2],
    hi: [f64; 2],
) -> (Matrix, Vec<[usize; 3]>) {
    let mut pts = Matrix::zeros(0, 2);
    for j in 0..ny {
        for i in 0..nx {
            let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (nx - 1) as f64;
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / (ny - 1) as f64;
            pts.push_row(&[x, y]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let (mx, my) = ((nx - 1) as f64 / 2.0, (ny - 1) as f64 / 2.0);
    let mut tris = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let left = (i as f64 + 0.5) < mx;
            let low = (j as f64 + 0.5) < my;
            if left == low {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                tris.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                tris.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    (pts, tris)
}

/// One uniformly jittered sample per lattice cell (stratified sampling),
/// keeping the jitter away from cell borders.
fn jittered_samples(nx: usize, ny: usize, lo: [f64; 2], hi: [f64; 2], seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Matrix::zeros(0, 2);
    for j in 0..ny {
        for i in 0..nx {
            let u = (i as f64 + rng.gen_range(0.1..0.9)) / nx as f64;
            let v = (j as f64 + rng.gen_range(0.1..0.9)) / ny as f64;
            pts.push_row(&[lo[0] + (hi[0] - lo[0]) * u, lo[1] + (hi[1] - lo[1]) * v]);
        }
    }
    pts
}

/// Subdivided icosahedron on the unit sphere: `10 * 4^level + 2` vertices,
/// outward-oriented faces. Latent coordinates are (polar, azimuthal) angles.
pub fn icosphere(level: usize) -> GeneratedMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = Vec::with_capacity(12);
    for &a in &[-1.0, 1.0] {
        for &b in &[-t, t] {
            verts.push([0.0, a, b]);
            verts.push([a, b, 0.0]);
            verts.push([b, 0.0, a]);
        }
    }
    // icosahedron faces: mutually adjacent triples at edge length 2
    let adjacent = |p: &[f64; 3], q: &[f64; 3]| {
        let d2: f64 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum();
        (d2 - 4.0).abs() < 1e-9
    };
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(20);
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if adjacent(&verts[a], &verts[b])
                    && adjacent(&verts[b], &verts[c])
                    && adjacent(&verts[a], &verts[c])
                {
                    faces.push(outward([a, b, c], &verts));
                }
            }
        }
    }
    for v in verts.iter_mut() {
        *v = normalize(*v);
    }
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let latent_rows: Vec<[f64; 2]> = verts
        .iter()
        .map(|p| [p[2].clamp(-1.0, 1.0).acos(), p[1].atan2(p[0])])
        .collect();
    let mesh = SimplicialMesh::from_simplex_list(Matrix::from_rows(&verts).unwrap(), &faces, 2)
        .expect("icosphere connectivity is valid");
    GeneratedMesh {
        mesh,
        latent: Matrix::from_rows(&latent_rows).unwrap(),
    }
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

fn outward(f: [usize; 3], verts: &[[f64; 3]]) -> [usize; 3] {
    let (a, b, c) = (verts[f[0]], verts[f[1]], verts[f[2]]);
    let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    if n[0] * a[0] + n[1] * a[1] + n[2] * a[2] >= 0.0 {
        f
    } else {
        [f[0], f[2], f[1]]
    }
}

/// The five-tetrahedron split of a unit cube, as corner offsets. Even cells
/// put the central tetrahedron on the even corners, odd cells on the odd
/// ones, so neighbouring cells agree on every shared face diagonal.
fn cube_split(odd: bool) -> [[[usize; 3]; 4]; 5] {
    let flip = |c: [usize; 3]| if odd { [1 - c[0], c[1], c[2]] } else { c };
    let even_tets = [
        [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]],
        [[1, 0, 0], [0, 0, 0], [1, 1, 0], [1, 0, 1]],
        [[0, 1, 0], [0, 0, 0], [0, 1, 1], [1, 1, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 1], [0, 1, 1]],
        [[1, 1, 1], [1, 1, 0], [0, 1, 1], [1, 0, 1]],
    ];
    even_tets.map(|t| t.map(flip))
}

/// Voxelized unit ball: `r` cells per axis over `[-1, 1]^3`, every cell
/// whose centre lies inside the ball split into five tetrahedra. Interior
/// triangles with all vertices on the boundary are removed by inserting a
/// vertex at their centroid. Latent coordinates are the points in `R^3`;
/// the ambient copy lifts them onto the sphere of radius 2 in `R^4`
/// (lattice corners reach `|p|^2 = 3`).
pub fn ball3(r: usize) -> Result<GeneratedMesh, GeneratorError> {
    let h = 2.0 / r as f64;
    let n = r + 1;
    let gid = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    let mut tets: Vec<[usize; 4]> = Vec::new();
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                let c = [i, j, k].map(|x| -1.0 + h * (x as f64 + 0.5));
                if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] >= 1.0 {
                    continue;
                }
                for t in cube_split((i + j + k) % 2 == 1) {
                    tets.push(t.map(|o| gid(i + o[0], j + o[1], k + o[2])));
                }
            }
        }
    }
    // drop unused lattice points
    let mut remap = vec![usize::MAX; n * n * n];
    let mut latent = Matrix::zeros(0, 3);
    for t in tets.iter_mut() {
        for v in t.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = latent.nrows();
                let (i, j, k) = (*v % n, (*v / n) % n, *v / (n * n));
                latent.push_row(&[i, j, k].map(|x| -1.0 + h * x as f64));
            }
            *v = remap[*v];
        }
    }
    let mesh = SimplicialMesh::from_simplex_list(latent, &tets, 3)?.oriented()?;
    let boundary = detect_boundary(&mesh)?;
    let dividing = detect_dividing_simplices(&mesh, &boundary);
    let (latent_mesh, _) = split_faces(&mesh, &dividing, |face| {
        let mut c = vec![0.0; 3];
        for &v in face {
            for (x, y) in c.iter_mut().zip(mesh.vertices().row(v)) {
                *x += y / face.len() as f64;
            }
        }
        c
    });
    let latent = latent_mesh.vertices().clone();
    let mut ambient = Matrix::zeros(0, 4);
    for p in latent.rows_iter() {
        let s: f64 = p.iter().map(|x| x * x).sum();
        ambient.push_row(&[p[0], p[1], p[2], (4.0 - s).sqrt()]);
    }
    let simplices: Vec<&[usize]> = latent_mesh.simplices().collect();
    let mesh = SimplicialMesh::from_simplex_list(ambient, &simplices, 3)?;
    Ok(GeneratedMesh { mesh, latent })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelaunayError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("points {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("point {0} is not finite")]
    NonFinite(usize),
    #[error("triangulation does not cover the convex hull ({got} triangles, expected {expected})")]
    Incomplete { got: usize, expected: usize },
}

/// Delaunay triangulation of planar points by Bowyer-Watson insertion with
/// exact predicates. Triangles are counterclockwise.
///
/// A point exactly on a circumcircle does not invalidate the triangle, so
/// cocircular configurations keep whichever diagonal the insertion order
/// produced first; the result is a deterministic function of the input.
pub fn delaunay2d(points: &Matrix) -> Result<Vec<[usize; 3]>, DelaunayError> {
    let n = points.nrows();
    if n < 3 {
        return Err(DelaunayError::TooFewPoints(n));
    }
    if let Some(i) = (0..n).find(|&i| !points.row(i).iter().all(|x| x.is_finite())) {
        return Err(DelaunayError::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (points.row(a), points.row(b));
        p.partial_cmp(q).unwrap().then(a.cmp(&b))
    });
    if let Some(w) = order.windows(2).find(|w| points.row(w[0]) == points.row(w[1])) {
        return Err(DelaunayError::Duplicate(w[0].min(w[1]), w[0].max(w[1])));
    }
    let (a0, b0) = (points.row(0), points.row(1));
    if (2..n).all(|i| orient2d(a0, b0, points.row(i)) == 0) {
        return Err(DelaunayError::Collinear);
    }

    let (lo, hi) = points.bounding_box().unwrap();
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (cx, cy) = ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0);
    let big = 1e5 * span;
    let mut pts: Vec<[f64; 2]> = points.rows_iter().map(|p| [p[0], p[1]]).collect();
    pts.push([cx - big, cy - big]);
    pts.push([cx + big, cy - big]);
    pts.push([cx, cy + big]);

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    let mut alive: Vec<bool> = vec![true];
    // directed edge -> triangle on its left
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    let add = |t: [usize; 3],
               tris: &mut Vec<[usize; 3]>,
               alive: &mut Vec<bool>,
               owner: &mut HashMap<(usize, usize), usize>| {
        let k = tris.len();
        tris.push(t);
        alive.push(true);
        for e in 0..3 {
            owner.insert((t[e], t[(e + 1) % 3]), k);
        }
    };
    for e in 0..3 {
        edge_owner.insert((tris[0][e], tris[0][(e + 1) % 3]), 0);
    }
    let mut last = 0usize;
    for i in 0..n {
        let p = pts[i];
        // walk from the last created triangle towards p
        let mut cur = if alive[last] {
            last
        } else {
            alive.iter().rposition(|&a| a).unwrap()
        };
        let mut steps = 0;
        'walk: loop {
            steps += 1;
            let t = tris[cur];
            for e in 0..3 {
                let (u, v) = (t[e], t[(e + 1) % 3]);
                if orient2d(&pts[u], &pts[v], &p) < 0 {
                    if let Some(&next) = edge_owner.get(&(v, u)) {
                        if steps < 4 * tris.len() + 16 {
                            cur = next;
                            continue 'walk;
                        }
                    }
                }
            }
            break;
        }
        if !contains(&tris[cur], &pts, &p) {
            // walking can cycle in degenerate configurations; fall back to a scan
            cur = (0..tris.len())
                .find(|&k| alive[k] && contains(&tris[k], &pts, &p))
                .expect("point lies inside the super triangle");
        }
        // grow the cavity of triangles whose circumcircle strictly contains p
        let mut cavity = vec![cur];
        let mut in_cavity: HashMap<usize, ()> = HashMap::new();
        in_cavity.insert(cur, ());
        let mut stack = vec![cur];
        while let Some(k) = stack.pop() {
            let t = tris[k];
            for e in 0..3 {
                let (u, v) = (t[e], t[(e + 1) % 3]);
                if let Some(&nb) = edge_owner.get(&(v, u)) {
                    if alive[nb] && !in_cavity.contains_key(&nb) {
                        let s = tris[nb];
                        if incircle(&pts[s[0]], &pts[s[1]], &pts[s[2]], &p) > 0 {
                            in_cavity.insert(nb, ());
                            cavity.push(nb);
                            stack.push(nb);
                        }
                    }
                }
            }
        }
        let mut rim = Vec::new();
        for &k in &cavity {
            let t = tris[k];
            for e in 0..3 {
                let (u, v) = (t[e], t[(e + 1) % 3]);
                let inner = edge_owner
                    .get(&(v, u))
                    .is_some_and(|nb| in_cavity.contains_key(nb));
                if !inner {
                    rim.push((u, v));
                }
            }
        }
        for &k in &cavity {
            alive[k] = false;
            let t = tris[k];
            for e in 0..3 {
                let key = (t[e], t[(e + 1) % 3]);
                if edge_owner.get(&key) == Some(&k) {
                    edge_owner.remove(&key);
                }
            }
        }
        for (u, v) in rim {
            add([u, v, i], &mut tris, &mut alive, &mut edge_owner);
        }
        last = tris.len() - 1;
    }

    let out: Vec<[usize; 3]> = tris
        .iter()
        .zip(&alive)
        .filter(|(t, &a)| a && t.iter().all(|&v| v < n))
        .map(|(t, _)| *t)
        .collect();
    let expected = 2 * n - hull_boundary_count(points) - 2;
    if out.len() != expected {
        return Err(DelaunayError::Incomplete {
            got: out.len(),
            expected,
        });
    }
    Ok(out)
}

fn contains(t: &[usize; 3], pts: &[[f64; 2]], p: &[f64; 2]) -> bool {
    (0..3).all(|e| orient2d(&pts[t[e]], &pts[t[(e + 1) % 3]], p) >= 0)
}

/// Number of input points on the boundary of their convex hull, including
/// points in the relative interior of hull edges.
fn hull_boundary_count(points: &Matrix) -> usize {
    let hull = match crate::hull::hull_2d(points) {
        Some(h) => h.vertices,
        None => return points.nrows(),
    };
    let h = hull.len();
    (0..points.nrows())
        .filter(|&i| {
            let p = points.row(i);
            (0..h).any(|e| {
                let (a, b) = (points.row(hull[e]), points.row(hull[(e + 1) % h]));
                orient2d(a, b, p) == 0
                    && p[0] >= a[0].min(b[0])
                    && p[0] <= a[0].max(b[0])
                    && p[1] >= a[1].min(b[1])
                    && p[1] <= a[1].max(b[1])
            })
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind, res: &str) -> GeneratorSpec {
        GeneratorSpec::new(kind).with_resolution(res.parse().unwrap())
    }

    #[test]
    fn parsing() {
        assert_eq!("30x20".parse::<Resolution>().unwrap(), Resolution::Grid(30, 20));
        assert_eq!("3".parse::<Resolution>().unwrap(), Resolution::Level(3));
        assert!("3x".parse::<Resolution>().is_err());
        assert!("abc".parse::<Resolution>().is_err());
        for k in GeneratorKind::ALL {
            assert_eq!(k.as_str().parse::<GeneratorKind>().unwrap(), k);
        }
        assert!("torus".parse::<GeneratorKind>().is_err());
    }

    #[test]
    fn grid_disk_2x2() {
        let g = generate(&spec(GeneratorKind::GridDisk, "2x2")).unwrap();
        assert_eq!(g.mesh.num_vertices(), 4);
        assert_eq!(g.mesh.num_simplices(), 2);
        assert!(generate(&spec(GeneratorKind::GridDisk, "1x5")).is_err());
    }

    #[test]
    fn icosahedron_combinatorics() {
        let g = generate(&spec(GeneratorKind::Sphere, "0")).unwrap();
        assert_eq!(g.mesh.num_vertices(), 12);
        assert_eq!(g.mesh.num_simplices(), 20);
        assert_eq!(g.mesh.edges().len(), 30);
        assert!(detect_boundary(&g.mesh).unwrap().is_empty());
    }

    #[test]
    fn icosphere_counts_and_euler() {
        for level in 0..=3 {
            let g = icosphere(level);
            let (v, e, f) = (
                g.mesh.num_vertices() as i64,
                g.mesh.edges().len() as i64,
                g.mesh.num_simplices() as i64,
            );
            assert_eq!(v, 10 * 4i64.pow(level as u32) + 2);
            assert_eq!(v - e + f, 2);
            for p in g.mesh.vertices().rows_iter() {
                let r: f64 = p.iter().map(|x| x * x).sum();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn surfaces_have_expected_size_and_no_dividing_edges() {
        for kind in [
            GeneratorKind::SwissRoll,
            GeneratorKind::Paraboloid,
            GeneratorKind::MonkeySaddle,
            GeneratorKind::TwinPeaks,
            GeneratorKind::GridDisk,
        ] {
            for n in [3, 4, 7, 30] {
                let g = generate(&spec(kind, &format!("{n}x{n}"))).unwrap();
                assert_eq!(g.mesh.num_vertices(), n * n);
                assert_eq!(g.mesh.num_simplices(), 2 * (n - 1) * (n - 1));
                let b = detect_boundary(&g.mesh).unwrap();
                assert!(detect_dividing_simplices(&g.mesh, &b).is_empty(), "{kind} {n}");
                assert_eq!(b.vertices.len(), 4 * (n - 1));
            }
        }
    }

    #[test]
    fn surface_formulas() {
        let p = surface_point(GeneratorKind::MonkeySaddle, 0.5, -0.5);
        assert_eq!(p[2], 0.125 - 3.0 * 0.5 * 0.25);
        let p = surface_point(GeneratorKind::SwissRoll, 2.0 * PI, 3.0);
        assert!((p[0] - 2.0 * PI).abs() < 1e-12 && p[1] == 3.0 && p[2].abs() < 1e-12);
        let p = surface_point(GeneratorKind::Paraboloid, 0.5, -0.5);
        assert_eq!(p[2], 0.5);
    }

    #[test]
    fn ball3_faces_shared_by_at_most_two() {
        for r in [2, 3, 4, 6] {
            let g = generate(&spec(GeneratorKind::Ball3, &r.to_string())).unwrap();
            assert_eq!(g.mesh.ambient_dim(), 4);
            assert_eq!(g.latent.ncols(), 3);
            // brute-force incidence count over sorted triangles
            let mut count: HashMap<[usize; 3], usize> = HashMap::new();
            for s in g.mesh.simplices() {
                for omit in 0..4 {
                    let mut f: Vec<usize> = (0..4).filter(|&k| k != omit).map(|k| s[k]).collect();
                    f.sort_unstable();
                    *count.entry([f[0], f[1], f[2]]).or_default() += 1;
                }
            }
            assert!(count.values().all(|&c| c == 1 || c == 2));
            // boundary surface is a sphere
            let bf: Vec<&[usize; 3]> = count.iter().filter(|(_, &c)| c == 1).map(|(f, _)| f).collect();
            let mut verts: Vec<usize> = bf.iter().flat_map(|f| f.iter().copied()).collect();
            verts.sort_unstable();
            verts.dedup();
            let mut edges: Vec<(usize, usize)> = bf
                .iter()
                .flat_map(|f| [(f[0], f[1]), (f[0], f[2]), (f[1], f[2])])
                .collect();
            edges.sort_unstable();
            edges.dedup();
            assert_eq!(verts.len() as i64 - edges.len() as i64 + bf.len() as i64, 2);
            // no interior face left with all vertices on the boundary
            let b = detect_boundary(&g.mesh).unwrap();
            assert!(detect_dividing_simplices(&g.mesh, &b).is_empty());
        }
    }

    #[test]
    fn ball3_lift_is_finite() {
        let g = ball3(2).unwrap();
        assert!(g.mesh.vertices().is_finite());
        // eight cells give 40 tets; each split turns 2 tets into 6
        assert!(g.mesh.num_simplices() > 40);
        assert_eq!((g.mesh.num_simplices() - 40) % 4, 0);
    }

    #[test]
    fn latent_drawing_is_positively_oriented() {
        for kind in [GeneratorKind::SwissRoll, GeneratorKind::TwinPeaks] {
            let g = generate(&spec(kind, "9x7")).unwrap();
            for s in g.mesh.simplices() {
                let p: Vec<&[f64]> = s.iter().map(|&v| g.latent.row(v)).collect();
                assert_eq!(orient2d(p[0], p[1], p[2]), 1);
            }
        }
        let g = ball3(4).unwrap();
        let signs: Vec<i8> = g
            .mesh
            .simplices()
            .map(|s| {
                let p: Vec<&[f64]> = s.iter().map(|&v| g.latent.row(v)).collect();
                crate::predicates::orient3d(p[0], p[1], p[2], p[3])
            })
            .collect();
        assert!(signs.iter().all(|&s| s == signs[0]) && signs[0] != 0);
    }

    fn empty_circumcircle(pts: &Matrix, tris: &[[usize; 3]]) {
        for t in tris {
            let (a, b, c) = (pts.row(t[0]), pts.row(t[1]), pts.row(t[2]));
            assert_eq!(orient2d(a, b, c), 1);
            for i in 0..pts.nrows() {
                assert!(incircle(a, b, c, pts.row(i)) <= 0, "point {i} inside {t:?}");
            }
        }
    }

    #[test]
    fn delaunay_small_cases() {
        let tri = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(delaunay2d(&tri).unwrap().len(), 1);
        let sq = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let t = delaunay2d(&sq).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t, delaunay2d(&sq).unwrap());
        empty_circumcircle(&sq, &t);
        let line = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(delaunay2d(&line), Err(DelaunayError::Collinear));
        let dup = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(delaunay2d(&dup), Err(DelaunayError::Duplicate(0, 2)));
    }

    #[test]
    fn delaunay_random_points_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let rows: Vec<[f64; 2]> = (0..50)
                .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
                .collect();
            let pts = Matrix::from_rows(&rows).unwrap();
            let tris = delaunay2d(&pts).unwrap();
            empty_circumcircle(&pts, &tris);
        }
    }

    #[test]
    fn delaunay_lattice_with_collinear_hull() {
        let (pts, _) = structured_grid(6, 5, [0.0, 0.0], [1.0, 1.0]);
        let tris = delaunay2d(&pts).unwrap();
        assert_eq!(tris.len(), 2 * 5 * 4);
        empty_circumcircle(&pts, &tris);
    }

    #[test]
    fn delaunay_surface_generation() {
        let mut s = spec(GeneratorKind::Paraboloid, "12x12");
        s.triangulation = Triangulation::Delaunay2d;
        s.seed = 3;
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.mesh.simplex_buffer(), b.mesh.simplex_buffer());
        assert_eq!(a.mesh.num_vertices(), 144);
        let mut sphere = spec(GeneratorKind::Sphere, "2");
        sphere.triangulation = Triangulation::Delaunay2d;
        assert!(generate(&sphere).is_err());
    }
}

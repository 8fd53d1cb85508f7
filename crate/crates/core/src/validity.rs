//! Numerical certification of injectivity for a mesh and a candidate
//! embedding.
//!
//! A straight-line embedding of a triangle mesh is certified injective when
//! no two edges cross and every triangle has the same, non-vanishing
//! orientation. The auditor also checks the convex-combination identity at
//! free vertices, containment of free vertices in the hull of the pinned
//! ones, and convexity of the boundary image.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fplm::FixedPointSet;
use crate::hull::{hull_2d, hull_3d};
use crate::laplacian::WeightedGraph;
use crate::matrix::Matrix;
use crate::predicates::{orient2d, simplex_determinant, simplex_orientation};
use crate::simplicial::{detect_boundary, factorial, MeshError, SimplicialMesh};

/// Relative tolerance below which a simplex volume counts as zero.
pub const DEFAULT_ORIENTATION_TOLERANCE: f64 = 1e-12;
/// Relative tolerance (sine of the turning angle) for boundary convexity.
pub const DEFAULT_CONVEXITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ValidityError {
    #[error("embedding has {got} coordinates per vertex, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding has {got} rows, mesh has {expected} vertices")]
    VertexCount { expected: usize, got: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("fixed targets do not span a full-dimensional hull")]
    DegenerateHull,
    #[error("hull containment is only implemented for d = 2 and d = 3 (got {0})")]
    HullDimension(usize),
}

/// Edge pairs whose relative interiors meet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub count: usize,
    /// Offending pairs as indices into the edge list, `(a, b)` with `a < b`,
    /// sorted.
    pub pairs: Vec<(usize, usize)>,
}

/// True when the open segments `p1 p2` and `q1 q2` share a point: either a
/// proper crossing or a collinear overlap of positive length.
pub fn segment_interiors_intersect(p1: &[f64], p2: &[f64], q1: &[f64], q2: &[f64]) -> bool {
    if p1 == p2 || q1 == q2 {
        return false;
    }
    let o1 = orient2d(p1, p2, q1);
    let o2 = orient2d(p1, p2, q2);
    if o1 == 0 && o2 == 0 {
        // collinear: compare projections on the dominant axis
        let axis = if (p2[0] - p1[0]).abs() >= (p2[1] - p1[1]).abs() {
            0
        } else {
            1
        };
        let (a0, a1) = (p1[axis].min(p2[axis]), p1[axis].max(p2[axis]));
        let (b0, b1) = (q1[axis].min(q2[axis]), q1[axis].max(q2[axis]));
        return a0.max(b0) < a1.min(b1);
    }
    if o1 == 0 || o2 == 0 {
        return false;
    }
    let o3 = orient2d(q1, q2, p1);
    let o4 = orient2d(q1, q2, p2);
    if o3 == 0 || o4 == 0 {
        return false;
    }
    o1 != o2 && o3 != o4
}

fn same_edge(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 == b.0 && a.1 == b.1) || (a.0 == b.1 && a.1 == b.0)
}

/// All-pairs crossing count. `O(E^2)`; the reference for
/// [`count_crossings`].
pub fn count_crossings_brute_force(edges: &[(usize, usize)], coords: &Matrix) -> CrossingReport {
    let mut pairs = Vec::new();
    for a in 0..edges.len() {
        for b in a + 1..edges.len() {
            if test_pair(edges, coords, a, b) {
                pairs.push((a, b));
            }
        }
    }
    CrossingReport {
        count: pairs.len(),
        pairs,
    }
}

#[inline]
fn test_pair(edges: &[(usize, usize)], coords: &Matrix, a: usize, b: usize) -> bool {
    let (ea, eb) = (edges[a], edges[b]);
    if same_edge(ea, eb) {
        return false;
    }
    segment_interiors_intersect(
        coords.row(ea.0),
        coords.row(ea.1),
        coords.row(eb.0),
        coords.row(eb.1),
    )
}

/// Counts edge pairs of a planar straight-line drawing whose open segments
/// intersect. Candidate pairs come from a uniform grid over edge bounding
/// boxes; every candidate is decided with exact predicates. Falls back to
/// the all-pairs scan when the grid would not prune anything.
pub fn count_crossings(edges: &[(usize, usize)], coords: &Matrix) -> CrossingReport {
    let m = edges.len();
    if m < 64 {
        return count_crossings_brute_force(edges, coords);
    }
    let bbox = |e: (usize, usize)| {
        let (p, q) = (coords.row(e.0), coords.row(e.1));
        (p[0].min(q[0]), p[1].min(q[1]), p[0].max(q[0]), p[1].max(q[1]))
    };
    let boxes: Vec<(f64, f64, f64, f64)> = edges.iter().map(|&e| bbox(e)).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut extent = 0.0;
    for b in &boxes {
        x0 = x0.min(b.0);
        y0 = y0.min(b.1);
        x1 = x1.max(b.2);
        y1 = y1.max(b.3);
        extent += (b.2 - b.0).max(b.3 - b.1);
    }
    if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
        return count_crossings_brute_force(edges, coords);
    }
    let span = (x1 - x0).max(y1 - y0);
    let cells_cap = (2.0 * (m as f64).sqrt()).ceil().max(1.0);
    let mut h = (extent / m as f64).max(span / cells_cap);
    if !(h > 0.0) {
        h = 1.0;
    }
    let nx = (((x1 - x0) / h).floor() as usize + 1).max(1);
    let ny = (((y1 - y0) / h).floor() as usize + 1).max(1);
    let cell = |x: f64, lo: f64, n: usize| (((x - lo) / h).floor() as usize).min(n - 1);
    let ranges: Vec<(usize, usize, usize, usize)> = boxes
        .iter()
        .map(|b| (cell(b.0, x0, nx), cell(b.1, y0, ny), cell(b.2, x0, nx), cell(b.3, y0, ny)))
        .collect();
    let insertions: usize = ranges
        .iter()
        .map(|r| (r.2 - r.0 + 1) * (r.3 - r.1 + 1))
        .sum();
    if insertions > 32 * m {
        return count_crossings_brute_force(edges, coords);
    }
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for (e, r) in ranges.iter().enumerate() {
        for cy in r.1..=r.3 {
            for cx in r.0..=r.2 {
                grid[cy * nx + cx].push(e);
            }
        }
    }
    let mut pairs = Vec::new();
    for cy in 0..ny {
        for cx in 0..nx {
            let list = &grid[cy * nx + cx];
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    // report each pair only in the lowest cell both occupy
                    let (ra, rb) = (ranges[a], ranges[b]);
                    if cx != ra.0.max(rb.0) || cy != ra.1.max(rb.1) {
                        continue;
                    }
                    let (ba, bb) = (boxes[a], boxes[b]);
                    if ba.2 < bb.0 || bb.2 < ba.0 || ba.3 < bb.1 || bb.3 < ba.1 {
                        continue;
                    }
                    if test_pair(edges, coords, a, b) {
                        pairs.push((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    CrossingReport {
        count: pairs.len(),
        pairs,
    }
}

/// Simplex orientation counts after combinatorial canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrientationCounts {
    pub positive: usize,
    pub negative: usize,
    pub near_zero: usize,
}

impl OrientationCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.near_zero
    }

    /// Exactly one sign present and nothing near zero.
    pub fn is_uniform(&self) -> bool {
        self.near_zero == 0 && (self.positive == 0) != (self.negative == 0)
    }
}

/// Classifies every simplex of `mesh` under `coords` by the sign of its
/// signed volume. Simplices are first oriented consistently; volumes below
/// `tol * diam^d` (with `diam` the embedding's bounding-box diagonal) count
/// as zero.
pub fn orientation_histogram(
    mesh: &SimplicialMesh,
    coords: &Matrix,
    tol: f64,
) -> Result<OrientationCounts, ValidityError> {
    check_shape(mesh, coords)?;
    let mesh = mesh.oriented()?;
    let d = mesh.intrinsic_dim();
    let scale = coords.bbox_diameter();
    let threshold = tol * scale.powi(d as i32);
    let norm = factorial(d);
    let mut counts = OrientationCounts::default();
    for s in mesh.simplices() {
        let pts: Vec<&[f64]> = s.iter().map(|&v| coords.row(v)).collect();
        let volume = simplex_determinant(&pts).abs() / norm;
        if !(volume >= threshold) || volume == 0.0 {
            counts.near_zero += 1;
            continue;
        }
        match simplex_orientation(&pts) {
            1 => counts.positive += 1,
            -1 => counts.negative += 1,
            _ => counts.near_zero += 1,
        }
    }
    Ok(counts)
}

fn check_shape(mesh: &SimplicialMesh, coords: &Matrix) -> Result<(), ValidityError> {
    if coords.nrows() != mesh.num_vertices() {
        return Err(ValidityError::VertexCount {
            expected: mesh.num_vertices(),
            got: coords.nrows(),
        });
    }
    if coords.ncols() != mesh.intrinsic_dim() {
        return Err(ValidityError::Dimension {
            expected: mesh.intrinsic_dim(),
            got: coords.ncols(),
        });
    }
    Ok(())
}

/// Largest signed distance of the listed vertices outside the convex hull of
/// `targets` (`<= 0` means all contained).
pub fn hull_violation(
    targets: &Matrix,
    coords: &Matrix,
    vertices: &[usize],
) -> Result<f64, ValidityError> {
    let hull = match targets.ncols() {
        2 => hull_2d(targets),
        3 => hull_3d(targets),
        d => return Err(ValidityError::HullDimension(d)),
    }
    .ok_or(ValidityError::DegenerateHull)?;
    Ok(vertices
        .iter()
        .map(|&v| hull.signed_distance(coords.row(v)))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Hull containment of the free vertices with respect to a fixed point set.
pub fn check_hull_containment(
    fixed: &FixedPointSet,
    coords: &Matrix,
    free: &[usize],
) -> Result<f64, ValidityError> {
    hull_violation(&fixed.targets, coords, free)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub convex: bool,
    /// +1 counterclockwise, -1 clockwise, 0 degenerate.
    pub orientation: i8,
    /// Vertex (from the cycle) with the worst turn against the orientation.
    pub worst_vertex: Option<usize>,
    /// Sine of that turn, signed so that negative values are violations.
    pub worst_turn: f64,
    pub reason: Option<String>,
}

/// Checks that a closed vertex cycle is drawn as a convex polygon: every
/// turn has the polygon's orientation (turns with `|sin| <= tol` are treated
/// as straight) and the boundary winds exactly once.
pub fn check_boundary_convexity(cycle: &[usize], coords: &Matrix, tol: f64) -> ConvexityVerdict {
    let n = cycle.len();
    let fail = |reason: &str, worst: Option<usize>| ConvexityVerdict {
        convex: false,
        orientation: 0,
        worst_vertex: worst,
        worst_turn: f64::NAN,
        reason: Some(reason.to_string()),
    };
    if n < 3 {
        return fail("fewer than 3 vertices", None);
    }
    let pt = |k: usize| coords.row(cycle[k % n]);
    let mut area = 0.0;
    for k in 0..n {
        let (a, b) = (pt(k), pt(k + 1));
        area += a[0] * b[1] - a[1] * b[0];
    }
    let orientation: i8 = if area > 0.0 {
        1
    } else if area < 0.0 {
        -1
    } else {
        return fail("zero signed area", None);
    };
    let mut worst_vertex = None;
    let mut worst_turn = f64::INFINITY;
    let mut turning = 0.0;
    for k in 0..n {
        let (a, b, c) = (pt(k + n - 1), pt(k), pt(k + 1));
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - b[0], c[1] - b[1]];
        let l1 = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
        let l2 = (e2[0] * e2[0] + e2[1] * e2[1]).sqrt();
        if l1 == 0.0 || l2 == 0.0 {
            return fail("coincident consecutive vertices", Some(cycle[k]));
        }
        let cross = e1[0] * e2[1] - e1[1] * e2[0];
        let dot = e1[0] * e2[0] + e1[1] * e2[1];
        turning += cross.atan2(dot);
        let sine = orientation as f64 * cross / (l1 * l2);
        if sine < worst_turn {
            worst_turn = sine;
            worst_vertex = Some(cycle[k]);
        }
    }
    let winds_once = (turning.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6;
    let convex = worst_turn >= -tol && winds_once;
    ConvexityVerdict {
        convex,
        orientation,
        worst_vertex,
        worst_turn,
        reason: if convex {
            None
        } else if !winds_once {
            Some("boundary winds more than once".into())
        } else {
            Some("reflex vertex".into())
        },
    }
}

/// Largest `||y_i - sum_j lambda_ij y_j||` over the listed vertices, with
/// `lambda_ij = A_ij / D_ii`.
pub fn convex_combination_residual(graph: &WeightedGraph, coords: &Matrix, free: &[usize]) -> f64 {
    let adj = graph.adjacency();
    let deg = graph.degrees();
    let d = coords.ncols();
    let mut worst: f64 = 0.0;
    for &i in free {
        let mut avg = vec![0.0; d];
        for &(j, w) in &adj[i] {
            for (k, a) in avg.iter_mut().enumerate() {
                *a += w / deg[i] * coords.get(j, k);
            }
        }
        let r: f64 = avg
            .iter()
            .zip(coords.row(i))
            .map(|(a, y)| (y - a) * (y - a))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

/// Largest first-order-condition residual `||D_ii y_i - sum_j A_ij y_j||`
/// over the listed vertices.
pub fn first_order_residual(graph: &WeightedGraph, coords: &Matrix, free: &[usize]) -> f64 {
    let adj = graph.adjacency();
    let deg = graph.degrees();
    let d = coords.ncols();
    let mut worst: f64 = 0.0;
    for &i in free {
        let mut r: Vec<f64> = coords.row(i).iter().map(|y| deg[i] * y).collect();
        for &(j, w) in &adj[i] {
            for (k, rk) in r.iter_mut().enumerate().take(d) {
                *rk -= w * coords.get(j, k);
            }
        }
        worst = worst.max(r.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    worst
}

/// Counts pairs of tetrahedra whose interiors overlap, by a separating-axis
/// test on every pair. `O(T^2)`; meant as an independent check on small
/// meshes. Contact within `tol * diam` is not counted as overlap.
pub fn count_tetrahedron_overlaps(mesh: &SimplicialMesh, coords: &Matrix, tol: f64) -> usize {
    assert_eq!(mesh.intrinsic_dim(), 3);
    assert_eq!(coords.ncols(), 3);
    let eps = tol * coords.bbox_diameter();
    let tets: Vec<[[f64; 3]; 4]> = mesh
        .simplices()
        .map(|s| {
            let mut t = [[0.0; 3]; 4];
            for (k, &v) in s.iter().enumerate() {
                t[k].copy_from_slice(coords.row(v));
            }
            t
        })
        .collect();
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let axes_of = |t: &[[f64; 3]; 4]| {
        let mut normals = Vec::with_capacity(4);
        let mut edges = Vec::with_capacity(6);
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            normals.push(cross(sub(t[j], t[i]), sub(t[k], t[i])));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push(sub(t[j], t[i]));
            }
        }
        (normals, edges)
    };
    let project = |t: &[[f64; 3]; 4], ax: [f64; 3]| {
        let len = (ax[0] * ax[0] + ax[1] * ax[1] + ax[2] * ax[2]).sqrt();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in t {
            let v = (p[0] * ax[0] + p[1] * ax[1] + p[2] * ax[2]) / len;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let mut overlaps = 0;
    for a in 0..tets.len() {
        let (na, ea) = axes_of(&tets[a]);
        for b in a + 1..tets.len() {
            let (nb, eb) = axes_of(&tets[b]);
            let mut axes: Vec<[f64; 3]> = na.iter().chain(&nb).copied().collect();
            for &u in &ea {
                for &v in &eb {
                    axes.push(cross(u, v));
                }
            }
            let separated = axes.into_iter().any(|ax| {
                let len2 = ax[0] * ax[0] + ax[1] * ax[1] + ax[2] * ax[2];
                if len2 <= 1e-300 {
                    return false;
                }
                let (alo, ahi) = project(&tets[a], ax);
                let (blo, bhi) = project(&tets[b], ax);
                ahi <= blo + eps || bhi <= alo + eps
            });
            if !separated {
                overlaps += 1;
            }
        }
    }
    overlaps
}

/// Free/fixed partition and weights of the solve that produced an
/// embedding; enables the residual and containment checks.
#[derive(Debug, Clone, Copy)]
pub struct AuditPartition<'a> {
    pub fixed: &'a FixedPointSet,
    pub graph: &'a WeightedGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub orientation_tol: f64,
    pub convexity_tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            orientation_tol: DEFAULT_ORIENTATION_TOLERANCE,
            convexity_tol: DEFAULT_CONVEXITY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InjectiveCertified,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub vertices: usize,
    pub simplices: usize,
    pub intrinsic_dim: usize,
    /// Edge crossings (triangle meshes only).
    pub crossing_count: Option<usize>,
    pub crossing_pairs: Vec<((usize, usize), (usize, usize))>,
    pub orientation: OrientationCounts,
    pub max_convex_residual: Option<f64>,
    pub hull_violation: Option<f64>,
    pub boundary_convexity: Option<ConvexityVerdict>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

impl ValidityReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::InjectiveCertified
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = match self.verdict {
            Verdict::InjectiveCertified => "injective-certified",
            Verdict::Violated => "violated",
        };
        let _ = writeln!(s, "verdict: {verdict}");
        for r in &self.reasons {
            let _ = writeln!(s, "  reason: {r}");
        }
        let _ = writeln!(
            s,
            "mesh: {} vertices, {} simplices, d = {}",
            self.vertices, self.simplices, self.intrinsic_dim
        );
        match self.crossing_count {
            Some(c) => {
                let _ = writeln!(s, "edge crossings: {c}");
            }
            None => {
                let _ = writeln!(s, "edge crossings: n/a");
            }
        }
        let o = &self.orientation;
        let _ = writeln!(
            s,
            "orientation: {} positive, {} negative, {} near-zero",
            o.positive, o.negative, o.near_zero
        );
        if let Some(r) = self.max_convex_residual {
            let _ = writeln!(s, "max convex-combination residual: {r:e}");
        }
        if let Some(h) = self.hull_violation {
            let _ = writeln!(s, "hull violation: {h:e}");
        }
        if let Some(c) = &self.boundary_convexity {
            let _ = writeln!(
                s,
                "boundary convex: {} (worst turn {:e} at vertex {:?})",
                c.convex, c.worst_turn, c.worst_vertex
            );
        }
        s
    }

    /// `key=value` lines for scripts.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "certified={}", self.is_certified());
        let _ = writeln!(
            s,
            "crossing_count={}",
            self.crossing_count.map_or("na".to_string(), |c| c.to_string())
        );
        let _ = writeln!(s, "orientation_positive={}", self.orientation.positive);
        let _ = writeln!(s, "orientation_negative={}", self.orientation.negative);
        let _ = writeln!(s, "orientation_near_zero={}", self.orientation.near_zero);
        let opt = |v: Option<f64>| v.map_or("na".to_string(), |x| format!("{x:e}"));
        let _ = writeln!(s, "max_convex_residual={}", opt(self.max_convex_residual));
        let _ = writeln!(s, "hull_violation={}", opt(self.hull_violation));
        let _ = writeln!(
            s,
            "boundary_convex={}",
            self.boundary_convexity
                .as_ref()
                .map_or("na".to_string(), |c| c.convex.to_string())
        );
        s
    }
}

/// Runs every applicable check on `(mesh, coords)`.
pub fn audit(
    mesh: &SimplicialMesh,
    coords: &Matrix,
    partition: Option<AuditPartition<'_>>,
    options: &AuditOptions,
) -> Result<ValidityReport, ValidityError> {
    check_shape(mesh, coords)?;
    let d = mesh.intrinsic_dim();
    let mut reasons = Vec::new();

    let (crossing_count, crossing_pairs) = if d == 2 {
        let edges = mesh.edges();
        let rep = count_crossings(&edges, coords);
        if rep.count > 0 {
            reasons.push(format!("{} edge crossings", rep.count));
        }
        let pairs = rep.pairs.iter().map(|&(a, b)| (edges[a], edges[b])).collect();
        (Some(rep.count), pairs)
    } else {
        (None, Vec::new())
    };

    let orientation = orientation_histogram(mesh, coords, options.orientation_tol)?;
    if orientation.near_zero > 0 {
        reasons.push(format!("{} near-zero simplices", orientation.near_zero));
    }
    if orientation.positive > 0 && orientation.negative > 0 {
        reasons.push(format!(
            "mixed orientations ({} positive, {} negative)",
            orientation.positive, orientation.negative
        ));
    }

    let (max_convex_residual, hull_violation) = match partition {
        Some(p) => {
            let mut is_fixed = vec![false; mesh.num_vertices()];
            for &v in &p.fixed.indices {
                is_fixed[v] = true;
            }
            let free: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !is_fixed[v]).collect();
            let residual = convex_combination_residual(p.graph, coords, &free);
            let hull = if (2..=3).contains(&d) && !free.is_empty() {
                Some(check_hull_containment(p.fixed, coords, &free)?)
            } else {
                None
            };
            (Some(residual), hull)
        }
        None => (None, None),
    };

    let boundary_convexity = if d == 2 {
        let boundary = detect_boundary(mesh)?;
        match boundary.cycles.as_slice() {
            [cycle] => Some(check_boundary_convexity(cycle, coords, options.convexity_tol)),
            _ => None,
        }
    } else {
        None
    };

    let verdict = if crossing_count.unwrap_or(0) == 0 && orientation.is_uniform() {
        Verdict::InjectiveCertified
    } else {
        Verdict::Violated
    };
    Ok(ValidityReport {
        vertices: mesh.num_vertices(),
        simplices: mesh.num_simplices(),
        intrinsic_dim: d,
        crossing_count,
        crossing_pairs,
        orientation,
        max_convex_residual,
        hull_violation,
        boundary_convexity,
        verdict,
        reasons,
    })
}

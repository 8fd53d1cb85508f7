//! Simplicial meshes: validation, boundary extraction, dividing faces and
//! combinatorial orientation.
//!
//! A mesh is a set of points in an ambient space together with a list of
//! `d`-simplices given as `(d + 1)`-tuples of vertex indices. Faces are keyed
//! by their sorted vertex indices; orientation is carried by the vertex order
//! inside each simplex.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::matrix::{determinant, Matrix};

/// Default relative volume tolerance for the degeneracy check.
pub const DEFAULT_VOLUME_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("intrinsic dimension {intrinsic} must satisfy 1 <= d <= ambient dimension {ambient}")]
    Dimension { intrinsic: usize, ambient: usize },
    #[error("simplex buffer length {len} is not a multiple of {arity}")]
    Arity { len: usize, arity: usize },
    #[error("simplex {simplex} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        simplex: usize,
        index: usize,
        count: usize,
    },
    #[error("vertex {vertex} has {edges} incident boundary edges (expected 2)")]
    NonManifoldBoundary { vertex: usize, edges: usize },
    #[error("mesh is not orientable: orientation conflict at simplex {simplex}")]
    NonOrientable { simplex: usize },
    #[error("polygon face {face}: {reason}")]
    BadPolygon { face: usize, reason: String },
}

/// A `d`-simplex decomposition: `N` points in `R^l` and the `d`-simplices
/// built on them.
#[derive(Clone, PartialEq)]
pub struct SimplicialMesh {
    vertices: Matrix,
    simplices: Vec<usize>,
    intrinsic_dim: usize,
}

impl fmt::Debug for SimplicialMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimplicialMesh")
            .field("vertices", &self.num_vertices())
            .field("simplices", &self.num_simplices())
            .field("intrinsic_dim", &self.intrinsic_dim)
            .field("ambient_dim", &self.ambient_dim())
            .finish()
    }
}

impl SimplicialMesh {
    /// Builds a mesh from vertex rows and a flat simplex buffer of arity
    /// `intrinsic_dim + 1`. Only structural well-formedness is checked here;
    /// see [`validate_mesh`] for the geometric and combinatorial rules.
    pub fn new(
        vertices: Matrix,
        simplices: Vec<usize>,
        intrinsic_dim: usize,
    ) -> Result<Self, MeshError> {
        let ambient = vertices.ncols();
        if intrinsic_dim == 0 || intrinsic_dim > ambient {
            return Err(MeshError::Dimension {
                intrinsic: intrinsic_dim,
                ambient,
            });
        }
        let arity = intrinsic_dim + 1;
        if simplices.len() % arity != 0 {
            return Err(MeshError::Arity {
                len: simplices.len(),
                arity,
            });
        }
        let count = vertices.nrows();
        if let Some(pos) = simplices.iter().position(|&v| v >= count) {
            return Err(MeshError::IndexOutOfRange {
                simplex: pos / arity,
                index: simplices[pos],
                count,
            });
        }
        Ok(SimplicialMesh {
            vertices,
            simplices,
            intrinsic_dim,
        })
    }

    /// Convenience constructor from per-simplex index lists.
    pub fn from_simplex_list<S: AsRef<[usize]>>(
        vertices: Matrix,
        simplices: &[S],
        intrinsic_dim: usize,
    ) -> Result<Self, MeshError> {
        let arity = intrinsic_dim + 1;
        let mut flat = Vec::with_capacity(simplices.len() * arity);
        for s in simplices {
            let s = s.as_ref();
            if s.len() != arity {
                return Err(MeshError::Arity {
                    len: s.len(),
                    arity,
                });
            }
            flat.extend_from_slice(s);
        }
        Self::new(vertices, flat, intrinsic_dim)
    }

    #[inline]
    pub fn vertices(&self) -> &Matrix {
        &self.vertices
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.vertices.nrows()
    }

    #[inline]
    pub fn num_simplices(&self) -> usize {
        self.simplices.len() / (self.intrinsic_dim + 1)
    }

    #[inline]
    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.vertices.ncols()
    }

    #[inline]
    pub fn simplex(&self, k: usize) -> &[usize] {
        let a = self.intrinsic_dim + 1;
        &self.simplices[k * a..(k + 1) * a]
    }

    pub fn simplices(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.simplices.chunks_exact(self.intrinsic_dim + 1)
    }

    pub fn simplex_buffer(&self) -> &[usize] {
        &self.simplices
    }

    /// The deduplicated 1-skeleton as `(i, j)` pairs with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_simplices() * 3);
        for s in self.simplices() {
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    let (i, j) = (s[a].min(s[b]), s[a].max(s[b]));
                    if i != j {
                        edges.push((i, j));
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `d`-dimensional volume of simplex `k` in the ambient space, from the
    /// Gram determinant of its edge vectors.
    pub fn simplex_volume(&self, k: usize) -> f64 {
        let s = self.simplex(k);
        let d = self.intrinsic_dim;
        let l = self.ambient_dim();
        let origin = self.vertices.row(s[0]);
        let edges: Vec<Vec<f64>> = s[1..]
            .iter()
            .map(|&v| {
                let p = self.vertices.row(v);
                (0..l).map(|c| p[c] - origin[c]).collect()
            })
            .collect();
        let mut gram = vec![0.0; d * d];
        for a in 0..d {
            for b in a..d {
                let dot: f64 = edges[a].iter().zip(&edges[b]).map(|(x, y)| x * y).sum();
                gram[a * d + b] = dot;
                gram[b * d + a] = dot;
            }
        }
        let det = determinant(gram, d).max(0.0);
        det.sqrt() / factorial(d)
    }

    /// Returns a copy whose simplices are oriented consistently across every
    /// shared `(d-1)`-face. The first simplex of each face-connected
    /// component keeps its vertex order.
    pub fn oriented(&self) -> Result<SimplicialMesh, MeshError> {
        let mut simplices = self.simplices.clone();
        orient_simplices(&mut simplices, self.intrinsic_dim, &FaceTable::build(self))?;
        Ok(SimplicialMesh {
            vertices: self.vertices.clone(),
            simplices,
            intrinsic_dim: self.intrinsic_dim,
        })
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Every `(d-1)`-face of a mesh with the simplices incident to it.
#[derive(Debug, Clone)]
pub struct FaceTable {
    /// Sorted vertex keys, in lexicographic order.
    pub faces: Vec<Vec<usize>>,
    /// For each face, `(simplex, local index of the omitted vertex)`.
    pub incidence: Vec<Vec<(usize, usize)>>,
}

impl FaceTable {
    pub fn build(mesh: &SimplicialMesh) -> FaceTable {
        let a = mesh.intrinsic_dim + 1;
        let mut occ: Vec<(Vec<usize>, usize, usize)> = Vec::with_capacity(mesh.num_simplices() * a);
        for (k, s) in mesh.simplices().enumerate() {
            for omit in 0..a {
                let mut key: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != omit)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                occ.push((key, k, omit));
            }
        }
        occ.sort_unstable();
        let mut faces: Vec<Vec<usize>> = Vec::new();
        let mut incidence: Vec<Vec<(usize, usize)>> = Vec::new();
        for (key, k, omit) in occ {
            if faces.last() == Some(&key) {
                incidence.last_mut().unwrap().push((k, omit));
            } else {
                faces.push(key);
                incidence.push(vec![(k, omit)]);
            }
        }
        FaceTable { faces, incidence }
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Sign of the face of `simplex` opposite local vertex `omit`, relative to
/// the sorted order of the face's vertices.
fn induced_face_sign(simplex: &[usize], omit: usize) -> i8 {
    let face: Vec<usize> = simplex
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != omit)
        .map(|(_, &v)| v)
        .collect();
    let mut inversions = 0usize;
    for i in 0..face.len() {
        for j in i + 1..face.len() {
            if face[i] > face[j] {
                inversions += 1;
            }
        }
    }
    if (inversions + omit) % 2 == 0 {
        1
    } else {
        -1
    }
}

fn orient_simplices(
    simplices: &mut [usize],
    intrinsic_dim: usize,
    table: &FaceTable,
) -> Result<(), MeshError> {
    let a = intrinsic_dim + 1;
    let n = simplices.len() / a;
    // simplex -> faces it touches
    let mut by_simplex: Vec<Vec<usize>> = vec![Vec::with_capacity(a); n];
    for (f, inc) in table.incidence.iter().enumerate() {
        for &(k, _) in inc {
            by_simplex[k].push(f);
        }
    }
    let mut state: Vec<Option<bool>> = vec![None; n];
    for root in 0..n {
        if state[root].is_some() {
            continue;
        }
        state[root] = Some(false);
        let mut queue = VecDeque::from([root]);
        while let Some(k) = queue.pop_front() {
            for &f in &by_simplex[k] {
                let inc = &table.incidence[f];
                if inc.len() != 2 {
                    continue;
                }
                let (me, other) = if inc[0].0 == k {
                    (inc[0], inc[1])
                } else {
                    (inc[1], inc[0])
                };
                // the table's local indices predate any swap of slots 0 and 1
                let local = |s: usize, omit: usize| {
                    if state[s] == Some(true) && omit < 2 {
                        1 - omit
                    } else {
                        omit
                    }
                };
                let sign_me = induced_face_sign(&simplices[k * a..(k + 1) * a], local(k, me.1));
                let sign_other = induced_face_sign(
                    &simplices[other.0 * a..(other.0 + 1) * a],
                    local(other.0, other.1),
                );
                let consistent = sign_me != sign_other;
                match state[other.0] {
                    None => {
                        if !consistent {
                            simplices.swap(other.0 * a, other.0 * a + 1);
                            state[other.0] = Some(true);
                        } else {
                            state[other.0] = Some(false);
                        }
                        queue.push_back(other.0);
                    }
                    Some(_) => {
                        if !consistent {
                            return Err(MeshError::NonOrientable { simplex: other.0 });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// A rule of a valid simplex decomposition that a mesh breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RepeatedVertex { simplex: usize },
    DuplicateSimplex { simplex: usize, duplicate_of: usize },
    FaceOvershared { face: Vec<usize>, simplices: usize },
    DegenerateSimplex {
        simplex: usize,
        volume: f64,
        threshold: f64,
    },
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RepeatedVertex { simplex } => {
                write!(f, "simplex {simplex} repeats a vertex")
            }
            Violation::DuplicateSimplex {
                simplex,
                duplicate_of,
            } => write!(f, "simplex {simplex} duplicates simplex {duplicate_of}"),
            Violation::FaceOvershared { face, simplices } => {
                write!(f, "face {face:?} shared by {simplices} simplices")
            }
            Violation::DegenerateSimplex {
                simplex,
                volume,
                threshold,
            } => write!(
                f,
                "degenerate simplex {simplex}: volume {volume:e} below {threshold:e}"
            ),
            Violation::Disconnected { components } => {
                write!(f, "simplex adjacency has {components} components")
            }
        }
    }
}

/// Checks a mesh against the simplex-decomposition rules and lists every
/// violation found. An empty list means the mesh is valid.
///
/// `vol_tol` is relative: a simplex is degenerate when its volume is below
/// `vol_tol * diam^d`, with `diam` the bounding-box diagonal of the mesh.
pub fn validate_mesh(mesh: &SimplicialMesh, vol_tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = mesh.intrinsic_dim();

    let mut sorted_simplices: Vec<(Vec<usize>, usize)> = Vec::with_capacity(mesh.num_simplices());
    for (k, s) in mesh.simplices().enumerate() {
        let mut key = s.to_vec();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            out.push(Violation::RepeatedVertex { simplex: k });
        }
        sorted_simplices.push((key, k));
    }
    sorted_simplices.sort_unstable();
    for w in sorted_simplices.windows(2) {
        if w[0].0 == w[1].0 {
            out.push(Violation::DuplicateSimplex {
                simplex: w[1].1,
                duplicate_of: w[0].1,
            });
        }
    }

    let table = FaceTable::build(mesh);
    for (face, inc) in table.faces.iter().zip(&table.incidence) {
        if inc.len() > 2 {
            out.push(Violation::FaceOvershared {
                face: face.clone(),
                simplices: inc.len(),
            });
        }
    }

    let diam = mesh.vertices().bbox_diameter();
    let threshold = vol_tol * diam.powi(d as i32);
    for k in 0..mesh.num_simplices() {
        let volume = mesh.simplex_volume(k);
        if !(volume >= threshold) || volume == 0.0 {
            out.push(Violation::DegenerateSimplex {
                simplex: k,
                volume,
                threshold,
            });
        }
    }

    let components = simplex_components(mesh.num_simplices(), &table);
    if components > 1 {
        out.push(Violation::Disconnected { components });
    }
    out
}

fn simplex_components(n: usize, table: &FaceTable) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for inc in &table.incidence {
        for w in inc.windows(2) {
            let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n).filter(|&k| find(&mut parent, k) == k).count()
}

/// The unshared `(d-1)`-faces of a mesh and the vertices on them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryComplex {
    /// Boundary faces as sorted vertex tuples, in lexicographic order.
    pub faces: Vec<Vec<usize>>,
    /// Sorted, deduplicated vertices of `faces`.
    pub vertices: Vec<usize>,
    /// For `d = 2`: each boundary loop as an ordered vertex cycle, starting
    /// at its lowest vertex and following the orientation induced by the
    /// incident triangles. Loops are sorted by their first vertex.
    pub cycles: Vec<Vec<usize>>,
}

impl BoundaryComplex {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

/// Extracts the boundary complex: faces contained in exactly one simplex.
pub fn detect_boundary(mesh: &SimplicialMesh) -> Result<BoundaryComplex, MeshError> {
    let table = FaceTable::build(mesh);
    detect_boundary_with(mesh, &table)
}

pub(crate) fn detect_boundary_with(
    mesh: &SimplicialMesh,
    table: &FaceTable,
) -> Result<BoundaryComplex, MeshError> {
    let mut faces = Vec::new();
    let mut owners = Vec::new();
    for (face, inc) in table.faces.iter().zip(&table.incidence) {
        if inc.len() == 1 {
            faces.push(face.clone());
            owners.push(inc[0]);
        }
    }
    let vertices: Vec<usize> = faces
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut cycles = Vec::new();
    if mesh.intrinsic_dim() == 2 && !faces.is_empty() {
        // orientation of each boundary edge as induced by its (consistently
        // oriented) triangle; falls back to stored order if non-orientable
        let oriented = mesh.oriented().ok();
        let source = oriented.as_ref().unwrap_or(mesh);
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(faces.len());
        for &(k, omit) in &owners {
            let s = source.simplex(k);
            // edge opposite `omit`, traversed in the simplex's cyclic order
            let a = s[(omit + 1) % 3];
            let b = s[(omit + 2) % 3];
            directed.push((a, b));
        }
        cycles = walk_cycles(&vertices, &directed)?;
    }

    Ok(BoundaryComplex {
        faces,
        vertices,
        cycles,
    })
}

fn walk_cycles(
    vertices: &[usize],
    directed: &[(usize, usize)],
) -> Result<Vec<Vec<usize>>, MeshError> {
    let slot = |v: usize| vertices.binary_search(&v).expect("boundary vertex");
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::with_capacity(2); vertices.len()];
    for &(a, b) in directed {
        nbrs[slot(a)].push(b);
        nbrs[slot(b)].push(a);
    }
    for (i, n) in nbrs.iter().enumerate() {
        if n.len() != 2 {
            return Err(MeshError::NonManifoldBoundary {
                vertex: vertices[i],
                edges: n.len(),
            });
        }
    }
    let mut successor = std::collections::HashMap::with_capacity(directed.len());
    for &(a, b) in directed {
        successor.entry(a).or_insert(b);
    }
    let mut visited = vec![false; vertices.len()];
    let mut cycles = Vec::new();
    for start_slot in 0..vertices.len() {
        if visited[start_slot] {
            continue;
        }
        let start = vertices[start_slot];
        let mut cycle = vec![start];
        visited[start_slot] = true;
        let mut prev = start;
        let mut cur = nbrs[start_slot][0];
        while cur != start {
            let s = slot(cur);
            if visited[s] {
                break;
            }
            visited[s] = true;
            cycle.push(cur);
            let n = &nbrs[s];
            let next = if n[0] == prev { n[1] } else { n[0] };
            prev = cur;
            cur = next;
        }
        // align with the induced direction of the first edge
        if cycle.len() > 2 && successor.get(&start) != Some(&cycle[1]) {
            cycle[1..].reverse();
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Interior `(d-1)`-faces whose vertices all lie on the boundary. For
/// triangle meshes these are the dividing edges; an empty result means the
/// mesh is strongly connected.
pub fn detect_dividing_simplices(
    mesh: &SimplicialMesh,
    boundary: &BoundaryComplex,
) -> Vec<Vec<usize>> {
    let table = FaceTable::build(mesh);
    dividing_with(&table, boundary)
}

pub(crate) fn dividing_with(table: &FaceTable, boundary: &BoundaryComplex) -> Vec<Vec<usize>> {
    table
        .faces
        .iter()
        .zip(&table.incidence)
        .filter(|(face, inc)| {
            inc.len() == 2 && face.iter().all(|&v| boundary.contains_vertex(v))
        })
        .map(|(face, _)| face.clone())
        .collect()
}

/// Replaces every `n`-gon face by `n - 2` triangles, fanned from the face's
/// lowest-index vertex.
pub fn triangulate_polygon_faces<F: AsRef<[usize]>>(
    faces: &[F],
    vertices: Matrix,
) -> Result<SimplicialMesh, MeshError> {
    let count = vertices.nrows();
    let mut tris = Vec::new();
    for (fi, face) in faces.iter().enumerate() {
        let face = face.as_ref();
        let n = face.len();
        if n < 3 {
            return Err(MeshError::BadPolygon {
                face: fi,
                reason: format!("{n} vertices, need at least 3"),
            });
        }
        if let Some(&bad) = face.iter().find(|&&v| v >= count) {
            return Err(MeshError::BadPolygon {
                face: fi,
                reason: format!("vertex {bad} out of range ({count} vertices)"),
            });
        }
        let mut sorted = face.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::BadPolygon {
                face: fi,
                reason: "repeated vertex".into(),
            });
        }
        let lo = (0..n).min_by_key(|&i| face[i]).unwrap();
        let ring: Vec<usize> = (0..n).map(|i| face[(lo + i) % n]).collect();
        for k in 1..n - 1 {
            tris.extend_from_slice(&[ring[0], ring[k], ring[k + 1]]);
        }
    }
    SimplicialMesh::new(vertices, tris, 2)
}

/// Stellar subdivision of the given interior faces: each face gains a new
/// vertex (placed by `new_point`) and every simplex containing the face is
/// split into `d` simplices around it. Simplex orientation is preserved.
///
/// Returns the new mesh and the indices of the inserted vertices, one per
/// face in input order. Faces that are no longer present are skipped (their
/// slot in the returned list is `None`).
pub fn split_faces(
    mesh: &SimplicialMesh,
    faces: &[Vec<usize>],
    mut new_point: impl FnMut(&[usize]) -> Vec<f64>,
) -> (SimplicialMesh, Vec<Option<usize>>) {
    let a = mesh.intrinsic_dim() + 1;
    let mut vertices = mesh.vertices().clone();
    let mut simplices: Vec<Vec<usize>> = mesh.simplices().map(|s| s.to_vec()).collect();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for (k, s) in simplices.iter().enumerate() {
        for &v in s {
            by_vertex[v].push(k);
        }
    }
    let mut inserted = Vec::with_capacity(faces.len());
    for face in faces {
        let containing: Vec<usize> = by_vertex[face[0]]
            .iter()
            .copied()
            .filter(|&k| face.iter().all(|v| simplices[k].contains(v)))
            .collect();
        if containing.is_empty() {
            inserted.push(None);
            continue;
        }
        let m = vertices.nrows();
        vertices.push_row(&new_point(face));
        by_vertex.push(Vec::new());
        for k in containing {
            let original = std::mem::take(&mut simplices[k]);
            for &x in &original {
                by_vertex[x].retain(|&kk| kk != k);
            }
            for (slot, &v) in face.iter().enumerate() {
                let mut sub = original.clone();
                let pos = original.iter().position(|&x| x == v).unwrap();
                sub[pos] = m;
                let target = if slot == 0 {
                    k
                } else {
                    simplices.push(Vec::new());
                    simplices.len() - 1
                };
                for &x in &sub {
                    by_vertex[x].push(target);
                }
                simplices[target] = sub;
            }
        }
        inserted.push(Some(m));
    }
    let flat: Vec<usize> = simplices.into_iter().flatten().collect();
    debug_assert_eq!(flat.len() % a, 0);
    let mesh = SimplicialMesh::new(vertices, flat, mesh.intrinsic_dim())
        .expect("subdivision preserves structure");
    (mesh, inserted)
}

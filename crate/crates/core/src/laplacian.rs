//! RBF-weighted graph Laplacians over a mesh 1-skeleton, and their
//! free/fixed block partition.

use thiserror::Error;

use crate::matrix::{distance, Matrix};
use crate::simplicial::SimplicialMesh;
use crate::sparse::CsrMatrix;

/// Kernel width used throughout the experiments.
pub const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaplacianError {
    #[error("gamma must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("edge ({0}, {1}) has a non-finite or non-positive weight")]
    BadWeight(usize, usize),
    #[error("no fixed vertices given")]
    NoFixedVertices,
    #[error("fixed vertex {0} is out of range")]
    FixedOutOfRange(usize),
    #[error("fixed vertex {0} listed twice")]
    DuplicateFixed(usize),
    #[error("connected component containing vertex {0} has no fixed vertex; the free block is singular")]
    UnanchoredComponent(usize),
}

/// Undirected graph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub n: usize,
    /// `(i, j, w)` with `i < j`, sorted by `(i, j)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub gamma: f64,
    /// Edges whose endpoints coincide in the ambient space (weight 1).
    pub coincident: Vec<(usize, usize)>,
}

impl WeightedGraph {
    /// Graph from explicit weighted edges; used for hand-built systems.
    /// Edges are canonicalized to `i < j` and sorted; duplicates are merged
    /// by keeping the first weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, LaplacianError> {
        let mut out: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|&(i, j, w)| (i.min(j), i.max(j), w))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        for &(i, j, w) in &out {
            if !(w.is_finite() && w > 0.0) || i == j || j >= n {
                return Err(LaplacianError::BadWeight(i, j));
            }
        }
        Ok(WeightedGraph {
            n,
            edges: out,
            gamma: f64::NAN,
            coincident: Vec::new(),
        })
    }

    /// Weighted degree of each vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }

    /// Adjacency lists `(neighbor, weight)`, sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, w) in &self.edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    /// The full Laplacian `L = D - A`.
    pub fn laplacian(&self) -> CsrMatrix {
        let deg = self.degrees();
        let mut trip = Vec::with_capacity(self.n + 2 * self.edges.len());
        for (i, &d) in deg.iter().enumerate() {
            trip.push((i, i, d));
        }
        for &(i, j, w) in &self.edges {
            trip.push((i, j, -w));
            trip.push((j, i, -w));
        }
        CsrMatrix::from_triplets(self.n, self.n, &trip)
    }

    /// Connected-component label per vertex (labels are the smallest vertex
    /// of each component).
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j, _) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..self.n).map(|v| find(&mut parent, v)).collect()
    }
}

/// Weights `exp(-gamma * |x_i - x_j|)` on every mesh edge, using Euclidean
/// distance in the ambient space.
pub fn build_weights(mesh: &SimplicialMesh, gamma: f64) -> Result<WeightedGraph, LaplacianError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(LaplacianError::BadGamma(gamma));
    }
    let pts = mesh.vertices();
    let mut edges = Vec::new();
    let mut coincident = Vec::new();
    for (i, j) in mesh.edges() {
        let dist = distance(pts.row(i), pts.row(j));
        let w = (-gamma * dist).exp();
        if !(w.is_finite() && w > 0.0) {
            return Err(LaplacianError::BadWeight(i, j));
        }
        if dist == 0.0 {
            log::warn!("vertices {i} and {j} coincide; edge weight is 1");
            coincident.push((i, j));
        }
        edges.push((i, j, w));
    }
    Ok(WeightedGraph {
        n: mesh.num_vertices(),
        edges,
        gamma,
        coincident,
    })
}

/// Position of a vertex in the free/fixed partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Free(usize),
    Fixed(usize),
}

/// `L = D - A` with the block partition induced by a fixed vertex set:
/// free vertices in ascending order, fixed vertices in the order given.
#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    pub laplacian: CsrMatrix,
    pub degrees: Vec<f64>,
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    pub slots: Vec<Slot>,
    /// Free x free block.
    pub l_free: CsrMatrix,
    /// Free x fixed block.
    pub l_coupling: CsrMatrix,
}

/// Builds the Laplacian and partitions it around `fixed`.
pub fn assemble_system(
    graph: &WeightedGraph,
    fixed: &[usize],
) -> Result<LaplacianSystem, LaplacianError> {
    if fixed.is_empty() {
        return Err(LaplacianError::NoFixedVertices);
    }
    let n = graph.n;
    let mut slots: Vec<Option<Slot>> = vec![None; n];
    for (k, &v) in fixed.iter().enumerate() {
        if v >= n {
            return Err(LaplacianError::FixedOutOfRange(v));
        }
        if slots[v].is_some() {
            return Err(LaplacianError::DuplicateFixed(v));
        }
        slots[v] = Some(Slot::Fixed(k));
    }
    let mut free = Vec::with_capacity(n - fixed.len());
    for (v, slot) in slots.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = Some(Slot::Free(free.len()));
            free.push(v);
        }
    }
    let slots: Vec<Slot> = slots.into_iter().map(Option::unwrap).collect();

    let comp = graph.components();
    let mut anchored = vec![false; n];
    for &v in fixed {
        anchored[comp[v]] = true;
    }
    if let Some(v) = (0..n).find(|&v| !anchored[comp[v]]) {
        return Err(LaplacianError::UnanchoredComponent(v));
    }

    let laplacian = graph.laplacian();
    let degrees = graph.degrees();
    let mut free_trip = Vec::new();
    let mut coupling_trip = Vec::new();
    for (r, &v) in free.iter().enumerate() {
        let (cols, vals) = laplacian.row(v);
        for (&c, &val) in cols.iter().zip(vals) {
            match slots[c] {
                Slot::Free(k) => free_trip.push((r, k, val)),
                Slot::Fixed(k) => coupling_trip.push((r, k, val)),
            }
        }
    }
    let nf = free.len();
    Ok(LaplacianSystem {
        l_free: CsrMatrix::from_triplets(nf, nf, &free_trip),
        l_coupling: CsrMatrix::from_triplets(nf, fixed.len(), &coupling_trip),
        laplacian,
        degrees,
        free,
        fixed: fixed.to_vec(),
        slots,
    })
}

impl LaplacianSystem {
    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// `-L_yc C` for fixed targets `C` (one row per fixed vertex, in the
    /// order of `self.fixed`).
    pub fn rhs(&self, targets: &Matrix) -> Matrix {
        assert_eq!(targets.nrows(), self.fixed.len());
        let d = targets.ncols();
        let mut out = Matrix::zeros(self.free.len(), d);
        for r in 0..self.free.len() {
            let (cols, vals) = self.l_coupling.row(r);
            let row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (k, t) in targets.row(c).iter().enumerate() {
                    row[k] -= v * t;
                }
            }
        }
        out
    }

    /// Scatters free-block solutions and fixed targets into an `N x d`
    /// coordinate matrix. Fixed rows are copied verbatim.
    pub fn assemble_coords(&self, solution: &Matrix, targets: &Matrix) -> Matrix {
        let d = targets.ncols();
        let mut out = Matrix::zeros(self.slots.len(), d);
        for (v, slot) in self.slots.iter().enumerate() {
            let src = match *slot {
                Slot::Free(k) => solution.row(k),
                Slot::Fixed(k) => targets.row(k),
            };
            out.row_mut(v).copy_from_slice(src);
        }
        out
    }
}

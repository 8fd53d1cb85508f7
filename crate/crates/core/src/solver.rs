//! Symmetric positive definite solves for the free block of a Laplacian
//! system.
//!
//! Two independent paths are provided: a sparse envelope Cholesky
//! factorization under a reverse Cuthill-McKee ordering, and a
//! Jacobi-preconditioned conjugate gradient iteration. Right-hand-side
//! columns are solved independently (in parallel) and always in the same
//! order of operations, so results are reproducible run to run.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laplacian::LaplacianSystem;
use crate::matrix::Matrix;
use crate::sparse::CsrMatrix;

/// Free-vertex count above which `Auto` switches to the iterative path.
pub const AUTO_DIRECT_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Iterative,
    Auto,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(SolveMethod::Direct),
            "iterative" => Ok(SolveMethod::Iterative),
            "auto" => Ok(SolveMethod::Auto),
            other => Err(format!("unknown solver method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub rel_tol: f64,
    /// Iteration cap for the iterative path; `None` means 10 x unknowns.
    pub max_iter: Option<usize>,
    pub method: SolveMethod,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rel_tol: 1e-10,
            max_iter: None,
            method: SolveMethod::Auto,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(SolveError::BadConfig(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(SolveError::BadConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_method(&self, unknowns: usize) -> SolveMethod {
        match self.method {
            SolveMethod::Auto if unknowns < AUTO_DIRECT_LIMIT => SolveMethod::Direct,
            SolveMethod::Auto => SolveMethod::Iterative,
            m => m,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("matrix is not positive definite: non-positive pivot at row {pivot}")]
    NotPositiveDefinite { pivot: usize },
    #[error("iterative solve did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has {rhs_rows} rows")]
    Shape {
        rows: usize,
        cols: usize,
        rhs_rows: usize,
    },
}

/// A solution with the diagnostics of how it was obtained.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Matrix,
    pub method: SolveMethod,
    /// Largest iteration count over columns (refinement steps for the
    /// direct path).
    pub iterations: usize,
    /// `||A X - B||_F / ||B||_F` (0 for a zero right-hand side).
    pub relative_residual: f64,
}

/// Solves `L_y X = rhs` for the free block of `system`.
pub fn solve_spd(
    system: &LaplacianSystem,
    rhs: &Matrix,
    config: &SolveConfig,
) -> Result<SolveReport, SolveError> {
    solve_spd_matrix(&system.l_free, rhs, config)
}

/// Solves `A X = rhs` for a sparse SPD matrix `A`.
pub fn solve_spd_matrix(
    a: &CsrMatrix,
    rhs: &Matrix,
    config: &SolveConfig,
) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let n = a.nrows();
    if a.ncols() != n || rhs.nrows() != n {
        return Err(SolveError::Shape {
            rows: a.nrows(),
            cols: a.ncols(),
            rhs_rows: rhs.nrows(),
        });
    }
    let d = rhs.ncols();
    let method = config.resolved_method(n);
    let columns: Vec<Vec<f64>> = (0..d).map(|j| rhs.column(j)).collect();
    let (solved, iterations): (Vec<Vec<f64>>, usize) = match method {
        SolveMethod::Direct => {
            let factor = EnvelopeCholesky::factor(a)?;
            let out: Vec<(Vec<f64>, usize)> = columns
                .par_iter()
                .map(|b| factor.solve_refined(a, b, config.rel_tol))
                .collect();
            let iters = out.iter().map(|o| o.1).max().unwrap_or(0);
            (out.into_iter().map(|o| o.0).collect(), iters)
        }
        SolveMethod::Iterative | SolveMethod::Auto => {
            let max_iter = config.max_iter.unwrap_or(10 * n.max(1));
            let out: Result<Vec<(Vec<f64>, usize)>, SolveError> = columns
                .par_iter()
                .map(|b| conjugate_gradient(a, b, config.rel_tol, max_iter))
                .collect();
            let out = out?;
            let iters = out.iter().map(|o| o.1).max().unwrap_or(0);
            (out.into_iter().map(|o| o.0).collect(), iters)
        }
    };
    let mut solution = Matrix::zeros(n, d);
    for (j, col) in solved.iter().enumerate() {
        solution.set_column(j, col);
    }
    let relative_residual = relative_residual(a, &solution, rhs);
    Ok(SolveReport {
        solution,
        method,
        iterations,
        relative_residual,
    })
}

/// `||A X - B||_F / ||B||_F`, or `||A X||_F` when `B = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let mut num = 0.0;
    let mut ax = vec![0.0; n];
    for j in 0..b.ncols() {
        a.mul_vec(&x.column(j), &mut ax);
        for i in 0..n {
            let r = ax[i] - b.get(i, j);
            num += r * r;
        }
    }
    let den = b.frobenius_norm();
    if den == 0.0 {
        num.sqrt()
    } else {
        num.sqrt() / den
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
/// Returns the solution and the iteration count.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(SolveError::NotPositiveDefinite { pivot: i })
            }
        })
        .collect::<Result<_, _>>()?;
    let target = rel_tol * bnorm;
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while iterations < max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::NotPositiveDefinite { pivot: 0 });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if norm(&r) <= target {
            // confirm against the true residual before stopping
            a.mul_vec(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            if norm(&r) <= target {
                return Ok((x, iterations));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    a.mul_vec(&x, &mut ap);
    let res: f64 = norm(&b.iter().zip(&ap).map(|(b, ax)| b - ax).collect::<Vec<_>>());
    if res <= target {
        return Ok((x, iterations));
    }
    Err(SolveError::NotConverged {
        iterations,
        residual: res / bnorm,
    })
}

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern. Returns
/// `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];

    // BFS helper returning (last level nodes, eccentricity)
    let bfs_levels = |start: usize, level: &mut Vec<usize>, visited: &[bool]| -> (Vec<usize>, usize) {
        let mut touched = vec![start];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut ecc = 0;
        while let Some(u) = queue.pop_front() {
            ecc = ecc.max(level[u]);
            for &v in a.row(u).0 {
                if v != u && !visited[v] && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        let last: Vec<usize> = touched.iter().copied().filter(|&v| level[v] == ecc).collect();
        for &v in &touched {
            level[v] = usize::MAX;
        }
        (last, ecc)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node (George-Liu)
        let mut start = seed;
        let (mut last, mut ecc) = bfs_levels(start, &mut level, &visited);
        loop {
            let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let (l2, e2) = bfs_levels(cand, &mut level, &visited);
            if e2 > ecc {
                start = cand;
                last = l2;
                ecc = e2;
            } else {
                break;
            }
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a
                .row(u)
                .0
                .iter()
                .copied()
                .filter(|&v| v != u && !visited[v])
                .collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor stored by rows over the envelope of a permuted matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &c in a.row(old).0 {
                first[new] = first[new].min(inv[c]);
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= new {
                    values[offset[new] + j - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_i = &values[offset[i]..offset[i + 1]];
                let row_j = &values[offset[j]..offset[j + 1]];
                let s: f64 = (start..j)
                    .map(|k| row_i[k - fi] * row_j[k - fj])
                    .sum();
                let ljj = row_j[j - fj];
                let idx = offset[i] + j - fi;
                values[idx] = (values[idx] - s) / ljj;
            }
            let row_i = &values[offset[i]..offset[i + 1]];
            let s: f64 = row_i[..i - fi].iter().map(|x| x * x).sum();
            let diag = row_i[i - fi] - s;
            if !(diag > 0.0) {
                return Err(SolveError::NotPositiveDefinite { pivot: perm[i] });
            }
            values[offset[i + 1] - 1] = diag.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            offset,
            values,
        })
    }

    /// Stored envelope entries (a fill measure).
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // forward: L y = b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let s: f64 = (fi..i).map(|k| row[k - fi] * y[k]).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solve followed by up to three rounds of iterative refinement while
    /// the relative residual exceeds `rel_tol`.
    fn solve_refined(&self, a: &CsrMatrix, b: &[f64], rel_tol: f64) -> (Vec<f64>, usize) {
        let mut x = self.solve(b);
        let bnorm = norm(b);
        let mut ax = vec![0.0; b.len()];
        let mut steps = 0;
        while steps < 3 {
            a.mul_vec(&x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            if norm(&r) <= rel_tol * bnorm {
                break;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
            steps += 1;
        }
        (x, steps)
    }
}

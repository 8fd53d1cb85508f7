//! Convex hulls in two and three dimensions, used for containment checks.

use std::collections::HashSet;

use crate::matrix::Matrix;
use crate::predicates::{orient2d, orient3d};

/// A convex hull as a set of half-spaces `n . x <= offset` with unit `n`.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub dim: usize,
    /// Indices (into the input) of the hull vertices.
    pub vertices: Vec<usize>,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl ConvexHull {
    /// Largest signed distance of `p` to the facet planes: negative inside
    /// (minus the distance to the nearest facet), zero on the boundary,
    /// positive outside.
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, off)| n.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - off)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn num_facets(&self) -> usize {
        self.normals.len()
    }
}

/// Hull of planar points (Andrew's monotone chain, exact turns). Returns
/// `None` when the points are collinear.
pub fn hull_2d(points: &Matrix) -> Option<ConvexHull> {
    let n = points.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (points.row(a), points.row(b));
        p[0].partial_cmp(&q[0])
            .unwrap()
            .then(p[1].partial_cmp(&q[1]).unwrap())
    });
    idx.dedup_by(|a, b| points.row(*a) == points.row(*b));
    if idx.len() < 3 {
        return None;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && orient2d(
                points.row(lower[lower.len() - 2]),
                points.row(lower[lower.len() - 1]),
                points.row(i),
            ) <= 0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && orient2d(
                points.row(upper[upper.len() - 2]),
                points.row(upper[upper.len() - 1]),
                points.row(i),
            ) <= 0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return None;
    }
    // counterclockwise: outward normal of edge (a, b) is (dy, -dx)
    let mut normals = Vec::with_capacity(lower.len());
    let mut offsets = Vec::with_capacity(lower.len());
    for k in 0..lower.len() {
        let a = points.row(lower[k]);
        let b = points.row(lower[(k + 1) % lower.len()]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        let nrm = vec![dy / len, -dx / len];
        offsets.push(nrm[0] * a[0] + nrm[1] * a[1]);
        normals.push(nrm);
    }
    Some(ConvexHull {
        dim: 2,
        vertices: lower,
        normals,
        offsets,
    })
}

/// Hull of points in `R^3` by incremental insertion with exact visibility
/// tests. Returns `None` when the points are coplanar.
pub fn hull_3d(points: &Matrix) -> Option<ConvexHull> {
    let n = points.nrows();
    let p = |i: usize| points.row(i);
    // initial tetrahedron
    let a = 0;
    let b = (1..n).find(|&i| p(i) != p(a))?;
    let c = (1..n).find(|&i| {
        let (u, v) = (p(a), p(b));
        let w = p(i);
        let cross = [
            (v[1] - u[1]) * (w[2] - u[2]) - (v[2] - u[2]) * (w[1] - u[1]),
            (v[2] - u[2]) * (w[0] - u[0]) - (v[0] - u[0]) * (w[2] - u[2]),
            (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0]),
        ];
        cross.iter().any(|&x| x != 0.0)
    })?;
    let d = (1..n).find(|&i| orient3d(p(a), p(b), p(c), p(i)) != 0)?;
    let mut faces: Vec<[usize; 3]> = if orient3d(p(a), p(b), p(c), p(d)) > 0 {
        // d is on the positive side of (a, b, c): flip so normals point out
        vec![[a, c, b], [a, b, d], [b, c, d], [c, a, d]]
    } else {
        vec![[a, b, c], [a, d, b], [b, d, c], [c, d, a]]
    };
    let outside = |f: &[usize; 3], q: &[f64]| orient3d(p(f[0]), p(f[1]), p(f[2]), q) > 0;

    for i in 0..n {
        if i == a || i == b || i == c || i == d {
            continue;
        }
        let q = p(i);
        let visible: Vec<bool> = faces.iter().map(|f| outside(f, q)).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let mut horizon: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(u, v)| !edges.contains(&(v, u)))
            .collect();
        horizon.sort_unstable();
        faces = faces
            .into_iter()
            .zip(visible)
            .filter(|(_, v)| !v)
            .map(|(f, _)| f)
            .collect();
        for (u, v) in horizon {
            faces.push([u, v, i]);
        }
    }

    let mut verts: Vec<usize> = faces.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    let mut normals = Vec::with_capacity(faces.len());
    let mut offsets = Vec::with_capacity(faces.len());
    for f in &faces {
        let (u, v, w) = (p(f[0]), p(f[1]), p(f[2]));
        let e1 = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
        let e2 = [w[0] - u[0], w[1] - u[1], w[2] - u[2]];
        let nrm = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
        if len == 0.0 {
            continue;
        }
        let nrm: Vec<f64> = nrm.iter().map(|x| x / len).collect();
        offsets.push(nrm[0] * u[0] + nrm[1] * u[1] + nrm[2] * u[2]);
        normals.push(nrm);
    }
    Some(ConvexHull {
        dim: 3,
        vertices: verts,
        normals,
        offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull_2d() {
        let pts = Matrix::from_rows(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [0.5, 0.5],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.0],
        ])
        .unwrap();
        let h = hull_2d(&pts).unwrap();
        assert_eq!(h.vertices, vec![0, 1, 3, 4]);
        assert!((h.signed_distance(&[0.5, 0.5]) + 0.5).abs() < 1e-15);
        assert_eq!(h.signed_distance(&[1.0, 1.0]), 0.0);
        assert!((h.signed_distance(&[2.0, 0.5]) - 1.0).abs() < 1e-15);
        let line = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(hull_2d(&line).is_none());
    }

    #[test]
    fn cube_hull_3d() {
        let mut rows = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    rows.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        rows.push([0.5, 0.5, 0.5]);
        rows.push([0.2, 0.7, 0.1]);
        let h = hull_3d(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(h.vertices, (0..8).collect::<Vec<_>>());
        assert!((h.signed_distance(&[0.5, 0.5, 0.5]) + 0.5).abs() < 1e-15);
        assert!(h.signed_distance(&[1.0, 1.0, 1.0]).abs() < 1e-15);
        assert!((h.signed_distance(&[0.5, 0.5, 3.0]) - 2.0).abs() < 1e-15);
        let flat = Matrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).unwrap();
        assert!(hull_3d(&flat).is_none());
    }

    #[test]
    fn random_points_inside_their_hull() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 3]> = (0..300)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let h = hull_3d(&m).unwrap();
        for r in &rows {
            assert!(h.signed_distance(r) <= 1e-12);
        }
        // Euler: V - E + F = 2 with E = 3F/2 for a triangulated hull
        assert_eq!(h.vertices.len() as i64 - h.num_facets() as i64 / 2, 2);
    }
}

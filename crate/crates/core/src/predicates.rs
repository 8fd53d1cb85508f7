//! Exact-sign geometric predicates (adaptive precision, via `robust`).

use robust::{Coord, Coord3D};

#[inline]
fn c2(p: &[f64]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

#[inline]
fn c3(p: &[f64]) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

#[inline]
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Exact sign of `det[b - a, c - a]`: positive when `a, b, c` turn
/// counterclockwise.
#[inline]
pub fn orient2d(a: &[f64], b: &[f64], c: &[f64]) -> i8 {
    sign(robust::orient2d(c2(a), c2(b), c2(c)))
}

/// Exact sign of `det[b - a, c - a, d - a]`.
#[inline]
pub fn orient3d(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> i8 {
    // robust's convention is the opposite sign of the edge-vector determinant
    -sign(robust::orient3d(c3(a), c3(b), c3(c), c3(d)))
}

/// Exact sign of `d` relative to the circumcircle of counterclockwise
/// `a, b, c`: positive inside, zero on, negative outside.
#[inline]
pub fn incircle(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> i8 {
    sign(robust::incircle(c2(a), c2(b), c2(c), c2(d)))
}

/// Sign of the determinant of edge vectors from `points[0]`, for a
/// `d`-simplex given by `d + 1` points in `R^d`. Exact for `d <= 3`.
pub fn simplex_orientation(points: &[&[f64]]) -> i8 {
    match points.len() {
        2 => sign(points[1][0] - points[0][0]),
        3 => orient2d(points[0], points[1], points[2]),
        4 => orient3d(points[0], points[1], points[2], points[3]),
        _ => sign(simplex_determinant(points)),
    }
}

/// Floating-point determinant of edge vectors from `points[0]`.
pub fn simplex_determinant(points: &[&[f64]]) -> f64 {
    let d = points.len() - 1;
    let mut m = Vec::with_capacity(d * d);
    for p in &points[1..] {
        for k in 0..d {
            m.push(p[k] - points[0][k]);
        }
    }
    crate::matrix::determinant(m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_conventions() {
        assert_eq!(orient2d(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]), 1);
        assert_eq!(orient2d(&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]), -1);
        assert_eq!(orient2d(&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]), 0);
        let o = [0.0, 0.0, 0.0];
        let (x, y, z) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(orient3d(&o, &x, &y, &z), 1);
        assert_eq!(orient3d(&o, &y, &x, &z), -1);
        assert_eq!(simplex_determinant(&[&o, &x, &y, &z]), 1.0);
        assert_eq!(simplex_orientation(&[&[2.0], &[1.0]]), -1);
    }

    #[test]
    fn near_degenerate_sign_is_exact() {
        // classic failure case for naive floating point evaluation
        let a = [0.5, 0.5];
        let b = [12.0, 12.0];
        let c = [24.0, 24.0];
        assert_eq!(orient2d(&a, &b, &c), 0);
        let c = [24.0, 24.0 + f64::EPSILON * 16.0];
        assert_eq!(orient2d(&a, &b, &c), 1);
    }

    #[test]
    fn incircle_convention() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert_eq!(incircle(&a, &b, &c, &[0.4, 0.4]), 1);
        assert_eq!(incircle(&a, &b, &c, &[1.0, 1.0]), 0);
        assert_eq!(incircle(&a, &b, &c, &[2.0, 2.0]), -1);
    }
}

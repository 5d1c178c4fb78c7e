//! Fixed-size 2D vectors and matrices plus a tiny dense solver.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2(pub [f64; 2]);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2([0.0, 0.0]);

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2([x, y])
    }

    #[inline]
    pub fn x(self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn y(self) -> f64 {
        self.0[1]
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Outer product `self ⊗ other`.
    pub fn outer(self, other: Vec2) -> Matrix2 {
        Matrix2([
            self.0[0] * other.0[0],
            self.0[0] * other.0[1],
            self.0[1] * other.0[0],
            self.0[1] * other.0[1],
        ])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.0[0] -= o.0[0];
        self.0[1] -= o.0[1];
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2([-self.0[0], -self.0[1]])
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2([self * v.0[0], self * v.0[1]])
    }
}

/// A 2×2 real matrix stored row-major: `[m11, m12, m21, m22]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Matrix2(pub [f64; 4]);

impl Matrix2 {
    pub const ZERO: Matrix2 = Matrix2([0.0; 4]);
    pub const IDENTITY: Matrix2 = Matrix2([1.0, 0.0, 0.0, 1.0]);
    /// Generator of rotations, `J = [[0, -1], [1, 0]]`.
    pub const J: Matrix2 = Matrix2([0.0, -1.0, 1.0, 0.0]);

    #[inline]
    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Matrix2([m11, m12, m21, m22])
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Matrix2([d1, 0.0, 0.0, d2])
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Matrix2([c, -s, s, c])
    }

    /// Builds a matrix from its two columns.
    pub fn from_columns(c1: Vec2, c2: Vec2) -> Self {
        Matrix2([c1.0[0], c2.0[0], c1.0[1], c2.0[1]])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[2 * row + col]
    }

    pub fn col(&self, j: usize) -> Vec2 {
        Vec2([self.0[j], self.0[2 + j]])
    }

    pub fn transpose(&self) -> Matrix2 {
        let m = &self.0;
        Matrix2([m[0], m[2], m[1], m[3]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0] * m[3] - m[1] * m[2]
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Matrix2) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Symmetric part `(G + Gᵀ)/2`.
    pub fn sym(&self) -> Matrix2 {
        let m = &self.0;
        let off = 0.5 * (m[1] + m[2]);
        Matrix2([m[0], off, off, m[3]])
    }

    /// Skew part `(G − Gᵀ)/2`.
    pub fn skew(&self) -> Matrix2 {
        let m = &self.0;
        let off = 0.5 * (m[1] - m[2]);
        Matrix2([0.0, off, -off, 0.0])
    }

    pub fn scale(&self, s: f64) -> Matrix2 {
        Matrix2(self.0.map(|v| v * s))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        Vec2([m[0] * v.0[0] + m[1] * v.0[1], m[2] * v.0[0] + m[3] * v.0[1]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, o: Matrix2) -> Matrix2 {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a += b;
        }
        Matrix2(r)
    }
}

impl AddAssign for Matrix2 {
    fn add_assign(&mut self, o: Matrix2) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, o: Matrix2) -> Matrix2 {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a -= b;
        }
        Matrix2(r)
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        Matrix2(self.0.map(|v| -v))
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        let a = &self.0;
        let b = &o.0;
        Matrix2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl Mul<Vec2> for Matrix2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

impl Mul<Matrix2> for f64 {
    type Output = Matrix2;
    fn mul(self, m: Matrix2) -> Matrix2 {
        m.scale(self)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Solves the dense system `a x = b` (row-major `n × n`) by Gaussian
/// elimination with partial pivoting. Returns `None` when a pivot falls
/// below `pivot_tol` times the largest entry of `a`.
pub fn solve_dense(a: &[f64], b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let (piv, piv_val) =
            (k..n)
                .map(|r| (r, m[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= pivot_tol * scale {
            return None;
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            rhs.swap(k, piv);
        }
        let d = m[k * n + k];
        for r in (k + 1)..n {
            let f = m[r * n + k] / d;
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                m[r * n + c] -= f * m[k * n + c];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|c| m[k * n + c] * x[c]).sum();
        x[k] = (rhs[k] - s) / m[k * n + k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_orthogonal() {
        let r = Matrix2::rotation(0.7);
        let rtr = r.transpose() * r;
        assert!(rtr.max_abs_diff(&Matrix2::IDENTITY) < 1e-15);
        assert!((r.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sym_plus_skew_recovers_matrix() {
        let g = Matrix2::new(1.0, 2.0, -3.0, 4.0);
        assert_eq!(g.sym() + g.skew(), g);
        assert_eq!(g.skew().sym(), Matrix2::ZERO);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-12);
    }

    #[test]
    fn dense_solve_small_system() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|r| (0..3).map(|c| a[r * 3 + c] * x_true[c]).sum()).collect();
        let x = solve_dense(&a, &b, 1e-14).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_solve_detects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(&a, &[1.0, 2.0], 1e-12).is_none());
    }
}

//! Stored energy densities, the linearized quadratic form at the identity
//! and the uniaxial constants derived from it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Matrix2, Vec2};

/// Default box constant bounding `‖y‖∞` and `‖∇y‖∞`.
pub const DEFAULT_BOX_BOUND: f64 = 10.0;

/// Step of the central finite-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

/// Nearest rotation of a 2×2 matrix together with the distance to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct So2Projection {
    /// Angle of the nearest rotation.
    pub angle: f64,
    /// Frobenius distance `dist(F, SO(2))`.
    pub dist: f64,
    /// `det F < 0`; such gradients are far from every rotation.
    pub negative_det: bool,
    /// The nearest rotation is not unique (conformal part vanishes).
    pub degenerate: bool,
}

impl So2Projection {
    pub fn rotation(&self) -> Matrix2 {
        Matrix2::rotation(self.angle)
    }
}

/// Closed-form projection onto SO(2).
///
/// Splitting `F = [[a, b], [c, d]]` into its conformal part
/// `p = ((a+d)/2, (c-b)/2)` and anticonformal part `q = ((a-d)/2, (b+c)/2)`,
/// the nearest rotation has angle `atan2(p₂, p₁)` and
/// `dist²(F, SO(2)) = 2|q|² + 2(|p| - 1)²`. The formula holds for every
/// `F`, including `det F ≤ 0`.
pub fn so2_projection(f: &Matrix2) -> So2Projection {
    let [a, b, c, d] = f.0;
    let p1 = 0.5 * (a + d);
    let p2 = 0.5 * (c - b);
    let q1 = 0.5 * (a - d);
    let q2 = 0.5 * (b + c);
    let pn = p1.hypot(p2);
    let dist_sq = 2.0 * (q1 * q1 + q2 * q2) + 2.0 * (pn - 1.0) * (pn - 1.0);
    So2Projection {
        angle: if pn > 0.0 { p2.atan2(p1) } else { 0.0 },
        dist: dist_sq.max(0.0).sqrt(),
        negative_det: f.det() < 0.0,
        degenerate: pn == 0.0,
    }
}

/// Frobenius distance from `f` to SO(2).
pub fn dist_so2(f: &Matrix2) -> f64 {
    so2_projection(f).dist
}

/// Polar decomposition `F = R U` with `R` the nearest rotation and
/// `U = RᵀF` (symmetric whenever `det F > 0`).
pub fn polar(f: &Matrix2) -> (Matrix2, Matrix2) {
    let r = so2_projection(f).rotation();
    (r, r.transpose() * *f)
}

/// A frame-indifferent stored energy density `W: ℝ^{2×2} → [0, ∞)`.
pub trait EnergyDensity: Send + Sync + fmt::Debug {
    /// Identifier used in configurations and manifests.
    fn id(&self) -> &str;

    fn eval(&self, f: &Matrix2) -> f64;

    /// `∂W/∂F`. Defaults to central differences.
    fn gradient(&self, f: &Matrix2) -> Matrix2 {
        let mut g = [0.0; 4];
        let h = 1e-6 * (1.0 + f.norm());
        for (k, gk) in g.iter_mut().enumerate() {
            let mut fp = *f;
            let mut fm = *f;
            fp.0[k] += h;
            fm.0[k] -= h;
            *gk = (self.eval(&fp) - self.eval(&fm)) / (2.0 * h);
        }
        Matrix2(g)
    }

    /// Closed-form `Q = D²W(Id)` when known.
    fn closed_form_q(&self) -> Option<QuadraticForm> {
        None
    }

    /// Constant `c` of the lower bound `W ≥ c·dist²(·, SO(2))` when known.
    fn growth_constant(&self) -> Option<f64> {
        None
    }
}

/// `W(F) = dist²(F, SO(2))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DistSquared;

impl EnergyDensity for DistSquared {
    fn id(&self) -> &str {
        "dist2"
    }

    fn eval(&self, f: &Matrix2) -> f64 {
        let d = dist_so2(f);
        d * d
    }

    fn gradient(&self, f: &Matrix2) -> Matrix2 {
        // 2(F - R) away from the cut locus; the p-term is dropped where |p| = 0.
        let [a, b, c, d] = f.0;
        let p1 = 0.5 * (a + d);
        let p2 = 0.5 * (c - b);
        let q1 = 0.5 * (a - d);
        let q2 = 0.5 * (b + c);
        let pn = p1.hypot(p2);
        let (s1, s2) = if pn > 0.0 {
            let k = 2.0 * (pn - 1.0) / pn;
            (k * p1, k * p2)
        } else {
            (0.0, 0.0)
        };
        Matrix2([2.0 * q1 + s1, 2.0 * q2 - s2, 2.0 * q2 + s2, -2.0 * q1 + s1])
    }

    fn closed_form_q(&self) -> Option<QuadraticForm> {
        Some(QuadraticForm::isotropic(1.0, 0.0))
    }

    fn growth_constant(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// St. Venant–Kirchhoff energy with a penalty on inverted gradients:
/// `W(F) = μ/4 |FᵀF − I|² + λ/8 (tr(FᵀF − I))² + κ·min(det F, 0)²`.
///
/// The penalty removes the spurious zeros at reflections; it vanishes near
/// SO(2) so `Q` is that of the plain St. Venant–Kirchhoff energy.
#[derive(Debug, Clone, Copy)]
pub struct StVenantKirchhoff {
    pub mu: f64,
    pub lambda: f64,
    pub inversion_penalty: f64,
}

impl Default for StVenantKirchhoff {
    fn default() -> Self {
        StVenantKirchhoff {
            mu: 1.0,
            lambda: 1.0,
            inversion_penalty: 10.0,
        }
    }
}

impl EnergyDensity for StVenantKirchhoff {
    fn id(&self) -> &str {
        "svk"
    }

    fn eval(&self, f: &Matrix2) -> f64 {
        let e = f.transpose() * *f - Matrix2::IDENTITY;
        let neg_det = f.det().min(0.0);
        0.25 * self.mu * e.norm_sq()
            + 0.125 * self.lambda * e.trace() * e.trace()
            + self.inversion_penalty * neg_det * neg_det
    }

    fn gradient(&self, f: &Matrix2) -> Matrix2 {
        let e = f.transpose() * *f - Matrix2::IDENTITY;
        let stress = e.scale(self.mu) + Matrix2::IDENTITY.scale(0.5 * self.lambda * e.trace());
        let neg_det = f.det().min(0.0);
        let [a, b, c, d] = f.0;
        let cof = Matrix2([d, -c, -b, a]);
        *f * stress + cof.scale(2.0 * self.inversion_penalty * neg_det)
    }

    fn closed_form_q(&self) -> Option<QuadraticForm> {
        Some(QuadraticForm::isotropic(self.mu, self.lambda))
    }
}

/// Looks up a registered density by identifier (`dist2` or `svk`).
pub fn density_from_id(id: &str) -> Result<Arc<dyn EnergyDensity>> {
    match id {
        "dist2" | "default" => Ok(Arc::new(DistSquared)),
        "svk" => Ok(Arc::new(StVenantKirchhoff::default())),
        other => Err(Error::InvalidDensity(format!(
            "unknown density identifier '{other}' (expected 'dist2' or 'svk')"
        ))),
    }
}

/// A density together with the box constant `M`.
#[derive(Debug, Clone)]
pub struct Material {
    pub density: Arc<dyn EnergyDensity>,
    pub box_bound: f64,
}

impl Material {
    pub fn new(density: Arc<dyn EnergyDensity>, box_bound: f64) -> Self {
        Material { density, box_bound }
    }

    pub fn default_density() -> Self {
        Material::new(Arc::new(DistSquared), DEFAULT_BOX_BOUND)
    }

    /// Evaluates `W(F)`, rejecting gradients outside the box `|F| ≤ M`.
    pub fn eval_w(&self, f: &Matrix2) -> Result<f64> {
        let norm = f.norm();
        if norm > self.box_bound || !norm.is_finite() {
            return Err(Error::GradientBound {
                norm,
                bound: self.box_bound,
            });
        }
        Ok(self.density.eval(f))
    }
}

/// A quadratic form on symmetric 2×2 matrices in the isometric coordinates
/// `(E₁₁, E₂₂, √2·E₁₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub coeffs: [[f64; 3]; 3],
}

impl QuadraticForm {
    /// `Q(E) = 2μ|E|² + λ(tr E)²`.
    pub fn isotropic(mu: f64, lambda: f64) -> Self {
        let mut coeffs = [[0.0; 3]; 3];
        for (i, row) in coeffs.iter_mut().enumerate() {
            row[i] = 2.0 * mu;
        }
        for row in coeffs.iter_mut().take(2) {
            row[0] += lambda;
            row[1] += lambda;
        }
        QuadraticForm { coeffs }
    }

    pub fn coords(e: &Matrix2) -> [f64; 3] {
        let s = e.sym();
        [s.0[0], s.0[3], std::f64::consts::SQRT_2 * s.0[1]]
    }

    pub fn from_coords(v: [f64; 3]) -> Matrix2 {
        let off = v[2] / std::f64::consts::SQRT_2;
        Matrix2([v[0], off, off, v[1]])
    }

    fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(self.coeffs.iter()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `Q(E)`; only the symmetric part of `e` enters.
    pub fn eval(&self, e: &Matrix2) -> f64 {
        let v = Self::coords(e);
        let qv = self.apply(&v);
        v.iter().zip(qv).map(|(a, b)| a * b).sum()
    }

    pub fn max_rel_diff(&self, other: &QuadraticForm) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        self.coeffs
            .iter()
            .flatten()
            .zip(other.coeffs.iter().flatten())
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue, by Jacobi sweeps on the 3×3 matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut a = self.coeffs;
        for _ in 0..50 {
            let mut off = 0.0;
            for p in 0..3 {
                for q in (p + 1)..3 {
                    off += a[p][q] * a[p][q];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..3 {
                for q in (p + 1)..3 {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..3 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..3 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        a[0][0].min(a[1][1]).min(a[2][2])
    }
}

/// Full 4×4 Hessian of `W` at the identity over all matrix entries,
/// central differences with Richardson extrapolation from `h` and `2h`.
pub fn hessian_full_fd(w: &dyn EnergyDensity, h: f64) -> [[f64; 4]; 4] {
    let raw = |h: f64| {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let at = |si: f64, sj: f64| {
                    let mut f = Matrix2::IDENTITY;
                    f.0[i] += si * h;
                    f.0[j] += sj * h;
                    w.eval(&f)
                };
                out[i][j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
            }
        }
        out
    };
    let fine = raw(h);
    let coarse = raw(2.0 * h);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    out
}

/// Finite-difference `Q = D²W(Id)` restricted to symmetric matrices.
///
/// Fails when the numerical Hessian is asymmetric, does not annihilate the
/// infinitesimal rotation `J`, or is not positive definite on symmetric
/// matrices.
pub fn hessian_fd(w: &dyn EnergyDensity, h: f64) -> Result<QuadraticForm> {
    let hf = hessian_full_fd(w, h);
    let scale = hf.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidDensity(format!(
            "{}: vanishing or non-finite Hessian at the identity",
            w.id()
        )));
    }
    let mut asym = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            asym = asym.max((hf[i][j] - hf[j][i]).abs());
        }
    }
    if asym > 1e-6 * scale {
        return Err(Error::InvalidDensity(format!(
            "{}: numerical Hessian asymmetric ({asym:.3e})",
            w.id()
        )));
    }
    let skew = Matrix2::J.0;
    let skew_resp = (0..4)
        .map(|i| (0..4).map(|j| hf[i][j] * skew[j]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if skew_resp > 1e-5 * scale {
        return Err(Error::InvalidDensity(format!(
            "{}: Hessian does not vanish on infinitesimal rotations ({skew_resp:.3e}); density is not frame indifferent",
            w.id()
        )));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let basis = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, r, r, 0.0]];
    let mut coeffs = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += basis[a][i] * hf[i][j] * basis[b][j];
                }
            }
            coeffs[a][b] = s;
        }
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let m = 0.5 * (coeffs[a][b] + coeffs[b][a]);
            coeffs[a][b] = m;
            coeffs[b][a] = m;
        }
    }
    let q = QuadraticForm { coeffs };
    if q.min_eigenvalue() <= 1e-8 * scale {
        return Err(Error::InvalidDensity(format!(
            "{}: Q is not positive definite on symmetric matrices",
            w.id()
        )));
    }
    Ok(q)
}

/// `Q = D²W(Id)`: the registered closed form when available, finite
/// differences otherwise.
pub fn hessian_q(w: &dyn EnergyDensity) -> Result<QuadraticForm> {
    match w.closed_form_q() {
        Some(q) => Ok(q),
        None => hessian_fd(w, HESSIAN_STEP),
    }
}

/// Uniaxial modulus and optimal strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniaxialConstants {
    /// `α = inf{Q(F): e₁ᵀFe₁ = 1}`.
    pub alpha: f64,
    /// Symmetric minimizer with `e₁ᵀFᵃe₁ = a` and `Q(Fᵃ) = αa²`.
    pub fa: Matrix2,
    /// Lagrange multiplier of the constraint `e₁ᵀFe₁ = a`.
    pub multiplier: f64,
    /// Norm of the KKT residual at the returned point.
    pub kkt_residual: f64,
}

/// Solves the equality-constrained program `min Q(F)` over symmetric `F`
/// with `F₁₁ = a`, via its 4×4 KKT system.
pub fn alpha_and_fa(q: &QuadraticForm, a: f64) -> Result<UniaxialConstants> {
    if q.min_eigenvalue() <= 0.0 {
        return Err(Error::InvalidDensity(
            "Q is not positive definite on symmetric matrices".into(),
        ));
    }
    let c = &q.coeffs;
    // Unknowns (v1, v2, v3, μ); stationarity 2Qv − μe₁ = 0, constraint v1 = target.
    let solve_for = |target: f64| -> Result<([f64; 3], f64)> {
        let kkt = [
            2.0 * c[0][0],
            2.0 * c[0][1],
            2.0 * c[0][2],
            -1.0,
            2.0 * c[1][0],
            2.0 * c[1][1],
            2.0 * c[1][2],
            0.0,
            2.0 * c[2][0],
            2.0 * c[2][1],
            2.0 * c[2][2],
            0.0,
            1.0,
            0.0,
            0.0,
            0.0,
        ];
        let x = solve_dense(&kkt, &[0.0, 0.0, 0.0, target], 1e-14)
            .ok_or_else(|| Error::InvalidDensity("singular KKT system for α".into()))?;
        Ok(([x[0], x[1], x[2]], x[3]))
    };
    let (unit, _) = solve_for(1.0)?;
    let fa1 = QuadraticForm::from_coords(unit);
    let alpha = q.eval(&fa1);
    if !(alpha > 0.0) {
        return Err(Error::InvalidDensity(format!(
            "degenerate uniaxial modulus α = {alpha}"
        )));
    }
    let (v, mu) = solve_for(a)?;
    let qv = q.apply(&v);
    let kkt_residual =
        ((2.0 * qv[0] - mu).powi(2) + (2.0 * qv[1]).powi(2) + (2.0 * qv[2]).powi(2) + (v[0] - a).powi(2)).sqrt();
    Ok(UniaxialConstants {
        alpha,
        fa: QuadraticForm::from_coords(v),
        multiplier: mu,
        kkt_residual,
    })
}

/// `max_t |W(Id + tG) − ½Q(e(tG))| / t³` over the sampled `t`.
pub fn taylor_remainder_bound(w: &dyn EnergyDensity, q: &QuadraticForm, g: &Matrix2, t_grid: &[f64]) -> f64 {
    t_grid
        .iter()
        .filter(|t| **t > 0.0)
        .map(|&t| {
            let tg = g.scale(t);
            let rem = w.eval(&(Matrix2::IDENTITY + tg)) - 0.5 * q.eval(&tg);
            rem.abs() / (t * t * t)
        })
        .fold(0.0, f64::max)
}

/// Sampled estimate of `inf W / dist²(·, SO(2))` on `{|F| ≤ M}` using a
/// deterministic lattice in polar coordinates.
pub fn estimate_growth_constant(w: &dyn EnergyDensity, box_bound: f64, per_axis: usize) -> f64 {
    let mut best = f64::INFINITY;
    let n = per_axis.max(2);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // F = R(θ) diag(s1, s2) R(φ)
                let theta = std::f64::consts::TAU * i as f64 / n as f64;
                let s1 = box_bound / std::f64::consts::SQRT_2 * (j as f64 + 0.5) / n as f64;
                let s2 = box_bound / std::f64::consts::SQRT_2 * ((k as f64 + 0.5) / n as f64 * 2.0 - 1.0);
                let f = Matrix2::rotation(theta) * Matrix2::diag(s1, s2) * Matrix2::rotation(0.3 * theta);
                let d2 = dist_so2(&f).powi(2);
                if d2 > 1e-8 {
                    best = best.min(w.eval(&f) / d2);
                }
            }
        }
    }
    best
}

/// Applies `F ↦ Q_rot·F`.
pub fn rotate_left(theta: f64, f: &Matrix2) -> Matrix2 {
    Matrix2::rotation(theta) * *f
}

/// Unit vector `e₁`.
pub const E1: Vec2 = Vec2::new(1.0, 0.0);
/// Unit vector `e₂`.
pub const E2: Vec2 = Vec2::new(0.0, 1.0);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense sampling of SO(2): `min_θ |F − R(θ)|`.
    fn sampled_dist(f: &Matrix2, samples: usize) -> f64 {
        let mut best = f64::INFINITY;
        let mut arg = 0.0;
        for k in 0..samples {
            let th = std::f64::consts::TAU * k as f64 / samples as f64;
            let d = (*f - Matrix2::rotation(th)).norm();
            if d < best {
                best = d;
                arg = th;
            }
        }
        // golden-section refinement around the best sample
        let step = std::f64::consts::TAU / samples as f64;
        let (mut lo, mut hi) = (arg - step, arg + step);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if (*f - Matrix2::rotation(m1)).norm() < (*f - Matrix2::rotation(m2)).norm() {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best.min((*f - Matrix2::rotation(0.5 * (lo + hi))).norm())
    }

    #[test]
    fn dist_identity_and_rotation() {
        assert_eq!(dist_so2(&Matrix2::IDENTITY), 0.0);
        assert!(dist_so2(&Matrix2::rotation(0.3)) < 1e-15);
    }

    #[test]
    fn dist_stretch_matches_sampling_oracle() {
        let f = Matrix2::diag(1.2, 1.0);
        let oracle = sampled_dist(&f, 3600);
        assert!((oracle - 0.2).abs() < 1e-10);
        assert!((dist_so2(&f) - oracle).abs() < 1e-10);
    }

    #[test]
    fn dist_handles_negative_determinant() {
        let f = Matrix2::diag(1.0, -1.0);
        let p = so2_projection(&f);
        assert!(p.negative_det);
        assert!((p.dist - sampled_dist(&f, 3600)).abs() < 1e-9);
    }

    #[test]
    fn eval_w_rejects_out_of_box() {
        let m = Material::default_density();
        assert!(matches!(
            m.eval_w(&Matrix2::diag(20.0, 0.0)),
            Err(Error::GradientBound { .. })
        ));
        assert!((m.eval_w(&Matrix2::diag(1.2, 1.0)).unwrap() - 0.04).abs() < 1e-14);
        assert_eq!(m.eval_w(&Matrix2::IDENTITY).unwrap(), 0.0);
    }

    #[test]
    fn default_hessian_fd_matches_closed_form() {
        let fd = hessian_fd(&DistSquared, HESSIAN_STEP).unwrap();
        let cf = DistSquared.closed_form_q().unwrap();
        assert!(fd.max_rel_diff(&cf) < 1e-6, "{fd:?}");
        let e = Matrix2::new(0.3, -0.2, -0.2, 0.5);
        assert!((cf.eval(&e) - 2.0 * e.norm_sq()).abs() < 1e-14);
        assert_eq!(cf.eval(&Matrix2::ZERO), 0.0);
        assert_eq!(cf.eval(&Matrix2::J.scale(0.7)), 0.0);
    }

    #[test]
    fn fd_hessian_matches_richardson_at_two_steps() {
        // independent estimate at h = 1e-3 agrees with the default step
        let a = hessian_fd(&DistSquared, 1e-3).unwrap();
        let b = hessian_fd(&DistSquared, 1e-4).unwrap();
        assert!(a.max_rel_diff(&b) < 1e-6);
    }

    #[test]
    fn svk_hessian_fd_matches_closed_form() {
        let w = StVenantKirchhoff::default();
        let fd = hessian_fd(&w, HESSIAN_STEP).unwrap();
        assert!(fd.max_rel_diff(&w.closed_form_q().unwrap()) < 1e-6);
    }

    #[test]
    fn non_frame_indifferent_density_is_rejected() {
        #[derive(Debug)]
        struct Bad;
        impl EnergyDensity for Bad {
            fn id(&self) -> &str {
                "bad"
            }
            fn eval(&self, f: &Matrix2) -> f64 {
                (*f - Matrix2::IDENTITY).norm_sq()
            }
        }
        assert!(matches!(hessian_fd(&Bad, HESSIAN_STEP), Err(Error::InvalidDensity(_))));
    }

    /// Brute force over (E₂₂, E₁₂) with E₁₁ = 1.
    fn grid_alpha(q: &QuadraticForm, step: f64) -> (f64, f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let n = (2.0 / step).round() as i64;
        for i in -n..=n {
            for j in -n..=n {
                let e22 = i as f64 * step;
                let e12 = j as f64 * step;
                let v = q.eval(&Matrix2::new(1.0, e12, e12, e22));
                if v < best.0 {
                    best = (v, e22, e12);
                }
            }
        }
        best
    }

    #[test]
    fn alpha_default_density() {
        let q = DistSquared.closed_form_q().unwrap();
        let c = alpha_and_fa(&q, 0.7).unwrap();
        let (ga, g22, g12) = grid_alpha(&q, 1e-3);
        assert!((ga - 2.0).abs() < 1e-12);
        assert!(g22.abs() < 1e-12 && g12.abs() < 1e-12);
        assert!((c.alpha - 2.0).abs() < 1e-12);
        assert!(c.fa.max_abs_diff(&Matrix2::diag(0.7, 0.0)) < 1e-14);
        assert!(c.kkt_residual < 1e-10);
    }

    #[test]
    fn alpha_svk_against_grid() {
        let q = StVenantKirchhoff::default().closed_form_q().unwrap();
        let c = alpha_and_fa(&q, 1.0).unwrap();
        let (ga, g22, g12) = grid_alpha(&q, 1e-3);
        // grid minimum is within O(step²) of the true minimum
        assert!(c.alpha <= ga + 1e-12);
        assert!(ga - c.alpha < 1e-5);
        assert!((c.fa.0[3] - g22).abs() <= 1e-3);
        assert!((c.fa.0[1] - g12).abs() <= 1e-3);
        assert!((c.alpha - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_and_scaling() {
        let q = StVenantKirchhoff::default().closed_form_q().unwrap();
        let zero = alpha_and_fa(&q, 0.0).unwrap();
        assert_eq!(zero.fa, Matrix2::ZERO);
        assert_eq!(q.eval(&zero.fa), 0.0);
        let one = alpha_and_fa(&q, 1.0).unwrap();
        for a in [-1.5, -0.3, 0.4, 2.0] {
            let c = alpha_and_fa(&q, a).unwrap();
            assert!((q.eval(&c.fa) - a * a * q.eval(&one.fa)).abs() < 1e-12);
            assert!((q.eval(&c.fa) - c.alpha * a * a).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_q_rejected() {
        let q = QuadraticForm {
            coeffs: [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert!(alpha_and_fa(&q, 1.0).is_err());
    }

    #[test]
    fn taylor_remainder_cases() {
        let q = DistSquared.closed_form_q().unwrap();
        assert_eq!(
            taylor_remainder_bound(&DistSquared, &q, &Matrix2::ZERO, &[0.1, 0.01]),
            0.0
        );
        // W(Id + t e1⊗e1) = t² exactly for t > -1: the remainder vanishes.
        let c = taylor_remainder_bound(&DistSquared, &q, &Matrix2::diag(1.0, 0.0), &[0.1, 0.01]);
        assert!(c < 1e-9, "{c}");
        // skew: W(Id + tωJ) = t⁴ω⁴/2 + O(t⁶), ratio → 0 like t.
        let j = Matrix2::J.scale(0.8);
        let c1 = taylor_remainder_bound(&DistSquared, &q, &j, &[0.1]);
        let c2 = taylor_remainder_bound(&DistSquared, &q, &j, &[0.01]);
        assert!(c1 < 1.0 && c2 < c1);
        // generic direction: ratio bounded independently of t
        let g = Matrix2::new(0.5, -0.4, 0.3, 0.2);
        let ca = taylor_remainder_bound(&DistSquared, &q, &g, &[0.1]);
        let cb = taylor_remainder_bound(&DistSquared, &q, &g, &[0.01]);
        assert!(ca < 2.0 && cb < 2.0 && (ca - cb).abs() < 0.5 * ca.max(cb) + 1e-6);
    }

    #[test]
    fn growth_constant_dist2_is_one() {
        let c = estimate_growth_constant(&DistSquared, 10.0, 12);
        assert!((c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradients_match_finite_differences() {
        #[derive(Debug)]
        struct Fd<'a>(&'a dyn EnergyDensity);
        impl EnergyDensity for Fd<'_> {
            fn id(&self) -> &str {
                "fd"
            }
            fn eval(&self, f: &Matrix2) -> f64 {
                self.0.eval(f)
            }
        }
        let svk = StVenantKirchhoff::default();
        for f in [
            Matrix2::new(1.1, 0.2, -0.3, 0.9),
            Matrix2::new(-0.5, 0.1, 0.4, 0.7),
            Matrix2::new(0.3, 1.2, -0.8, 0.1),
        ] {
            for w in [&DistSquared as &dyn EnergyDensity, &svk] {
                let g = w.gradient(&f);
                let fd = Fd(w).gradient(&f);
                assert!(g.max_abs_diff(&fd) < 1e-6, "{} {g:?} {fd:?}", w.id());
            }
        }
    }

    fn matrix_in_box() -> impl Strategy<Value = Matrix2> {
        prop::array::uniform4(-5.0..5.0f64).prop_map(Matrix2)
    }

    proptest! {
        #[test]
        fn frame_indifference(f in matrix_in_box(), theta in -3.2..3.2f64) {
            let qf = rotate_left(theta, &f);
            prop_assert!((DistSquared.eval(&qf) - DistSquared.eval(&f)).abs() <= 1e-12 * (1.0 + DistSquared.eval(&f)));
            let svk = StVenantKirchhoff::default();
            prop_assert!((svk.eval(&qf) - svk.eval(&f)).abs() <= 1e-10 * (1.0 + svk.eval(&f)));
        }

        #[test]
        fn zero_distance_iff_polar_reproduces(f in matrix_in_box()) {
            let (r, _) = polar(&f);
            let d = dist_so2(&f);
            prop_assert!((d - (f - r).norm()).abs() < 1e-12 * (1.0 + f.norm()));
        }

        #[test]
        fn rotations_have_zero_energy(theta in -10.0..10.0f64) {
            let r = Matrix2::rotation(theta);
            prop_assert!(DistSquared.eval(&r) < 1e-24);
            prop_assert!(StVenantKirchhoff::default().eval(&r) < 1e-24);
        }
    }
}

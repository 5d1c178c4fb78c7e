//! Numerical checks of the passage from the nonlinear energy to its
//! linearized limit: recovery sequences and their convergence rate, a
//! liminf harness with applicability diagnostics, and slice measures.

use serde::{Deserialize, Serialize};

use crate::density::{Material, QuadraticForm};
use crate::domain::{all_slices, gauss_points, AffineMap, Axis, DiscreteDeformation, PiecewiseAffine};
use crate::energy::{energy_limit, energy_nonlinear, EnergyBreakdown, LimitTriple};
use crate::error::{Error, Result};

/// `y = T + √ε·u` cell-wise, open on the crack set of `u` (which contains
/// the partition interfaces).
fn recovery_field(t: &LimitTriple, eps: f64) -> PiecewiseAffine {
    let p = t.partition();
    let u = t.u();
    let s = eps.sqrt();
    let maps: Vec<AffineMap> = (0..u.mesh().num_cells())
        .map(|c| t.motion().motions[p.label(c)].as_affine().add(&u.map(c).scale(s)))
        .collect();
    PiecewiseAffine::from_parts_unchecked(u.mesh_arc().clone(), maps, u.open_flags().to_vec())
}

fn admissible(t: &LimitTriple, eps: f64, box_bound: f64) -> bool {
    DiscreteDeformation::new(recovery_field(t, eps), box_bound).is_ok()
}

/// Largest `ε ≤ above` keeping the recovery field inside the box, by
/// bisection in `log ε`; `0` when even `T` violates the box.
fn largest_admissible_eps(t: &LimitTriple, above: f64, box_bound: f64) -> f64 {
    let mut lo = above * 1e-30;
    if !admissible(t, lo, box_bound) {
        return 0.0;
    }
    let mut hi = above;
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if admissible(t, mid, box_bound) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `y_k = T + √ε_k·u` for each `ε_k`, in the given order.
pub fn recovery_sequence(t: &LimitTriple, eps_list: &[f64], box_bound: f64) -> Result<Vec<DiscreteDeformation>> {
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
        }
        match DiscreteDeformation::new(recovery_field(t, eps), box_bound) {
            Ok(y) => out.push(y),
            Err(e) => {
                let top = eps_list.iter().cloned().fold(0.0, f64::max);
                return Err(Error::EpsRange {
                    message: format!("recovery field leaves the box at eps = {eps:.3e}: {e}"),
                    eps_max: largest_admissible_eps(t, top, box_bound),
                });
            }
        }
    }
    Ok(out)
}

/// Energy of one recovery field against the limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub eps: f64,
    pub energy: f64,
    pub bulk: f64,
    pub surface: f64,
    pub limit: f64,
    pub gap: f64,
}

/// `|E_ε(y_ε) − E(t)|` along the recovery sequence.
pub fn recovery_gaps(
    t: &LimitTriple,
    eps_list: &[f64],
    material: &Material,
    q: &QuadraticForm,
) -> Result<Vec<RecoveryRow>> {
    let limit = energy_limit(t, q)?.total;
    let seq = recovery_sequence(t, eps_list, material.box_bound)?;
    eps_list
        .iter()
        .zip(&seq)
        .map(|(&eps, y)| {
            let e = energy_nonlinear(y, material, eps)?;
            Ok(RecoveryRow {
                eps,
                energy: e.total,
                bulk: e.bulk,
                surface: e.surface(),
                limit,
                gap: (e.total - limit).abs(),
            })
        })
        .collect()
}

/// Least-squares fit `log gap ≈ slope·log ε + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `+∞` when every gap vanishes.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// Pairs dropped for a zero gap.
    pub dropped: usize,
    pub exact: bool,
}

pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|&(e, g)| !(e > 0.0) || !(g >= 0.0)) {
        return Err(Error::InvalidArgument(
            "rate fit needs positive eps and nonnegative gaps".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(e, g)| (e.ln(), g.ln()))
        .collect();
    let dropped = pairs.len() - pts.len();
    if pts.is_empty() {
        return Ok(RateFit {
            slope: f64::INFINITY,
            intercept: f64::NAN,
            residual: 0.0,
            dropped,
            exact: true,
        });
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} positive gaps left after dropping zeros",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two distinct eps".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
        dropped,
        exact: false,
    })
}

/// One element of a sequence offered to [`liminf_check`]: the deformation
/// and the triple it is claimed to converge along.
#[derive(Debug, Clone)]
pub struct SequenceElement {
    pub eps: f64,
    pub y: DiscreteDeformation,
    pub triple: LimitTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiminfOptions {
    /// Tail length `m`: the check uses the last `m` elements.
    pub tail: usize,
    pub tolerance: f64,
    /// Largest admissible `max |u_k − ε^{-1/2}(y_k − T_k)|`.
    pub consistency_tol: f64,
    /// Largest admissible `‖u_k − u‖_{L²}` at the last element.
    pub convergence_tol: f64,
    /// Constant `c` of the gradient bound `‖∇u_k‖∞ ≤ c·ε_k^{-1/8}`.
    pub gradient_constant: f64,
}

impl Default for LiminfOptions {
    fn default() -> Self {
        LiminfOptions {
            tail: 3,
            tolerance: 1e-9,
            consistency_tol: 1e-8,
            convergence_tol: 1e-2,
            gradient_constant: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiminfRow {
    pub eps: f64,
    pub energy: f64,
    pub bulk: f64,
    pub surface: f64,
    /// `max |u_k − ε^{-1/2}(y_k − T_k)|` over Gauss points of `Ω`.
    pub consistency: f64,
    /// `‖u_k − u‖_{L²(Ω)}`.
    pub distance: f64,
    /// Partition of `t_k` equals that of the limit.
    pub same_partition: bool,
    /// Largest separation between the rigid motions of `t_k` and `t`.
    pub motion_distance: f64,
    /// `‖∇u_k‖∞·ε_k^{1/8}`.
    pub gradient_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LiminfStatus {
    Holds,
    Violated,
    Inapplicable { reasons: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfReport {
    pub limit: EnergyBreakdown,
    pub rows: Vec<LiminfRow>,
    /// `min_k` of the energies over the tail.
    pub tail_min: f64,
    pub status: LiminfStatus,
}

/// Compares `min` of `E_ε_k(y_k)` over the tail with `E(t)`. The check is
/// only reported as holding or violated when the diagnostics confirm that
/// the sequence converges to `t`; otherwise it is inapplicable.
pub fn liminf_check(
    t: &LimitTriple,
    seq: &[SequenceElement],
    material: &Material,
    q: &QuadraticForm,
    opts: &LiminfOptions,
) -> Result<LiminfReport> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let limit = energy_limit(t, q)?;
    let u = t.u();
    let mut rows = Vec::with_capacity(seq.len());
    for el in seq {
        let e = energy_nonlinear(&el.y, material, el.eps)?;
        let tk = &el.triple;
        let (pk, mk) = (tk.partition(), tk.motion());
        let uk = tk.u();
        let m = uk.mesh();
        let s = 1.0 / el.eps.sqrt();
        let mut consistency = 0.0f64;
        for c in m.omega_cells() {
            let motion = mk.motions[pk.label(c)];
            for x in gauss_points(m, c) {
                let r = s * (el.y.map(c).eval(x) - motion.apply(x));
                consistency = consistency.max((uk.map(c).eval(x) - r).norm());
            }
        }
        let same_partition = pk.same_as(t.partition())?;
        let motion_distance = if same_partition {
            (0..m.num_cells())
                .map(|c| mk.motions[pk.label(c)].separation(&t.motion().motions[t.partition().label(c)]))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let distance = uk.combine(1.0, u, -1.0)?.l2_norm_sq().sqrt();
        rows.push(LiminfRow {
            eps: el.eps,
            energy: e.total,
            bulk: e.bulk,
            surface: e.surface(),
            consistency,
            distance,
            same_partition,
            motion_distance,
            gradient_constant: uk.max_grad_norm() * el.eps.powf(0.125),
        });
    }
    let tail = &rows[rows.len().saturating_sub(opts.tail.max(1))..];
    let tail_min = tail.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    let mut reasons = Vec::new();
    if let Some(r) = rows.iter().find(|r| r.consistency > opts.consistency_tol) {
        reasons.push(format!(
            "u_k is not the rescaled displacement of y_k at eps = {:.3e} (gap {:.3e})",
            r.eps, r.consistency
        ));
    }
    if let Some(r) = rows.iter().find(|r| r.gradient_constant > opts.gradient_constant) {
        reasons.push(format!(
            "gradient bound fails at eps = {:.3e}: |grad u_k| eps^(1/8) = {:.3e}",
            r.eps, r.gradient_constant
        ));
    }
    let last = rows.last().expect("nonempty");
    if !last.same_partition {
        reasons.push("the last partition differs from the limit partition".into());
    }
    if last.distance > opts.convergence_tol || last.motion_distance > opts.convergence_tol {
        reasons.push(format!(
            "no convergence to the limit triple: |u_k - u| = {:.3e}, motion distance {:.3e}",
            last.distance, last.motion_distance
        ));
    }
    let status = if !reasons.is_empty() {
        LiminfStatus::Inapplicable { reasons }
    } else if tail_min >= limit.total - opts.tolerance {
        LiminfStatus::Holds
    } else {
        LiminfStatus::Violated
    };
    Ok(LiminfReport {
        limit,
        rows,
        tail_min,
        status,
    })
}

/// `θ_σ(t) = min{t/σ, 1}` for `σ > 0`, `θ₀ ≡ 1`.
pub fn theta(sigma: f64, t: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        (t / sigma).min(1.0)
    }
}

/// Where jumps are counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SliceRegion {
    /// Every facet of the mesh.
    All,
    /// Facets in `[0, l] × [0, 1]`.
    Omega,
    /// Facets whose midpoint lies in `[x0, x1] × [y0, y1]`.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// Slice measure `Σ_slices weight·Σ_jumps θ_σ(|[u]·ξ|)` of the jumps in
/// `region`, for `ξ` along a grid axis.
pub fn slice_measure(u: &PiecewiseAffine, axis: Axis, sigma: f64, region: SliceRegion) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must be finite and >= 0"
        )));
    }
    let m = u.mesh();
    let mut total = 0.0;
    for s in all_slices(u, axis) {
        for j in &s.jumps {
            let f = m.facet(j.facet);
            let inside = match region {
                SliceRegion::All => true,
                SliceRegion::Omega => m.facet_in_closed_omega(&f),
                SliceRegion::Rect { x0, x1, y0, y1 } => {
                    let p = f.midpoint;
                    p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1
                }
            };
            if inside {
                total += s.weight * theta(sigma, j.height.abs());
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LscReport {
    pub limit_value: f64,
    pub values: Vec<f64>,
    /// Minimum over the second half of the sequence.
    pub tail_min: f64,
    /// `max_c |u_k − u|` at cell centers for the last element.
    pub last_distance: f64,
    pub holds: bool,
}

/// Lower semicontinuity spot check of the slice measure along `seq → u`.
pub fn lsc_spotcheck(
    seq: &[PiecewiseAffine],
    limit: &PiecewiseAffine,
    axis: Axis,
    sigma: f64,
    region: SliceRegion,
    tol: f64,
) -> Result<LscReport> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let limit_value = slice_measure(limit, axis, sigma, region)?;
    let values = seq
        .iter()
        .map(|u| slice_measure(u, axis, sigma, region))
        .collect::<Result<Vec<_>>>()?;
    let tail_min = values[values.len() / 2..].iter().cloned().fold(f64::INFINITY, f64::min);
    let last = seq.last().expect("nonempty");
    let last_distance = (0..last.mesh().num_cells())
        .map(|c| (last.value_at_center(c) - limit.value_at_center(c)).norm())
        .fold(0.0, f64::max);
    Ok(LscReport {
        limit_value,
        values,
        tail_min,
        last_distance,
        holds: limit_value <= tail_min + tol,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::density::hessian_q;
    use crate::domain::{cracked_field, DisplacementField, GridMesh};
    use crate::fixtures::random_triple;
    use crate::linalg::{Matrix2, Vec2};
    use crate::partition::CacciopPartition;
    use crate::rigid::PiecewiseRigidMotion;

    fn mesh() -> Arc<GridMesh> {
        Arc::new(GridMesh::new(1.0, 10, 8, 0.0).unwrap())
    }

    fn material() -> (Material, QuadraticForm) {
        let m = Material::default_density();
        let q = hessian_q(m.density.as_ref()).unwrap();
        (m, q)
    }

    fn trivial_triple(u: DisplacementField) -> LimitTriple {
        let m = u.mesh_arc().clone();
        LimitTriple::new(u, CacciopPartition::single(m), PiecewiseRigidMotion::identity(1)).unwrap()
    }

    #[test]
    fn zero_displacement_gives_identity() {
        let t = trivial_triple(DisplacementField::zero(mesh()));
        for y in recovery_sequence(&t, &[1e-2, 1e-4], 10.0).unwrap() {
            assert!(y.maps().iter().all(|m| *m == AffineMap::IDENTITY));
        }
    }

    #[test]
    fn elastic_triple_reproduces_the_elastic_competitor() {
        let a = 0.7;
        let u = DisplacementField::affine(mesh(), AffineMap::new(Matrix2::diag(a, 0.0), Vec2::ZERO));
        let t = trivial_triple(u);
        let y = recovery_sequence(&t, &[1e-4], 10.0).unwrap().remove(0);
        assert!(y.map(0).grad.max_abs_diff(&Matrix2::diag(1.0 + a * 1e-2, 1.0)) < 1e-15);
    }

    #[test]
    fn box_violation_reports_admissible_range() {
        let u = DisplacementField::affine(mesh(), AffineMap::new(Matrix2::diag(50.0, 0.0), Vec2::ZERO));
        let t = trivial_triple(u);
        match recovery_sequence(&t, &[1e-1, 1e-4], 10.0) {
            Err(Error::EpsRange { eps_max, .. }) => {
                assert!(eps_max > 0.0 && eps_max < 1e-1);
                assert!(admissible(&t, eps_max, 10.0));
                assert!(!admissible(&t, eps_max * 1.01, 10.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn synthetic_rates() {
        let eps = [1e-2, 1e-3, 1e-4, 1e-5];
        let half: Vec<_> = eps.iter().map(|&e: &f64| (e, e.sqrt())).collect();
        assert!((rate_fit(&half).unwrap().slope - 0.5).abs() < 1e-12);
        let one: Vec<_> = eps.iter().map(|&e| (e, 3.0 * e)).collect();
        let f = rate_fit(&one).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.residual < 1e-12);
        let zeros: Vec<_> = eps.iter().map(|&e| (e, 0.0)).collect();
        assert!(rate_fit(&zeros).unwrap().exact);
        let mut some = half.clone();
        some[0].1 = 0.0;
        assert_eq!(rate_fit(&some).unwrap().dropped, 1);
        assert!(rate_fit(&half[..2]).is_err());
    }

    #[test]
    fn recovery_gap_decays_like_sqrt_eps() {
        let (mat, q) = material();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_triple(&mesh(), 3, 0.5, &mut rng).unwrap();
        let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let rows = recovery_gaps(&t, &eps, &mat, &q).unwrap();
        let fit = rate_fit(&rows.iter().map(|r| (r.eps, r.gap)).collect::<Vec<_>>()).unwrap();
        assert!(fit.slope >= 0.45, "{fit:?}");
    }

    fn recovery_elements(t: &LimitTriple, eps: &[f64]) -> Vec<SequenceElement> {
        recovery_sequence(t, eps, 10.0)
            .unwrap()
            .into_iter()
            .zip(eps)
            .map(|(y, &eps)| SequenceElement {
                eps,
                y,
                triple: t.clone(),
            })
            .collect()
    }

    fn cracked_triple() -> LimitTriple {
        let u = cracked_field(
            mesh(),
            4,
            AffineMap::new(Matrix2::new(0.2, 0.1, -0.3, 0.0), Vec2::ZERO),
            AffineMap::translation(Vec2::new(0.5, 0.1)).sub(&AffineMap::IDENTITY),
        );
        trivial_triple(DisplacementField::new(u).unwrap())
    }

    #[test]
    fn liminf_holds_along_recovery() {
        let (mat, q) = material();
        let t = cracked_triple();
        let seq = recovery_elements(&t, &[1e-3, 1e-4, 1e-5, 1e-6]);
        let r = liminf_check(&t, &seq, &mat, &q, &LiminfOptions::default()).unwrap();
        assert_eq!(r.status, LiminfStatus::Holds, "{r:?}");
        assert!((r.tail_min - r.limit.total).abs() < 1e-2);
    }

    #[test]
    fn extra_facet_adds_its_length() {
        let (mat, q) = material();
        let t = cracked_triple();
        let plain = recovery_elements(&t, &[1e-4, 1e-5, 1e-6]);
        let f = mesh().horizontal_facet(7, 3);
        let extra: Vec<_> = plain
            .iter()
            .map(|el| SequenceElement {
                y: el.y.with_facet_opened(f),
                ..el.clone()
            })
            .collect();
        let a = liminf_check(&t, &plain, &mat, &q, &LiminfOptions::default()).unwrap();
        let b = liminf_check(&t, &extra, &mat, &q, &LiminfOptions::default()).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((rb.energy - ra.energy - mesh().hx()).abs() < 1e-12);
        }
        assert_eq!(b.status, LiminfStatus::Holds);
    }

    #[test]
    fn sequence_of_another_triple_is_inapplicable() {
        let (mat, q) = material();
        let t = cracked_triple();
        let other = trivial_triple(DisplacementField::zero(mesh()));
        assert!(energy_limit(&other, &q).unwrap().total < energy_limit(&t, &q).unwrap().total);
        let seq = recovery_elements(&other, &[1e-3, 1e-4, 1e-5]);
        let r = liminf_check(&t, &seq, &mat, &q, &LiminfOptions::default()).unwrap();
        assert!(matches!(r.status, LiminfStatus::Inapplicable { .. }), "{r:?}");
    }

    #[test]
    fn slice_measure_of_a_vertical_crack() {
        let la = 0.8;
        let u = cracked_field(
            mesh(),
            4,
            AffineMap::default(),
            AffineMap::translation(Vec2::new(la, 0.3)).sub(&AffineMap::IDENTITY),
        );
        assert_eq!(
            slice_measure(&PiecewiseAffine::zero(mesh()), Axis::E1, 0.0, SliceRegion::All).unwrap(),
            0.0
        );
        assert!((slice_measure(&u, Axis::E1, 0.0, SliceRegion::All).unwrap() - 1.0).abs() < 1e-12);
        assert!((slice_measure(&u, Axis::E1, 2.0 * la, SliceRegion::All).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(slice_measure(&u, Axis::E2, 0.0, SliceRegion::All).unwrap(), 0.0);
        let lower = SliceRegion::Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 0.5,
        };
        assert!((slice_measure(&u, Axis::E1, 0.0, lower).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shrinking_jumps_keep_the_lsc_direction() {
        let base = AffineMap::translation(Vec2::new(1.0, 0.0)).sub(&AffineMap::IDENTITY);
        let seq: Vec<_> = (1..=6)
            .map(|k| cracked_field(mesh(), 4, AffineMap::default(), base.scale(1.0 / k as f64)))
            .collect();
        let limit = cracked_field(mesh(), 4, AffineMap::default(), AffineMap::default());
        let r = lsc_spotcheck(&seq, &limit, Axis::E1, 0.5, SliceRegion::All, 1e-12).unwrap();
        assert!(r.holds);
        assert_eq!(r.limit_value, 0.0);
        let constant = vec![seq[0].clone(); 3];
        let c = lsc_spotcheck(&constant, &seq[0], Axis::E1, 0.5, SliceRegion::All, 1e-12).unwrap();
        assert!(c.holds && (c.tail_min - c.limit_value).abs() < 1e-15);
    }

    #[test]
    fn staircase_crack_has_unit_horizontal_slice_measure() {
        for n in [8, 16, 32] {
            let m = Arc::new(GridMesh::new(1.0, n, n, 0.0).unwrap());
            let mut open = vec![false; m.num_facets()];
            let mut maps = vec![AffineMap::default(); m.num_cells()];
            // crack from (1/4, 0) to (3/4, 1), cells to its right shifted
            for j in 0..n {
                let col = n / 4 + j / 2;
                open[m.vertical_facet(col, j)] = true;
                for i in col + 1..n {
                    maps[m.cell_index(i, j)] = AffineMap::translation(Vec2::new(0.4, 0.0)).sub(&AffineMap::IDENTITY);
                }
                if j + 1 < n {
                    let next = n / 4 + j.div_ceil(2);
                    for i in col.min(next) + 1..=col.max(next) {
                        open[m.horizontal_facet(i, j)] = true;
                    }
                }
            }
            let u = PiecewiseAffine::from_parts_unchecked(m.clone(), maps, open);
            assert!((slice_measure(&u, Axis::E1, 0.0, SliceRegion::All).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_triple(&mesh(), 3, 0.5, &mut rng).unwrap();
        let sigmas = [0.0, 1e-3, 1e-2, 1e-1, 1.0];
        for axis in [Axis::E1, Axis::E2] {
            let v: Vec<f64> = sigmas
                .iter()
                .map(|&s| slice_measure(t.u(), axis, s, SliceRegion::All).unwrap())
                .collect();
            assert!(v.windows(2).all(|w| w[0] >= w[1] - 1e-15), "{v:?}");
        }
    }
}

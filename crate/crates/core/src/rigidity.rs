//! Structure recovery from deformations: piecewise rigid decomposition,
//! rescaled displacements and coarsest partitions of sequences.

use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::density::dist_so2;
use crate::domain::{DisplacementField, GridMesh, PiecewiseAffine};
use crate::error::{Error, Result};
use crate::partition::CacciopPartition;
use crate::rigid::{fit_rigid, PiecewiseRigidMotion};

/// Default `dist(F, SO(2))` tolerance for rigidity tests.
pub const RIGIDITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub partition: CacciopPartition,
    pub motion: PiecewiseRigidMotion,
    /// Number of connected regions found before equal motions were merged.
    pub regions: usize,
}

/// Splits a piecewise rigid `y` into components carrying one rigid motion
/// each. Adjacent cells join when their facet is closed and both maps agree
/// at the facet endpoints within `tol`; regions with equal motions are then
/// merged, so components need not be connected.
pub fn piecewise_rigid_decompose(y: &PiecewiseAffine, tol: f64) -> Result<Decomposition> {
    let m = y.mesh();
    for c in 0..m.num_cells() {
        let d = dist_so2(&y.map(c).grad);
        if d > tol {
            return Err(Error::NotPiecewiseRigid { cell: c, dist: d, tol });
        }
    }
    let mut uf = UnionFind::<usize>::new(m.num_cells());
    let (hx, hy) = (0.5 * m.hx(), 0.5 * m.hy());
    for f in m.facets() {
        if y.is_open(f.id) {
            continue;
        }
        let tangent = match f.orientation {
            crate::domain::Orientation::Vertical => crate::linalg::Vec2::new(0.0, hy),
            crate::domain::Orientation::Horizontal => crate::linalg::Vec2::new(hx, 0.0),
        };
        let (a, b) = (y.map(f.minus), y.map(f.plus));
        let agree = [f.midpoint - tangent, f.midpoint + tangent]
            .iter()
            .all(|&x| (a.eval(x) - b.eval(x)).norm() <= tol * (1.0 + a.eval(x).norm()));
        if agree {
            uf.union(f.minus, f.plus);
        }
    }
    let region_labels: Vec<usize> = (0..m.num_cells()).map(|c| uf.find(c)).collect();
    let regions = CacciopPartition::new(y.mesh_arc().clone(), &region_labels)?;
    let fits = regions
        .components()
        .iter()
        .map(|cells| fit_rigid(cells, y).map(|f| f.motion))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..fits.len() {
        for j in (i + 1)..fits.len() {
            if fits[i].separation(&fits[j]) <= tol * (1.0 + fits[i].b.norm()) {
                pairs.push((i, j));
            }
        }
    }
    let partition = regions.merge(&pairs)?;
    let motions = partition
        .components()
        .iter()
        .map(|cells| fit_rigid(cells, y).map(|f| f.motion))
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        partition,
        motion: PiecewiseRigidMotion::new(motions),
        regions: regions.count(),
    })
}

/// `u = ε^{-1/2}(y − T)` cell-wise; open on the crack set of `y` and on
/// the partition interfaces.
pub fn rescaled_displacement(
    y: &PiecewiseAffine,
    p: &CacciopPartition,
    t: &PiecewiseRigidMotion,
    eps: f64,
) -> Result<DisplacementField> {
    t.check(p)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    if !y.mesh().same_geometry(p.mesh()) {
        return Err(Error::MeshMismatch(
            "deformation and partition live on different meshes".into(),
        ));
    }
    let s = 1.0 / eps.sqrt();
    let maps = (0..y.mesh().num_cells())
        .map(|c| y.map(c).sub(&t.motions[p.label(c)].as_affine()).scale(s))
        .collect();
    let open = y
        .mesh()
        .facets()
        .map(|f| y.is_open(f.id) || p.is_interface(&f))
        .collect();
    DisplacementField::from_parts(y.mesh_arc().clone(), maps, open)
}

/// One element `(ε_k, 𝒫_k, T_k)` of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEntry {
    pub eps: f64,
    pub partition: CacciopPartition,
    pub motion: PiecewiseRigidMotion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarsestParams {
    /// Threshold `C★` on the scaled separation.
    pub threshold: f64,
    /// Number `K` of trailing sequence entries tested.
    pub tail: usize,
}

impl Default for CoarsestParams {
    fn default() -> Self {
        CoarsestParams {
            threshold: 10.0,
            tail: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeDecision {
    pub i: usize,
    pub j: usize,
    /// `(|R_i − R_j| + |b_i − b_j|)/√ε_k` over the tail.
    pub ratios: Vec<f64>,
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarsestResult {
    pub partition: CacciopPartition,
    /// Motions of the last entry; a merged component takes the motion of
    /// its lowest-index member.
    pub motion: PiecewiseRigidMotion,
    pub trace: Vec<MergeDecision>,
    /// Thresholds in `[lower, upper)` give the same merge decisions.
    pub threshold_band: (f64, f64),
}

/// Merges components whose scaled separation stays at most `C★` over the
/// last `K` entries; the output is coarsest relative to the given sequence.
pub fn coarsest_partition(seq: &[SequenceEntry], params: CoarsestParams) -> Result<CoarsestResult> {
    let last = seq
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty partition sequence".into()))?;
    if params.tail == 0 || !(params.threshold > 0.0) {
        return Err(Error::InvalidArgument(
            "tail length and threshold must be positive".into(),
        ));
    }
    let n = last.partition.count();
    for (k, e) in seq.iter().enumerate() {
        if !(e.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("entry {k} has eps = {}", e.eps)));
        }
        if e.partition.count() != n {
            return Err(Error::ComponentMismatch(format!(
                "entry {k} has {} components, the last entry has {n}",
                e.partition.count()
            )));
        }
        if !e.partition.mesh().same_geometry(last.partition.mesh()) {
            return Err(Error::MeshMismatch(format!("entry {k} lives on a different mesh")));
        }
        e.motion.check(&e.partition)?;
    }
    let tail = &seq[seq.len().saturating_sub(params.tail)..];
    let mut trace = Vec::new();
    let mut pairs = Vec::new();
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let ratios: Vec<f64> = tail
                .iter()
                .map(|e| e.motion.motions[i].separation(&e.motion.motions[j]) / e.eps.sqrt())
                .collect();
            let worst = ratios.iter().cloned().fold(0.0, f64::max);
            let merged = worst <= params.threshold;
            if merged {
                pairs.push((i, j));
                lower = lower.max(worst);
            } else {
                upper = upper.min(worst);
            }
            trace.push(MergeDecision { i, j, ratios, merged });
        }
    }
    let (partition, map) = last.partition.merge_with_map(&pairs)?;
    let mut motions = vec![None; partition.count()];
    for (old, &new) in map.iter().enumerate() {
        if motions[new].is_none() {
            motions[new] = Some(last.motion.motions[old]);
        }
    }
    let motion = PiecewiseRigidMotion::new(
        motions
            .into_iter()
            .map(|m| m.expect("every component has a member"))
            .collect(),
    );
    Ok(CoarsestResult {
        partition,
        motion,
        trace,
        threshold_band: (lower, upper),
    })
}

/// Piecewise linear concave function given by breakpoints and the slope
/// after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcaveMajorant {
    /// `(t, ψ(t))`, starting at `(0, 0)`.
    pub breakpoints: Vec<(f64, f64)>,
    pub final_slope: f64,
}

impl ConcaveMajorant {
    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let k = bp.partition_point(|&(x, _)| x <= t);
        if k == 0 {
            return 0.0;
        }
        if k == bp.len() {
            let (x, v) = bp[k - 1];
            return v + self.final_slope * (t - x);
        }
        let (x0, v0) = bp[k - 1];
        let (x1, v1) = bp[k];
        v0 + (v1 - v0) * (t - x0) / (x1 - x0)
    }

    /// Slopes of the linear pieces, the last one being `final_slope`.
    pub fn slopes(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        s.push(self.final_slope);
        s
    }
}

/// Piecewise linear `f` with `f(0) = 0` and `f(b_i) = 2^i`, `i = 1, 2, …`,
/// extended past the last point with its last slope.
pub fn staircase_interpolant(b: &[f64]) -> ConcaveMajorant {
    let mut breakpoints = vec![(0.0, 0.0)];
    breakpoints.extend(b.iter().enumerate().map(|(i, &x)| (x, 2f64.powi(i as i32 + 1))));
    let n = breakpoints.len();
    let final_slope = (breakpoints[n - 1].1 - breakpoints[n - 2].1) / (breakpoints[n - 1].0 - breakpoints[n - 2].0);
    ConcaveMajorant {
        breakpoints,
        final_slope,
    }
}

/// Increasing concave `ψ ≤ f` with `ψ(b_i) ≤ 2^i`, built by keeping `f`
/// where it bends down and bridging upward kinks with the incoming tangent
/// until it meets `f` again.
pub fn build_concave_majorant(b: &[f64]) -> Result<ConcaveMajorant> {
    if b.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    if !(b[0] > 0.0) || b.windows(2).any(|w| !(w[1] > w[0])) || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "sequence must be positive and strictly increasing".into(),
        ));
    }
    let f = staircase_interpolant(b);
    let pts = &f.breakpoints;
    let n = pts.len();
    let slope = |k: usize| (pts[k + 1].1 - pts[k].1) / (pts[k + 1].0 - pts[k].0);
    let mut out = vec![pts[0], pts[1]];
    // `i` indexes the current breakpoint where ψ = f
    let mut i = 1;
    let mut incoming = slope(0);
    while i + 1 < n {
        let outgoing = slope(i);
        if incoming >= outgoing {
            out.push(pts[i + 1]);
            incoming = outgoing;
            i += 1;
            continue;
        }
        let (xi, vi) = pts[i];
        let line = |t: f64| vi + incoming * (t - xi);
        // first later breakpoint where f is back on or below the tangent
        match (i + 1..n).find(|&k| pts[k].1 <= line(pts[k].0)) {
            None => {
                return Ok(ConcaveMajorant {
                    breakpoints: out,
                    final_slope: incoming,
                });
            }
            Some(k) => {
                // crossing inside segment [k−1, k]
                let s = slope(k - 1);
                let (x0, v0) = pts[k - 1];
                let tbar = if (s - incoming).abs() < f64::EPSILON * (1.0 + s.abs()) {
                    x0
                } else {
                    (v0 - s * x0 - vi + incoming * xi) / (incoming - s)
                };
                let tbar = tbar.clamp(x0, pts[k].0);
                if tbar < pts[k].0 {
                    out.push((tbar, line(tbar)));
                }
                out.push(pts[k]);
                incoming = s;
                i = k;
            }
        }
    }
    Ok(ConcaveMajorant {
        breakpoints: out,
        final_slope: incoming,
    })
}

/// The three-strip geometry `(0,3) × (0,1)` with the deformations
/// `id`, `id + √ε·shift` and `id + ε^{1/4}·(1, 1)` on the strips.
pub fn three_strip_deformation(nx: usize, ny: usize, shift: crate::linalg::Vec2, eps: f64) -> Result<PiecewiseAffine> {
    use crate::domain::AffineMap;
    use crate::linalg::Vec2;
    let mesh = Arc::new(GridMesh::new(3.0, nx, ny, 0.0)?);
    if !nx.is_multiple_of(3) {
        return Err(Error::InvalidMesh("nx must be a multiple of 3".into()));
    }
    let pieces = [
        AffineMap::IDENTITY,
        AffineMap::translation(eps.sqrt() * shift),
        AffineMap::translation(eps.powf(0.25) * Vec2::new(1.0, 1.0)),
    ];
    let strip = |c: usize| (mesh.cell_ij(c).0 * 3) / nx;
    let maps = (0..mesh.num_cells()).map(|c| pieces[strip(c)]).collect();
    let open = mesh.facets().map(|f| strip(f.minus) != strip(f.plus)).collect();
    PiecewiseAffine::from_parts(mesh.clone(), maps, open)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::domain::AffineMap;
    use crate::linalg::{Matrix2, Vec2};
    use crate::rigid::RigidMotion;

    #[test]
    fn global_rigid_is_one_component() {
        let mesh = Arc::new(GridMesh::new(1.0, 5, 4, 0.0).unwrap());
        let truth = RigidMotion::new(-1.3, Vec2::new(0.4, 0.2));
        let y = PiecewiseAffine::affine(mesh, truth.as_affine());
        let d = piecewise_rigid_decompose(&y, RIGIDITY_TOLERANCE).unwrap();
        assert_eq!(d.partition.count(), 1);
        assert!(d.motion.motions[0].separation(&truth) < 1e-12);
    }

    #[test]
    fn strained_cell_is_rejected() {
        let mesh = Arc::new(GridMesh::new(1.0, 3, 3, 0.0).unwrap());
        let mut y = PiecewiseAffine::affine(mesh, AffineMap::IDENTITY);
        y.maps_mut()[4].grad = Matrix2::diag(1.0, 1.001);
        assert!(matches!(
            piecewise_rigid_decompose(&y, RIGIDITY_TOLERANCE),
            Err(Error::NotPiecewiseRigid { cell: 4, .. })
        ));
    }

    #[test]
    fn three_strips_decompose() {
        let eps: f64 = 1e-4;
        let shift = Vec2::new(0.3, -0.4);
        let y = three_strip_deformation(12, 4, shift, eps).unwrap();
        let d = piecewise_rigid_decompose(&y, RIGIDITY_TOLERANCE).unwrap();
        assert_eq!(d.partition.count(), 3);
        let expected = [Vec2::ZERO, eps.sqrt() * shift, eps.powf(0.25) * Vec2::new(1.0, 1.0)];
        for (j, e) in expected.iter().enumerate() {
            assert!((d.motion.motions[j].b - *e).norm() < 1e-12);
            assert!(d.motion.motions[j].angle.abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_identities() {
        let mesh = Arc::new(GridMesh::new(1.0, 4, 4, 0.0).unwrap());
        let p = CacciopPartition::from_fn(mesh.clone(), |x| (x.y() > 0.5) as usize);
        let t = PiecewiseRigidMotion::new(vec![
            RigidMotion::new(0.3, Vec2::ZERO),
            RigidMotion::new(-0.2, Vec2::new(1.0, 0.0)),
        ]);
        let ty = t.field(&p).unwrap();
        let eps: f64 = 1e-3;
        let u = rescaled_displacement(&ty, &p, &t, eps).unwrap();
        assert!(u.maps().iter().all(|m| m.grad.norm() == 0.0 && m.offset.norm() == 0.0));
        let w = AffineMap::new(Matrix2::new(0.1, 0.2, -0.3, 0.4), Vec2::new(0.5, -0.6));
        let maps = ty.maps().iter().map(|m| m.add(&w.scale(eps.sqrt()))).collect();
        let y = PiecewiseAffine::from_parts_unchecked(mesh.clone(), maps, ty.open_flags().to_vec());
        let u = rescaled_displacement(&y, &p, &t, eps).unwrap();
        assert!(u
            .maps()
            .iter()
            .all(|m| m.grad.max_abs_diff(&w.grad) < 1e-12 && (m.offset - w.offset).norm() < 1e-12));
    }

    fn example_sequence(shift: Vec2) -> Vec<SequenceEntry> {
        [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| {
                let y = three_strip_deformation(12, 4, shift, eps).unwrap();
                let d = piecewise_rigid_decompose(&y, RIGIDITY_TOLERANCE).unwrap();
                SequenceEntry {
                    eps,
                    partition: d.partition,
                    motion: d.motion,
                }
            })
            .collect()
    }

    #[test]
    fn coarsest_partition_of_three_strips() {
        let shift = Vec2::new(0.3, -0.4);
        let seq = example_sequence(shift);
        let r = coarsest_partition(&seq, CoarsestParams::default()).unwrap();
        assert_eq!(r.partition.count(), 2);
        assert!((r.partition.area(0) - 2.0).abs() < 1e-12);
        let merged01 = r.trace.iter().find(|d| d.i == 0 && d.j == 1).unwrap();
        assert!(merged01.merged);
        assert!(merged01.ratios.iter().all(|x| (x - 0.5).abs() < 1e-9));
        let far = r.trace.iter().find(|d| d.i == 1 && d.j == 2).unwrap();
        assert!(!far.merged);
        for e in &seq {
            assert!(r.partition.is_coarser(&e.partition).unwrap());
        }
        let last = seq.last().unwrap();
        let y = three_strip_deformation(12, 4, shift, last.eps).unwrap();
        let u = rescaled_displacement(&y, &r.partition, &r.motion, last.eps).unwrap();
        let c = u.mesh().cell_index(5, 2);
        assert!((u.value_at_center(c) - shift).norm() < 1e-9);
        assert!(r.threshold_band.0 < 10.0 && r.threshold_band.1 > 10.0);
    }

    #[test]
    fn equal_motions_merge_to_one() {
        let seq = example_sequence(Vec2::ZERO);
        let mut seq2 = seq.clone();
        for e in &mut seq2 {
            e.motion = PiecewiseRigidMotion::identity(e.partition.count());
        }
        let r = coarsest_partition(&seq2, CoarsestParams::default()).unwrap();
        assert_eq!(r.partition.count(), 1);
        let mut bad = seq.clone();
        bad[0].partition = CacciopPartition::single(bad[0].partition.mesh_arc().clone());
        bad[0].motion = PiecewiseRigidMotion::identity(1);
        assert!(matches!(
            coarsest_partition(&bad, CoarsestParams::default()),
            Err(Error::ComponentMismatch(_))
        ));
    }

    #[test]
    fn concave_majorant_on_doubling_sequence() {
        let b: Vec<f64> = (1..8).map(|i| 2f64.powi(i)).collect();
        let psi = build_concave_majorant(&b).unwrap();
        let f = staircase_interpolant(&b);
        assert_eq!(psi, f);
        assert!(psi.slopes().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn concave_majorant_rejects_bad_input() {
        assert!(build_concave_majorant(&[]).is_err());
        assert!(build_concave_majorant(&[1.0, 1.0]).is_err());
        assert!(build_concave_majorant(&[-1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn concave_majorant_properties(gaps in proptest::collection::vec(0.01..10.0f64, 1..12)) {
            let mut b = Vec::new();
            let mut x = 0.0;
            for g in gaps {
                x += g;
                b.push(x);
            }
            let psi = build_concave_majorant(&b).unwrap();
            let f = staircase_interpolant(&b);
            let slopes = psi.slopes();
            prop_assert!(slopes.iter().all(|s| *s > 0.0));
            prop_assert!(slopes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            for (i, &bi) in b.iter().enumerate() {
                prop_assert!(psi.eval(bi) <= 2f64.powi(i as i32 + 1) * (1.0 + 1e-12));
            }
            let top = *b.last().unwrap();
            for k in 0..=400 {
                let t = top * k as f64 / 400.0;
                prop_assert!(psi.eval(t) <= f.eval(t) * (1.0 + 1e-12) + 1e-12);
                if t <= b[0] {
                    prop_assert!((psi.eval(t) - f.eval(t)).abs() <= 1e-12 * (1.0 + f.eval(t)));
                }
            }
        }
    }
}

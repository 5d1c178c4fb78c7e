//! Rigid and infinitesimally rigid motions on partitions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::polar;
use crate::domain::{gauss_points, AffineMap, DisplacementField, GridMesh, PiecewiseAffine};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, wrap_angle, Matrix2, Vec2};
use crate::partition::CacciopPartition;

/// `x ↦ R(angle)·x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidMotion {
    pub angle: f64,
    pub b: Vec2,
}

impl RigidMotion {
    pub const IDENTITY: RigidMotion = RigidMotion {
        angle: 0.0,
        b: Vec2::ZERO,
    };

    pub fn new(angle: f64, b: Vec2) -> Self {
        RigidMotion { angle, b }
    }

    pub fn translation(b: Vec2) -> Self {
        RigidMotion { angle: 0.0, b }
    }

    pub fn rotation(&self) -> Matrix2 {
        Matrix2::rotation(self.angle)
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        self.rotation().apply(x) + self.b
    }

    pub fn as_affine(&self) -> AffineMap {
        AffineMap::new(self.rotation(), self.b)
    }

    /// `|R₁ − R₂| + |b₁ − b₂|` with the Frobenius norm.
    pub fn separation(&self, other: &RigidMotion) -> f64 {
        (self.rotation() - other.rotation()).norm() + (self.b - other.b).norm()
    }
}

/// One rigid motion per partition component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRigidMotion {
    pub motions: Vec<RigidMotion>,
}

impl PiecewiseRigidMotion {
    pub fn new(motions: Vec<RigidMotion>) -> Self {
        PiecewiseRigidMotion { motions }
    }

    pub fn identity(count: usize) -> Self {
        PiecewiseRigidMotion {
            motions: vec![RigidMotion::IDENTITY; count],
        }
    }

    pub fn count(&self) -> usize {
        self.motions.len()
    }

    pub fn check(&self, p: &CacciopPartition) -> Result<()> {
        if self.count() != p.count() {
            return Err(Error::ComponentMismatch(format!(
                "{} motions for a partition with {} components",
                self.count(),
                p.count()
            )));
        }
        Ok(())
    }

    /// `∇T` on cell `c`.
    pub fn grad_at(&self, p: &CacciopPartition, c: usize) -> Matrix2 {
        self.motions[p.label(c)].rotation()
    }

    /// `T` as a cell-wise affine field, open on partition interfaces.
    pub fn field(&self, p: &CacciopPartition) -> Result<PiecewiseAffine> {
        self.check(p)?;
        let maps = p.labels().iter().map(|&l| self.motions[l].as_affine()).collect();
        let open = p.mesh().facets().map(|f| p.is_interface(&f)).collect();
        Ok(PiecewiseAffine::from_parts_unchecked(p.mesh_arc().clone(), maps, open))
    }
}

/// `x ↦ ω·J·x + d` with `J` the rotation generator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InfinitesimalMotion {
    pub omega: f64,
    pub d: Vec2,
}

impl InfinitesimalMotion {
    pub fn new(omega: f64, d: Vec2) -> Self {
        InfinitesimalMotion { omega, d }
    }

    pub fn as_affine(&self) -> AffineMap {
        AffineMap::new(Matrix2::J.scale(self.omega), self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseInfinitesimalMotion {
    pub motions: Vec<InfinitesimalMotion>,
}

impl PiecewiseInfinitesimalMotion {
    pub fn new(motions: Vec<InfinitesimalMotion>) -> Self {
        PiecewiseInfinitesimalMotion { motions }
    }

    pub fn zero(count: usize) -> Self {
        PiecewiseInfinitesimalMotion {
            motions: vec![InfinitesimalMotion::default(); count],
        }
    }

    /// The displacement `∇T·m` as a cell-wise affine field, open on
    /// partition interfaces.
    pub fn pushed_forward(&self, t: &PiecewiseRigidMotion, p: &CacciopPartition) -> Result<PiecewiseAffine> {
        t.check(p)?;
        if self.motions.len() != p.count() {
            return Err(Error::ComponentMismatch(format!(
                "{} infinitesimal motions for {} components",
                self.motions.len(),
                p.count()
            )));
        }
        let maps = p
            .labels()
            .iter()
            .map(|&l| {
                let r = t.motions[l].rotation();
                let m = self.motions[l].as_affine();
                AffineMap::new(r * m.grad, r.apply(m.offset))
            })
            .collect();
        let open = p.mesh().facets().map(|f| p.is_interface(&f)).collect();
        Ok(PiecewiseAffine::from_parts_unchecked(p.mesh_arc().clone(), maps, open))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFit {
    pub motion: RigidMotion,
    /// `Σ |y(x_c) − T(x_c)|²·area` over the fitted cells.
    pub residual: f64,
    pub single_cell: bool,
}

/// Area-weighted Procrustes fit of a rigid motion to `y` at the cell
/// centers of `cells`. A single cell is fitted through the polar factor of
/// its gradient.
pub fn fit_rigid(cells: &[usize], y: &PiecewiseAffine) -> Result<RigidFit> {
    let m = y.mesh();
    if cells.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit a rigid motion to an empty component".into(),
        ));
    }
    let area = m.cell_area();
    if cells.len() == 1 {
        let c = cells[0];
        let (r, _) = polar(&y.map(c).grad);
        let angle = r.get(1, 0).atan2(r.get(0, 0));
        let x = m.cell_center(c);
        let motion = RigidMotion::new(angle, y.value_at_center(c) - Matrix2::rotation(angle).apply(x));
        let residual = (y.value_at_center(c) - motion.apply(x)).norm_sq() * area;
        return Ok(RigidFit {
            motion,
            residual,
            single_cell: true,
        });
    }
    let n = cells.len() as f64;
    let mut xbar = Vec2::ZERO;
    let mut ybar = Vec2::ZERO;
    for &c in cells {
        xbar += m.cell_center(c);
        ybar += y.value_at_center(c);
    }
    xbar = (1.0 / n) * xbar;
    ybar = (1.0 / n) * ybar;
    let mut h = Matrix2::ZERO;
    for &c in cells {
        h += (y.value_at_center(c) - ybar).outer(m.cell_center(c) - xbar);
    }
    let angle = (h.get(1, 0) - h.get(0, 1)).atan2(h.get(0, 0) + h.get(1, 1));
    let r = Matrix2::rotation(angle);
    let motion = RigidMotion::new(angle, ybar - r.apply(xbar));
    let residual = cells
        .iter()
        .map(|&c| (y.value_at_center(c) - motion.apply(m.cell_center(c))).norm_sq())
        .sum::<f64>()
        * area;
    Ok(RigidFit {
        motion,
        residual,
        single_cell: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewPair {
    /// Coefficient `ω` of `A = ω·J`.
    pub omega: f64,
    /// `|R₂ − R₁(Id + √ε·A)|`.
    pub remainder: f64,
}

/// Skew matrix `A` with `R₂ = R₁(Id + √ε·A) + O(ε)`.
pub fn skew_from_pair(r1: &RigidMotion, r2: &RigidMotion, eps: f64) -> SkewPair {
    let s = eps.sqrt();
    let omega = wrap_angle(r2.angle - r1.angle) / s;
    let lin = r1.rotation() * (Matrix2::IDENTITY + Matrix2::J.scale(s * omega));
    SkewPair {
        omega,
        remainder: (r2.rotation() - lin).norm(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub v: DisplacementField,
    pub added: PiecewiseInfinitesimalMotion,
    /// `‖v − g‖_{L²}`.
    pub distance: f64,
    /// Components fitted by translation only (degenerate normal equations)
    /// or lacking cells in `Ω`.
    pub degenerate: Vec<usize>,
}

/// Least-squares projection of `g` onto the affine space
/// `u + ∇T·𝒜(𝒫)`, one 3-parameter problem per component.
pub fn project_infinitesimal(
    u: &DisplacementField,
    p: &CacciopPartition,
    t: &PiecewiseRigidMotion,
    g: &DisplacementField,
) -> Result<Projection> {
    t.check(p)?;
    let mesh: &Arc<GridMesh> = u.mesh_arc();
    if !mesh.same_geometry(p.mesh()) || !mesh.same_geometry(g.mesh()) {
        return Err(Error::MeshMismatch("projection inputs live on different meshes".into()));
    }
    let w = 0.25 * mesh.cell_area();
    let n = p.count();
    let mut normal = vec![[0.0f64; 9]; n];
    let mut rhs = vec![[0.0f64; 3]; n];
    let mut has_cells = vec![false; n];
    for c in mesh.omega_cells() {
        let j = p.label(c);
        has_cells[j] = true;
        let r = t.motions[j].rotation();
        for x in gauss_points(mesh, c) {
            let basis = [r.apply(Matrix2::J.apply(x)), r.col(0), r.col(1)];
            let res = g.map(c).eval(x) - u.map(c).eval(x);
            for a in 0..3 {
                rhs[j][a] += w * basis[a].dot(res);
                for b in 0..3 {
                    normal[j][3 * a + b] += w * basis[a].dot(basis[b]);
                }
            }
        }
    }
    let mut motions = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    for j in 0..n {
        if !has_cells[j] {
            degenerate.push(j);
            motions.push(InfinitesimalMotion::default());
            continue;
        }
        let scale = normal[j][0].abs() + normal[j][4].abs() + normal[j][8].abs();
        match solve_dense(&normal[j], &rhs[j], 1e-13 * scale) {
            Some(sol) => motions.push(InfinitesimalMotion::new(sol[0], Vec2::new(sol[1], sol[2]))),
            None => {
                degenerate.push(j);
                let a = [normal[j][4], normal[j][5], normal[j][7], normal[j][8]];
                let d = solve_dense(&a, &rhs[j][1..], 0.0).unwrap_or_else(|| vec![0.0, 0.0]);
                motions.push(InfinitesimalMotion::new(0.0, Vec2::new(d[0], d[1])));
            }
        }
    }
    let added = PiecewiseInfinitesimalMotion::new(motions);
    let push = added.pushed_forward(t, p)?;
    let maps = u.maps().iter().zip(push.maps()).map(|(a, b)| a.add(b)).collect();
    let v = DisplacementField::from_parts_unchecked(mesh.clone(), maps, u.open_flags().to_vec());
    let diff = v.combine(1.0, g, -1.0)?;
    let distance = diff.l2_norm_sq().max(0.0).sqrt();
    Ok(Projection {
        v,
        added,
        distance,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn mesh() -> Arc<GridMesh> {
        Arc::new(GridMesh::new(1.0, 6, 5, 0.0).unwrap())
    }

    fn rigid_field(m: Arc<GridMesh>, motion: RigidMotion) -> PiecewiseAffine {
        PiecewiseAffine::affine(m, motion.as_affine())
    }

    fn residual_for(cells: &[usize], y: &PiecewiseAffine, motion: &RigidMotion) -> f64 {
        cells
            .iter()
            .map(|&c| (y.value_at_center(c) - motion.apply(y.mesh().cell_center(c))).norm_sq())
            .sum::<f64>()
            * y.mesh().cell_area()
    }

    #[test]
    fn recovers_exact_motion() {
        let m = mesh();
        let truth = RigidMotion::new(0.7, Vec2::new(-0.3, 1.1));
        let y = rigid_field(m.clone(), truth);
        let cells: Vec<usize> = (0..m.num_cells()).collect();
        let fit = fit_rigid(&cells, &y).unwrap();
        assert!((fit.motion.angle - 0.7).abs() < 1e-12);
        assert!((fit.motion.b - truth.b).norm() < 1e-12);
        let one = fit_rigid(&[7], &y).unwrap();
        assert!(one.single_cell);
        assert!((one.motion.angle - 0.7).abs() < 1e-12);
        assert!((one.motion.b - truth.b).norm() < 1e-12);
        assert!(fit_rigid(&[], &y).is_err());
    }

    #[test]
    fn small_infinitesimal_rotation() {
        let m = mesh();
        let eps: f64 = 1e-6;
        let omega = 0.8;
        let s = eps.sqrt();
        let y = PiecewiseAffine::affine(
            m.clone(),
            AffineMap::new(
                Matrix2::IDENTITY + Matrix2::J.scale(s * omega),
                s * Vec2::new(0.2, -0.1),
            ),
        );
        let cells: Vec<usize> = (0..m.num_cells()).collect();
        let fit = fit_rigid(&cells, &y).unwrap();
        // dense angle search oracle
        let best = (0..=20000)
            .map(|k| -2e-3 + 4e-3 * k as f64 / 20000.0)
            .min_by(|a, b| {
                let ra = residual_for(&cells, &y, &best_translation(&cells, &y, *a));
                let rb = residual_for(&cells, &y, &best_translation(&cells, &y, *b));
                ra.partial_cmp(&rb).unwrap()
            })
            .unwrap();
        assert!((fit.motion.angle - best).abs() < 4e-7);
        assert!((fit.motion.angle - s * omega).abs() < 10.0 * eps);
    }

    fn best_translation(cells: &[usize], y: &PiecewiseAffine, angle: f64) -> RigidMotion {
        let r = Matrix2::rotation(angle);
        let n = cells.len() as f64;
        let mut b = Vec2::ZERO;
        for &c in cells {
            b += y.value_at_center(c) - r.apply(y.mesh().cell_center(c));
        }
        RigidMotion::new(angle, (1.0 / n) * b)
    }

    #[test]
    fn fit_beats_sampled_rotations() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let maps = (0..m.num_cells())
            .map(|_| {
                AffineMap::new(
                    Matrix2::rotation(0.4),
                    Vec2::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)),
                )
            })
            .collect();
        let open = vec![true; m.num_facets()];
        let y = PiecewiseAffine::from_parts_unchecked(m.clone(), maps, open);
        let cells: Vec<usize> = (0..m.num_cells()).collect();
        let fit = fit_rigid(&cells, &y).unwrap();
        for k in 0..360 {
            let cand = best_translation(&cells, &y, (k as f64).to_radians());
            assert!(fit.residual <= residual_for(&cells, &y, &cand) + 1e-14);
        }
    }

    #[test]
    fn skew_of_equal_rotations_is_zero() {
        let r = RigidMotion::new(0.3, Vec2::ZERO);
        let s = skew_from_pair(&r, &r, 1e-4);
        assert_eq!(s.omega, 0.0);
        assert!(s.remainder < 1e-15);
    }

    #[test]
    fn skew_remainder_is_order_eps() {
        for &eps in &[1e-2f64, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
            for k in 0..=20 {
                let omega = -1.0 + 0.1 * k as f64;
                let r1 = RigidMotion::new(1.2, Vec2::ZERO);
                let r2 = RigidMotion::new(1.2 + eps.sqrt() * omega, Vec2::ZERO);
                let s = skew_from_pair(&r1, &r2, eps);
                assert!((s.omega - omega).abs() < 1e-6 * (1.0 + omega.abs()) / eps.sqrt().max(1e-3));
                assert!(s.remainder <= eps, "eps {eps} omega {omega}: {}", s.remainder);
            }
        }
    }

    fn two_piece() -> (CacciopPartition, PiecewiseRigidMotion) {
        let p = CacciopPartition::from_fn(mesh(), |x| (x.x() > 0.5) as usize);
        let t = PiecewiseRigidMotion::new(vec![
            RigidMotion::new(0.2, Vec2::new(0.1, 0.0)),
            RigidMotion::new(-0.9, Vec2::new(0.0, 0.3)),
        ]);
        (p, t)
    }

    fn random_displacement(p: &CacciopPartition, seed: u64) -> DisplacementField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = p.mesh_arc().clone();
        let maps = (0..m.num_cells())
            .map(|_| {
                AffineMap::new(
                    Matrix2::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                    Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        DisplacementField::from_parts_unchecked(m.clone(), maps, vec![true; m.num_facets()])
    }

    #[test]
    fn projection_of_self_is_exact() {
        let (p, t) = two_piece();
        let u = random_displacement(&p, 1);
        let pr = project_infinitesimal(&u, &p, &t, &u).unwrap();
        assert!(pr.distance < 1e-12);
        let m = PiecewiseInfinitesimalMotion::new(vec![
            InfinitesimalMotion::new(0.7, Vec2::new(0.1, -0.2)),
            InfinitesimalMotion::new(-0.4, Vec2::new(0.5, 0.3)),
        ]);
        let g = DisplacementField::new_unchecked(u.combine(1.0, &m.pushed_forward(&t, &p).unwrap(), 1.0).unwrap());
        let pr = project_infinitesimal(&u, &p, &t, &g).unwrap();
        assert!(pr.distance < 1e-12);
        for (a, b) in pr.added.motions.iter().zip(&m.motions) {
            assert!((a.omega - b.omega).abs() < 1e-10);
            assert!((a.d - b.d).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_is_orthogonal_and_idempotent() {
        let (p, t) = two_piece();
        let u = random_displacement(&p, 2);
        let g = random_displacement(&p, 3);
        let pr = project_infinitesimal(&u, &p, &t, &g).unwrap();
        let diff = pr.v.combine(1.0, &g, -1.0).unwrap();
        let norm = diff.l2_norm_sq().sqrt();
        for j in 0..2 {
            for basis in [
                InfinitesimalMotion::new(1.0, Vec2::ZERO),
                InfinitesimalMotion::new(0.0, Vec2::new(1.0, 0.0)),
                InfinitesimalMotion::new(0.0, Vec2::new(0.0, 1.0)),
            ] {
                let mut ms = PiecewiseInfinitesimalMotion::zero(2);
                ms.motions[j] = basis;
                let phi = ms.pushed_forward(&t, &p).unwrap();
                let inner = diff.l2_inner(&phi);
                assert!(inner.abs() <= 1e-9 * norm * phi.l2_norm_sq().sqrt(), "{inner}");
            }
        }
        let again = project_infinitesimal(&pr.v, &p, &t, &g).unwrap();
        assert!((again.distance - pr.distance).abs() < 1e-12);
        assert!(again
            .added
            .motions
            .iter()
            .all(|m| m.omega.abs() < 1e-10 && m.d.norm() < 1e-10));
    }

    proptest! {
        #[test]
        fn fit_is_equivariant(angle in -3.0..3.0f64, q in -3.0..3.0f64, bx in -1.0..1.0f64, by in -1.0..1.0f64) {
            let m = mesh();
            let y = rigid_field(m.clone(), RigidMotion::new(angle, Vec2::new(bx, by)));
            let outer = AffineMap::new(Matrix2::rotation(q), Vec2::ZERO);
            let maps = y.maps().iter().map(|a| a.then(&outer)).collect();
            let qy = PiecewiseAffine::from_parts(m.clone(), maps, vec![false; m.num_facets()]).unwrap();
            let cells: Vec<usize> = (0..m.num_cells()).step_by(3).collect();
            let a = fit_rigid(&cells, &y).unwrap().motion;
            let b = fit_rigid(&cells, &qy).unwrap().motion;
            prop_assert!(wrap_angle(b.angle - a.angle - q).abs() < 1e-10);
        }
    }
}

//! Energy functionals on discrete fields: the nonlinear Griffith energy,
//! its truncated variant, the linearized limit over triples, the
//! segmentation energy and the two loaded functionals.

use serde::{Deserialize, Serialize};

use crate::density::{dist_so2, Material, QuadraticForm};
use crate::domain::{DiscreteDeformation, DisplacementField, PiecewiseAffine};
use crate::error::{Error, Result};
use crate::partition::CacciopPartition;
use crate::rigid::{project_infinitesimal, PiecewiseRigidMotion, Projection};

/// Default `dist(F, SO(2))` tolerance of the segmentation energy.
pub const SEG_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub inner_crack: f64,
    pub segmentation_boundary: f64,
    pub load: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(bulk: f64, inner_crack: f64, segmentation_boundary: f64, load: f64) -> Self {
        EnergyBreakdown {
            bulk,
            inner_crack,
            segmentation_boundary,
            load,
            total: bulk + inner_crack + segmentation_boundary + load,
        }
    }

    /// Surface part `inner_crack + segmentation_boundary`.
    pub fn surface(&self) -> f64 {
        self.inner_crack + self.segmentation_boundary
    }
}

/// A value of an extended-real functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Extended<T> {
    Finite(T),
    Infinite { reason: String },
}

impl<T> Extended<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite { .. } => None,
        }
    }

    pub fn into_finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite { .. } => None,
        }
    }
}

/// A limit configuration `(u, 𝒫, T)`.
///
/// The stored `u` is open on every partition interface: the displacement
/// is defined separately on each component.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTriple {
    u: DisplacementField,
    partition: CacciopPartition,
    motion: PiecewiseRigidMotion,
}

impl LimitTriple {
    pub fn new(u: DisplacementField, partition: CacciopPartition, motion: PiecewiseRigidMotion) -> Result<Self> {
        if !u.mesh().same_geometry(partition.mesh()) {
            return Err(Error::MeshMismatch(
                "displacement and partition live on different meshes".into(),
            ));
        }
        motion.check(&partition)?;
        let (mesh, maps, mut open) = u.into_field().into_parts();
        for f in mesh.facets() {
            if partition.is_interface(&f) {
                open[f.id] = true;
            }
        }
        let u = DisplacementField::from_parts(mesh, maps, open)?;
        Ok(LimitTriple { u, partition, motion })
    }

    pub fn u(&self) -> &DisplacementField {
        &self.u
    }

    pub fn partition(&self) -> &CacciopPartition {
        &self.partition
    }

    pub fn motion(&self) -> &PiecewiseRigidMotion {
        &self.motion
    }

    /// Same partition and motion with another displacement.
    pub fn with_displacement(&self, u: DisplacementField) -> Result<Self> {
        LimitTriple::new(u, self.partition.clone(), self.motion.clone())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// `∫_Ω W(∇y)` by cell, rejecting gradients outside the box.
pub fn bulk_integral(y: &PiecewiseAffine, material: &Material) -> Result<f64> {
    let m = y.mesh();
    let area = m.cell_area();
    let mut s = 0.0;
    for c in m.omega_cells() {
        s += material.eval_w(&y.map(c).grad)? * area;
    }
    Ok(s)
}

/// `ℋ¹` of open facets in the closed reference domain.
pub fn crack_length(y: &PiecewiseAffine) -> f64 {
    let m = y.mesh();
    m.facets()
        .filter(|f| y.is_open(f.id) && m.facet_in_closed_omega(f))
        .map(|f| f.length)
        .sum()
}

/// `E_ε(y) = ε⁻¹∫W(∇y) + ℋ¹(J_y)`.
pub fn energy_nonlinear(y: &DiscreteDeformation, material: &Material, eps: f64) -> Result<EnergyBreakdown> {
    check_eps(eps)?;
    Ok(EnergyBreakdown::new(
        bulk_integral(y, material)? / eps,
        crack_length(y),
        0.0,
        0.0,
    ))
}

/// `min{t/(√ε·ρ), 1}`.
pub fn truncated_surface_density(t: f64, eps: f64, rho: f64) -> f64 {
    (t / (eps.sqrt() * rho)).min(1.0)
}

/// Auxiliary energy with truncated surface density; with `shrink` only
/// cells and facets at distance more than `ρ` from `∂Ω` contribute.
pub fn energy_auxiliary(
    y: &DiscreteDeformation,
    material: &Material,
    eps: f64,
    rho: f64,
    shrink: bool,
) -> Result<EnergyBreakdown> {
    check_eps(eps)?;
    let m = y.mesh();
    let half_width = 0.5 * m.l().min(1.0);
    if !(rho > 0.0) || rho > half_width {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} must lie in (0, {half_width}]"
        )));
    }
    let inside = |x| !shrink || m.distance_to_boundary(x) > rho;
    let area = m.cell_area();
    let mut bulk = 0.0;
    for c in m.omega_cells() {
        let w = material.eval_w(&y.map(c).grad)?;
        if inside(m.cell_center(c)) {
            bulk += w * area;
        }
    }
    let surface = m
        .facets()
        .filter(|f| y.is_open(f.id) && m.facet_in_closed_omega(f) && inside(f.midpoint))
        .map(|f| truncated_surface_density(y.jump_at(&f).norm(), eps, rho) * f.length)
        .sum();
    Ok(EnergyBreakdown::new(bulk / eps, surface, 0.0, 0.0))
}

/// Per-component contribution to the limit energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ComponentEnergy {
    pub bulk: f64,
    /// `ℋ¹(J_u ∩ (P_j)¹)`.
    pub inner_crack: f64,
    /// `½ℋ¹(∂*P_j ∩ Ω)`.
    pub half_perimeter: f64,
}

impl ComponentEnergy {
    pub fn total(&self) -> f64 {
        self.bulk + self.inner_crack + self.half_perimeter
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEvaluation {
    pub breakdown: EnergyBreakdown,
    pub components: Vec<ComponentEnergy>,
    /// `|Σ_j total_j − total|`.
    pub identity_gap: f64,
}

/// Linearized limit energy
/// `∫½Q(e(∇Tᵀ∇u)) + ℋ¹(J_u \ ⋃∂*P_j) + ℋ¹(⋃∂*P_j ∩ Ω)`.
pub fn energy_limit(t: &LimitTriple, q: &QuadraticForm) -> Result<EnergyBreakdown> {
    Ok(energy_limit_detailed(t, q)?.breakdown)
}

/// Three-term limit energy together with its per-component form.
pub fn energy_limit_detailed(t: &LimitTriple, q: &QuadraticForm) -> Result<LimitEvaluation> {
    let p = t.partition();
    t.motion().check(p)?;
    let u = t.u();
    let m = u.mesh();
    let area = m.cell_area();
    let mut bulk = 0.0;
    for c in m.omega_cells() {
        let r = t.motion().grad_at(p, c);
        bulk += 0.5 * q.eval(&(r.transpose() * u.map(c).grad)) * area;
    }
    let mut inner = 0.0;
    let mut seg = 0.0;
    for f in m.facets() {
        if !m.facet_in_closed_omega(&f) {
            continue;
        }
        if p.is_interface(&f) {
            seg += f.length;
        } else if u.is_open(f.id) {
            inner += f.length;
        }
    }
    let breakdown = EnergyBreakdown::new(bulk, inner, seg, 0.0);
    let components = energy_limit_per_component(t, q)?;
    let sum: f64 = components.iter().map(ComponentEnergy::total).sum();
    Ok(LimitEvaluation {
        breakdown,
        components,
        identity_gap: (sum - breakdown.total).abs(),
    })
}

/// `Σ_j (∫_{P_j} ½Q(e(R_jᵀ∇u)) + ℋ¹(J_u ∩ (P_j)¹) + ½ℋ¹(∂*P_j ∩ Ω))`, one
/// entry per component.
pub fn energy_limit_per_component(t: &LimitTriple, q: &QuadraticForm) -> Result<Vec<ComponentEnergy>> {
    let p = t.partition();
    t.motion().check(p)?;
    let u = t.u();
    let m = u.mesh();
    let area = m.cell_area();
    let perimeters = p.perimeters();
    let mut out = Vec::with_capacity(p.count());
    for (j, cells) in p.components().iter().enumerate() {
        let rt = t.motion().motions[j].rotation().transpose();
        let bulk = cells
            .iter()
            .filter(|&&c| m.in_omega(c))
            .map(|&c| 0.5 * q.eval(&(rt * u.map(c).grad)) * area)
            .sum();
        let mut inner_crack = 0.0;
        for &c in cells {
            for (nb, f) in m.neighbors(c) {
                // count each interior facet from its lower-index cell
                if nb > c && p.label(nb) == j && u.is_open(f) && m.facet_in_closed_omega(&m.facet(f)) {
                    inner_crack += m.facet(f).length;
                }
            }
        }
        out.push(ComponentEnergy {
            bulk,
            inner_crack,
            half_perimeter: 0.5 * perimeters.inside[j],
        });
    }
    Ok(out)
}

/// Segmentation energy `ℋ¹(J_y)` for piecewise rigid `y`; infinite when a
/// cell of `Ω` has `dist(∇y, SO(2)) > tol`. Open facets whose jump does not
/// exceed `tol` carry no energy.
pub fn energy_seg(y: &PiecewiseAffine, tol: f64) -> Extended<f64> {
    let m = y.mesh();
    for c in m.omega_cells() {
        let d = dist_so2(&y.map(c).grad);
        if d > tol {
            return Extended::Infinite {
                reason: format!("cell {c} is strained: dist(F, SO(2)) = {d:.3e}"),
            };
        }
    }
    let len = m
        .facets()
        .filter(|f| y.is_open(f.id) && m.facet_in_closed_omega(f) && y.jump_at(f).norm() > tol)
        .map(|f| f.length)
        .sum();
    Extended::Finite(len)
}

/// `F_ε(y) = E_ε(y) + (λ/ε)‖y − f‖²_{L²}`.
pub fn energy_loaded(
    y: &DiscreteDeformation,
    material: &Material,
    eps: f64,
    lambda: f64,
    f: &PiecewiseAffine,
) -> Result<EnergyBreakdown> {
    let base = energy_nonlinear(y, material, eps)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be nonnegative")));
    }
    let load = if lambda == 0.0 {
        0.0
    } else {
        lambda / eps * y.combine(1.0, f, -1.0)?.l2_norm_sq()
    };
    Ok(EnergyBreakdown::new(base.bulk, base.inner_crack, 0.0, load))
}

/// The pair `(T_g, 𝒫_g)` defining the admissible class of the loaded
/// limit.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadConstraint {
    pub partition: CacciopPartition,
    pub motion: PiecewiseRigidMotion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedLimit {
    pub breakdown: EnergyBreakdown,
    pub projection: Projection,
}

/// Whether two piecewise rigid motions agree as functions on the mesh.
pub fn same_motion_field(
    p1: &CacciopPartition,
    t1: &PiecewiseRigidMotion,
    p2: &CacciopPartition,
    t2: &PiecewiseRigidMotion,
    tol: f64,
) -> Result<bool> {
    t1.check(p1)?;
    t2.check(p2)?;
    if !p1.mesh().same_geometry(p2.mesh()) {
        return Err(Error::MeshMismatch("motions live on different meshes".into()));
    }
    Ok((0..p1.mesh().num_cells()).all(|c| {
        let a = t1.motions[p1.label(c)];
        let b = t2.motions[p2.label(c)];
        a.separation(&b) <= tol * (1.0 + a.b.norm())
    }))
}

/// `F_g(u, 𝒫, T) = E(u, 𝒫, T) + λ·min_{v ∈ u + ∇T·𝒜(𝒫)} ‖v − g‖²` on the
/// class `T = T_g`, `𝒫_g ≥ 𝒫`; infinite otherwise.
pub fn energy_loaded_limit(
    t: &LimitTriple,
    q: &QuadraticForm,
    lambda: f64,
    g: &DisplacementField,
    constraint: &LoadConstraint,
) -> Result<Extended<LoadedLimit>> {
    if !constraint.partition.is_coarser(t.partition())? {
        return Ok(Extended::Infinite {
            reason: "the load partition is not coarser than the triple's partition".into(),
        });
    }
    if !same_motion_field(
        t.partition(),
        t.motion(),
        &constraint.partition,
        &constraint.motion,
        1e-12,
    )? {
        return Ok(Extended::Infinite {
            reason: "the triple's rigid motion differs from the load motion".into(),
        });
    }
    let base = energy_limit(t, q)?;
    let projection = project_infinitesimal(t.u(), t.partition(), t.motion(), g)?;
    let load = lambda * projection.distance * projection.distance;
    Ok(Extended::Finite(LoadedLimit {
        breakdown: EnergyBreakdown::new(base.bulk, base.inner_crack, base.segmentation_boundary, load),
        projection,
    }))
}

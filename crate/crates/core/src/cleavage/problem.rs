use std::sync::Arc;

use crate::density::{alpha_and_fa, hessian_q, Material, QuadraticForm, UniaxialConstants};
use crate::domain::{AffineMap, DiscreteDeformation, DisplacementField, GridMesh, PiecewiseAffine};
use crate::energy::{energy_nonlinear, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vec2};

use super::{crossover_strain, limit_energy_formula, printed_critical_strain};

/// Strip `(0, l) × (0, 1)` with collars on which `y₁ = (1 + a√ε)·x₁`.
///
/// `a` is the rescaled strain; the imposed strain is `a_ε = a√ε`. Negative
/// `a` is compression.
#[derive(Debug, Clone)]
pub struct CleavageProblem {
    mesh: Arc<GridMesh>,
    a: f64,
    eps: f64,
    material: Material,
    q: QuadraticForm,
    unit: UniaxialConstants,
}

impl CleavageProblem {
    pub fn new(mesh: Arc<GridMesh>, a: f64, eps: f64, material: Material) -> Result<Self> {
        if mesh.collar_cells() == 0 {
            return Err(Error::InvalidMesh(
                "the boundary strain needs a collar of at least one cell".into(),
            ));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
        }
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("strain a = {a} must be finite")));
        }
        let q = hessian_q(material.density.as_ref())?;
        let unit = alpha_and_fa(&q, 1.0)?;
        let prob = CleavageProblem {
            mesh,
            a,
            eps,
            material,
            q,
            unit,
        };
        let stretch = Matrix2::diag(1.0 + prob.a_eps(), 1.0).norm();
        if stretch > prob.material.box_bound {
            return Err(Error::GradientBound {
                norm: stretch,
                bound: prob.material.box_bound,
            });
        }
        Ok(prob)
    }

    /// Same geometry and material at another strain.
    pub fn with_strain(&self, a: f64) -> Result<Self> {
        CleavageProblem::new(self.mesh.clone(), a, self.eps, self.material.clone())
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn a_eps(&self) -> f64 {
        self.a * self.eps.sqrt()
    }

    pub fn l(&self) -> f64 {
        self.mesh.l()
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn q(&self) -> &QuadraticForm {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.unit.alpha
    }

    /// `Fᵃ` for unit strain.
    pub fn unit_strain(&self) -> Matrix2 {
        self.unit.fa
    }

    /// `Fᵃ` for the rescaled strain `a`.
    pub fn strain(&self) -> Matrix2 {
        self.unit.fa.scale(self.a)
    }

    pub fn limit_energy(&self) -> f64 {
        limit_energy_formula(self.a, self.alpha(), self.l())
    }

    pub fn crossover(&self) -> f64 {
        crossover_strain(self.alpha(), self.l())
    }

    pub fn printed_critical(&self) -> f64 {
        printed_critical_strain(self.alpha(), self.l())
    }

    /// Rescaled displacement of the collars: `u = (a·x₁, 0)`.
    pub fn collar_displacement(&self) -> AffineMap {
        AffineMap::new(Matrix2::diag(self.a, 0.0), Vec2::ZERO)
    }

    /// `id + √ε·u`.
    pub fn deformation(&self, u: &PiecewiseAffine) -> Result<DiscreteDeformation> {
        let s = self.eps.sqrt();
        let maps = u
            .maps()
            .iter()
            .map(|m| AffineMap::new(Matrix2::IDENTITY + m.grad.scale(s), s * m.offset))
            .collect();
        let y = PiecewiseAffine::from_parts_unchecked(self.mesh.clone(), maps, u.open_flags().to_vec());
        DiscreteDeformation::new(y, self.material.box_bound)
    }

    /// `(y − id)/√ε`.
    pub fn displacement(&self, y: &PiecewiseAffine) -> DisplacementField {
        let s = 1.0 / self.eps.sqrt();
        let maps = y
            .maps()
            .iter()
            .map(|m| AffineMap::new((m.grad - Matrix2::IDENTITY).scale(s), s * m.offset))
            .collect();
        DisplacementField::from_parts_unchecked(self.mesh.clone(), maps, y.open_flags().to_vec())
    }

    /// Nonlinear energy of `id + √ε·u`.
    pub fn energy_of_displacement(&self, u: &PiecewiseAffine) -> Result<EnergyBreakdown> {
        energy_nonlinear(&self.deformation(u)?, &self.material, self.eps)
    }

    /// Largest violation of `y₁ = (1 + a_ε)x₁` at collar cell corners.
    pub fn constraint_residual(&self, y: &PiecewiseAffine) -> f64 {
        let k = 1.0 + self.a_eps();
        let m = &self.mesh;
        (0..m.num_cells())
            .filter(|&c| !m.in_omega(c))
            .flat_map(|c| m.cell_corners(c).map(|x| (y.map(c).eval(x).x() - k * x.x()).abs()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> Arc<GridMesh> {
        Arc::new(GridMesh::with_collar_cells(1.0, 8, 4, 1).unwrap())
    }

    #[test]
    fn default_density_constants() {
        let p = CleavageProblem::new(mesh(), 0.5, 1e-4, Material::default_density()).unwrap();
        assert!((p.alpha() - 2.0).abs() < 1e-12);
        assert!(p.strain().max_abs_diff(&Matrix2::diag(0.5, 0.0)) < 1e-12);
        assert!((p.a_eps() - 0.005).abs() < 1e-15);
        assert!((p.limit_energy() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_missing_collar() {
        let m = Arc::new(GridMesh::new(1.0, 8, 4, 0.0).unwrap());
        assert!(CleavageProblem::new(m, 0.5, 1e-4, Material::default_density()).is_err());
    }

    #[test]
    fn displacement_round_trip() {
        let p = CleavageProblem::new(mesh(), 1.0, 1e-2, Material::default_density()).unwrap();
        let u = PiecewiseAffine::affine(p.mesh().clone(), p.collar_displacement());
        let y = p.deformation(&u).unwrap();
        assert!(p.constraint_residual(&y) < 1e-15);
        let back = p.displacement(&y);
        for (m1, m2) in back.field().maps().iter().zip(u.maps()) {
            assert!(m1.grad.max_abs_diff(&m2.grad) < 1e-12);
        }
    }
}

//! Uniaxial tension and compression of a strip: the boundary-value
//! problem, two minimizers, classification of their output and sweeps
//! over strain and `ε`.

mod alternating;
mod candidates;
mod classify;
mod problem;
mod relax;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::domain::DisplacementField;
use crate::energy::EnergyBreakdown;

pub use alternating::{solve_alternating, Schedule};
pub use candidates::solve_candidates;
pub use classify::{classify, Classification, DEFAULT_CLASSIFY_TOLERANCE};
pub use problem::CleavageProblem;
pub use sweep::{sweep_cleavage, CleavageTemplate, RunRecord, SolveMode, SweepOutput, SweepRow};

/// `min{½·α·l·a², 1}`: elastic energy below the crossover, one unit of
/// crack length above it.
pub fn limit_energy_formula(a: f64, alpha: f64, l: f64) -> f64 {
    debug_assert!(alpha > 0.0 && l > 0.0);
    (0.5 * alpha * l * a * a).min(1.0)
}

/// Strain `√(2/(αl))` at which both branches of the limit energy equal 1.
pub fn crossover_strain(alpha: f64, l: f64) -> f64 {
    (2.0 / (alpha * l)).sqrt()
}

/// The value `√(2α/l)` printed as the critical strain in the source
/// statement; it agrees with [`crossover_strain`] only for `α = 1`.
pub fn printed_critical_strain(alpha: f64, l: f64) -> f64 {
    (2.0 * alpha / l).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Candidates,
    Alternating,
}

/// Energy of the cracked competitor with the crack on one facet column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnEnergy {
    pub column: usize,
    pub p: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizerReport {
    pub solver: SolverKind,
    pub energy: EnergyBreakdown,
    pub classification: Classification,
    /// `(y − id)/√ε` of the returned deformation.
    pub displacement: DisplacementField,
    pub converged: bool,
    pub iterations: usize,
    /// Energy of the affine competitor (candidate solver only).
    pub elastic_energy: Option<f64>,
    /// Cracked competitors, one per interior column (candidate solver only).
    pub column_energies: Vec<ColumnEnergy>,
    /// Fully open facet columns in `[0, l]` of the returned crack set.
    pub open_columns: Vec<usize>,
}

/// Serializable digest of a [`MinimizerReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub solver: SolverKind,
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
    pub classification: Classification,
    pub converged: bool,
    pub iterations: usize,
    pub elastic_energy: Option<f64>,
    pub column_energies: Vec<ColumnEnergy>,
    pub open_columns: Vec<usize>,
    /// `u` at cell centers, row by row.
    pub displacement_at_centers: Vec<[f64; 2]>,
}

impl MinimizerReport {
    pub fn total(&self) -> f64 {
        self.energy.total
    }

    pub fn summary(&self) -> ReportSummary {
        let u = self.displacement.field();
        ReportSummary {
            solver: self.solver,
            bulk: self.energy.bulk,
            surface: self.energy.surface(),
            total: self.energy.total,
            classification: self.classification.clone(),
            converged: self.converged,
            iterations: self.iterations,
            elastic_energy: self.elastic_energy,
            column_energies: self.column_energies.clone(),
            open_columns: self.open_columns.clone(),
            displacement_at_centers: (0..u.mesh().num_cells()).map(|c| u.value_at_center(c).0).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert_eq!(limit_energy_formula(0.0, 2.0, 1.0), 0.0);
        assert!((limit_energy_formula(0.5, 2.0, 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(limit_energy_formula(2.0, 2.0, 1.0), 1.0);
        assert_eq!(limit_energy_formula(-2.0, 2.0, 1.0), 1.0);
        let a = crossover_strain(2.0, 1.0);
        assert!((a - 1.0).abs() < 1e-15);
        for (alpha, l) in [(2.0, 1.0), (0.7, 3.0), (5.0, 0.2)] {
            let s = crossover_strain(alpha, l);
            assert!((0.5 * alpha * l * s * s - 1.0).abs() < 1e-12);
        }
        assert!((printed_critical_strain(1.0, 2.0) - crossover_strain(1.0, 2.0)).abs() < 1e-15);
        assert!((printed_critical_strain(2.0, 1.0) - 2.0).abs() < 1e-15);
    }
}

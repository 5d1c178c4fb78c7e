use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::Material;
use crate::domain::GridMesh;
use crate::error::{Error, Result};
use crate::exec::Exec;

use super::alternating::{solve_alternating, Schedule};
use super::candidates::solve_candidates;
use super::problem::CleavageProblem;
use super::{MinimizerReport, ReportSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Candidates,
    Alternating,
    Both,
}

impl SolveMode {
    pub fn name(self) -> &'static str {
        match self {
            SolveMode::Candidates => "candidates",
            SolveMode::Alternating => "alternating",
            SolveMode::Both => "both",
        }
    }
}

/// Everything of a sweep cell except `(a, ε)`.
#[derive(Debug, Clone)]
pub struct CleavageTemplate {
    pub l: f64,
    /// Cells across `(0, l)`.
    pub nx: usize,
    pub ny: usize,
    /// Cells per collar.
    pub collar: usize,
    pub material: Material,
    pub mode: SolveMode,
    pub schedule: Schedule,
}

impl CleavageTemplate {
    pub fn mesh(&self) -> Result<Arc<GridMesh>> {
        Ok(Arc::new(GridMesh::with_collar_cells(
            self.l,
            self.nx,
            self.ny,
            self.collar,
        )?))
    }
}

/// One `(a, ε)` cell of a sweep, flattened for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub eps: f64,
    pub a_eps: f64,
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
    pub eta: f64,
    pub density: String,
    pub mode: String,
    pub alpha: f64,
    pub a_star: f64,
    pub a_crit_printed: f64,
    pub limit_energy: f64,
    pub candidates_energy: Option<f64>,
    pub candidates_class: Option<String>,
    pub candidates_p: Option<f64>,
    pub alternating_energy: Option<f64>,
    pub alternating_class: Option<String>,
    pub alternating_p: Option<f64>,
    pub alternating_converged: Option<bool>,
    /// `|E − limit|` for the candidate solver when run, else the
    /// alternating one.
    pub discrepancy: f64,
}

/// Full per-cell reports, for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub a: f64,
    pub eps: f64,
    pub candidates: Option<ReportSummary>,
    pub alternating: Option<ReportSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub records: Vec<RunRecord>,
}

fn solve_cell(
    template: &CleavageTemplate,
    mesh: &Arc<GridMesh>,
    a: f64,
    eps: f64,
    exec: Exec,
) -> Result<(SweepRow, RunRecord)> {
    let prob = CleavageProblem::new(mesh.clone(), a, eps, template.material.clone())?;
    let cand: Option<MinimizerReport> = match template.mode {
        SolveMode::Candidates | SolveMode::Both => Some(solve_candidates(&prob)?),
        SolveMode::Alternating => None,
    };
    let alt: Option<MinimizerReport> = match template.mode {
        SolveMode::Alternating | SolveMode::Both => Some(solve_alternating(&prob, &template.schedule, exec)?),
        SolveMode::Candidates => None,
    };
    let limit = prob.limit_energy();
    let reference = cand.as_ref().or(alt.as_ref()).map(|r| r.total()).unwrap_or(f64::NAN);
    let row = SweepRow {
        a,
        eps,
        a_eps: prob.a_eps(),
        l: template.l,
        nx: template.nx,
        ny: template.ny,
        eta: mesh.eta(),
        density: template.material.density.id().to_string(),
        mode: template.mode.name().to_string(),
        alpha: prob.alpha(),
        a_star: prob.crossover(),
        a_crit_printed: prob.printed_critical(),
        limit_energy: limit,
        candidates_energy: cand.as_ref().map(|r| r.total()),
        candidates_class: cand.as_ref().map(|r| r.classification.tag().to_string()),
        candidates_p: cand.as_ref().and_then(|r| r.classification.p()),
        alternating_energy: alt.as_ref().map(|r| r.total()),
        alternating_class: alt.as_ref().map(|r| r.classification.tag().to_string()),
        alternating_p: alt.as_ref().and_then(|r| r.classification.p()),
        alternating_converged: alt.as_ref().map(|r| r.converged),
        discrepancy: (reference - limit).abs(),
    };
    let record = RunRecord {
        a,
        eps,
        candidates: cand.as_ref().map(MinimizerReport::summary),
        alternating: alt.as_ref().map(MinimizerReport::summary),
    };
    Ok((row, record))
}

/// Solves every `(a, ε)` cell; rows come back sorted by `(a, ε)`.
///
/// Cells run through `exec`; inside a cell, trial flips of the alternating
/// solver run sequentially when cells are already spread over threads.
pub fn sweep_cleavage(
    a_grid: &[f64],
    eps_grid: &[f64],
    template: &CleavageTemplate,
    exec: Exec,
) -> Result<SweepOutput> {
    if a_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidArgument("strain and eps grids must be nonempty".into()));
    }
    let mesh = template.mesh()?;
    let mut cells: Vec<(f64, f64)> = a_grid
        .iter()
        .flat_map(|&a| eps_grid.iter().map(move |&e| (a, e)))
        .collect();
    cells.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let inner = if cells.len() > 1 { Exec::Sequential } else { exec };
    let results = exec.map(&cells, |&(a, eps)| solve_cell(template, &mesh, a, eps, inner));
    let mut rows = Vec::with_capacity(cells.len());
    let mut records = Vec::with_capacity(cells.len());
    for r in results {
        let (row, record) = r?;
        rows.push(row);
        records.push(record);
    }
    Ok(SweepOutput { rows, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template(mode: SolveMode) -> CleavageTemplate {
        CleavageTemplate {
            l: 1.0,
            nx: 10,
            ny: 5,
            collar: 1,
            material: Material::default_density(),
            mode,
            schedule: Schedule::default(),
        }
    }

    #[test]
    fn rows_sorted_and_zero_row_vanishes() {
        let out = sweep_cleavage(
            &[0.5, 0.0, -0.5],
            &[1e-4, 1e-3],
            &template(SolveMode::Candidates),
            Exec::default(),
        )
        .unwrap();
        assert_eq!(out.rows.len(), 6);
        assert!(out.rows.windows(2).all(|w| (w[0].a, w[0].eps) < (w[1].a, w[1].eps)));
        let zero: Vec<_> = out.rows.iter().filter(|r| r.a == 0.0).collect();
        assert!(zero
            .iter()
            .all(|r| r.candidates_energy == Some(0.0) && r.limit_energy == 0.0 && r.discrepancy == 0.0));
    }

    #[test]
    fn modes_agree_on_classification() {
        let out = sweep_cleavage(&[0.5, 1.5], &[1e-4], &template(SolveMode::Both), Exec::default()).unwrap();
        for r in &out.rows {
            if r.alternating_converged == Some(true) {
                assert_eq!(r.candidates_class, r.alternating_class, "a = {}", r.a);
            }
            assert!(r.alternating_energy.unwrap() >= r.candidates_energy.unwrap() - 1e-8);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let t = template(SolveMode::Candidates);
        let a = sweep_cleavage(&[-1.0, 0.3, 1.2], &[1e-4], &t, Exec::Sequential).unwrap();
        let b = sweep_cleavage(&[-1.0, 0.3, 1.2], &[1e-4], &t, Exec::Parallel).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}

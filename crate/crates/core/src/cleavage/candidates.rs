use crate::domain::{cracked_field, AffineMap, PiecewiseAffine};
use crate::error::Result;
use crate::linalg::{Matrix2, Vec2};
use crate::optim::{lbfgs, LbfgsOptions};

use super::classify::{classify, DEFAULT_CLASSIFY_TOLERANCE};
use super::problem::CleavageProblem;
use super::{ColumnEnergy, MinimizerReport, SolverKind};

/// Energies closer than this are treated as ties.
const TIE: f64 = 1e-12;

/// Affine competitor: the first row of `∇y` is forced to `(1 + a_ε, 0)` by
/// the collars, the second row minimizes `W` starting from the linearized
/// optimum `Id + a_ε(Fᵃ + A)`, `A` skew.
fn elastic_competitor(prob: &CleavageProblem) -> Result<(PiecewiseAffine, usize, bool)> {
    let ae = prob.a_eps();
    let fa = prob.material().density.clone();
    let unit = prob.unit_strain();
    let omega = unit.get(0, 1);
    let x0 = vec![ae * (unit.get(1, 0) + omega), 1.0 + ae * unit.get(1, 1)];
    let opts = LbfgsOptions {
        grad_tol: 1e-15,
        ..LbfgsOptions::default()
    };
    let r = lbfgs(x0, &opts, |x, g| {
        let f = Matrix2::new(1.0 + ae, 0.0, x[0], x[1]);
        let d = fa.gradient(&f);
        g[0] = d.get(1, 0);
        g[1] = d.get(1, 1);
        fa.eval(&f)
    });
    let grad = Matrix2::new(1.0 + ae, 0.0, r.x[0], r.x[1]);
    let y = PiecewiseAffine::affine(prob.mesh().clone(), AffineMap::new(grad, Vec2::ZERO));
    Ok((y, r.iterations, r.converged()))
}

/// Cracked competitor with the crack on `col`: identity on the left,
/// translation by `(l·a_ε, 0)` on the right, collars stretched.
fn cracked_competitor(prob: &CleavageProblem, col: usize) -> PiecewiseAffine {
    let m = prob.mesh();
    let ae = prob.a_eps();
    let collar = AffineMap::new(Matrix2::diag(1.0 + ae, 1.0), Vec2::ZERO);
    let right = AffineMap::translation(Vec2::new(prob.l() * ae, 0.0));
    let mut y = cracked_field(m.clone(), col, AffineMap::IDENTITY, right);
    for c in (0..m.num_cells()).filter(|&c| !m.in_omega(c)) {
        y.maps_mut()[c] = collar;
    }
    y
}

/// Evaluates the affine competitor and the cracked competitor on every
/// interior column and returns the cheaper one. Ties go to the elastic
/// branch, and among columns to the one nearest the middle.
pub fn solve_candidates(prob: &CleavageProblem) -> Result<MinimizerReport> {
    let m = prob.mesh();
    let (elastic, iterations, converged) = elastic_competitor(prob)?;
    let elastic_energy = prob.energy_of_displacement(prob.displacement(&elastic).field())?;
    let mut columns = Vec::new();
    for col in m.interior_columns() {
        let y = cracked_competitor(prob, col);
        let e = prob.energy_of_displacement(prob.displacement(&y).field())?;
        columns.push((col, y, e));
    }
    let mid = 0.5 * prob.l();
    let best = columns
        .iter()
        .min_by(|(c1, _, e1), (c2, _, e2)| {
            if (e1.total - e2.total).abs() <= TIE * (1.0 + e1.total.abs()) {
                let d1 = (m.column_x(*c1) - mid).abs();
                let d2 = (m.column_x(*c2) - mid).abs();
                d1.total_cmp(&d2)
            } else {
                e1.total.total_cmp(&e2.total)
            }
        })
        .expect("mesh has interior columns");
    let column_energies = columns
        .iter()
        .map(|(col, _, e)| ColumnEnergy {
            column: *col,
            p: m.column_x(*col),
            energy: e.total,
        })
        .collect();
    let (y, energy, open_columns) = if elastic_energy.total <= best.2.total + TIE {
        (elastic, elastic_energy, vec![])
    } else {
        (best.1.clone(), best.2, vec![best.0])
    };
    let displacement = prob.displacement(&y);
    let classification = classify(&displacement, prob, DEFAULT_CLASSIFY_TOLERANCE);
    Ok(MinimizerReport {
        solver: SolverKind::Candidates,
        energy,
        classification,
        displacement,
        converged,
        iterations,
        elastic_energy: Some(elastic_energy.total),
        column_energies,
        open_columns,
    })
}

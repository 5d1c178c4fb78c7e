//! Bulk relaxation at fixed crack set over vertex unknowns of the rescaled
//! displacement.

use crate::domain::{DisplacementField, VertexDofs, CORNERS};
use crate::linalg::{Matrix2, Vec2};
use crate::optim::{lbfgs, LbfgsOptions};

use super::problem::CleavageProblem;

#[derive(Debug, Clone)]
pub(crate) struct State {
    pub dofs: VertexDofs,
    pub open: Vec<bool>,
    pub values: Vec<Vec2>,
    pub bulk: f64,
    pub surface: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl State {
    pub fn total(&self) -> f64 {
        self.bulk + self.surface
    }

    pub fn displacement(&self) -> DisplacementField {
        DisplacementField::new_unchecked(self.dofs.field(&self.values, self.open.clone()))
    }
}

/// Length of open facets in `[0, l] × [0, 1]`.
pub(crate) fn surface_of(prob: &CleavageProblem, open: &[bool]) -> f64 {
    let m = prob.mesh();
    m.facets()
        .filter(|f| open[f.id] && m.facet_in_closed_omega(f))
        .map(|f| f.length)
        .sum()
}

/// Per-unknown flag: the first component is pinned by a collar cell.
fn pinned(prob: &CleavageProblem, dofs: &VertexDofs) -> Vec<bool> {
    let m = prob.mesh();
    let mut pin = vec![false; dofs.count()];
    for c in (0..m.num_cells()).filter(|&c| !m.in_omega(c)) {
        for d in dofs.corners(c) {
            pin[d] = true;
        }
    }
    pin
}

/// Resets pinned components to `a·x₁`.
pub(crate) fn apply_pins(prob: &CleavageProblem, dofs: &VertexDofs, values: &mut [Vec2]) {
    for (d, p) in pinned(prob, dofs).into_iter().enumerate() {
        if p {
            values[d].0[0] = prob.a() * dofs.position(d).x();
        }
    }
}

/// `ε⁻¹∫_Ω W(I + √ε∇u)` and its gradient with respect to the unknowns;
/// `+∞` outside the gradient box.
fn bulk_and_gradient(prob: &CleavageProblem, dofs: &VertexDofs, pin: &[bool], x: &[f64], g: &mut [f64]) -> f64 {
    let m = prob.mesh();
    let w = prob.material();
    let s = prob.eps().sqrt();
    let area = m.cell_area();
    let weights = dofs.corner_weights();
    g.iter_mut().for_each(|v| *v = 0.0);
    let mut f = 0.0;
    for c in 0..m.num_cells() {
        let corners = dofs.corners(c);
        let mut grad = Matrix2::ZERO;
        for k in 0..CORNERS {
            let d = corners[k];
            grad += Vec2::new(x[2 * d], x[2 * d + 1]).outer(weights[k]);
        }
        let def = Matrix2::IDENTITY + grad.scale(s);
        let norm = def.norm();
        if !(norm <= w.box_bound) {
            return f64::INFINITY;
        }
        if !m.in_omega(c) {
            continue;
        }
        f += area * w.density.eval(&def) / prob.eps();
        let stress = w.density.gradient(&def).scale(area / s);
        for k in 0..CORNERS {
            let d = corners[k];
            let r = stress.apply(weights[k]);
            g[2 * d] += r.x();
            g[2 * d + 1] += r.y();
        }
    }
    for (d, &p) in pin.iter().enumerate() {
        if p {
            g[2 * d] = 0.0;
        }
    }
    f
}

pub(crate) fn bulk(prob: &CleavageProblem, dofs: &VertexDofs, values: &[Vec2]) -> f64 {
    let pin = vec![false; dofs.count()];
    let x: Vec<f64> = values.iter().flat_map(|v| v.0).collect();
    let mut g = vec![0.0; x.len()];
    bulk_and_gradient(prob, dofs, &pin, &x, &mut g)
}

/// Minimizes the bulk energy with the crack set `open` fixed, starting from
/// `values` (pins are re-applied first).
pub(crate) fn relax(
    prob: &CleavageProblem,
    dofs: VertexDofs,
    open: Vec<bool>,
    mut values: Vec<Vec2>,
    max_iter: usize,
    grad_tol: f64,
) -> State {
    apply_pins(prob, &dofs, &mut values);
    let pin = pinned(prob, &dofs);
    let x0: Vec<f64> = values.iter().flat_map(|v| v.0).collect();
    let opts = LbfgsOptions {
        max_iter,
        grad_tol,
        f_tol: 1e-15,
        ..LbfgsOptions::default()
    };
    let r = lbfgs(x0, &opts, |x, g| bulk_and_gradient(prob, &dofs, &pin, x, g));
    let values = r.x.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
    let surface = surface_of(prob, &open);
    State {
        dofs,
        open,
        values,
        bulk: r.value,
        surface,
        iterations: r.iterations,
        converged: r.converged(),
    }
}

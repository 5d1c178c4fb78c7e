//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop when `|∇f|∞ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Stop when the decrease over one step is below `f_tol·(1 + |f|)`.
    pub f_tol: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iter: 2000,
            memory: 12,
            grad_tol: 1e-10,
            f_tol: 1e-15,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Gradient,
    Stalled,
    LineSearch,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_inf: f64,
    pub reason: StopReason,
}

impl LbfgsResult {
    pub fn converged(&self) -> bool {
        matches!(self.reason, StopReason::Gradient | StopReason::Stalled)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f`; `fg(x, g)` returns `f(x)` and writes `∇f(x)` into `g`.
/// Non-finite values mark infeasible points and are backtracked from.
pub fn lbfgs<F>(x0: Vec<f64>, opts: &LbfgsOptions, mut fg: F) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];
    let mut reason = StopReason::Budget;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if n == 0 || inf_norm(&g) <= opts.grad_tol {
            reason = StopReason::Gradient;
            break;
        }
        // two-loop recursion
        d.copy_from_slice(&g);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= alpha[k] * yi;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / inf_norm(&g).max(1e-300);
            d.iter_mut().for_each(|v| *v *= scale.min(1.0));
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (alpha[k] - beta) * si;
            }
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = false;
        let mut fnew = f;
        for _ in 0..opts.max_backtracks {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            fnew = fg(&xn, &mut gn);
            evaluations += 1;
            if fnew.is_finite() && fnew <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            if !history.is_empty() {
                history.clear();
                continue;
            }
            reason = StopReason::LineSearch;
            break;
        }
        let decrease = f - fnew;
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        f = fnew;
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        if decrease <= opts.f_tol * (1.0 + f.abs()) {
            reason = StopReason::Stalled;
            break;
        }
    }
    let grad_inf = inf_norm(&g);
    LbfgsResult {
        x,
        value: f,
        iterations,
        evaluations,
        grad_inf,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = lbfgs(vec![-1.2, 1.0], &LbfgsOptions::default(), |x, g| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        });
        assert!(r.converged());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let n = 50;
        let r = lbfgs(vec![1.0; n], &LbfgsOptions::default(), |x, g| {
            let mut f = 0.0;
            for i in 0..n {
                let w = 1.0 + 1e3 * i as f64 / n as f64;
                g[i] = w * x[i];
                f += 0.5 * w * x[i] * x[i];
            }
            f
        });
        assert!(r.value < 1e-12, "{}", r.value);
        assert!(r.x.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of (x-2)² outside the feasible set x ≤ 1
        let r = lbfgs(vec![0.0], &LbfgsOptions::default(), |x, g| {
            if x[0] > 1.0 {
                return f64::INFINITY;
            }
            g[0] = 2.0 * (x[0] - 2.0);
            (x[0] - 2.0).powi(2)
        });
        assert!(r.x[0] <= 1.0);
        assert!(r.x[0] > 0.9);
    }
}

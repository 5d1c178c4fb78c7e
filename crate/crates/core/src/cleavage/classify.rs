use serde::{Deserialize, Serialize};

use crate::domain::{DisplacementField, Orientation};
use crate::linalg::Matrix2;

use super::problem::CleavageProblem;

/// Default relative tolerance of [`classify`].
pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 0.02;

/// Shape of a minimizer, read off the rescaled displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classification {
    /// `u = Fᵃx + (0, s)` up to an infinitesimal rotation.
    Elastic {
        strain: Matrix2,
        s: f64,
    },
    /// Rigid on either side of a vertical crack at `x₁ = p`; `s` and `t` are
    /// the mean second components on the left and right.
    Cracked {
        p: f64,
        s: f64,
        t: f64,
        jump: f64,
    },
    Other {
        reason: String,
    },
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::Elastic { .. } => "elastic",
            Classification::Cracked { .. } => "cracked",
            Classification::Other { .. } => "other",
        }
    }

    /// Crack position, if cracked.
    pub fn p(&self) -> Option<f64> {
        match self {
            Classification::Cracked { p, .. } => Some(*p),
            _ => None,
        }
    }
}

/// Classifies `u = (y − id)/√ε` against the two limit shapes; `tol` is
/// relative to `max(|a|, 1)` for strains and to `l|a|` for the jump.
pub fn classify(u: &DisplacementField, prob: &CleavageProblem, tol: f64) -> Classification {
    let u = u.field();
    let m = u.mesh();
    let scale = prob.a().abs().max(1.0);
    let open: Vec<usize> = m
        .facets()
        .filter(|f| u.is_open(f.id) && m.facet_in_closed_omega(f))
        .map(|f| f.id)
        .collect();
    let omega: Vec<usize> = m.omega_cells().collect();
    let strain_gap = |target: &Matrix2, cells: &mut dyn Iterator<Item = &usize>| {
        cells.fold(0.0f64, |g, &c| g.max(u.map(c).grad.sym().max_abs_diff(target)))
    };
    let mean_u2 =
        |cells: &[usize]| cells.iter().map(|&c| u.value_at_center(c).y()).sum::<f64>() / cells.len().max(1) as f64;

    if open.is_empty() {
        let target = prob.strain();
        let gap = strain_gap(&target, &mut omega.iter());
        if gap > tol * scale {
            return Classification::Other {
                reason: format!("uncracked but strain deviates from the optimal one by {gap:.3e}"),
            };
        }
        let mut strain = Matrix2::ZERO;
        for &c in &omega {
            strain += u.map(c).grad.sym();
        }
        let strain = strain.scale(1.0 / omega.len() as f64);
        let s = omega
            .iter()
            .map(|&c| (u.value_at_center(c) - target.apply(m.cell_center(c))).y())
            .sum::<f64>()
            / omega.len() as f64;
        return Classification::Elastic { strain, s };
    }

    let vertical = open.iter().all(|&f| m.facet(f).orientation == Orientation::Vertical);
    let cols: Vec<usize> = m
        .interior_columns()
        .filter(|&col| m.vertical_column(col).iter().all(|&f| u.is_open(f)))
        .collect();
    if !vertical || cols.len() != 1 || open.len() != m.ny() {
        return Classification::Other {
            reason: format!(
                "{} open facets, {} full interior columns, all vertical: {vertical}",
                open.len(),
                cols.len()
            ),
        };
    }
    let col = cols[0];
    let p = m.column_x(col);
    let (left, right): (Vec<usize>, Vec<usize>) = omega.iter().partition(|&&c| m.cell_ij(c).0 <= col);
    let gap = strain_gap(&Matrix2::ZERO, &mut left.iter().chain(right.iter()));
    if gap > tol * scale {
        return Classification::Other {
            reason: format!("cracked at p = {p} but pieces are strained by {gap:.3e}"),
        };
    }
    let column = m.vertical_column(col);
    let jump = column.iter().map(|&f| u.jump_at(&m.facet(f)).x()).sum::<f64>() / column.len() as f64;
    let expected = prob.l() * prob.a();
    if (jump - expected).abs() > tol * expected.abs() {
        return Classification::Other {
            reason: format!("cracked at p = {p} with opening {jump:.6} instead of {expected:.6}"),
        };
    }
    Classification::Cracked {
        p,
        s: mean_u2(&left),
        t: mean_u2(&right),
        jump,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::density::Material;
    use crate::domain::{cracked_field, AffineMap, GridMesh, PiecewiseAffine};
    use crate::linalg::Vec2;

    fn problem(a: f64) -> CleavageProblem {
        let m = Arc::new(GridMesh::with_collar_cells(1.0, 12, 6, 1).unwrap());
        CleavageProblem::new(m, a, 1e-4, Material::default_density()).unwrap()
    }

    fn field(u: PiecewiseAffine) -> DisplacementField {
        DisplacementField::new_unchecked(u)
    }

    #[test]
    fn elastic_field() {
        let p = problem(0.7);
        let u = PiecewiseAffine::affine(p.mesh().clone(), AffineMap::new(p.strain(), Vec2::new(0.0, 0.3)));
        match classify(&field(u), &p, 1e-6) {
            Classification::Elastic { strain, s } => {
                assert!(strain.max_abs_diff(&p.strain()) < 1e-12);
                assert!((s - 0.3).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cracked_field_with_offsets() {
        let p = problem(1.5);
        let u = cracked_field(
            p.mesh().clone(),
            5,
            AffineMap::translation(Vec2::new(0.0, -0.2)).sub(&AffineMap::IDENTITY),
            AffineMap::translation(Vec2::new(1.5, 0.4)).sub(&AffineMap::IDENTITY),
        );
        match classify(&field(u), &p, 1e-6) {
            Classification::Cracked { p: pos, s, t, jump } => {
                assert!((pos - 5.0 / 12.0).abs() < 1e-12, "{pos}");
                assert!((s + 0.2).abs() < 1e-12 && (t - 0.4).abs() < 1e-12);
                assert!((jump - 1.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_cracks_fall_through() {
        let p = problem(1.5);
        let mut u = cracked_field(
            p.mesh().clone(),
            4,
            AffineMap::default(),
            AffineMap::translation(Vec2::new(1.5, 0.0)).sub(&AffineMap::IDENTITY),
        );
        for f in p.mesh().vertical_column(8) {
            u.set_open(f, true);
        }
        let c = classify(&field(u), &p, 0.02);
        assert_eq!(c.tag(), "other");
    }

    #[test]
    fn strain_plus_crack_falls_through() {
        let p = problem(1.5);
        let strained = AffineMap::new(Matrix2::diag(0.3, 0.0), Vec2::ZERO);
        let u = cracked_field(p.mesh().clone(), 4, strained, strained);
        assert_eq!(classify(&field(u), &p, 0.02).tag(), "other");
    }
}

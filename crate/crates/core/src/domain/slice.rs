use std::io::Write;

use serde::{Deserialize, Serialize};

use super::field::PiecewiseAffine;
use crate::error::Result;
use crate::linalg::Vec2;

/// Slicing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    E1,
    E2,
}

impl Axis {
    pub fn unit(self) -> Vec2 {
        match self {
            Axis::E1 => Vec2::new(1.0, 0.0),
            Axis::E2 => Vec2::new(0.0, 1.0),
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "e1" | "E1" | "x" | "1" => Some(Axis::E1),
            "e2" | "E2" | "y" | "2" => Some(Axis::E2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::E1 => "e1",
            Axis::E2 => "e2",
        }
    }
}

/// Affine piece `t ↦ value + slope·(t − t0)` on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicePiece {
    pub cell: usize,
    pub t0: f64,
    pub t1: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceJump {
    pub facet: usize,
    pub t: f64,
    /// `[u]·ξ` at the facet.
    pub height: f64,
}

/// One-dimensional restriction `t ↦ u(s + tξ)·ξ` along a row (ξ = e₁) or
/// column (ξ = e₂) of cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub axis: Axis,
    pub index: usize,
    /// Transverse cell size: the weight of this slice in integrals over
    /// the orthogonal direction.
    pub weight: f64,
    pub pieces: Vec<SlicePiece>,
    pub jumps: Vec<SliceJump>,
}

/// Restriction of `u` to row `s` (ξ = e₁) or column `s` (ξ = e₂).
pub fn slice_restriction(u: &PiecewiseAffine, axis: Axis, s: usize) -> Slice {
    let m = u.mesh();
    let xi = axis.unit();
    let (count, weight) = match axis {
        Axis::E1 => (m.nx(), m.hy()),
        Axis::E2 => (m.ny(), m.hx()),
    };
    let mut pieces = Vec::with_capacity(count);
    let mut jumps = Vec::new();
    for k in 0..count {
        let c = match axis {
            Axis::E1 => m.cell_index(k, s),
            Axis::E2 => m.cell_index(s, k),
        };
        let center = m.cell_center(c);
        let half = match axis {
            Axis::E1 => 0.5 * m.hx(),
            Axis::E2 => 0.5 * m.hy(),
        };
        let tc = center.dot(xi);
        let map = u.map(c);
        let start = center - half * xi;
        pieces.push(SlicePiece {
            cell: c,
            t0: tc - half,
            t1: tc + half,
            value: map.eval(start).dot(xi),
            slope: map.grad.apply(xi).dot(xi),
        });
        if k + 1 < count {
            let f = match axis {
                Axis::E1 => m.vertical_facet(k, s),
                Axis::E2 => m.horizontal_facet(s, k),
            };
            if u.is_open(f) {
                let facet = m.facet(f);
                jumps.push(SliceJump {
                    facet: f,
                    t: facet.midpoint.dot(xi),
                    height: u.jump_at(&facet).dot(xi),
                });
            }
        }
    }
    Slice {
        axis,
        index: s,
        weight,
        pieces,
        jumps,
    }
}

/// All slices of `u` in direction `axis`.
pub fn all_slices(u: &PiecewiseAffine, axis: Axis) -> Vec<Slice> {
    let n = match axis {
        Axis::E1 => u.mesh().ny(),
        Axis::E2 => u.mesh().nx(),
    };
    (0..n).map(|s| slice_restriction(u, axis, s)).collect()
}

/// Writes slices as CSV rows
/// `axis,index,kind,t0,t1,value,slope` (pieces) and
/// `axis,index,jump,t,,height,` (jumps).
pub fn write_slices_csv<W: Write>(slices: &[Slice], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "index", "kind", "t0", "t1", "value", "slope"])?;
    for s in slices {
        for p in &s.pieces {
            w.write_record([
                s.axis.name().to_string(),
                s.index.to_string(),
                "piece".into(),
                format!("{:.17e}", p.t0),
                format!("{:.17e}", p.t1),
                format!("{:.17e}", p.value),
                format!("{:.17e}", p.slope),
            ])?;
        }
        for j in &s.jumps {
            w.write_record([
                s.axis.name().to_string(),
                s.index.to_string(),
                "jump".into(),
                format!("{:.17e}", j.t),
                String::new(),
                format!("{:.17e}", j.height),
                String::new(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

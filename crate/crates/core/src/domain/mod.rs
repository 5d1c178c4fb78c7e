//! Discrete bounded-variation fields: a rectangular grid mesh over
//! `Ω' = (−η, l+η) × (0, 1)`, cell-wise affine maps and a crack set made
//! of mesh facets.

mod dofs;
mod field;
mod mesh;
mod slice;

pub use dofs::{VertexDofs, CORNERS};
pub use field::{
    build_affine, build_cracked, continuity_tolerance, cracked_field, gauss_points, AffineMap, DiscreteDeformation,
    DisplacementField, JumpRecord, PiecewiseAffine,
};
pub use mesh::{Facet, GridMesh, Orientation};
pub use slice::{all_slices, slice_restriction, write_slices_csv, Axis, Slice, SliceJump, SlicePiece};

/// `ℋ¹` of the crack set: total length of open facets.
pub fn jump_set_measure(field: &PiecewiseAffine) -> f64 {
    field.jump_set_measure()
}

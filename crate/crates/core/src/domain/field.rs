use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mesh::{Facet, GridMesh};
use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vec2};

/// `x ↦ grad·x + offset` in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineMap {
    pub grad: Matrix2,
    pub offset: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        grad: Matrix2::IDENTITY,
        offset: Vec2::ZERO,
    };

    pub fn new(grad: Matrix2, offset: Vec2) -> Self {
        AffineMap { grad, offset }
    }

    pub fn translation(b: Vec2) -> Self {
        AffineMap::new(Matrix2::IDENTITY, b)
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.grad.apply(x) + self.offset
    }

    pub fn add(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(self.grad + other.grad, self.offset + other.offset)
    }

    pub fn sub(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(self.grad - other.grad, self.offset - other.offset)
    }

    pub fn scale(&self, s: f64) -> AffineMap {
        AffineMap::new(self.grad.scale(s), s * self.offset)
    }

    /// `outer ∘ self`, i.e. `x ↦ outer(self(x))`.
    pub fn then(&self, outer: &AffineMap) -> AffineMap {
        AffineMap::new(outer.grad * self.grad, outer.grad.apply(self.offset) + outer.offset)
    }

    pub fn is_finite(&self) -> bool {
        self.grad.is_finite() && self.offset.is_finite()
    }
}

/// Jump of a field across one open facet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub facet: usize,
    /// `y⁺ − y⁻` at the facet midpoint.
    pub jump: Vec2,
    pub normal: Vec2,
    pub length: f64,
}

/// Cell-wise affine field with a facet crack set. Open facets may carry a
/// jump; across closed facets the two incident maps agree at the facet
/// midpoint up to [`continuity_tolerance`].
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffine {
    mesh: Arc<GridMesh>,
    maps: Vec<AffineMap>,
    open: Vec<bool>,
}

/// Tolerance `1e-9·(1 + scale)` separating genuine jumps from roundoff.
pub fn continuity_tolerance(scale: f64) -> f64 {
    1e-9 * (1.0 + scale)
}

impl PiecewiseAffine {
    /// Builds the field without validation.
    pub fn from_parts_unchecked(mesh: Arc<GridMesh>, maps: Vec<AffineMap>, open: Vec<bool>) -> Self {
        PiecewiseAffine { mesh, maps, open }
    }

    /// Builds the field and checks sizes, finiteness and continuity.
    pub fn from_parts(mesh: Arc<GridMesh>, maps: Vec<AffineMap>, open: Vec<bool>) -> Result<Self> {
        if maps.len() != mesh.num_cells() {
            return Err(Error::MeshMismatch(format!(
                "{} cell maps for a mesh of {} cells",
                maps.len(),
                mesh.num_cells()
            )));
        }
        if open.len() != mesh.num_facets() {
            return Err(Error::MeshMismatch(format!(
                "{} facet flags for a mesh of {} facets",
                open.len(),
                mesh.num_facets()
            )));
        }
        if let Some(c) = maps.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell {c} has a non-finite affine map")));
        }
        let field = PiecewiseAffine { mesh, maps, open };
        field.check_continuity()?;
        Ok(field)
    }

    /// Globally affine field without cracks.
    pub fn affine(mesh: Arc<GridMesh>, map: AffineMap) -> Self {
        let n = mesh.num_cells();
        let nf = mesh.num_facets();
        PiecewiseAffine {
            mesh,
            maps: vec![map; n],
            open: vec![false; nf],
        }
    }

    pub fn zero(mesh: Arc<GridMesh>) -> Self {
        PiecewiseAffine::affine(mesh, AffineMap::new(Matrix2::ZERO, Vec2::ZERO))
    }

    pub fn mesh(&self) -> &GridMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, c: usize) -> &AffineMap {
        &self.maps[c]
    }

    pub fn open_flags(&self) -> &[bool] {
        &self.open
    }

    pub fn is_open(&self, f: usize) -> bool {
        self.open[f]
    }

    pub fn open_facets(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.iter().enumerate().filter(|(_, o)| **o).map(|(f, _)| f)
    }

    pub fn into_parts(self) -> (Arc<GridMesh>, Vec<AffineMap>, Vec<bool>) {
        (self.mesh, self.maps, self.open)
    }

    /// Value at the center of cell `c`.
    pub fn value_at_center(&self, c: usize) -> Vec2 {
        self.maps[c].eval(self.mesh.cell_center(c))
    }

    /// `y⁺ − y⁻` at the midpoint of facet `f`.
    pub fn jump_at(&self, facet: &Facet) -> Vec2 {
        self.maps[facet.plus].eval(facet.midpoint) - self.maps[facet.minus].eval(facet.midpoint)
    }

    /// Largest `|y(x)|` over cell corners (the maximum of an affine map on
    /// a rectangle is attained at a corner).
    pub fn sup_norm(&self) -> f64 {
        (0..self.mesh.num_cells())
            .flat_map(|c| {
                let m = self.maps[c];
                self.mesh.cell_corners(c).map(move |x| m.eval(x).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.maps.iter().map(|m| m.grad.norm()).fold(0.0, f64::max)
    }

    /// Largest midpoint mismatch over closed facets, with the facet.
    pub fn continuity_residual(&self) -> (f64, Option<usize>) {
        self.mesh
            .facets()
            .filter(|f| !self.open[f.id])
            .map(|f| (self.jump_at(&f).norm(), Some(f.id)))
            .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a })
    }

    fn scale(&self) -> f64 {
        self.mesh
            .facets()
            .map(|f| self.maps[f.minus].eval(f.midpoint).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_continuity(&self) -> Result<()> {
        let tol = continuity_tolerance(self.scale());
        let (res, facet) = self.continuity_residual();
        if res > tol {
            return Err(Error::Continuity {
                facet: facet.unwrap_or(0),
                residual: res,
                tolerance: tol,
            });
        }
        Ok(())
    }

    /// Sum of lengths of open facets (`ℋ¹` of the crack set).
    pub fn jump_set_measure(&self) -> f64 {
        self.mesh.facets().filter(|f| self.open[f.id]).map(|f| f.length).sum()
    }

    pub fn jumps(&self) -> Vec<JumpRecord> {
        self.mesh
            .facets()
            .filter(|f| self.open[f.id])
            .map(|f| JumpRecord {
                facet: f.id,
                jump: self.jump_at(&f),
                normal: f.normal,
                length: f.length,
            })
            .collect()
    }

    /// Cell-wise linear combination `a·self + b·other`; facet flags are
    /// the union.
    pub fn combine(&self, a: f64, other: &PiecewiseAffine, b: f64) -> Result<PiecewiseAffine> {
        if !self.mesh.same_geometry(&other.mesh) {
            return Err(Error::MeshMismatch("fields live on different meshes".into()));
        }
        let maps = self
            .maps
            .iter()
            .zip(&other.maps)
            .map(|(x, y)| x.scale(a).add(&y.scale(b)))
            .collect();
        let open = self.open.iter().zip(&other.open).map(|(x, y)| *x || *y).collect();
        Ok(PiecewiseAffine {
            mesh: self.mesh.clone(),
            maps,
            open,
        })
    }

    pub fn with_open(mut self, open: Vec<bool>) -> Self {
        assert_eq!(open.len(), self.open.len());
        self.open = open;
        self
    }

    pub fn set_open(&mut self, f: usize, value: bool) {
        self.open[f] = value;
    }

    pub fn maps_mut(&mut self) -> &mut [AffineMap] {
        &mut self.maps
    }

    /// `∫_Ω ⟨self, other⟩` over the cells of `Ω`, exact for cell-wise
    /// affine integrands (2×2 Gauss rule per cell).
    pub fn l2_inner(&self, other: &PiecewiseAffine) -> f64 {
        let m = &self.mesh;
        m.omega_cells()
            .map(|c| {
                gauss_points(m, c)
                    .iter()
                    .map(|x| self.maps[c].eval(*x).dot(other.maps[c].eval(*x)))
                    .sum::<f64>()
                    * 0.25
                    * m.cell_area()
            })
            .sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_inner(self)
    }
}

/// 2×2 Gauss points of cell `c` (equal weights `area/4`).
pub fn gauss_points(mesh: &GridMesh, c: usize) -> [Vec2; 4] {
    let x = mesh.cell_center(c);
    let g = 0.5 / 3f64.sqrt();
    let dx = g * mesh.hx();
    let dy = g * mesh.hy();
    [
        Vec2::new(x.x() - dx, x.y() - dy),
        Vec2::new(x.x() + dx, x.y() - dy),
        Vec2::new(x.x() - dx, x.y() + dy),
        Vec2::new(x.x() + dx, x.y() + dy),
    ]
}

/// A deformation `y` satisfying `‖y‖∞ ≤ M` and `|∇y| ≤ M` cell-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDeformation {
    field: PiecewiseAffine,
    box_bound: f64,
}

impl DiscreteDeformation {
    pub fn new(field: PiecewiseAffine, box_bound: f64) -> Result<Self> {
        field.check_continuity()?;
        let g = field.max_grad_norm();
        if g > box_bound {
            return Err(Error::GradientBound {
                norm: g,
                bound: box_bound,
            });
        }
        let v = field.sup_norm();
        if v > box_bound {
            return Err(Error::ValueBound {
                norm: v,
                bound: box_bound,
            });
        }
        Ok(DiscreteDeformation { field, box_bound })
    }

    pub fn from_parts(mesh: Arc<GridMesh>, maps: Vec<AffineMap>, open: Vec<bool>, box_bound: f64) -> Result<Self> {
        DiscreteDeformation::new(PiecewiseAffine::from_parts(mesh, maps, open)?, box_bound)
    }

    pub fn box_bound(&self) -> f64 {
        self.box_bound
    }

    pub fn field(&self) -> &PiecewiseAffine {
        &self.field
    }

    pub fn into_field(self) -> PiecewiseAffine {
        self.field
    }

    /// Same deformation with one more facet flagged open.
    pub fn with_facet_opened(&self, f: usize) -> Self {
        let mut field = self.field.clone();
        field.set_open(f, true);
        DiscreteDeformation {
            field,
            box_bound: self.box_bound,
        }
    }
}

impl Deref for DiscreteDeformation {
    type Target = PiecewiseAffine;
    fn deref(&self) -> &PiecewiseAffine {
        &self.field
    }
}

/// A displacement field: finite, no magnitude bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    field: PiecewiseAffine,
}

impl DisplacementField {
    pub fn new(field: PiecewiseAffine) -> Result<Self> {
        field.check_continuity()?;
        Ok(DisplacementField { field })
    }

    pub fn from_parts(mesh: Arc<GridMesh>, maps: Vec<AffineMap>, open: Vec<bool>) -> Result<Self> {
        Ok(DisplacementField {
            field: PiecewiseAffine::from_parts(mesh, maps, open)?,
        })
    }

    pub fn zero(mesh: Arc<GridMesh>) -> Self {
        DisplacementField {
            field: PiecewiseAffine::zero(mesh),
        }
    }

    pub fn affine(mesh: Arc<GridMesh>, map: AffineMap) -> Self {
        DisplacementField {
            field: PiecewiseAffine::affine(mesh, map),
        }
    }

    /// Wraps `field` without the continuity check.
    pub fn new_unchecked(field: PiecewiseAffine) -> Self {
        DisplacementField { field }
    }

    /// Builds the field without the continuity check.
    pub fn from_parts_unchecked(mesh: Arc<GridMesh>, maps: Vec<AffineMap>, open: Vec<bool>) -> Self {
        DisplacementField {
            field: PiecewiseAffine::from_parts_unchecked(mesh, maps, open),
        }
    }

    pub fn field(&self) -> &PiecewiseAffine {
        &self.field
    }

    pub fn into_field(self) -> PiecewiseAffine {
        self.field
    }
}

impl Deref for DisplacementField {
    type Target = PiecewiseAffine;
    fn deref(&self) -> &PiecewiseAffine {
        &self.field
    }
}

/// Globally affine deformation `x ↦ Fx + d` with no open facets.
pub fn build_affine(mesh: Arc<GridMesh>, f: Matrix2, d: Vec2, box_bound: f64) -> Result<DiscreteDeformation> {
    let norm = f.norm();
    if norm > box_bound {
        return Err(Error::GradientBound { norm, bound: box_bound });
    }
    DiscreteDeformation::new(PiecewiseAffine::affine(mesh, AffineMap::new(f, d)), box_bound)
}

/// Two affine pieces separated by the vertical facet column nearest to
/// `x₁ = p`; the facets of that column are flagged open.
pub fn build_cracked(
    mesh: Arc<GridMesh>,
    p: f64,
    left: AffineMap,
    right: AffineMap,
    box_bound: f64,
) -> Result<DiscreteDeformation> {
    let col = mesh
        .column_near(p)
        .ok_or_else(|| Error::InvalidArgument(format!("crack position p = {p} not inside (0, l)")))?;
    let field = cracked_field(mesh, col, left, right);
    DiscreteDeformation::new(field, box_bound)
}

/// Field equal to `left` on cells left of column `col` and `right`
/// elsewhere, with that column open.
pub fn cracked_field(mesh: Arc<GridMesh>, col: usize, left: AffineMap, right: AffineMap) -> PiecewiseAffine {
    let maps = (0..mesh.num_cells())
        .map(|c| if mesh.cell_ij(c).0 <= col { left } else { right })
        .collect();
    let mut open = vec![false; mesh.num_facets()];
    for f in mesh.vertical_column(col) {
        open[f] = true;
    }
    PiecewiseAffine::from_parts_unchecked(mesh, maps, open)
}

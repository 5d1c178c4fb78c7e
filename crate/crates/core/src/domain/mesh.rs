use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// Axis-aligned facet direction. A vertical facet separates horizontally
/// adjacent cells and has normal `e₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

/// An interior facet between two cells; `minus` lies on the side opposite
/// to the normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub id: usize,
    pub orientation: Orientation,
    pub minus: usize,
    pub plus: usize,
    pub midpoint: Vec2,
    pub normal: Vec2,
    pub length: f64,
}

/// Uniform rectangular mesh of `Ω' = (−η, l+η) × (0, 1)`.
///
/// Cells are indexed row-major, `c = j·nx + i`. Interior facets are
/// numbered vertical first (`j·(nx−1) + i`, between cells `(i, j)` and
/// `(i+1, j)`), then horizontal (`nv + j·nx + i`, between `(i, j)` and
/// `(i, j+1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMesh {
    l: f64,
    nx: usize,
    ny: usize,
    eta: f64,
    hx: f64,
    hy: f64,
    collar_cells: usize,
}

impl GridMesh {
    /// Builds the mesh; `eta` must be a whole number of cell widths.
    pub fn new(l: f64, nx: usize, ny: usize, eta: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidMesh(format!("width l = {l} must be positive")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidMesh(format!("need nx, ny >= 2, got {nx}x{ny}")));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidMesh(format!("collar width eta = {eta} must be >= 0")));
        }
        let hx = (l + 2.0 * eta) / nx as f64;
        let hy = 1.0 / ny as f64;
        let k = eta / hx;
        let collar_cells = k.round() as usize;
        if (k - collar_cells as f64).abs() > 1e-9 * (1.0 + k) {
            return Err(Error::InvalidMesh(format!(
                "collar width eta = {eta} is not a multiple of the cell width {hx}"
            )));
        }
        if 2 * collar_cells >= nx {
            return Err(Error::InvalidMesh("collar leaves no interior cells".into()));
        }
        Ok(GridMesh {
            l,
            nx,
            ny,
            eta,
            hx,
            hy,
            collar_cells,
        })
    }

    /// Mesh with `nx_interior` cells across `(0, l)` and `collar` extra
    /// cells on either side.
    pub fn with_collar_cells(l: f64, nx_interior: usize, ny: usize, collar: usize) -> Result<Self> {
        if nx_interior < 2 {
            return Err(Error::InvalidMesh("need at least two interior columns".into()));
        }
        let eta = collar as f64 * l / nx_interior as f64;
        let mut mesh = GridMesh::new(l, nx_interior + 2 * collar, ny, eta)?;
        // avoid rounding drift in hx
        mesh.hx = l / nx_interior as f64;
        Ok(mesh)
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn collar_cells(&self) -> usize {
        self.collar_cells
    }
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn x_min(&self) -> f64 {
        -self.eta
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn cell_center(&self, c: usize) -> Vec2 {
        let (i, j) = self.cell_ij(c);
        Vec2::new(self.x_min() + (i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Corners of cell `c` in the order bottom-left, bottom-right, top-left, top-right.
    pub fn cell_corners(&self, c: usize) -> [Vec2; 4] {
        let x = self.cell_center(c);
        let (dx, dy) = (0.5 * self.hx, 0.5 * self.hy);
        [
            Vec2::new(x.x() - dx, x.y() - dy),
            Vec2::new(x.x() + dx, x.y() - dy),
            Vec2::new(x.x() - dx, x.y() + dy),
            Vec2::new(x.x() + dx, x.y() + dy),
        ]
    }

    /// Cell lies in `Ω` rather than in the boundary collar.
    #[inline]
    pub fn in_omega(&self, c: usize) -> bool {
        let i = c % self.nx;
        i >= self.collar_cells && i < self.nx - self.collar_cells
    }

    pub fn omega_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_cells()).filter(move |&c| self.in_omega(c))
    }

    pub fn num_vertical_facets(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    pub fn num_horizontal_facets(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    pub fn num_facets(&self) -> usize {
        self.num_vertical_facets() + self.num_horizontal_facets()
    }

    /// Vertical facet between cells `(i, j)` and `(i+1, j)`.
    pub fn vertical_facet(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    /// Horizontal facet between cells `(i, j)` and `(i, j+1)`.
    pub fn horizontal_facet(&self, i: usize, j: usize) -> usize {
        self.num_vertical_facets() + j * self.nx + i
    }

    pub fn facet(&self, f: usize) -> Facet {
        let nv = self.num_vertical_facets();
        if f < nv {
            let i = f % (self.nx - 1);
            let j = f / (self.nx - 1);
            let minus = self.cell_index(i, j);
            Facet {
                id: f,
                orientation: Orientation::Vertical,
                minus,
                plus: minus + 1,
                midpoint: Vec2::new(self.x_min() + (i + 1) as f64 * self.hx, (j as f64 + 0.5) * self.hy),
                normal: Vec2::new(1.0, 0.0),
                length: self.hy,
            }
        } else {
            let g = f - nv;
            let i = g % self.nx;
            let j = g / self.nx;
            let minus = self.cell_index(i, j);
            Facet {
                id: f,
                orientation: Orientation::Horizontal,
                minus,
                plus: minus + self.nx,
                midpoint: Vec2::new(self.x_min() + (i as f64 + 0.5) * self.hx, (j + 1) as f64 * self.hy),
                normal: Vec2::new(0.0, 1.0),
                length: self.hx,
            }
        }
    }

    pub fn facets(&self) -> impl Iterator<Item = Facet> + '_ {
        (0..self.num_facets()).map(move |f| self.facet(f))
    }

    /// Facets of the vertical line `x₁ = x_min + (col+1)·hx`, bottom to top.
    pub fn vertical_column(&self, col: usize) -> Vec<usize> {
        (0..self.ny).map(|j| self.vertical_facet(col, j)).collect()
    }

    /// `x₁` coordinate of vertical facet column `col`.
    pub fn column_x(&self, col: usize) -> f64 {
        self.x_min() + (col + 1) as f64 * self.hx
    }

    /// Column of vertical facets closest to `x₁ = p`; `None` if `p` is not
    /// strictly inside `(0, l)` or snaps onto the boundary of `Ω`.
    pub fn column_near(&self, p: f64) -> Option<usize> {
        if !(p > 0.0 && p < self.l) {
            return None;
        }
        let col = ((p - self.x_min()) / self.hx).round() as i64 - 1;
        let first = self.collar_cells as i64;
        let last = (self.nx - self.collar_cells) as i64 - 2;
        if col < first || col > last {
            return None;
        }
        Some(col as usize)
    }

    /// Columns strictly inside `(0, l)`.
    pub fn interior_columns(&self) -> std::ops::RangeInclusive<usize> {
        self.collar_cells..=(self.nx - self.collar_cells - 2)
    }

    /// Columns on `[0, l]`, including the two on `∂Ω`; empty range when
    /// the mesh has no collar.
    pub fn columns_in_closed_omega(&self) -> std::ops::RangeInclusive<usize> {
        if self.collar_cells == 0 {
            return self.interior_columns();
        }
        (self.collar_cells - 1)..=(self.nx - self.collar_cells - 1)
    }

    /// Total length of interior facets.
    pub fn total_facet_length(&self) -> f64 {
        self.num_vertical_facets() as f64 * self.hy + self.num_horizontal_facets() as f64 * self.hx
    }

    pub fn same_geometry(&self, other: &GridMesh) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.collar_cells == other.collar_cells
            && (self.l - other.l).abs() <= 1e-12 * self.l
    }

    /// Cells sharing a facet with `c`, with the facet id.
    pub fn neighbors(&self, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = self.cell_ij(c);
        let nx = self.nx;
        let ny = self.ny;
        let left = (i > 0).then(|| (c - 1, self.vertical_facet(i - 1, j)));
        let right = (i + 1 < nx).then(|| (c + 1, self.vertical_facet(i, j)));
        let down = (j > 0).then(|| (c - nx, self.horizontal_facet(i, j - 1)));
        let up = (j + 1 < ny).then(|| (c + nx, self.horizontal_facet(i, j)));
        [left, right, down, up].into_iter().flatten()
    }

    /// Whether the facet lies in the closed reference domain `[0, l] × [0, 1]`
    /// (at least one incident cell belongs to `Ω`).
    pub fn facet_in_closed_omega(&self, f: &Facet) -> bool {
        self.in_omega(f.minus) || self.in_omega(f.plus)
    }

    /// Distance from a point to `∂Ω` for `Ω = (0, l) × (0, 1)`.
    pub fn distance_to_boundary(&self, x: Vec2) -> f64 {
        x.x().min(self.l - x.x()).min(x.y()).min(1.0 - x.y())
    }
}

use std::sync::Arc;

use super::field::{AffineMap, PiecewiseAffine};
use super::mesh::GridMesh;
use crate::linalg::{Matrix2, Vec2};

/// Corner order of a cell: bottom-left, bottom-right, top-left, top-right.
pub const CORNERS: usize = 4;

/// Vertex unknowns for cell-wise affine fields that are continuous at the
/// midpoints of closed facets.
///
/// Every mesh vertex carries one unknown per group of incident cells
/// connected through closed facets, so opening a facet duplicates the
/// unknowns along it. A cell's affine map is the least-squares fit to its
/// four corner values; its value at each edge midpoint is the mean of the
/// two corner values on that edge, which is shared with the neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexDofs {
    mesh: Arc<GridMesh>,
    corners: Vec<[usize; CORNERS]>,
    positions: Vec<Vec2>,
}

impl VertexDofs {
    pub fn new(mesh: Arc<GridMesh>, open: &[bool]) -> Self {
        let (nx, ny) = (mesh.nx(), mesh.ny());
        let mut corners = vec![[usize::MAX; CORNERS]; mesh.num_cells()];
        let mut positions = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                // incident cells: below-left, below-right, above-left, above-right
                let cell = |di: usize, dj: usize| -> Option<usize> {
                    let (ci, cj) = ((i + di).checked_sub(1)?, (j + dj).checked_sub(1)?);
                    (ci < nx && cj < ny).then(|| mesh.cell_index(ci, cj))
                };
                let q = [cell(0, 0), cell(1, 0), cell(0, 1), cell(1, 1)];
                // the vertex is corner 3 - k of incident cell k
                let mut parent = [0usize, 1, 2, 3];
                fn root(p: &mut [usize; 4], mut a: usize) -> usize {
                    while p[a] != a {
                        a = p[a];
                    }
                    a
                }
                let mut link = |a: usize, b: usize, facet: Option<usize>| {
                    if let (Some(_), Some(_), Some(f)) = (q[a], q[b], facet) {
                        if !open[f] {
                            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                };
                let vf = |fi: Option<usize>, fj: Option<usize>| Some(mesh.vertical_facet(fi?, fj?));
                let hf = |fi: Option<usize>, fj: Option<usize>| Some(mesh.horizontal_facet(fi?, fj?));
                let (im, jm) = (i.checked_sub(1), j.checked_sub(1));
                let (ii, jj) = ((i < nx).then_some(i), (j < ny).then_some(j));
                link(0, 1, if ii.is_some() { vf(im, jm) } else { None });
                link(2, 3, if ii.is_some() { vf(im, jj) } else { None });
                link(0, 2, if jj.is_some() { hf(im, jm) } else { None });
                link(1, 3, if jj.is_some() { hf(ii, jm) } else { None });
                let mut ids = [usize::MAX; 4];
                let pos = Vec2::new(mesh.x_min() + i as f64 * mesh.hx(), j as f64 * mesh.hy());
                for k in 0..4 {
                    if let Some(c) = q[k] {
                        let r = root(&mut parent, k);
                        if ids[r] == usize::MAX {
                            ids[r] = positions.len();
                            positions.push(pos);
                        }
                        corners[c][3 - k] = ids[r];
                    }
                }
            }
        }
        VertexDofs {
            mesh,
            corners,
            positions,
        }
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn corners(&self, c: usize) -> [usize; CORNERS] {
        self.corners[c]
    }

    pub fn position(&self, dof: usize) -> Vec2 {
        self.positions[dof]
    }

    /// `∂F/∂v_k` weights: `F = Σ_k v_k ⊗ g_k`.
    pub fn corner_weights(&self) -> [Vec2; CORNERS] {
        let (gx, gy) = (0.5 / self.mesh.hx(), 0.5 / self.mesh.hy());
        [
            Vec2::new(-gx, -gy),
            Vec2::new(gx, -gy),
            Vec2::new(-gx, gy),
            Vec2::new(gx, gy),
        ]
    }

    pub fn cell_grad(&self, c: usize, values: &[Vec2]) -> Matrix2 {
        let g = self.corner_weights();
        let mut f = Matrix2::ZERO;
        for (k, &d) in self.corners[c].iter().enumerate() {
            f += values[d].outer(g[k]);
        }
        f
    }

    pub fn cell_map(&self, c: usize, values: &[Vec2]) -> AffineMap {
        let grad = self.cell_grad(c, values);
        let mut mean = Vec2::ZERO;
        for &d in &self.corners[c] {
            mean += values[d];
        }
        mean = 0.25 * mean;
        AffineMap::new(grad, mean - grad.apply(self.mesh.cell_center(c)))
    }

    /// The field represented by `values`, with crack flags `open`.
    pub fn field(&self, values: &[Vec2], open: Vec<bool>) -> PiecewiseAffine {
        let maps = (0..self.mesh.num_cells()).map(|c| self.cell_map(c, values)).collect();
        PiecewiseAffine::from_parts_unchecked(self.mesh.clone(), maps, open)
    }

    /// Values sampling the cell maps of `field` at the vertices (averaged
    /// over the cells sharing each unknown).
    pub fn sample(&self, field: &PiecewiseAffine) -> Vec<Vec2> {
        let mut sum = vec![Vec2::ZERO; self.count()];
        let mut n = vec![0usize; self.count()];
        for c in 0..self.mesh.num_cells() {
            let x = self.mesh.cell_corners(c);
            for (k, &d) in self.corners[c].iter().enumerate() {
                sum[d] += field.map(c).eval(x[k]);
                n[d] += 1;
            }
        }
        sum.iter().zip(&n).map(|(s, &k)| (1.0 / k as f64) * *s).collect()
    }

    /// Carries values to another topology on the same mesh: each unknown of
    /// `self` takes the mean of the `other` unknowns at its cell corners.
    pub fn transfer_from(&self, other: &VertexDofs, values: &[Vec2]) -> Vec<Vec2> {
        let mut sum = vec![Vec2::ZERO; self.count()];
        let mut n = vec![0usize; self.count()];
        for c in 0..self.mesh.num_cells() {
            for k in 0..CORNERS {
                let d = self.corners[c][k];
                sum[d] += values[other.corners[c][k]];
                n[d] += 1;
            }
        }
        sum.iter().zip(&n).map(|(s, &k)| (1.0 / k as f64) * *s).collect()
    }
}

//! JSON documents for fields and limit triples.
//!
//! A field is a mesh header, one `[F11, F12, F21, F22, b1, b2]` row per
//! cell (row-major cell order) and the ids of its open facets. A triple
//! adds a run-length encoded partition and one `{angle, b}` motion per
//! partition label.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{AffineMap, DisplacementField, GridMesh, PiecewiseAffine};
use crate::energy::LimitTriple;
use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vec2};
use crate::partition::{CacciopPartition, PartitionRle};
use crate::rigid::{PiecewiseRigidMotion, RigidMotion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshHeader {
    pub l: f64,
    /// Cells across `(−η, l+η)`.
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub eta: f64,
}

impl MeshHeader {
    pub fn of(mesh: &GridMesh) -> Self {
        MeshHeader {
            l: mesh.l(),
            nx: mesh.nx(),
            ny: mesh.ny(),
            eta: mesh.eta(),
        }
    }

    pub fn build(&self) -> Result<Arc<GridMesh>> {
        Ok(Arc::new(GridMesh::new(self.l, self.nx, self.ny, self.eta)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub mesh: MeshHeader,
    pub maps: Vec<[f64; 6]>,
    #[serde(default)]
    pub open: Vec<usize>,
}

impl FieldDoc {
    pub fn of(field: &PiecewiseAffine) -> Self {
        FieldDoc {
            mesh: MeshHeader::of(field.mesh()),
            maps: field
                .maps()
                .iter()
                .map(|m| {
                    let [a, b, c, d] = m.grad.0;
                    [a, b, c, d, m.offset.x(), m.offset.y()]
                })
                .collect(),
            open: field.open_facets().collect(),
        }
    }

    /// Field on `mesh`; the header must describe the same geometry.
    pub fn build_on(&self, mesh: Arc<GridMesh>) -> Result<PiecewiseAffine> {
        if MeshHeader::of(&mesh) != self.mesh {
            return Err(Error::MeshMismatch(format!(
                "field header {:?} does not match the mesh",
                self.mesh
            )));
        }
        if self.maps.len() != mesh.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "{} cell maps for a mesh of {} cells",
                self.maps.len(),
                mesh.num_cells()
            )));
        }
        let mut open = vec![false; mesh.num_facets()];
        for &f in &self.open {
            *open
                .get_mut(f)
                .ok_or_else(|| Error::InvalidArgument(format!("facet id {f} out of range")))? = true;
        }
        let maps = self
            .maps
            .iter()
            .map(|r| AffineMap::new(Matrix2::new(r[0], r[1], r[2], r[3]), Vec2::new(r[4], r[5])))
            .collect();
        Ok(PiecewiseAffine::from_parts_unchecked(mesh, maps, open))
    }

    pub fn build(&self) -> Result<PiecewiseAffine> {
        self.build_on(self.mesh.build()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDoc {
    pub u: FieldDoc,
    pub partition: PartitionRle,
    pub motions: Vec<RigidMotion>,
}

impl TripleDoc {
    pub fn of(t: &LimitTriple) -> Self {
        TripleDoc {
            u: FieldDoc::of(t.u()),
            partition: t.partition().to_rle(),
            motions: t.motion().motions.clone(),
        }
    }

    /// Labels in the document may be any integers `0..motions.len()`;
    /// they are renumbered together with their motions.
    pub fn build(&self) -> Result<LimitTriple> {
        let mesh = self.u.mesh.build()?;
        let p = &self.partition;
        let header = MeshHeader {
            l: p.l,
            nx: p.nx,
            ny: p.ny,
            eta: p.eta,
        };
        if header != self.u.mesh {
            return Err(Error::MeshMismatch("partition and displacement headers differ".into()));
        }
        if p.rows.len() != p.ny {
            return Err(Error::InvalidPartition(format!(
                "{} rows for ny = {}",
                p.rows.len(),
                p.ny
            )));
        }
        let mut labels = Vec::with_capacity(mesh.num_cells());
        for (j, row) in p.rows.iter().enumerate() {
            let start = labels.len();
            for &[l, run] in row {
                labels.extend(std::iter::repeat_n(l, run));
            }
            if labels.len() - start != p.nx {
                return Err(Error::InvalidPartition(format!(
                    "row {j} covers {} cells, expected {}",
                    labels.len() - start,
                    p.nx
                )));
            }
        }
        let used: BTreeSet<usize> = labels.iter().copied().collect();
        if let Some(&bad) = used.iter().find(|&&l| l >= self.motions.len()) {
            return Err(Error::UnknownComponent {
                id: bad,
                count: self.motions.len(),
            });
        }
        let (partition, renaming) = CacciopPartition::from_labels(mesh.clone(), &labels)?;
        let mut motions = vec![RigidMotion::default(); partition.count()];
        for (old, new) in renaming {
            motions[new] = self.motions[old];
        }
        let u = DisplacementField::new(self.u.build_on(mesh)?)?;
        LimitTriple::new(u, partition, PiecewiseRigidMotion::new(motions))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fixtures::random_triple;

    #[test]
    fn field_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mesh = Arc::new(GridMesh::new(2.0, 10, 5, 0.25).unwrap());
        let t = random_triple(&mesh, 3, 0.5, &mut rng).unwrap();
        let doc = FieldDoc::of(t.u());
        let text = serde_json::to_string(&doc).unwrap();
        let back: FieldDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), **t.u());
    }

    #[test]
    fn triple_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mesh = Arc::new(GridMesh::new(1.0, 10, 6, 0.0).unwrap());
        let t = random_triple(&mesh, 4, 0.5, &mut rng).unwrap();
        let text = serde_json::to_string(&TripleDoc::of(&t)).unwrap();
        let back = serde_json::from_str::<TripleDoc>(&text).unwrap().build().unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn labels_are_renumbered_with_their_motions() {
        let mesh = Arc::new(GridMesh::new(1.0, 4, 2, 0.0).unwrap());
        let u = FieldDoc::of(&PiecewiseAffine::zero(mesh.clone()));
        let mut u = u;
        // right half, the smaller component, carries label 0
        u.open = (0..2).map(|j| mesh.vertical_facet(2, j)).collect();
        let doc = TripleDoc {
            u,
            partition: PartitionRle {
                l: 1.0,
                nx: 4,
                ny: 2,
                eta: 0.0,
                rows: vec![vec![[1, 3], [0, 1]], vec![[1, 3], [0, 1]]],
            },
            motions: vec![RigidMotion::new(0.5, Vec2::ZERO), RigidMotion::default()],
        };
        let t = doc.build().unwrap();
        let last = mesh.cell_index(3, 0);
        assert_eq!(t.motion().motions[t.partition().label(last)].angle, 0.5);
        let mut bad = doc.clone();
        bad.motions.pop();
        assert!(matches!(bad.build(), Err(Error::UnknownComponent { id: 1, count: 1 })));
    }
}

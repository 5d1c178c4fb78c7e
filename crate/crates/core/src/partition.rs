//! Caccioppoli partitions of the mesh as ordered cell label fields.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::domain::{Facet, GridMesh};
use crate::error::{Error, Result};

/// A partition of the mesh cells into components `P_0, P_1, …`, ordered by
/// nonincreasing area. Components need not be connected.
#[derive(Debug, Clone, PartialEq)]
pub struct CacciopPartition {
    mesh: Arc<GridMesh>,
    labels: Vec<usize>,
    cell_counts: Vec<usize>,
}

/// Boundary accounting of a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perimeters {
    /// `ℋ¹(∂*P_j ∩ Ω)`: facets separating `P_j` from other components.
    pub inside: Vec<f64>,
    /// Full perimeter including the part on the mesh boundary.
    pub total: Vec<f64>,
    /// Symmetric matrix of `ℋ¹(∂*P_i ∩ ∂*P_j)`.
    pub interfaces: Vec<Vec<f64>>,
}

impl Perimeters {
    /// `ℋ¹(⋃_j ∂*P_j ∩ Ω)`.
    pub fn interface_length(&self) -> f64 {
        let n = self.interfaces.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += self.interfaces[i][j];
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalStructureReport {
    pub facets_checked: usize,
    pub max_components_per_facet: usize,
    pub interface_symmetric: bool,
    pub perimeter_sum: f64,
    pub twice_interface_length: f64,
    pub passed: bool,
}

/// Run-length encoded label rows, bottom row first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRle {
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
    pub eta: f64,
    pub rows: Vec<Vec<[usize; 2]>>,
}

impl CacciopPartition {
    /// Builds an ordered partition from arbitrary labels. Returns the
    /// partition and, for each distinct input label (ascending), its new id.
    pub fn from_labels(mesh: Arc<GridMesh>, labels: &[usize]) -> Result<(Self, BTreeMap<usize, usize>)> {
        if labels.len() != mesh.num_cells() {
            return Err(Error::InvalidPartition(format!(
                "{} labels for a mesh of {} cells",
                labels.len(),
                mesh.num_cells()
            )));
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let mut order: Vec<(usize, usize)> = counts.iter().map(|(&l, &n)| (l, n)).collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let renaming: BTreeMap<usize, usize> = order.iter().enumerate().map(|(new, &(old, _))| (old, new)).collect();
        let new_labels = labels.iter().map(|l| renaming[l]).collect();
        let cell_counts = order.iter().map(|&(_, n)| n).collect();
        Ok((
            CacciopPartition {
                mesh,
                labels: new_labels,
                cell_counts,
            },
            renaming,
        ))
    }

    pub fn new(mesh: Arc<GridMesh>, labels: &[usize]) -> Result<Self> {
        Ok(Self::from_labels(mesh, labels)?.0)
    }

    /// The trivial partition `{Ω}`.
    pub fn single(mesh: Arc<GridMesh>) -> Self {
        let n = mesh.num_cells();
        CacciopPartition {
            mesh,
            labels: vec![0; n],
            cell_counts: vec![n],
        }
    }

    /// Labels cells by a function of their center.
    pub fn from_fn(mesh: Arc<GridMesh>, f: impl Fn(crate::linalg::Vec2) -> usize) -> Self {
        let labels: Vec<usize> = (0..mesh.num_cells()).map(|c| f(mesh.cell_center(c))).collect();
        Self::new(mesh, &labels).expect("label count matches the mesh")
    }

    pub fn mesh(&self) -> &GridMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, c: usize) -> usize {
        self.labels[c]
    }

    pub fn count(&self) -> usize {
        self.cell_counts.len()
    }

    pub fn area(&self, j: usize) -> f64 {
        self.cell_counts[j] as f64 * self.mesh.cell_area()
    }

    pub fn areas(&self) -> Vec<f64> {
        (0..self.count()).map(|j| self.area(j)).collect()
    }

    pub fn cells_of(&self, j: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&c| self.labels[c] == j).collect()
    }

    /// Cells grouped by component.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (c, &l) in self.labels.iter().enumerate() {
            out[l].push(c);
        }
        out
    }

    /// Whether the facet separates two different components.
    pub fn is_interface(&self, f: &Facet) -> bool {
        self.labels[f.minus] != self.labels[f.plus]
    }

    /// Flags of interface facets lying in the closed reference domain.
    pub fn interface_flags(&self) -> Vec<bool> {
        self.mesh
            .facets()
            .map(|f| self.is_interface(&f) && self.mesh.facet_in_closed_omega(&f))
            .collect()
    }

    pub fn perimeters(&self) -> Perimeters {
        let n = self.count();
        let m = &self.mesh;
        let mut interfaces = vec![vec![0.0; n]; n];
        let mut inside = vec![0.0; n];
        for f in m.facets() {
            if !m.facet_in_closed_omega(&f) {
                continue;
            }
            let (a, b) = (self.labels[f.minus], self.labels[f.plus]);
            if a != b {
                interfaces[a][b] += f.length;
                interfaces[b][a] += f.length;
                inside[a] += f.length;
                inside[b] += f.length;
            }
        }
        let mut total = inside.clone();
        for c in 0..m.num_cells() {
            let (i, j) = m.cell_ij(c);
            let l = self.labels[c];
            if i == 0 {
                total[l] += m.hy();
            }
            if i + 1 == m.nx() {
                total[l] += m.hy();
            }
            if j == 0 {
                total[l] += m.hx();
            }
            if j + 1 == m.ny() {
                total[l] += m.hx();
            }
        }
        Perimeters {
            inside,
            total,
            interfaces,
        }
    }

    /// `ℋ¹(⋃_j ∂*P_j ∩ Ω)`.
    pub fn interface_length(&self) -> f64 {
        self.mesh
            .facets()
            .filter(|f| self.is_interface(f) && self.mesh.facet_in_closed_omega(f))
            .map(|f| f.length)
            .sum()
    }

    fn check_same_mesh(&self, other: &CacciopPartition) -> Result<()> {
        if !self.mesh.same_geometry(&other.mesh) {
            return Err(Error::MeshMismatch("partitions live on different meshes".into()));
        }
        Ok(())
    }

    /// `self ≥ finer`: every component of `finer` lies inside one component
    /// of `self`.
    pub fn is_coarser(&self, finer: &CacciopPartition) -> Result<bool> {
        self.check_same_mesh(finer)?;
        let mut host = vec![usize::MAX; finer.count()];
        for (c, &l) in finer.labels.iter().enumerate() {
            let h = self.labels[c];
            if host[l] == usize::MAX {
                host[l] = h;
            } else if host[l] != h {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Equal label fields up to renaming.
    pub fn same_as(&self, other: &CacciopPartition) -> Result<bool> {
        Ok(self.is_coarser(other)? && other.is_coarser(self)?)
    }

    /// Union-find closure of `pairs`, reordered by area.
    pub fn merge(&self, pairs: &[(usize, usize)]) -> Result<CacciopPartition> {
        Ok(self.merge_with_map(pairs)?.0)
    }

    /// Like [`merge`](Self::merge), also returning for each old component
    /// its new id.
    pub fn merge_with_map(&self, pairs: &[(usize, usize)]) -> Result<(CacciopPartition, Vec<usize>)> {
        let n = self.count();
        let mut uf = UnionFind::<usize>::new(n);
        for &(a, b) in pairs {
            for id in [a, b] {
                if id >= n {
                    return Err(Error::UnknownComponent { id, count: n });
                }
            }
            uf.union(a, b);
        }
        // representative = smallest member, so ties keep the original order
        let mut rep = vec![usize::MAX; n];
        for j in 0..n {
            let r = uf.find(j);
            rep[r] = rep[r].min(j);
        }
        let group: Vec<usize> = (0..n).map(|j| rep[uf.find(j)]).collect();
        let labels: Vec<usize> = self.labels.iter().map(|&l| group[l]).collect();
        let (merged, renaming) = Self::from_labels(self.mesh.clone(), &labels)?;
        let map = group.iter().map(|g| renaming[g]).collect();
        Ok((merged, map))
    }

    pub fn local_structure_check(&self) -> LocalStructureReport {
        let p = self.perimeters();
        let n = self.count();
        let mut facets_checked = 0;
        let mut max_components = 0;
        for f in self.mesh.facets() {
            facets_checked += 1;
            let k = if self.labels[f.minus] == self.labels[f.plus] {
                1
            } else {
                2
            };
            max_components = max_components.max(k);
        }
        let symmetric = (0..n).all(|i| (0..n).all(|j| p.interfaces[i][j] == p.interfaces[j][i]));
        let perimeter_sum: f64 = p.inside.iter().sum();
        let twice = 2.0 * p.interface_length();
        let passed = max_components <= 2 && symmetric && (perimeter_sum - twice).abs() <= 1e-12 * (1.0 + twice);
        LocalStructureReport {
            facets_checked,
            max_components_per_facet: max_components,
            interface_symmetric: symmetric,
            perimeter_sum,
            twice_interface_length: twice,
            passed,
        }
    }

    /// Number of connected pieces of each component (diagnostic).
    pub fn connected_pieces(&self) -> Vec<usize> {
        let m = &self.mesh;
        let mut uf = UnionFind::<usize>::new(m.num_cells());
        for f in m.facets() {
            if !self.is_interface(&f) {
                uf.union(f.minus, f.plus);
            }
        }
        let mut roots = vec![std::collections::BTreeSet::new(); self.count()];
        for c in 0..m.num_cells() {
            roots[self.labels[c]].insert(uf.find(c));
        }
        roots.iter().map(|r| r.len()).collect()
    }

    pub fn to_rle(&self) -> PartitionRle {
        let m = &self.mesh;
        let rows = (0..m.ny())
            .map(|j| {
                let mut row: Vec<[usize; 2]> = Vec::new();
                for i in 0..m.nx() {
                    let l = self.labels[m.cell_index(i, j)];
                    match row.last_mut() {
                        Some(last) if last[0] == l => last[1] += 1,
                        _ => row.push([l, 1]),
                    }
                }
                row
            })
            .collect();
        PartitionRle {
            l: m.l(),
            nx: m.nx(),
            ny: m.ny(),
            eta: m.eta(),
            rows,
        }
    }

    pub fn from_rle(rle: &PartitionRle) -> Result<Self> {
        let mesh = Arc::new(GridMesh::new(rle.l, rle.nx, rle.ny, rle.eta)?);
        if rle.rows.len() != rle.ny {
            return Err(Error::InvalidPartition(format!(
                "{} rows for ny = {}",
                rle.rows.len(),
                rle.ny
            )));
        }
        let mut labels = Vec::with_capacity(mesh.num_cells());
        for (j, row) in rle.rows.iter().enumerate() {
            let start = labels.len();
            for &[l, run] in row {
                labels.extend(std::iter::repeat_n(l, run));
            }
            if labels.len() - start != rle.nx {
                return Err(Error::InvalidPartition(format!(
                    "row {j} covers {} cells, expected {}",
                    labels.len() - start,
                    rle.nx
                )));
            }
        }
        Self::new(mesh, &labels)
    }

    /// Interface matrix as CSV rows `i,j,length` for `i < j` with nonzero
    /// length.
    pub fn write_interfaces_csv<W: Write>(&self, out: W) -> Result<()> {
        let p = self.perimeters();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "length"])?;
        for i in 0..self.count() {
            for j in (i + 1)..self.count() {
                if p.interfaces[i][j] > 0.0 {
                    w.write_record([i.to_string(), j.to_string(), format!("{:.17e}", p.interfaces[i][j])])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn strip(n: usize) -> Arc<GridMesh> {
        Arc::new(GridMesh::new(3.0, 3 * n, n, 0.0).unwrap())
    }

    fn thirds(n: usize) -> CacciopPartition {
        CacciopPartition::from_fn(strip(n), |x| (x.x() as usize).min(2))
    }

    #[test]
    fn single_component_has_no_interfaces() {
        let p = CacciopPartition::single(strip(4));
        let per = p.perimeters();
        assert_eq!(per.inside, vec![0.0]);
        assert!((per.total[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn three_strips_have_two_unit_interfaces() {
        let p = thirds(4);
        assert_eq!(p.count(), 3);
        let per = p.perimeters();
        assert!((per.interfaces[0][1] - 1.0).abs() < 1e-12);
        assert!((per.interfaces[1][2] - 1.0).abs() < 1e-12);
        assert_eq!(per.interfaces[0][2], 0.0);
        assert!((per.interface_length() - 2.0).abs() < 1e-12);
        // equal areas keep the left-to-right order
        assert_eq!(p.label(0), 0);
        assert_eq!(p.label(p.mesh().cell_index(11, 0)), 2);
    }

    #[test]
    fn checkerboard_perimeters() {
        let m = Arc::new(GridMesh::new(1.0, 4, 4, 0.0).unwrap());
        let p = CacciopPartition::from_fn(m, |x| (x.x() > 0.5) as usize + 2 * (x.y() > 0.5) as usize);
        let per = p.perimeters();
        for j in 0..4 {
            assert!((per.inside[j] - 1.0).abs() < 1e-12);
            assert!((per.total[j] - 2.0).abs() < 1e-12);
        }
        assert!(p.local_structure_check().passed);
    }

    #[test]
    fn merge_example_partition() {
        let p = thirds(4);
        let merged = p.merge(&[(0, 1)]).unwrap();
        assert_eq!(merged.count(), 2);
        assert!(merged.is_coarser(&p).unwrap());
        assert!(!p.is_coarser(&merged).unwrap());
        assert!((merged.area(0) - 2.0).abs() < 1e-12);
        assert!((merged.interface_length() - 1.0).abs() < 1e-12);
        assert_eq!(p.merge(&[]).unwrap(), p);
        assert!(matches!(
            p.merge(&[(0, 7)]),
            Err(Error::UnknownComponent { id: 7, count: 3 })
        ));
    }

    #[test]
    fn merge_map_tracks_components() {
        let p = thirds(2);
        let (m, map) = p.merge_with_map(&[(1, 2)]).unwrap();
        assert_eq!(map[1], map[2]);
        assert_eq!(map[1], 0);
        assert_eq!(map[0], 1);
        assert_eq!(m.count(), 2);
    }

    #[test]
    fn rle_round_trip() {
        let p = thirds(3);
        let rle = p.to_rle();
        assert_eq!(rle.rows[0], vec![[0, 3], [1, 3], [2, 3]]);
        let text = serde_json::to_string(&rle).unwrap();
        let back = CacciopPartition::from_rle(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.labels(), p.labels());
    }

    #[test]
    fn interface_csv() {
        let mut buf = Vec::new();
        thirds(2).write_interfaces_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn disconnected_components_are_allowed() {
        let m = Arc::new(GridMesh::new(1.0, 3, 1 + 1, 0.0).unwrap());
        let p = CacciopPartition::new(m, &[0, 1, 0, 0, 1, 0]).unwrap();
        assert_eq!(p.connected_pieces(), vec![2, 1]);
    }

    fn random_labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0..k, n)
    }

    proptest! {
        #[test]
        fn partial_order_axioms(a in random_labels(24, 4), b in random_labels(24, 3), pairs in proptest::collection::vec((0..4usize, 0..4usize), 0..4)) {
            let m = Arc::new(GridMesh::new(1.5, 6, 4, 0.0).unwrap());
            let pa = CacciopPartition::new(m.clone(), &a).unwrap();
            let pb = CacciopPartition::new(m.clone(), &b).unwrap();
            prop_assert!(pa.is_coarser(&pa).unwrap());
            if pa.is_coarser(&pb).unwrap() && pb.is_coarser(&pa).unwrap() {
                prop_assert_eq!(pa.labels(), pb.labels());
            }
            let pairs: Vec<(usize, usize)> = pairs.into_iter().filter(|(x, y)| *x < pa.count() && *y < pa.count()).collect();
            let merged = pa.merge(&pairs).unwrap();
            prop_assert!(merged.is_coarser(&pa).unwrap());
            let again = merged.merge(&[]).unwrap();
            prop_assert_eq!(again.labels(), merged.labels());
            // transitivity through the merge chain
            let coarser = merged.merge(&[(0, merged.count() - 1)]).unwrap();
            prop_assert!(coarser.is_coarser(&merged).unwrap());
            prop_assert!(coarser.is_coarser(&pa).unwrap());
            prop_assert!(merged.interface_length() <= pa.interface_length() + 1e-12);
            let areas = merged.areas();
            prop_assert!(areas.windows(2).all(|w| w[0] >= w[1]));
            let r = pa.local_structure_check();
            prop_assert!(r.passed);
        }
    }
}

//! Seeded random configurations for property checks and experiments.

use std::sync::Arc;

use rand::Rng;

use crate::domain::{DisplacementField, GridMesh, PiecewiseAffine, VertexDofs};
use crate::energy::LimitTriple;
use crate::error::Result;
use crate::linalg::{Matrix2, Vec2};
use crate::partition::CacciopPartition;
use crate::rigid::{InfinitesimalMotion, PiecewiseInfinitesimalMotion, PiecewiseRigidMotion, RigidMotion};

/// Voronoi partition of the cell centers around at most `max_components`
/// random sites.
pub fn random_partition<R: Rng>(mesh: &Arc<GridMesh>, max_components: usize, rng: &mut R) -> CacciopPartition {
    let k = rng.gen_range(1..=max_components.max(1));
    let (x0, x1) = (mesh.x_min(), mesh.x_min() + mesh.nx() as f64 * mesh.hx());
    let sites: Vec<Vec2> = (0..k)
        .map(|_| Vec2::new(rng.gen_range(x0..x1), rng.gen_range(0.0..1.0)))
        .collect();
    CacciopPartition::from_fn(mesh.clone(), |x| {
        (0..k)
            .min_by(|&a, &b| (x - sites[a]).norm_sq().total_cmp(&(x - sites[b]).norm_sq()))
            .unwrap_or(0)
    })
}

/// Rotation angle in `(−π, π)` and shift with entries in `[−shift, shift]`.
pub fn random_rigid_motion<R: Rng>(shift: f64, rng: &mut R) -> RigidMotion {
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    RigidMotion::new(
        angle,
        Vec2::new(rng.gen_range(-shift..=shift), rng.gen_range(-shift..=shift)),
    )
}

pub fn random_piecewise_rigid<R: Rng>(p: &CacciopPartition, shift: f64, rng: &mut R) -> PiecewiseRigidMotion {
    PiecewiseRigidMotion::new((0..p.count()).map(|_| random_rigid_motion(shift, rng)).collect())
}

pub fn random_infinitesimal<R: Rng>(count: usize, scale: f64, rng: &mut R) -> PiecewiseInfinitesimalMotion {
    PiecewiseInfinitesimalMotion::new(
        (0..count)
            .map(|_| {
                InfinitesimalMotion::new(
                    rng.gen_range(-scale..=scale),
                    Vec2::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale)),
                )
            })
            .collect(),
    )
}

/// Open flags of a few random straight cracks: runs of vertical facets
/// along a column or horizontal facets along a row.
pub fn random_cracks<R: Rng>(mesh: &GridMesh, count: usize, rng: &mut R) -> Vec<bool> {
    let mut open = vec![false; mesh.num_facets()];
    for _ in 0..count {
        if rng.gen_bool(0.5) {
            let col = rng.gen_range(0..mesh.nx() - 1);
            let len = rng.gen_range(1..=mesh.ny());
            let start = rng.gen_range(0..=mesh.ny() - len);
            for j in start..start + len {
                open[mesh.vertical_facet(col, j)] = true;
            }
        } else {
            let row = rng.gen_range(0..mesh.ny() - 1);
            let len = rng.gen_range(1..=mesh.nx());
            let start = rng.gen_range(0..=mesh.nx() - len);
            for i in start..start + len {
                open[mesh.horizontal_facet(i, row)] = true;
            }
        }
    }
    open
}

/// Random displacement, continuous at midpoints of closed facets, with at
/// most `cracks` straight cracks and `‖u‖∞ ≤ 1`: a random affine trend
/// plus vertex noise of amplitude `roughness`.
pub fn random_displacement<R: Rng>(
    mesh: &Arc<GridMesh>,
    cracks: usize,
    roughness: f64,
    rng: &mut R,
) -> DisplacementField {
    let open = random_cracks(mesh, cracks, rng);
    let dofs = VertexDofs::new(mesh.clone(), &open);
    let mut coef = || rng.gen_range(-1.0..1.0);
    let trend = crate::domain::AffineMap::new(Matrix2::new(coef(), coef(), coef(), coef()), Vec2::new(coef(), coef()));
    let values: Vec<Vec2> = (0..dofs.count())
        .map(|d| {
            trend.eval(dofs.position(d)) + roughness * Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let field = dofs.field(&values, open);
    let sup = field.sup_norm();
    let field = if sup > 1.0 {
        let (m, maps, open) = field.into_parts();
        PiecewiseAffine::from_parts_unchecked(m, maps.iter().map(|a| a.scale(1.0 / sup)).collect(), open)
    } else {
        field
    };
    DisplacementField::new_unchecked(field)
}

/// `(u, 𝒫, T)` with at most `max_components` components, motions shifted
/// by at most `shift` and `‖u‖∞ ≤ 1`.
pub fn random_triple<R: Rng>(
    mesh: &Arc<GridMesh>,
    max_components: usize,
    shift: f64,
    rng: &mut R,
) -> Result<LimitTriple> {
    let p = random_partition(mesh, max_components, rng);
    let t = random_piecewise_rigid(&p, shift, rng);
    let cracks = rng.gen_range(0..=2);
    let u = random_displacement(mesh, cracks, 0.2, rng);
    LimitTriple::new(u, p, t)
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub y: PiecewiseAffine,
    pub partition: CacciopPartition,
    pub motion: PiecewiseRigidMotion,
}

/// Smallest `|T_i(x) − T_j(x)|` over endpoints of interface facets.
pub fn interface_gap(p: &CacciopPartition, t: &PiecewiseRigidMotion) -> f64 {
    let m = p.mesh();
    let mut gap = f64::INFINITY;
    for f in m.facets().filter(|f| p.is_interface(f)) {
        let half = match f.orientation {
            crate::domain::Orientation::Vertical => Vec2::new(0.0, 0.5 * m.hy()),
            crate::domain::Orientation::Horizontal => Vec2::new(0.5 * m.hx(), 0.0),
        };
        let (a, b) = (t.motions[p.label(f.minus)], t.motions[p.label(f.plus)]);
        for x in [f.midpoint - half, f.midpoint + half] {
            gap = gap.min((a.apply(x) - b.apply(x)).norm());
        }
    }
    gap
}

/// Piecewise rigid deformation with at most `max_components` components
/// whose motions differ by at least `min_gap` on every interface and
/// pairwise.
pub fn planted_piecewise_rigid<R: Rng>(
    mesh: &Arc<GridMesh>,
    max_components: usize,
    min_gap: f64,
    rng: &mut R,
) -> Result<Planted> {
    let partition = random_partition(mesh, max_components, rng);
    let motion = loop {
        let t = random_piecewise_rigid(&partition, 1.0, rng);
        let pairwise = (0..t.count())
            .flat_map(|i| (i + 1..t.count()).map(move |j| (i, j)))
            .all(|(i, j)| t.motions[i].separation(&t.motions[j]) >= min_gap);
        if pairwise && interface_gap(&partition, &t) >= min_gap {
            break t;
        }
    };
    let y = motion.field(&partition)?;
    Ok(Planted { y, partition, motion })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn mesh() -> Arc<GridMesh> {
        Arc::new(GridMesh::new(1.0, 12, 10, 0.0).unwrap())
    }

    #[test]
    fn displacement_is_bounded_and_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_displacement(&mesh(), 3, 0.3, &mut rng);
            assert!(u.sup_norm() <= 1.0 + 1e-12);
            assert!(u.continuity_residual().0 < 1e-12);
        }
    }

    #[test]
    fn partitions_respect_the_component_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            assert!(random_partition(&mesh(), 4, &mut rng).count() <= 4);
        }
    }

    #[test]
    fn planted_motions_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let p = planted_piecewise_rigid(&mesh(), 6, 1e-4, &mut rng).unwrap();
            assert!(interface_gap(&p.partition, &p.motion) >= 1e-4);
            assert!(p.y.continuity_residual().0 < 1e-12);
        }
    }

    #[test]
    fn seeds_reproduce() {
        let a = random_triple(&mesh(), 4, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_triple(&mesh(), 4, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }
}

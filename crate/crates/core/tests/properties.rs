use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use griffith_core::cleavage::{sweep_cleavage, CleavageTemplate, Schedule, SolveMode};
use griffith_core::density::{hessian_q, Material};
use griffith_core::domain::GridMesh;
use griffith_core::energy::energy_limit;
use griffith_core::exec::Exec;
use griffith_core::fixtures::{random_partition, random_triple};
use griffith_core::io::TripleDoc;

fn mesh(nx: usize, ny: usize) -> Arc<GridMesh> {
    Arc::new(GridMesh::new(1.0, nx, ny, 0.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn triple_documents_preserve_the_limit_energy(seed in any::<u64>(), nx in 3usize..9, ny in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_triple(&mesh(nx, ny), 4, 0.5, &mut rng).unwrap();
        let text = serde_json::to_string(&TripleDoc::of(&t)).unwrap();
        let back = serde_json::from_str::<TripleDoc>(&text).unwrap().build().unwrap();
        let q = hessian_q(Material::default_density().density.as_ref()).unwrap();
        prop_assert_eq!(energy_limit(&back, &q).unwrap(), energy_limit(&t, &q).unwrap());
    }

    #[test]
    fn merging_gives_a_coarser_partition(seed in any::<u64>(), i in 0usize..5, j in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_partition(&mesh(7, 5), 5, &mut rng);
        let (i, j) = (i % p.count(), j % p.count());
        let merged = p.merge(&[(i, j)]).unwrap();
        prop_assert!(merged.is_coarser(&p).unwrap());
        prop_assert_eq!(merged.count(), p.count() - usize::from(i != j));
        let total: f64 = merged.areas().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sweeps_agree_across_execution_modes() {
    let template = CleavageTemplate {
        l: 1.0,
        nx: 8,
        ny: 4,
        collar: 1,
        material: Material::default_density(),
        mode: SolveMode::Both,
        schedule: Schedule::default(),
    };
    let a = [-1.0, 0.5, 1.5];
    let eps = [1e-3, 1e-4];
    let seq = sweep_cleavage(&a, &eps, &template, Exec::Sequential).unwrap();
    let par = sweep_cleavage(&a, &eps, &template, Exec::Parallel).unwrap();
    assert_eq!(seq.rows, par.rows);
}

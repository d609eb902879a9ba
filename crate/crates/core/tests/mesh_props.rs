mod common;

use atmodg::mesh::{adapt_to_metric, RemeshOptions};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adapted_meshes_stay_valid(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let r = random_adapt(&mut rng);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

#[test]
fn anisotropic_target_is_met() {
    for angle in [0.0, 0.5] {
        let a = aspect_after_adapt(20.0, angle).unwrap();
        assert!(within_factor(a, 20.0, 2.0), "angle {angle}: median aspect {a}");
    }
}

#[test]
fn degrees_follow_the_field() {
    let mesh = unit_square(80);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut field = random_metric_field(&mesh, &mut rng);
    field = atmodg::mesh::MetricField::new(mesh.clone(), field.vertex_metric.clone(), vec![4; mesh.n_cells()]);
    let (out, _) = adapt_to_metric(&mesh, &field, &RemeshOptions::default()).unwrap();
    assert!(out.degrees.iter().all(|&p| p == 4));
}

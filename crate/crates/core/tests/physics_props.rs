mod common;

use common::*;
use proptest::prelude::*;

fn states() -> impl Strategy<Value = atmodg::physics::Vec4> {
    (0.1f64..2.0, -150f64..150.0, -150f64..150.0, 1e3f64..2e5).prop_map(|(r, u, v, p)| state(r, u, v, p))
}

proptest! {
    #[test]
    fn euler_flux_is_homogeneous(w in states()) {
        prop_assert!(flux_homogeneity(&w).is_ok(), "{:?}", flux_homogeneity(&w));
    }

    #[test]
    fn jacobians_match_differences(w in states()) {
        prop_assert!(jacobian_fd(&w).is_ok(), "{:?}", jacobian_fd(&w));
    }

    #[test]
    fn viscous_paths_agree(w in states(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = random_gradient(&mut rng);
        prop_assert!(viscous_dual_path(&w, &g).is_ok(), "{:?}", viscous_dual_path(&w, &g));
    }

    #[test]
    fn numerical_flux_is_consistent(w in states(), angle in 0f64..std::f64::consts::TAU) {
        let n = unit_normal(angle);
        prop_assert!(numerical_flux_consistency(&w, n).is_ok(), "{:?}", numerical_flux_consistency(&w, n));
    }

    #[test]
    fn primitive_round_trip(w in states()) {
        let c = constants(0.0);
        let s = atmodg::physics::primitive_from_conserved(&atmodg::physics::ConservedState(w), &c).unwrap();
        let back = atmodg::physics::conserved_from_primitive(s.rho, s.v1, s.v2, s.p, &c).0;
        prop_assert!((back - w).norm() <= 1e-10 * w.norm());
    }
}

#[test]
fn sod_star() {
    assert!((sod_star_pressure() - 0.30313).abs() < 1e-4);
}

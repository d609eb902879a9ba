mod common;

use atmodg::estimators::local_dual_norm;
use common::slab::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn lowest_time_degree_is_backward_euler() {
    let (diff, scale) = backward_euler_gap();
    assert!(diff <= 1e-12 * scale, "difference {diff:e}, scale {scale:e}");
}

#[test]
fn nodal_superconvergence_in_time() {
    for order in observed_orders(1, &[0.2, 0.1, 0.05]) {
        assert!(order >= 2.7, "observed order {order}");
    }
    // q = 0 is backward Euler: first order
    let order0 = observed_orders(0, &[0.1, 0.05])[0];
    assert!((order0 - 1.0).abs() < 0.15, "order {order0}");
}

#[test]
fn algebraic_estimator_vanishes_on_exact_solution() {
    let (eta_a, scale, eta_s) = exact_system_estimate();
    assert!(scale > 0.0);
    assert!(eta_a <= 1e-10 * scale, "eta_A {eta_a:e}, scale {scale:e}");
    assert!(eta_s > 1e-8 * scale);
}

fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] + if i == j { 1.0 } else { 0.0 });
    &b * b.transpose() + DMatrix::identity(n, n) * 0.1
}

proptest! {
    #[test]
    fn dual_norm_matches_eigen_oracle(seed in prop::collection::vec(-1.0f64..1.0, 16..40), r in prop::collection::vec(-5.0f64..5.0, 16)) {
        let g = spd(4, &seed);
        let got = local_dual_norm(&g, &r).unwrap();
        let eig = g.clone().symmetric_eigen();
        let mut s = 0.0;
        for c in 0..4 {
            let rc = DVector::from_fn(4, |j, _| r[4 * j + c]);
            for i in 0..4 {
                s += eig.eigenvectors.column(i).dot(&rc).powi(2) / eig.eigenvalues[i];
            }
        }
        prop_assert!((got - s.sqrt()).abs() <= 1e-9 * (1.0 + s.sqrt()));
    }

    #[test]
    fn dual_norm_bounds_every_test_function(seed in prop::collection::vec(-1.0f64..1.0, 9..30), r in prop::collection::vec(-5.0f64..5.0, 12), v in prop::collection::vec(-1.0f64..1.0, 3)) {
        // component 0 only: r . v <= ||r||_* ||v||_G
        let g = spd(3, &seed);
        let mut r0 = vec![0.0; 12];
        for j in 0..3 {
            r0[4 * j] = r[4 * j];
        }
        let dual = local_dual_norm(&g, &r0).unwrap();
        let vv = DVector::from_vec(v.clone());
        let vnorm = (vv.transpose() * &g * &vv)[(0, 0)].sqrt();
        let dot: f64 = (0..3).map(|j| r0[4 * j] * v[j]).sum();
        prop_assert!(dot <= dual * vnorm * (1.0 + 1e-12) + 1e-12);
    }
}

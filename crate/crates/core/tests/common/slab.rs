//! Slab-level oracles: backward Euler, scalar time DG, exact algebraic systems.

use std::sync::Arc;

use atmodg::dgcore::{DgSpace, Operator, Problem, SlabSolution, SpatialField, TimeRule};
use atmodg::estimators::estimate;
use atmodg::mesh::{rectangle, RectangleSpec};
use atmodg::physics::{conserved_from_primitive, PhysicalConstants, Vec4};
use nalgebra::{DMatrix, DVector};

pub fn two_cell_operator(p: usize, q: usize, mu: f64) -> Operator {
    let spec = RectangleSpec::uniform_right_split([0.0, 400.0], [0.0, 300.0], 1, 1).with_degree(p);
    let space = Arc::new(DgSpace::new(rectangle(&spec).unwrap(), q).unwrap());
    assert_eq!(space.n_cells(), 2);
    Operator::new(space, Problem::new(PhysicalConstants { mu, ..PhysicalConstants::default() }))
}

pub fn wavy(x: [f64; 2], phase: f64) -> Vec4 {
    let c = PhysicalConstants::default();
    let s = (0.01 * x[0] + phase).sin() * (0.013 * x[1]).cos();
    conserved_from_primitive(1.1 + 0.05 * s, 3.0 * s, -2.0 + s, 9.5e4 + 800.0 * s, &c).0
}

/// `(|sqrt(tau) r_slab - r_BE|, |r_BE|)` for one q = 0 slab on two cells.
pub fn backward_euler_gap() -> (f64, f64) {
    let op = two_cell_operator(2, 0, 0.5);
    let space = op.space.clone();
    let tau = 0.7;
    let w = SpatialField::project(space.clone(), |x| wavy(x, 0.0));
    let w_prev = SpatialField::project(space.clone(), |x| wavy(x, 0.3));
    let slab = SlabSolution::constant(&w, 2.0, tau);
    let r = op.slab_residual_vec(&slab, &w_prev.moments_on(&space, 2)).unwrap();

    // backward Euler: (w - w_prev, phi_i) + tau a_h(w, phi_i), mass term by quadrature
    let a = op.spatial_residual(&w).unwrap();
    let mut be = vec![0.0; a.len()];
    for k in 0..space.n_cells() {
        let cell = &space.cells[k];
        let o = space.spatial_offsets[k];
        for (x, qw) in cell.qx.iter().zip(&cell.qw) {
            let d = w.eval_in(k, *x) - w_prev.eval_in(k, *x);
            let (phi, _) = space.basis_at(k, *x);
            for i in 0..cell.nb {
                for c in 0..4 {
                    be[o + 4 * i + c] += qw * d[c] * phi[i];
                }
            }
        }
        for j in o..o + 4 * cell.nb {
            be[j] += tau * a[j];
        }
    }
    let scale: f64 = be.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = r.iter().zip(&be).map(|(x, y)| (x * tau.sqrt() - y).powi(2)).sum::<f64>().sqrt();
    (diff, scale)
}

/// DG in time for `y' + lambda y = f`, returning nodal errors at the step ends.
pub fn scalar_dg(q: usize, tau: f64, t_end: f64) -> f64 {
    let lambda = 1.0;
    let exact = |t: f64| t.sin() + (2.0 * t).cos();
    let source = |t: f64| t.cos() - 2.0 * (2.0 * t).sin() + lambda * exact(t);
    let n = (t_end / tau).round() as usize;
    let mut y_prev = exact(0.0);
    let mut err: f64 = 0.0;
    for m in 0..n {
        let t0 = m as f64 * tau;
        let rule = TimeRule::new(q, t0, tau);
        let mut a = DMatrix::zeros(q + 1, q + 1);
        let mut b = DVector::zeros(q + 1);
        for l in 0..=q {
            for lp in 0..=q {
                let mut mass = 0.0;
                for g in 0..rule.nodes.len() {
                    mass += rule.weights[g] * rule.values[g][l] * rule.values[g][lp];
                }
                a[(l, lp)] = rule.deriv[(l, lp)] + rule.start[l] * rule.start[lp] + lambda * mass;
            }
            b[l] = rule.start[l] * y_prev;
            for g in 0..rule.nodes.len() {
                b[l] += rule.weights[g] * rule.values[g][l] * source(rule.nodes[g]);
            }
        }
        let c = a.lu().solve(&b).unwrap();
        let end = atmodg::dgcore::basis::time_basis(q, t0, tau, t0 + tau).0;
        y_prev = (0..=q).map(|l| c[l] * end[l]).sum();
        err = err.max((y_prev - exact(t0 + tau)).abs());
    }
    err
}

/// Observed orders between successive step sizes.
pub fn observed_orders(q: usize, taus: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = taus.iter().map(|&tau| scalar_dg(q, tau, 2.0)).collect();
    e.windows(2).zip(taus.windows(2)).map(|(e, t)| (e[0] / e[1]).ln() / (t[0] / t[1]).ln()).collect()
}

/// `(eta_A, scale, eta_S)` for a q = 0 slab that solves its system exactly;
/// `scale` is eta_A of the same slab against a perturbed previous state.
pub fn exact_system_estimate() -> (f64, f64, f64) {
    // with q = 0 the slab system is affine in the previous moments, so the
    // previous state can be manufactured to make a given slab exact
    let op = two_cell_operator(3, 0, 0.2);
    let space = op.space.clone();
    let w = SpatialField::project(space.clone(), |x| wavy(x, 0.1));
    let slab = SlabSolution::constant(&w, 0.0, 0.5);
    let naive = w.moments_on(&space, 2);
    let r = op.slab_residual_vec(&slab, &naive).unwrap();
    let start = 1.0 / 0.5f64.sqrt();
    let mut exact = naive.clone();
    for k in 0..space.n_cells() {
        let o = space.offsets[k];
        for j in 0..4 * space.cells[k].nb {
            exact[k][j] += r[o + j] / start;
        }
    }
    let scale = estimate(&op, &slab, &naive).unwrap().eta_a;
    let eta = estimate(&op, &slab, &exact).unwrap();
    (eta.eta_a, scale, eta.eta_s)
}

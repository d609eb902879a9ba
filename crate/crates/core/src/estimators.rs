//! Residual-based error estimators, the algebraic stopping rule and the
//! time-step controller.
//!
//! Each estimator is the dual norm of the slab residual over a local test
//! space, measured in `||psi||_X^2 = ||psi||^2 + ||grad psi||^2 + ||d_t psi||^2`
//! on every space-time element. With orthonormal bases the local Gram matrix is
//! `I + I (x) S + T (x) I`, where `S` is the spatial stiffness matrix and `T`
//! the temporal one; the local dual norm is `sqrt(r^T G^{-1} r)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgcore::{Operator, SlabSolution, SpatialField, TestSpace, TimeRule};
use crate::error::{Error, Result};
use crate::physics::{sound_speed, PhysicalConstants};

/// Global and per-element algebraic, spatial and temporal estimators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTriple {
    pub eta_a: f64,
    pub eta_s: f64,
    pub eta_t: f64,
    pub local_a: Vec<f64>,
    pub local_s: Vec<f64>,
    pub local_t: Vec<f64>,
}

/// Local dual norm `sqrt(r^T G^{-1} r)` summed over the four components.
///
/// `r` has layout `4 j + c` over the test functions `j` of `gram`.
pub fn local_dual_norm(gram: &DMatrix<f64>, r: &[f64]) -> Result<f64> {
    let n = gram.nrows();
    let chol = gram.clone().cholesky().ok_or(Error::SingularGram(usize::MAX))?;
    let mut s = 0.0;
    for c in 0..4 {
        let rc = DVector::from_fn(n, |j, _| r[4 * j + c]);
        let z = chol.solve(&rc);
        s += z.dot(&rc);
    }
    Ok(s.max(0.0).sqrt())
}

/// The X-norm Gram matrix of temporal degree `< nt` and spatial functions `< na`,
/// ordered `l na + a`.
fn x_gram(stiffness: &DMatrix<f64>, time_stiff: &DMatrix<f64>, nt: usize, na: usize) -> DMatrix<f64> {
    let n = nt * na;
    let mut g = DMatrix::zeros(n, n);
    for l in 0..nt {
        for a in 0..na {
            let i = l * na + a;
            g[(i, i)] += 1.0;
            for b in 0..na {
                g[(i, l * na + b)] += stiffness[(a, b)];
            }
            for lp in 0..nt {
                g[(i, lp * na + a)] += time_stiff[(l, lp)];
            }
        }
    }
    g
}

/// Estimators of a slab solution.
pub fn estimate(op: &Operator, sol: &SlabSolution, prev: &[Vec<f64>]) -> Result<EstimatorTriple> {
    let space = &op.space;
    let q = space.q;
    let res = op.slab_residual(sol, prev, TestSpace::FULL)?;
    let rule = TimeRule::new(q, sol.t0, sol.tau);
    let nt = q + 2;
    let mut tstiff = DMatrix::zeros(nt, nt);
    for (g, w) in rule.weights.iter().enumerate() {
        for l in 0..nt {
            for lp in 0..nt {
                tstiff[(l, lp)] += w * rule.dvalues[g][l] * rule.dvalues[g][lp];
            }
        }
    }
    let locals: Vec<[f64; 3]> = (0..space.n_cells())
        .into_par_iter()
        .map(|k| {
            let cell = &space.cells[k];
            let (nb, nbe) = (cell.nb, cell.nbe);
            let r = &res[k];
            let pick = |nt_s: usize, na: usize| -> Result<f64> {
                let g = x_gram(&cell.stiffness, &tstiff, nt_s, na);
                let mut sub = Vec::with_capacity(4 * nt_s * na);
                for l in 0..nt_s {
                    for a in 0..na {
                        sub.extend_from_slice(&r[4 * (l * nbe + a)..4 * (l * nbe + a) + 4]);
                    }
                }
                local_dual_norm(&g, &sub).map_err(|_| Error::SingularGram(k))
            };
            Ok([pick(q + 1, nb)?, pick(q + 1, nbe)?, pick(q + 2, nb)?])
        })
        .collect::<Result<_>>()?;
    let total = |i: usize| locals.iter().map(|l| l[i] * l[i]).sum::<f64>().sqrt();
    Ok(EstimatorTriple {
        eta_a: total(0),
        eta_s: total(1),
        eta_t: total(2),
        local_a: locals.iter().map(|l| l[0]).collect(),
        local_s: locals.iter().map(|l| l[1]).collect(),
        local_t: locals.iter().map(|l| l[2]).collect(),
    })
}

/// `eta_A <= c_A min(eta_S, eta_T)`.
pub fn algebraic_stop(t: &EstimatorTriple, c_a: f64) -> bool {
    t.eta_a <= c_a * t.eta_s.min(t.eta_t)
}

/// Bounds on the time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub tau_min: f64,
    pub tau_max: f64,
}

/// Next time step from the balance of temporal and spatial estimators.
pub fn propose_timestep(t: &EstimatorTriple, tau: f64, c_t: f64, q: usize, bounds: StepBounds) -> Result<f64> {
    let ratio = if t.eta_t > 0.0 { c_t * t.eta_s / t.eta_t } else { f64::INFINITY };
    let factor = ratio.powf(1.0 / (q as f64 + 1.0)).clamp(0.5, 2.0);
    let next = (tau * factor).min(bounds.tau_max);
    if next < bounds.tau_min {
        return Err(Error::TimestepUnderflow { tau: next, tau_min: bounds.tau_min });
    }
    Ok(next)
}

/// `max tau |gamma| (|v.n| + a) / |K|` over cells and their edges, with the
/// cell-average state.
pub fn cfl_number(field: &SpatialField, tau: f64, c: &PhysicalConstants) -> Result<f64> {
    let space = &field.space;
    let mut worst: f64 = 0.0;
    for fd in &space.faces {
        let n = fd.normal[fd.normal.len() / 2];
        for k in std::iter::once(fd.left).chain(fd.right) {
            let w = field.cell_mean(k);
            let lambda = ((w[1] * n[0] + w[2] * n[1]) / w[0]).abs() + sound_speed(&w, c)?;
            worst = worst.max(tau * fd.length * lambda / space.cells[k].area);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(a: f64, s: f64, t: f64) -> EstimatorTriple {
        EstimatorTriple { eta_a: a, eta_s: s, eta_t: t, ..Default::default() }
    }

    #[test]
    fn stopping_rule() {
        assert!(algebraic_stop(&triple(0.0, 1.0, 1.0), 0.01));
        assert!(!algebraic_stop(&triple(0.5, 1.0, 2.0), 0.01));
        assert!(algebraic_stop(&triple(0.25, 1.0, 0.5), 0.5));
    }

    #[test]
    fn controller() {
        let b = StepBounds { tau_min: 1e-3, tau_max: 100.0 };
        let tau = propose_timestep(&triple(0.0, 1.0, 0.2), 2.0, 0.2, 1, b).unwrap();
        assert!((tau - 2.0).abs() < 1e-14);
        let tau = propose_timestep(&triple(0.0, 1.0, 1e3), 2.0, 0.2, 1, b).unwrap();
        assert!((tau - 1.0).abs() < 1e-14);
        let tau = propose_timestep(&triple(0.0, 1.0, 1e-9), 2.0, 0.2, 1, b).unwrap();
        assert!((tau - 4.0).abs() < 1e-14);
        assert!(matches!(
            propose_timestep(&triple(0.0, 1.0, 1e3), 1e-3, 0.2, 1, b),
            Err(Error::TimestepUnderflow { .. })
        ));
    }
}

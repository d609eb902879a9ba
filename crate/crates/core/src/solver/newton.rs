//! Damped Newton-like iteration over one time slab and the semi-implicit
//! single-solve variant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gmres::{gmres, GmresOptions};
use super::ilu::BlockIlu;
use super::sparse::BlockSparse;
use crate::dgcore::{DgSpace, Operator, SlabSolution, SpatialField, TimeRule};
use crate::error::{Error, Result};
use crate::estimators::{algebraic_stop, estimate, EstimatorTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMode {
    /// Newton-like iteration until the algebraic criterion holds.
    Implicit,
    /// One linear solve with the nonlinear terms frozen at the extrapolant.
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Rebuild the matrix when the monitoring factor exceeds this value.
    pub reuse_ratio: f64,
    /// Rebuild the matrix at least every this many iterations.
    pub refresh_every: usize,
    pub reuse_matrix: bool,
    pub c_a: f64,
    /// Safety factor of the GMRES forcing term.
    pub forcing: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Upper bound of the GMRES relative tolerance.
    pub gmres_tol: f64,
    /// Residuals below this fraction of the previous-trace term count as converged.
    pub roundoff: f64,
    /// Compare the algebraic estimator with the spatial one only (steady runs).
    pub spatial_only: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 30,
            max_halvings: 6,
            reuse_ratio: 0.5,
            refresh_every: 10,
            reuse_matrix: true,
            c_a: 0.01,
            forcing: 0.1,
            gmres_restart: 60,
            gmres_max_iter: 600,
            gmres_tol: 1e-2,
            roundoff: 1e-12,
            spatial_only: false,
        }
    }
}

/// One accepted iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub lambda: f64,
    pub zeta: f64,
    pub residual: f64,
    pub gmres_iters: usize,
    pub eta_a: f64,
    pub eta_s: f64,
    pub eta_t: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub gmres_iterations: usize,
    pub matrix_builds: usize,
    pub converged: bool,
    pub trace: Vec<IterRecord>,
}

/// Result of solving one slab.
#[derive(Clone, Debug)]
pub struct SlabStep {
    pub sol: SlabSolution,
    pub triple: EstimatorTriple,
    pub report: NewtonReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Size of the previous-trace contribution to the residual, used as the
/// reference for the roundoff floor.
fn trace_scale(op: &Operator, prev: &[Vec<f64>], sol: &SlabSolution) -> f64 {
    let rule = TimeRule::new(op.space.q, sol.t0, sol.tau);
    let s: f64 = rule.start[..=op.space.q].iter().map(|x| x * x).sum();
    let p: f64 = prev.iter().enumerate().map(|(k, m)| m[..4 * op.space.cells[k].nb].iter().map(|x| x * x).sum::<f64>()).sum();
    (s * p).sqrt()
}

struct Linear {
    matrix: BlockSparse,
    ilu: BlockIlu,
}

impl Linear {
    fn build(op: &Operator, at: &SlabSolution) -> Result<Self> {
        let matrix = op.slab_matrix(at)?;
        let ilu = BlockIlu::new(&matrix)?;
        Ok(Linear { matrix, ilu })
    }

    fn solve(&self, rhs: &[f64], tol: f64, opts: &NewtonOptions) -> Result<(Vec<f64>, usize)> {
        let mut x = vec![0.0; rhs.len()];
        let g = GmresOptions { restart: opts.gmres_restart, max_iter: opts.gmres_max_iter, tol };
        let rep = gmres(|v| self.matrix.matvec(v), |v| self.ilu.solve(v), rhs, &mut x, &g)?;
        if !rep.converged {
            log::debug!("GMRES stopped at {} iterations, residual {:e}", rep.iterations, rep.residual);
        }
        Ok((x, rep.iterations))
    }
}

fn reference(t: &EstimatorTriple, opts: &NewtonOptions) -> f64 {
    if opts.spatial_only {
        t.eta_s
    } else {
        t.eta_s.min(t.eta_t)
    }
}

fn converged(t: &EstimatorTriple, opts: &NewtonOptions) -> bool {
    if opts.spatial_only {
        t.eta_a <= opts.c_a * t.eta_s
    } else {
        algebraic_stop(t, opts.c_a)
    }
}

fn gmres_tolerance(t: &EstimatorTriple, r: f64, opts: &NewtonOptions) -> f64 {
    let target = opts.forcing * opts.c_a * reference(t, opts) / r;
    if target.is_finite() && target > 0.0 {
        target.clamp(1e-12, opts.gmres_tol)
    } else {
        opts.gmres_tol
    }
}

fn axpy(sol: &SlabSolution, lambda: f64, u: &[f64]) -> SlabSolution {
    let mut out = sol.clone();
    for (o, d) in out.coeffs.iter_mut().zip(u) {
        *o += lambda * d;
    }
    out
}

/// Newton-like iteration `w^k = w^{k-1} + lambda_k u^k` with
/// `A'(w^{k-1}, u) = -A(w^{k-1})`, stopped by the algebraic criterion.
pub fn newton_solve(op: &Operator, prev: &[Vec<f64>], guess: SlabSolution, opts: &NewtonOptions) -> Result<SlabStep> {
    let mut w = guess;
    let mut res = op.slab_residual_vec(&w, prev)?;
    let mut r = norm(&res);
    let floor = opts.roundoff * trace_scale(op, prev, &w);
    let mut triple = estimate(op, &w, prev)?;
    let mut report = NewtonReport { residual: r, ..Default::default() };
    if converged(&triple, opts) || r <= floor {
        report.converged = true;
        return Ok(SlabStep { sol: w, triple, report });
    }
    let mut lin = Linear::build(op, &w)?;
    report.matrix_builds = 1;
    let mut age = 0;
    let mut fresh = true;
    let mut failures = 0;
    let mut k = 0;
    while k < opts.max_iter {
        let tol = gmres_tolerance(&triple, r, opts);
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let (u, its) = lin.solve(&rhs, tol, opts)?;
        report.gmres_iterations += its;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = axpy(&w, lambda, &u);
            if let Ok(rt) = op.slab_residual_vec(&trial, prev) {
                let rn = norm(&rt);
                if rn < r {
                    accepted = Some((trial, rt, rn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, rn)) = accepted else {
            failures += 1;
            if failures >= 2 || fresh {
                if r <= 1e3 * floor {
                    report.converged = true;
                    break;
                }
                if failures >= 2 {
                    return Err(Error::NewtonStall { iterate: k, residual: r });
                }
            }
            lin = Linear::build(op, &w)?;
            report.matrix_builds += 1;
            fresh = true;
            age = 0;
            continue;
        };
        failures = 0;
        k += 1;
        let zeta = rn / r;
        w = trial;
        res = rt;
        r = rn;
        triple = estimate(op, &w, prev)?;
        report.trace.push(IterRecord {
            k,
            lambda,
            zeta,
            residual: r,
            gmres_iters: its,
            eta_a: triple.eta_a,
            eta_s: triple.eta_s,
            eta_t: triple.eta_t,
        });
        if converged(&triple, opts) || r <= floor {
            report.converged = true;
            break;
        }
        age += 1;
        if !opts.reuse_matrix || zeta > opts.reuse_ratio || age >= opts.refresh_every {
            lin = Linear::build(op, &w)?;
            report.matrix_builds += 1;
            fresh = true;
            age = 0;
        } else {
            fresh = false;
        }
    }
    report.iterations = k;
    report.residual = r;
    Ok(SlabStep { sol: w, triple, report })
}

/// `A'(Ext, w) = A'(Ext, Ext) - lambda A(Ext)`: a single linear solve, which
/// equals the first Newton step from `ext` with damping `lambda`.
pub fn semi_implicit_step(
    op: &Operator,
    prev: &[Vec<f64>],
    ext: SlabSolution,
    lambda: f64,
    opts: &NewtonOptions,
) -> Result<SlabStep> {
    let res = op.slab_residual_vec(&ext, prev)?;
    let r = norm(&res);
    let triple0 = estimate(op, &ext, prev)?;
    let lin = Linear::build(op, &ext)?;
    let rhs: Vec<f64> = res.iter().map(|x| -lambda * x).collect();
    let tol = gmres_tolerance(&triple0, r, opts);
    let (u, its) = lin.solve(&rhs, tol, opts)?;
    let sol = axpy(&ext, 1.0, &u);
    let rn = norm(&op.slab_residual_vec(&sol, prev)?);
    let triple = estimate(op, &sol, prev)?;
    let report = NewtonReport {
        iterations: 1,
        residual: rn,
        gmres_iterations: its,
        matrix_builds: 1,
        converged: true,
        trace: vec![IterRecord {
            k: 1,
            lambda,
            zeta: rn / r,
            residual: rn,
            gmres_iters: its,
            eta_a: triple.eta_a,
            eta_s: triple.eta_s,
            eta_t: triple.eta_t,
        }],
    };
    Ok(SlabStep { sol, triple, report })
}

/// Initial guess on `[t0, t0 + tau]`: the polynomial continuation of the
/// previous slab, transferred to `space` when the mesh changed.
pub fn extrapolate_guess(prev: &SlabSolution, space: Arc<DgSpace>, t0: f64, tau: f64) -> SlabSolution {
    let q = space.q;
    let times: Vec<f64> = (0..=q).map(|r| t0 + tau * (r as f64 + 1.0) / (q as f64 + 1.0)).collect();
    let fields: Vec<SpatialField> = times
        .iter()
        .map(|&t| {
            let f = prev.extrapolate_at(t);
            if Arc::ptr_eq(&f.space, &space) {
                f
            } else {
                f.transfer_to(space.clone())
            }
        })
        .collect();
    let samples: Vec<(f64, &SpatialField)> = times.iter().copied().zip(fields.iter()).collect();
    SlabSolution::from_time_samples(space, t0, tau, &samples)
}

/// Constant-in-time guess from a spatial field (transferred if needed).
pub fn constant_guess(trace: &SpatialField, space: Arc<DgSpace>, t0: f64, tau: f64) -> SlabSolution {
    let f = if Arc::ptr_eq(&trace.space, &space) { trace.clone() } else { trace.transfer_to(space) };
    SlabSolution::constant(&f, t0, tau)
}

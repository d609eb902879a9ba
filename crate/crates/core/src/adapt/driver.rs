//! The space-time adaptive algorithm: slab solves, time-step control,
//! interpolation-error check and remeshing between slabs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metric::{build_metric, MetricOptions};
use super::reconstruct::{evaluation_times, projection_error, quantity_value, reconstruct_function, slab_interpolation_error, ReconstructedField};
use crate::bench::CaseSpec;
use crate::dgcore::{DgSpace, FarField, Operator, Problem, SlabSolution, SpatialField};
use crate::error::{Error, Result};
use crate::estimators::{cfl_number, propose_timestep, StepBounds};
use crate::mesh::{adapt_to_metric, RemeshOptions, TriMesh};
use crate::physics::{BackgroundState, Vec4};
use crate::solver::{constant_guess, extrapolate_guess, newton_solve, semi_implicit_step, IterRecord, NewtonOptions, SlabStep, SolveMode};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOptions {
    pub newton: NewtonOptions,
    /// Interior penalty constant.
    pub c_sigma: f64,
    /// Damping of the single semi-implicit solve.
    pub semi_lambda: f64,
    pub tau_min: f64,
    pub max_steps: usize,
    /// Remeshes of one step before giving up.
    pub max_remesh: usize,
    pub metric: MetricOptions,
    pub remesh_sweeps: usize,
    /// Steady runs: adaptation level cap.
    pub max_levels: usize,
    /// Steady runs: pseudo-time steps per level.
    pub steps_per_level: usize,
    /// Steady runs: relative change per second below which the flow counts as settled.
    pub steady_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            newton: NewtonOptions::default(),
            c_sigma: 20.0,
            semi_lambda: 1.0,
            tau_min: 1e-6,
            max_steps: 100_000,
            max_remesh: 10,
            metric: MetricOptions::default(),
            remesh_sweeps: 30,
            max_levels: 25,
            steps_per_level: 40,
            steady_tol: 1e-6,
        }
    }
}

/// One accepted time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub m: usize,
    pub t: f64,
    pub tau: f64,
    pub n_cells: usize,
    pub dof: usize,
    pub newton_iterations: usize,
    pub gmres_iterations: usize,
    pub gmres_total: usize,
    pub eta_a: f64,
    pub eta_s: f64,
    pub eta_t: f64,
    /// Interpolation error of the accepted slab (0 without adaptation).
    pub eta_interp: f64,
    pub rejected: usize,
    pub remeshes: usize,
    pub cfl: f64,
    pub mass: f64,
    pub energy: f64,
}

/// One Newton iterate of an accepted step, for the solver log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterLine {
    pub m: usize,
    pub t: f64,
    pub tau: f64,
    pub iter: IterRecord,
}

/// One adaptation event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptRecord {
    pub level: usize,
    pub m: usize,
    pub n_cells: usize,
    pub dof: usize,
    pub eta_interp: f64,
    pub p_min: usize,
    pub p_max: usize,
}

/// Resumable state between accepted steps.
#[derive(Clone, Debug)]
pub struct RunState {
    pub m: usize,
    pub t: f64,
    pub tau: f64,
    pub trace: SpatialField,
    pub slab: Option<SlabSolution>,
    pub gmres_total: usize,
    pub level: usize,
    pub mass0: f64,
    pub energy0: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunLog {
    pub steps: Vec<StepRecord>,
    pub iterations: Vec<IterLine>,
    pub adaptations: Vec<AdaptRecord>,
}

/// `N_h = (q + 1) sum_K (p_K + 1)(p_K + 2) / 2`.
pub fn system_dof(mesh: &TriMesh, q: usize) -> usize {
    (q + 1) * mesh.total_dof_per_equation()
}

fn degree_span(mesh: &TriMesh) -> (usize, usize) {
    (mesh.degrees.iter().copied().min().unwrap_or(0), mesh.degrees.iter().copied().max().unwrap_or(0))
}

pub struct Driver {
    pub case: CaseSpec,
    pub opts: RunOptions,
    pub bg: BackgroundState,
    pub problem: Problem,
    pub state: RunState,
    pub log: RunLog,
}

impl Driver {
    pub fn new(case: CaseSpec, opts: RunOptions) -> Result<Self> {
        case.validate()?;
        let mesh = case.mesh()?;
        let space = Arc::new(DgSpace::new(mesh, case.q)?);
        let init = case.initial_state()?;
        let mut trace = SpatialField::project(space, |x| init(x).0);
        if case.tol.is_finite() && !case.steady {
            trace = initial_mesh(&case, &opts, trace, |x| init(x).0)?;
        }
        Self::with_trace(case, opts, trace)
    }

    /// Start from a given initial field (its space fixes the initial mesh).
    pub fn with_trace(case: CaseSpec, opts: RunOptions, trace: SpatialField) -> Result<Self> {
        let integral = trace.integral();
        let state = RunState {
            m: 0,
            t: 0.0,
            tau: case.tau0,
            trace,
            slab: None,
            gmres_total: 0,
            level: 0,
            mass0: integral[0],
            energy0: integral[3],
        };
        Self::resume(case, opts, state)
    }

    pub fn resume(case: CaseSpec, opts: RunOptions, state: RunState) -> Result<Self> {
        let bg = case.background_state()?;
        let mut problem = Problem::new(case.constants());
        problem.flux = case.flux;
        problem.c_sigma = opts.c_sigma;
        let far: FarField = Arc::new(move |x| bg.state(x).0);
        problem = problem.with_far_field(far);
        Ok(Driver { case, opts, bg, problem, state, log: RunLog::default() })
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.case.t_end * (1.0 - 1e-12)
    }

    fn bounds(&self) -> StepBounds {
        StepBounds { tau_min: self.opts.tau_min, tau_max: self.case.tau_max }
    }

    fn solve(&self, op: &Operator, prev: &[Vec<f64>], tau: f64) -> Result<SlabStep> {
        let space = op.space.clone();
        let t = self.state.t;
        let guess = match &self.state.slab {
            Some(s) => extrapolate_guess(s, space, t, tau),
            None => constant_guess(&self.state.trace, space, t, tau),
        };
        match self.case.mode {
            SolveMode::Implicit => newton_solve(op, prev, guess, &self.opts.newton),
            SolveMode::SemiImplicit => semi_implicit_step(op, prev, guess, self.opts.semi_lambda, &self.opts.newton),
        }
    }

    /// Solve on `space`, shrinking the step until the temporal estimator is
    /// balanced against the spatial one.
    fn balanced_solve(&self, space: &Arc<DgSpace>, tau: &mut f64, rejected: &mut usize) -> Result<SlabStep> {
        let op = Operator::new(space.clone(), self.problem.clone());
        let prev = self.state.trace.moments_on(space, 2);
        loop {
            match self.solve(&op, &prev, *tau) {
                Ok(st) => {
                    if self.case.steady || st.triple.eta_t <= self.case.c_t * st.triple.eta_s {
                        return Ok(st);
                    }
                    *tau = propose_timestep(&st.triple, *tau, self.case.c_t, self.case.q, self.bounds())?;
                }
                Err(e @ (Error::NewtonStall { .. } | Error::NonPhysicalState(_) | Error::SingularBlock(_))) => {
                    log::debug!("step at t = {} with tau = {} failed: {e}", self.state.t, *tau);
                    *tau *= 0.5;
                    if *tau < self.opts.tau_min {
                        return Err(Error::TimestepUnderflow { tau: *tau, tau_min: self.opts.tau_min });
                    }
                }
                Err(e) => return Err(e),
            }
            *rejected += 1;
        }
    }

    fn remesh(&self, space: &DgSpace, st: &SlabStep, interp: &super::reconstruct::SlabInterpolation) -> Result<Arc<DgSpace>> {
        remesh_space(&self.case, &self.opts, space, &interp.worst, &interp.per_cell, interp.eta, st.sol.t0)
    }

    /// Advance one accepted step.
    pub fn step(&mut self) -> Result<StepRecord> {
        if self.case.steady {
            return self.steady_step();
        }
        let remaining = self.case.t_end - self.state.t;
        let mut tau = self.state.tau.min(remaining);
        if remaining - tau < 1e-9 * self.case.t_end {
            tau = remaining;
        }
        let mut space = self.state.trace.space.clone();
        let mut rejected = 0;
        let mut remeshes = 0;
        let c = self.case.constants();
        let (st, eta_interp) = loop {
            let st = self.balanced_solve(&space, &mut tau, &mut rejected)?;
            if !self.case.tol.is_finite() {
                break (st, 0.0);
            }
            let interp = slab_interpolation_error(&st.sol, self.case.quantity, &self.bg, &c, &evaluation_times(&st.sol))?;
            if interp.eta <= self.case.tol {
                break (st, interp.eta);
            }
            remeshes += 1;
            if remeshes > self.opts.max_remesh {
                return Err(Error::AdaptStall { step: self.state.m + 1, count: remeshes - 1 });
            }
            space = self.remesh(&space, &st, &interp)?;
            self.state.level += 1;
            self.log.adaptations.push(AdaptRecord {
                level: self.state.level,
                m: self.state.m + 1,
                n_cells: space.n_cells(),
                dof: system_dof(&space.mesh, self.case.q),
                eta_interp: interp.eta,
                p_min: degree_span(&space.mesh).0,
                p_max: degree_span(&space.mesh).1,
            });
            tau *= 0.5;
        };
        let next = propose_timestep(&st.triple, tau, self.case.c_t, self.case.q, self.bounds())?;
        Ok(self.accept(st, tau, next, eta_interp, rejected, remeshes)?)
    }

    fn accept(&mut self, st: SlabStep, tau: f64, next: f64, eta_interp: f64, rejected: usize, remeshes: usize) -> Result<StepRecord> {
        let c = self.case.constants();
        let trace = st.sol.end_trace();
        let integral = trace.integral();
        let cfl = cfl_number(&trace, tau, &c)?;
        self.state.m += 1;
        self.state.t = st.sol.t0 + tau;
        if (self.state.t - self.case.t_end).abs() < 1e-9 * self.case.t_end {
            self.state.t = self.case.t_end;
        }
        self.state.tau = next;
        self.state.gmres_total += st.report.gmres_iterations;
        let space = &st.sol.space;
        let rec = StepRecord {
            m: self.state.m,
            t: self.state.t,
            tau,
            n_cells: space.n_cells(),
            dof: system_dof(&space.mesh, self.case.q),
            newton_iterations: st.report.iterations,
            gmres_iterations: st.report.gmres_iterations,
            gmres_total: self.state.gmres_total,
            eta_a: st.triple.eta_a,
            eta_s: st.triple.eta_s,
            eta_t: st.triple.eta_t,
            eta_interp,
            rejected,
            remeshes,
            cfl,
            mass: integral[0],
            energy: integral[3],
        };
        for it in &st.report.trace {
            self.log.iterations.push(IterLine { m: rec.m, t: st.sol.t0, tau, iter: *it });
        }
        log::info!(
            "m = {} t = {:.4} tau = {:.4e} cells = {} newton = {} gmres = {} etaA/S/T = {:.3e}/{:.3e}/{:.3e}",
            rec.m,
            rec.t,
            tau,
            rec.n_cells,
            rec.newton_iterations,
            rec.gmres_iterations,
            rec.eta_a,
            rec.eta_s,
            rec.eta_t
        );
        self.log.steps.push(rec.clone());
        self.state.trace = trace;
        self.state.slab = Some(st.sol);
        Ok(rec)
    }

    /// Pseudo-time step of the steady variant: no repetition, the
    /// interpolation error is checked at the end of each level.
    fn steady_step(&mut self) -> Result<StepRecord> {
        let space = self.state.trace.space.clone();
        let mut tau = self.state.tau;
        let mut rejected = 0;
        let st = self.balanced_solve(&space, &mut tau, &mut rejected)?;
        let before = self.state.trace.clone();
        let next = propose_timestep(&st.triple, tau, self.case.c_t, self.case.q, self.bounds())?;
        let mut rec = self.accept(st, tau, next, 0.0, rejected, 0)?;
        let change = relative_change(&before, &self.state.trace) / tau;
        let steps_here = self.log.steps.iter().rev().take_while(|s| s.n_cells == rec.n_cells && s.remeshes == 0).count();
        if change > self.opts.steady_tol && steps_here < self.opts.steps_per_level {
            return Ok(rec);
        }
        let c = self.case.constants();
        let sol = self.state.slab.as_ref().expect("accepted slab");
        let interp = slab_interpolation_error(sol, self.case.quantity, &self.bg, &c, &[sol.t0 + sol.tau])?;
        rec.eta_interp = interp.eta;
        if interp.eta <= self.case.tol && change <= self.opts.steady_tol {
            self.state.t = self.case.t_end;
            rec.t = self.state.t;
            return Ok(rec);
        }
        if interp.eta > self.case.tol {
            if self.state.level >= self.opts.max_levels {
                return Err(Error::NoConvergence(self.opts.max_levels));
            }
            let new_space = self.remesh(&space, &SlabStep { sol: sol.clone(), triple: Default::default(), report: Default::default() }, &interp)?;
            self.state.level += 1;
            self.log.adaptations.push(AdaptRecord {
                level: self.state.level,
                m: self.state.m,
                n_cells: new_space.n_cells(),
                dof: system_dof(&new_space.mesh, self.case.q),
                eta_interp: interp.eta,
                p_min: degree_span(&new_space.mesh).0,
                p_max: degree_span(&new_space.mesh).1,
            });
            self.state.trace = self.state.trace.transfer_to(new_space);
            self.state.slab = None;
            rec.remeshes = 1;
            if let Some(last) = self.log.steps.last_mut() {
                last.remeshes = 1;
            }
        }
        Ok(rec)
    }

    /// Run to the final time, calling `observer` after every accepted step.
    pub fn run(&mut self, mut observer: impl FnMut(&Driver, &StepRecord) -> Result<()>) -> Result<()> {
        let mut n = 0;
        while !self.finished() {
            if n >= self.opts.max_steps {
                return Err(Error::NoConvergence(self.state.level));
            }
            let rec = self.step()?;
            observer(self, &rec)?;
            n += 1;
        }
        Ok(())
    }
}

fn remesh_space(
    case: &CaseSpec,
    opts: &RunOptions,
    space: &DgSpace,
    recon: &ReconstructedField,
    per_cell: &[f64],
    eta: f64,
    t: f64,
) -> Result<Arc<DgSpace>> {
    let field = build_metric(recon, per_cell, case.tol, space, &opts.metric);
    let ro = RemeshOptions {
        max_sweeps: opts.remesh_sweeps,
        degree_range: opts.metric.degree_range,
        max_anisotropy: opts.metric.max_anisotropy,
        h_min: opts.metric.h_min,
        ..RemeshOptions::default()
    };
    let (mesh, report) = adapt_to_metric(&space.mesh, &field, &ro)?;
    log::info!(
        "t = {t:.3}: remeshed {} -> {} cells, p {:?}, in {} sweeps (interpolation error {eta:e})",
        space.n_cells(),
        mesh.n_cells(),
        degree_span(&mesh),
        report.sweeps,
    );
    Ok(Arc::new(DgSpace::new(mesh, case.q)?))
}

/// The initial hp-mesh: adapt the case mesh to the initial condition until
/// its projection error meets TOL and the cell count settles (at most
/// `max_remesh` passes). The error is measured against the exact initial
/// quantity, which a reconstruction from a coarse field could not see.
fn initial_mesh(case: &CaseSpec, opts: &RunOptions, mut field: SpatialField, init: impl Fn([f64; 2]) -> Vec4 + Sync) -> Result<SpatialField> {
    let bg = case.background_state()?;
    let c = case.constants();
    let q = |x: [f64; 2]| quantity_value(case.quantity, &init(x), x, &bg, &c).unwrap_or(f64::NAN);
    let mut last = usize::MAX;
    for pass in 0..opts.max_remesh {
        let space = field.space.clone();
        let (eta, per_cell) = projection_error(&space, q);
        let n = space.n_cells();
        let settled = (n as f64 - last as f64).abs() <= 0.05 * last as f64;
        if eta <= case.tol && (pass > 0 && settled || eta >= 0.25 * case.tol) {
            break;
        }
        last = n;
        let recon = reconstruct_function(&space, q, case.quantity);
        let next = remesh_space(case, opts, &space, &recon, &per_cell, eta, 0.0)?;
        field = SpatialField::project(next, &init);
    }
    Ok(field)
}

fn relative_change(a: &SpatialField, b: &SpatialField) -> f64 {
    if !Arc::ptr_eq(&a.space, &b.space) {
        return f64::INFINITY;
    }
    let d: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y) * (x - y)).sum();
    let n: f64 = a.coeffs.iter().map(|x| x * x).sum();
    (d / n).sqrt()
}

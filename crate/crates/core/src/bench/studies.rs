//! Parameter studies built on the driver.

use std::sync::Arc;
use std::time::Instant;

use super::diagnostics::{theta_perturbation_range, RunSummary};
use super::make_case;
use crate::adapt::{Driver, RunOptions, StepRecord};
use crate::dgcore::{DgSpace, FarField, Operator, Problem, SlabSolution, SpatialField};
use crate::error::Result;
use crate::io::RunConfig;
use crate::solver::{constant_guess, extrapolate_guess, newton_solve, SolveMode};

/// One row of the hydrostatic balance table.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceRow {
    pub p: usize,
    pub n_cells: usize,
    /// `sum_K (p_K + 1)(p_K + 2) / 2`.
    pub dof: usize,
    pub min: f64,
    pub max: f64,
    pub delta: f64,
}

/// Atmosphere at rest on the hydrostatic preset, fixed steps of `tau` up to
/// `t_end`; records the spread of the relative theta perturbation.
pub fn balance_table(degrees: &[usize], t_end: f64, tau: f64) -> Result<Vec<BalanceRow>> {
    let mut rows = Vec::new();
    for &p in degrees {
        let mut case = make_case("hydrostatic_rest")?;
        case.p = p;
        let space = Arc::new(DgSpace::new(case.mesh()?, case.q)?);
        let c = case.constants();
        let bg = case.background_state()?;
        let far: FarField = Arc::new(move |x| bg.state(x).0);
        let mut problem = Problem::new(c).with_far_field(far);
        problem.flux = case.flux;
        let op = Operator::new(space.clone(), problem);
        let opts = RunOptions::default().newton;
        let mut u = SpatialField::project(space.clone(), |x| bg.state(x).0);
        let mut slab: Option<SlabSolution> = None;
        let n = (t_end / tau).round() as usize;
        for m in 0..n {
            let t = m as f64 * tau;
            let prev = u.moments_on(&space, 2);
            let guess = match &slab {
                Some(s) => extrapolate_guess(s, space.clone(), t, tau),
                None => constant_guess(&u, space.clone(), t, tau),
            };
            let st = newton_solve(&op, &prev, guess, &opts)?;
            u = st.sol.end_trace();
            slab = Some(st.sol);
        }
        let (min, max) = theta_perturbation_range(&u, &bg, &c)?;
        rows.push(BalanceRow { p, n_cells: space.n_cells(), dof: space.mesh.total_dof_per_equation(), min, max, delta: max - min });
    }
    Ok(rows)
}

/// Run a configuration to its final time.
pub fn run_config(cfg: &RunConfig, mut observer: impl FnMut(&Driver, &StepRecord) -> Result<()>) -> Result<(Driver, RunSummary)> {
    let start = Instant::now();
    let mut d = Driver::new(cfg.case.clone(), cfg.run.clone())?;
    d.run(|d, r| observer(d, r))?;
    let s = RunSummary::of(&d, start.elapsed().as_secs_f64());
    Ok((d, s))
}

/// The fully implicit run as configured and its semi-implicit twin
/// with `c_T = 0.1`.
pub fn implicit_vs_semi(cfg: &RunConfig) -> Result<((Driver, RunSummary), (Driver, RunSummary))> {
    let mut imp = cfg.clone();
    imp.case.mode = SolveMode::Implicit;
    let mut semi = cfg.clone();
    semi.case.mode = SolveMode::SemiImplicit;
    semi.case.c_t = 0.1;
    Ok((run_config(&imp, |_, _| Ok(()))?, run_config(&semi, |_, _| Ok(()))?))
}

/// Fixed-mesh run and adapted run of the same case.
pub fn conservation(cfg: &RunConfig, tol: f64) -> Result<((Driver, RunSummary), (Driver, RunSummary))> {
    let mut fixed = cfg.clone();
    fixed.case.tol = f64::INFINITY;
    let mut adapted = cfg.clone();
    adapted.case.tol = tol;
    Ok((run_config(&fixed, |_, _| Ok(()))?, run_config(&adapted, |_, _| Ok(()))?))
}

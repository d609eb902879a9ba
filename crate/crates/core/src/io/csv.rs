//! CSV logs. Floats are written in shortest round-trip form.

use std::fmt::Write as _;

use crate::adapt::{AdaptRecord, IterLine, StepRecord};

pub const STEP_HEADER: &str = "m,t,tau,cells,dof,newton,gmres,gmres_total,eta_A,eta_S,eta_T,eta_interp,rejected,remeshes,cfl,mass,energy";
pub const SOLVER_HEADER: &str = "m,t,tau,k,lambda,zeta,gmres,residual,eta_A,eta_S,eta_T";
pub const ADAPT_HEADER: &str = "level,m,cells,dof,eta_interp,p_min,p_max";

pub fn step_line(r: &StepRecord) -> String {
    format!(
        "{},{:?},{:?},{},{},{},{},{},{:?},{:?},{:?},{:?},{},{},{:?},{:?},{:?}",
        r.m,
        r.t,
        r.tau,
        r.n_cells,
        r.dof,
        r.newton_iterations,
        r.gmres_iterations,
        r.gmres_total,
        r.eta_a,
        r.eta_s,
        r.eta_t,
        r.eta_interp,
        r.rejected,
        r.remeshes,
        r.cfl,
        r.mass,
        r.energy
    )
}

pub fn solver_line(l: &IterLine) -> String {
    let i = &l.iter;
    format!(
        "{},{:?},{:?},{},{:?},{:?},{},{:?},{:?},{:?},{:?}",
        l.m, l.t, l.tau, i.k, i.lambda, i.zeta, i.gmres_iters, i.residual, i.eta_a, i.eta_s, i.eta_t
    )
}

pub fn adapt_line(a: &AdaptRecord) -> String {
    format!("{},{},{},{},{:?},{},{}", a.level, a.m, a.n_cells, a.dof, a.eta_interp, a.p_min, a.p_max)
}

/// Whole table with header.
pub fn table<T>(header: &str, rows: &[T], line: impl Fn(&T) -> String) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", line(r));
    }
    s
}

//! Scalar diagnostics and line extraction.

use crate::adapt::reconstruct::quantity_value;
use crate::adapt::Driver;
use crate::bench::Quantity;
use crate::dgcore::SpatialField;
use crate::error::Result;
use crate::physics::{potential_temperature, BackgroundState, PhysicalConstants};

/// Extremes of the relative perturbation `(theta - theta_bar) / theta_bar`
/// over all volume quadrature points.
pub fn theta_perturbation_range(field: &SpatialField, bg: &BackgroundState, c: &PhysicalConstants) -> Result<(f64, f64)> {
    let space = &field.space;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..space.n_cells() {
        for (w, x) in field.values_at_quadrature(k).iter().zip(&space.cells[k].qx) {
            let tb = bg.theta_bar(x[1]);
            let d = (potential_temperature(w, c)? - tb) / tb;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    Ok((lo, hi))
}

/// `n` equidistant samples on the segment `a -> b` as `(x1, x2, value)`.
/// Points outside the mesh are skipped.
pub fn line_profile(
    field: &SpatialField,
    a: [f64; 2],
    b: [f64; 2],
    n: usize,
    q: Quantity,
    bg: &BackgroundState,
    c: &PhysicalConstants,
) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let Ok(w) = field.eval(x) else { continue };
        out.push([x[0], x[1], quantity_value(q, &w, x, bg, c)?]);
    }
    Ok(out)
}

/// Summary of a finished (or interrupted) run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub gmres_total: usize,
    pub final_tau: f64,
    pub final_cells: usize,
    pub max_cells: usize,
    /// `(M(T) - M(0)) / M(0)`.
    pub delta_mass: f64,
    /// Relative change of the total energy (gravitational energy excluded).
    pub delta_energy: f64,
    pub max_eta_interp: f64,
    /// Largest `eta_A / min(eta_S, eta_T)` over accepted steps.
    pub max_algebraic_ratio: f64,
    pub max_cfl: f64,
    pub seconds: f64,
}

impl RunSummary {
    pub fn of(d: &Driver, seconds: f64) -> Self {
        let steps = &d.log.steps;
        let trace = d.state.trace.integral();
        RunSummary {
            steps: steps.len(),
            gmres_total: d.state.gmres_total,
            // the last step is cut to land on T
            final_tau: if steps.is_empty() { d.state.tau } else { steps.iter().rev().take(2).map(|r| r.tau).fold(0.0, f64::max) },
            final_cells: d.state.trace.space.n_cells(),
            max_cells: steps.iter().map(|r| r.n_cells).max().unwrap_or(0),
            delta_mass: (trace[0] - d.state.mass0) / d.state.mass0,
            delta_energy: (trace[3] - d.state.energy0) / d.state.energy0,
            max_eta_interp: steps.iter().map(|r| r.eta_interp).fold(0.0, f64::max),
            max_algebraic_ratio: steps.iter().map(|r| r.eta_a / r.eta_s.min(r.eta_t)).fold(0.0, f64::max),
            max_cfl: steps.iter().map(|r| r.cfl).fold(0.0, f64::max),
            seconds,
        }
    }
}

//! Target metric and degree map from the interpolation error.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reconstruct::ReconstructedField;
use crate::dgcore::DgSpace;
use crate::mesh::{Metric2, MetricField, MAX_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub max_anisotropy: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Bounds of the per-cell density factor applied in one adaptation.
    pub density_range: (f64, f64),
    /// Raise the degree when the top-order share of the reconstruction is below this.
    pub smooth_ratio: f64,
    /// Lower the degree when it is above this.
    pub rough_ratio: f64,
    pub degree_range: (usize, usize),
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            max_anisotropy: 50.0,
            h_min: 0.0,
            h_max: f64::INFINITY,
            density_range: (1.0 / 16.0, 16.0),
            smooth_ratio: 0.1,
            rough_ratio: 0.5,
            degree_range: (1, MAX_DEGREE),
        }
    }
}

/// Per-cell target before vertex averaging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellTarget {
    pub metric: Metric2,
    /// Factor applied to the element density `1/|K|`.
    pub density_factor: f64,
    pub degree: usize,
}

/// `(e_K sqrt(#T_h) / TOL)^(2 / (p_K + 1))`.
pub fn density_factor(e_k: f64, n_cells: usize, tol: f64, p: usize) -> f64 {
    (e_k * (n_cells as f64).sqrt() / tol).powf(2.0 / (p as f64 + 1.0))
}

/// Orientation from the tensor `H = int |d^(p+1) q / d phi^(p+1)| phi phi^T`
/// over 32 directions; returns the angle of the dominant eigenvector and the
/// derivative magnitudes along the two eigenvectors.
pub fn anisotropy(poly: &super::reconstruct::LocalPoly) -> (f64, f64, f64) {
    let n = 32;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let th = 2.0 * PI * i as f64 / n as f64;
        let phi = [th.cos(), th.sin()];
        let d = poly.directional_derivative(phi);
        a += d * phi[0] * phi[0];
        b += d * phi[0] * phi[1];
        c += d * phi[1] * phi[1];
    }
    let (_, _, angle) = Metric2 { a, b, c }.eigen();
    let e1 = [angle.cos(), angle.sin()];
    let e2 = [-angle.sin(), angle.cos()];
    (angle, poly.directional_derivative(e1), poly.directional_derivative(e2))
}

/// Share of the top-order part in the variation of the reconstruction on `K`.
fn top_share(space: &DgSpace, k: usize, poly: &super::reconstruct::LocalPoly) -> f64 {
    let cell = &space.cells[k];
    let vals: Vec<f64> = cell.qx.iter().map(|&x| poly.eval(x)).collect();
    let mean: f64 = vals.iter().zip(&cell.qw).map(|(v, w)| v * w).sum::<f64>() / cell.area;
    let mut top = 0.0;
    let mut var = 0.0;
    for q in 0..cell.nq() {
        top += cell.qw[q] * poly.top_part(cell.qx[q]).powi(2);
        var += cell.qw[q] * (vals[q] - mean).powi(2);
    }
    if var <= 0.0 {
        0.0
    } else {
        (top / var).sqrt()
    }
}

fn dof(p: usize) -> f64 {
    ((p + 1) * (p + 2) / 2) as f64
}

pub fn cell_target(space: &DgSpace, k: usize, recon: &ReconstructedField, e_k: f64, tol: f64, opts: &MetricOptions) -> CellTarget {
    let n = space.n_cells();
    let cell = &space.cells[k];
    let p = cell.p;
    let poly = &recon.polys[k];
    let mut s = density_factor(e_k, n, tol, p);
    if !s.is_finite() || s <= 0.0 {
        s = opts.density_range.0;
    }
    // enrich smooth cells only where the error asks for refinement
    let share = top_share(space, k, poly);
    let degree = if share <= opts.smooth_ratio && s > 1.0 {
        p + 1
    } else if share >= opts.rough_ratio {
        p.saturating_sub(1)
    } else {
        p
    }
    .clamp(opts.degree_range.0, opts.degree_range.1);
    let s = s.clamp(opts.density_range.0, opts.density_range.1) * dof(p) / dof(degree);
    let area = cell.area / s;
    let (angle, d1, d2) = anisotropy(poly);
    let ratio = if !(d1 > 0.0 && d1.is_finite()) {
        1.0
    } else if d2 > 0.0 {
        (d1 / d2).powf(1.0 / (p as f64 + 1.0)).min(opts.max_anisotropy)
    } else {
        opts.max_anisotropy
    };
    // a unit equilateral triangle in the metric has area sqrt(3)/4 h1 h2
    let prod = 4.0 * area / 3f64.sqrt();
    let h1 = (prod / ratio).sqrt();
    let h2 = (prod * ratio).sqrt();
    let metric = Metric2::from_sizes(h1, h2, angle).bounded(opts.max_anisotropy, opts.h_min.max(1e-12), opts.h_max);
    CellTarget { metric, density_factor: s, degree }
}

/// Metric at the vertices (area-weighted log-Euclidean mean of the incident
/// cell targets) and the degree map on the current mesh.
pub fn build_metric(recon: &ReconstructedField, per_cell: &[f64], tol: f64, space: &DgSpace, opts: &MetricOptions) -> MetricField {
    let targets: Vec<CellTarget> =
        (0..space.n_cells()).into_par_iter().map(|k| cell_target(space, k, recon, per_cell[k], tol, opts)).collect();
    let mesh = &space.mesh;
    let mut incident: Vec<Vec<(f64, Metric2)>> = vec![Vec::new(); mesh.vertices.len()];
    for (k, c) in mesh.cells.iter().enumerate() {
        for &v in c {
            incident[v].push((space.cells[k].area, targets[k].metric));
        }
    }
    let vertex_metric = incident.iter().map(|items| Metric2::log_mean(items)).collect();
    let degrees = targets.iter().map(|t| t.degree).collect();
    MetricField::new(mesh.clone(), vertex_metric, degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapt::reconstruct::{reconstruct_function, LocalPoly};
    use crate::bench::Quantity;
    use crate::mesh::{rectangle, RectangleSpec};

    #[test]
    fn equidistributed_error_keeps_density() {
        assert!((density_factor(0.1, 100, 1.0, 2) - 1.0).abs() < 1e-14);
        // e = 2^((p+1)/2) target with p = 1 doubles the density
        let target = 1.0 / 10.0;
        let s = density_factor(2f64.powf(1.0) * target, 100, 1.0, 1);
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_profile_aligns_with_x1() {
        let spec = RectangleSpec::with_cell_count([0.0, 4.0], [0.0, 1.0], 60).with_degree(1);
        let space = DgSpace::new(rectangle(&spec).unwrap(), 0).unwrap();
        let recon = reconstruct_function(&space, |x| (2.0 * x[0]).sin(), Quantity::Density);
        let opts = MetricOptions::default();
        for k in 0..space.n_cells() {
            let neighbours = space.mesh.neighbors(k).len();
            if neighbours < 3 {
                continue;
            }
            let t = cell_target(&space, k, &recon, 1e-3, 1e-2, &opts);
            let (l1, l2, angle) = t.metric.eigen();
            assert!(l1 > l2);
            let dev = angle.rem_euclid(PI).min(PI - angle.rem_euclid(PI));
            assert!(dev < 5f64.to_radians(), "cell {k}: angle {}", angle.to_degrees());
        }
    }

    #[test]
    fn hessian_recovered_for_p1() {
        // q = 3 X^2 + Y^2 on unit scale: second derivatives 6 and 2
        let poly = LocalPoly { center: [0.0, 0.0], scale: 1.0, degree: 2, coef: vec![0.0, 0.0, 0.0, 3.0, 0.0, 1.0] };
        let (angle, d1, d2) = anisotropy(&poly);
        assert!(angle.sin().abs() < 1e-12);
        assert!((d1 - 6.0).abs() < 1e-12 && (d2 - 2.0).abs() < 1e-12);
    }
}

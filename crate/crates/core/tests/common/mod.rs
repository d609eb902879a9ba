//! Checks shared by the property tests and the acceptance report.
#![allow(dead_code)]

pub mod slab;

use atmodg::dgcore::flux::split_jacobian;
use atmodg::dgcore::FluxKind;
use atmodg::mesh::{adapt_to_metric, rectangle, Metric2, MetricField, RectangleSpec, RemeshOptions, TriMesh};
use atmodg::physics::*;
use rand::Rng;

pub fn constants(mu: f64) -> PhysicalConstants {
    PhysicalConstants { mu, ..PhysicalConstants::default() }
}

pub fn state(rho: f64, v1: f64, v2: f64, p: f64) -> Vec4 {
    conserved_from_primitive(rho, v1, v2, p, &constants(0.0)).0
}

pub fn random_state(rng: &mut impl Rng) -> Vec4 {
    state(rng.gen_range(0.1..2.0), rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0), rng.gen_range(1e3..2e5))
}

pub fn random_gradient(rng: &mut impl Rng) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    let scale = [1e-3, 1.0, 1.0, 1e2];
    for (c, row) in g.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v = scale[c] * rng.gen_range(-1.0..1.0);
        }
    }
    g
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `F_s(w) = A_s(w) w` for both directions.
pub fn flux_homogeneity(w: &Vec4) -> Result<(), String> {
    let c = constants(0.0);
    let f = convective_flux(w, &c).map_err(|e| e.to_string())?;
    let a = flux_jacobians(w, &c).map_err(|e| e.to_string())?;
    for s in 0..2 {
        let d = (a[s] * w - f[s]).norm();
        if d > 1e-12 * f[s].norm() {
            return Err(format!("direction {s}: |A w - F| = {d:e}"));
        }
    }
    Ok(())
}

/// Analytic Jacobians against central differences of the flux.
pub fn jacobian_fd(w: &Vec4) -> Result<(), String> {
    let c = constants(0.0);
    let a = flux_jacobians(w, &c).map_err(|e| e.to_string())?;
    for j in 0..4 {
        let h = 1e-6 * w[j].abs().max(1e-3 * w[0]);
        let mut wp = *w;
        let mut wm = *w;
        wp[j] += h;
        wm[j] -= h;
        let fp = convective_flux(&wp, &c).map_err(|e| e.to_string())?;
        let fm = convective_flux(&wm, &c).map_err(|e| e.to_string())?;
        for s in 0..2 {
            let col = (fp[s] - fm[s]) / (2.0 * h);
            let exact = a[s].column(j).into_owned();
            let err = (col - exact).norm();
            let scale = a[s].norm() * (1.0 + w.norm() / w[0]);
            if err > 1e-6 * scale {
                return Err(format!("column {j} direction {s}: error {err:e}, scale {scale:e}"));
            }
        }
    }
    Ok(())
}

/// Direct viscous flux against the `K_sk grad w` form.
pub fn viscous_dual_path(w: &Vec4, grad: &[[f64; 2]; 4]) -> Result<(), String> {
    let c = constants(0.5);
    let a = viscous_flux(w, grad, &c).map_err(|e| e.to_string())?;
    let b = viscous_flux_via_matrices(w, grad, &c).map_err(|e| e.to_string())?;
    for s in 0..2 {
        let d = (a[s] - b[s]).norm();
        if d > 1e-10 * (1.0 + a[s].norm()) {
            return Err(format!("direction {s}: difference {d:e}"));
        }
    }
    Ok(())
}

/// `H(w, w, n) = F(w) . n` for both splittings.
pub fn numerical_flux_consistency(w: &Vec4, n: [f64; 2]) -> Result<(), String> {
    let c = constants(0.0);
    let f = convective_flux(w, &c).map_err(|e| e.to_string())?;
    let fn_ = f[0] * n[0] + f[1] * n[1];
    for kind in [FluxKind::Vijayasundaram, FluxKind::LaxFriedrichs] {
        let (pp, pm) = split_jacobian(w, n, kind, &c).map_err(|e| e.to_string())?;
        let h = pp * w + pm * w;
        let d = (h - fn_).norm();
        if d > 1e-9 * fn_.norm() {
            return Err(format!("{kind:?}: |H(w, w) - F.n| = {d:e}"));
        }
    }
    Ok(())
}

/// Star pressure of the Sod problem.
pub fn sod_star_pressure() -> f64 {
    let l = RiemannState1d { rho: 1.0, u: 0.0, p: 1.0 };
    let r = RiemannState1d { rho: 0.125, u: 0.0, p: 0.1 };
    riemann_star(&l, &r, 1.4).map(|s| s.p).unwrap_or(f64::NAN)
}

pub fn unit_normal(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

/// Smoothly varying anisotropic metric on the unit square.
pub fn random_metric_field(mesh: &TriMesh, rng: &mut impl Rng) -> MetricField {
    let h0 = rng.gen_range(0.06..0.2);
    let ratio = rng.gen_range(1.0..6.0);
    let angle0 = rng.gen_range(0.0..std::f64::consts::PI);
    let amp = rng.gen_range(0.0..0.5);
    let kx = rng.gen_range(0.5..3.0);
    let ky = rng.gen_range(0.5..3.0);
    let metric = mesh
        .vertices
        .iter()
        .map(|x| {
            let s = 1.0 + amp * (kx * x[0]).sin() * (ky * x[1]).cos();
            let h1 = h0 * s;
            Metric2::from_sizes(h1, h1 / ratio, angle0 + 0.5 * amp * x[0])
        })
        .collect();
    MetricField::new(mesh.clone(), metric, vec![2; mesh.n_cells()])
}

pub fn unit_square(n_cells: usize) -> TriMesh {
    rectangle(&RectangleSpec::with_cell_count([0.0, 1.0], [0.0, 1.0], n_cells)).unwrap()
}

/// Conformity, orientation and area of an adapted mesh.
pub fn check_adapted(before: &TriMesh, after: &TriMesh) -> Result<(), String> {
    after.check_orientation().map_err(|e| e.to_string())?;
    TriMesh::new(after.vertices.clone(), after.cells.clone(), after.degrees.clone(), after.boundary.clone(), after.curve.clone())
        .map_err(|e| format!("rebuild failed: {e}"))?;
    let a0 = before.total_area();
    let a1 = after.total_area();
    if (a1 - a0).abs() > 1e-10 * a0 {
        return Err(format!("area changed from {a0} to {a1}"));
    }
    let every_edge_counted = 3 * after.n_cells() == 2 * after.n_interior_faces() + after.n_boundary_faces();
    if !every_edge_counted {
        return Err("face count does not match the cells".into());
    }
    Ok(())
}

pub fn random_adapt(rng: &mut impl Rng) -> Result<(), String> {
    let n = rng.gen_range(20..120);
    let mesh = unit_square(n);
    let field = random_metric_field(&mesh, rng);
    let (out, _) = adapt_to_metric(&mesh, &field, &RemeshOptions::default()).map_err(|e| e.to_string())?;
    check_adapted(&mesh, &out)
}

/// Median aspect ratio, measured through the metric each triangle implies.
pub fn median_aspect(mesh: &TriMesh) -> f64 {
    let mut a: Vec<f64> = (0..mesh.n_cells())
        .map(|k| {
            let (l1, l2, _) = Metric2::implied_by_triangle(&mesh.cell_vertices(k)).eigen();
            (l1 / l2).sqrt()
        })
        .collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a[a.len() / 2]
}

/// Adapt the unit square to a uniform metric with aspect `target`.
pub fn aspect_after_adapt(target: f64, angle: f64) -> Result<f64, String> {
    let mesh = unit_square(100);
    let field = MetricField::uniform(&mesh, Metric2::from_sizes(0.02 * target, 0.02, angle));
    let opts = RemeshOptions { max_anisotropy: 100.0, ..RemeshOptions::default() };
    let (out, _) = adapt_to_metric(&mesh, &field, &opts).map_err(|e| e.to_string())?;
    check_adapted(&mesh, &out)?;
    Ok(median_aspect(&out))
}

pub fn within_factor(x: f64, target: f64, f: f64) -> bool {
    x >= target / f && x <= target * f
}

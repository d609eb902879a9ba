//! Least-squares reconstruction of degree `p_K + 1` and the interpolation
//! error it implies.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bench::Quantity;
use crate::dgcore::{field::eval_point, DgSpace, SlabSolution, SpatialField};
use crate::error::Result;
use crate::physics::{potential_temperature, BackgroundState, PhysicalConstants, Vec4};

/// Polynomial in the scaled monomials `X^(d-j) Y^j`, `X = (x - center) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPoly {
    pub center: [f64; 2],
    pub scale: f64,
    pub degree: usize,
    pub coef: Vec<f64>,
}

pub fn n_monomials(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

fn monomials(degree: usize, x: f64, y: f64, out: &mut Vec<f64>) {
    out.clear();
    for d in 0..=degree {
        for j in 0..=d {
            out.push(x.powi((d - j) as i32) * y.powi(j as i32));
        }
    }
}

impl LocalPoly {
    fn local(&self, x: [f64; 2]) -> (f64, f64) {
        ((x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let (u, v) = self.local(x);
        let mut m = Vec::with_capacity(self.coef.len());
        monomials(self.degree, u, v, &mut m);
        m.iter().zip(&self.coef).map(|(a, b)| a * b).sum()
    }

    /// Value of the homogeneous top-degree part at `x`.
    pub fn top_part(&self, x: [f64; 2]) -> f64 {
        let (u, v) = self.local(x);
        let d = self.degree;
        let o = n_monomials(d) - (d + 1);
        (0..=d).map(|j| self.coef[o + j] * u.powi((d - j) as i32) * v.powi(j as i32)).sum()
    }

    /// `|d^n q / d phi^n|` for `n = degree` along the unit direction `phi`.
    pub fn directional_derivative(&self, phi: [f64; 2]) -> f64 {
        let d = self.degree;
        let o = n_monomials(d) - (d + 1);
        let fact: f64 = (1..=d).map(|i| i as f64).product();
        let h: f64 = (0..=d).map(|j| self.coef[o + j] * phi[0].powi((d - j) as i32) * phi[1].powi(j as i32)).sum();
        (fact * h / self.scale.powi(d as i32)).abs()
    }
}

/// Reconstruction of the adaptation quantity at one time.
#[derive(Clone, Debug)]
pub struct ReconstructedField {
    pub t: f64,
    pub quantity: Quantity,
    pub polys: Vec<LocalPoly>,
    /// Cells whose patch stayed rank deficient; they keep the local polynomial.
    pub flagged: Vec<usize>,
}

/// Pointwise value of the adaptation quantity.
pub fn quantity_value(quantity: Quantity, w: &Vec4, x: [f64; 2], bg: &BackgroundState, c: &PhysicalConstants) -> Result<f64> {
    Ok(match quantity {
        Quantity::Density => w[0],
        Quantity::ThetaPerturbation => potential_temperature(w, c)? - bg.theta_bar(x[1]),
    })
}

/// Neighbours of `k` with the translation that brings their points next to `k`.
fn shifted_neighbors(space: &DgSpace, k: usize) -> Vec<(usize, [f64; 2])> {
    let mesh = &space.mesh;
    let mut out = Vec::with_capacity(3);
    for &f in &mesh.cell_faces(k) {
        let face = &mesh.faces()[f];
        if let Some(r) = face.right {
            let (other, shift) = if face.left.0 == k {
                (r.0, [-face.shift[0], -face.shift[1]])
            } else {
                (face.left.0, face.shift)
            };
            if other != k {
                out.push((other, shift));
            }
        }
    }
    out
}

fn sample(field: &SpatialField, k: usize, quantity: Quantity, bg: &BackgroundState, c: &PhysicalConstants) -> Result<Vec<f64>> {
    let cell = &field.space.cells[k];
    let coef = field.cell_coeffs(k);
    (0..cell.nq())
        .map(|q| {
            let o = q * cell.nbe;
            let (w, _) = eval_point(coef, &cell.phi[o..], &cell.grad[o..], cell.nb);
            quantity_value(quantity, &w, cell.qx[q], bg, c)
        })
        .collect()
}

fn fit(space: &DgSpace, k: usize, patch: &[(usize, [f64; 2])], values: &[Vec<f64>], degree: usize) -> Option<LocalPoly> {
    let center = space.mesh.centroid(k);
    let scale = space.cells[k].diameter;
    let nm = n_monomials(degree);
    let rows: usize = patch.iter().map(|(c, _)| space.cells[*c].nq()).sum();
    if rows < nm {
        return None;
    }
    let mut a = DMatrix::zeros(rows, nm);
    let mut b = DVector::zeros(rows);
    let mut m = Vec::with_capacity(nm);
    let mut r = 0;
    for &(c, shift) in patch {
        let cell = &space.cells[c];
        for q in 0..cell.nq() {
            let x = [cell.qx[q][0] + shift[0], cell.qx[q][1] + shift[1]];
            let s = (cell.qw[q] / cell.area).sqrt();
            monomials(degree, (x[0] - center[0]) / scale, (x[1] - center[1]) / scale, &mut m);
            for j in 0..nm {
                a[(r, j)] = s * m[j];
            }
            b[r] = s * values[c][q];
            r += 1;
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return None;
    }
    let coef = svd.solve(&b, 0.0).ok()?;
    let mut poly = LocalPoly { center, scale, degree, coef: coef.as_slice().to_vec() };
    // match the cell mean of the underlying field
    let cell = &space.cells[k];
    let mut diff = 0.0;
    for q in 0..cell.nq() {
        diff += cell.qw[q] * (values[k][q] - poly.eval(cell.qx[q]));
    }
    poly.coef[0] += diff / cell.area;
    Some(poly)
}

/// Per cell, fit a polynomial of degree `p_K + 1` over the cell and its edge
/// neighbours (growing to the second ring when rank deficient).
pub fn reconstruct_field(field: &SpatialField, quantity: Quantity, bg: &BackgroundState, c: &PhysicalConstants, t: f64) -> Result<ReconstructedField> {
    let space = &field.space;
    let values: Vec<Vec<f64>> =
        (0..space.n_cells()).into_par_iter().map(|k| sample(field, k, quantity, bg, c)).collect::<Result<_>>()?;
    Ok(reconstruct_samples(space, &values, quantity, t))
}

/// Reconstruction from an arbitrary pointwise function sampled at the cell
/// quadrature points.
pub fn reconstruct_function(space: &DgSpace, f: impl Fn([f64; 2]) -> f64 + Sync, quantity: Quantity) -> ReconstructedField {
    let values: Vec<Vec<f64>> = space.cells.iter().map(|cell| cell.qx.iter().map(|&x| f(x)).collect()).collect();
    reconstruct_samples(space, &values, quantity, 0.0)
}

fn reconstruct_samples(space: &DgSpace, values: &[Vec<f64>], quantity: Quantity, t: f64) -> ReconstructedField {
    let fits: Vec<(LocalPoly, bool)> = (0..space.n_cells())
        .into_par_iter()
        .map(|k| {
            let degree = space.cells[k].p + 1;
            let mut patch = vec![(k, [0.0, 0.0])];
            patch.extend(shifted_neighbors(space, k));
            if let Some(p) = fit(space, k, &patch, values, degree) {
                return (p, false);
            }
            let ring: Vec<(usize, [f64; 2])> = patch.clone();
            for (n, s) in ring.into_iter().skip(1) {
                for (m, s2) in shifted_neighbors(space, n) {
                    if !patch.iter().any(|(c, _)| *c == m) {
                        patch.push((m, [s[0] + s2[0], s[1] + s2[1]]));
                    }
                }
            }
            if let Some(p) = fit(space, k, &patch, values, degree) {
                return (p, false);
            }
            let own = fit(space, k, &[(k, [0.0, 0.0])], values, space.cells[k].p).unwrap_or_else(|| LocalPoly {
                center: space.mesh.centroid(k),
                scale: space.cells[k].diameter,
                degree: 0,
                coef: vec![values[k].iter().sum::<f64>() / values[k].len() as f64],
            });
            let mut coef = own.coef.clone();
            coef.resize(n_monomials(degree), 0.0);
            (LocalPoly { degree, coef, ..own }, true)
        })
        .collect();
    let flagged: Vec<usize> = fits.iter().enumerate().filter(|(_, f)| f.1).map(|(k, _)| k).collect();
    if !flagged.is_empty() {
        log::warn!("reconstruction fell back to local polynomials on {} cells", flagged.len());
    }
    ReconstructedField { t, quantity, polys: fits.into_iter().map(|f| f.0).collect(), flagged }
}

/// Reconstruction of a slab solution at time `t`.
pub fn reconstruct(sol: &SlabSolution, quantity: Quantity, bg: &BackgroundState, c: &PhysicalConstants, t: f64) -> Result<ReconstructedField> {
    reconstruct_field(&sol.at_time(t)?, quantity, bg, c, t)
}

/// `||R q - Pi R q||_{L2(K)}` per cell and its global l2 sum, with `Pi` the
/// L2 projection onto polynomials of degree `p_K`.
pub fn interpolation_error(recon: &ReconstructedField, space: &DgSpace) -> (f64, Vec<f64>) {
    let per: Vec<f64> = (0..space.n_cells())
        .into_par_iter()
        .map(|k| {
            let cell = &space.cells[k];
            let poly = &recon.polys[k];
            let f: Vec<f64> = cell.qx.iter().map(|&x| poly.eval(x)).collect();
            let mut proj = vec![0.0; cell.nb];
            for q in 0..cell.nq() {
                for (i, pi) in proj.iter_mut().enumerate() {
                    *pi += cell.qw[q] * f[q] * cell.phi[q * cell.nbe + i];
                }
            }
            let mut e = 0.0;
            for q in 0..cell.nq() {
                let pq: f64 = (0..cell.nb).map(|i| proj[i] * cell.phi[q * cell.nbe + i]).sum();
                e += cell.qw[q] * (f[q] - pq).powi(2);
            }
            e.sqrt()
        })
        .collect();
    let global = per.iter().map(|e| e * e).sum::<f64>().sqrt();
    (global, per)
}

/// True projection error `||f - Pi f||_{L2(K)}` of a pointwise function,
/// integrated on `64` sub-triangles per cell so that features smaller than
/// the cell are seen.
pub fn projection_error(space: &DgSpace, f: impl Fn([f64; 2]) -> f64 + Sync) -> (f64, Vec<f64>) {
    let subs = crate::dgcore::field::sub_triangles(3);
    let per: Vec<f64> = (0..space.n_cells())
        .into_par_iter()
        .map(|k| {
            let cell = &space.cells[k];
            let rule = crate::dgcore::quadrature::TriangleRule::with_degree(2 * cell.p + 2);
            let mut pts = Vec::with_capacity(subs.len() * rule.len());
            for tri in &subs {
                let jac = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
                for (r, w) in rule.points.iter().zip(&rule.weights) {
                    let xi = [
                        tri[0][0] + r[0] * (tri[1][0] - tri[0][0]) + r[1] * (tri[2][0] - tri[0][0]),
                        tri[0][1] + r[0] * (tri[1][1] - tri[0][1]) + r[1] * (tri[2][1] - tri[0][1]),
                    ];
                    let (x, j) = space.mesh.map_with_jacobian(k, xi);
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    let (phi, _) = space.basis_at_ref(k, xi);
                    pts.push((w * jac * det, f(x), phi));
                }
            }
            let mut c = vec![0.0; cell.nb];
            for (w, v, phi) in &pts {
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci += w * v * phi[i];
                }
            }
            pts.iter().map(|(w, v, phi)| w * (v - (0..cell.nb).map(|i| c[i] * phi[i]).sum::<f64>()).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let global = per.iter().map(|e| e * e).sum::<f64>().sqrt();
    (global, per)
}

/// Interpolation error of a slab over the times `J_m`.
#[derive(Clone, Debug)]
pub struct SlabInterpolation {
    /// `max_t ||R q(t) - Pi R q(t)||`.
    pub eta: f64,
    /// Per-cell maxima over the times.
    pub per_cell: Vec<f64>,
    /// Reconstruction at the time attaining `eta`.
    pub worst: ReconstructedField,
}

/// Slab endpoints and the temporal quadrature nodes.
pub fn evaluation_times(sol: &SlabSolution) -> Vec<f64> {
    let rule = crate::dgcore::TimeRule::new(sol.space.q, sol.t0, sol.tau);
    let mut ts = vec![sol.t0];
    ts.extend(rule.nodes.iter().copied());
    ts.push(sol.t0 + sol.tau);
    ts
}

pub fn slab_interpolation_error(
    sol: &SlabSolution,
    quantity: Quantity,
    bg: &BackgroundState,
    c: &PhysicalConstants,
    times: &[f64],
) -> Result<SlabInterpolation> {
    let mut best: Option<SlabInterpolation> = None;
    let mut per_cell = vec![0.0f64; sol.space.n_cells()];
    for &t in times {
        let r = reconstruct(sol, quantity, bg, c, t)?;
        let (g, per) = interpolation_error(&r, &sol.space);
        for (a, b) in per_cell.iter_mut().zip(&per) {
            *a = a.max(*b);
        }
        if best.as_ref().map_or(true, |b| g > b.eta) {
            best = Some(SlabInterpolation { eta: g, per_cell: vec![], worst: r });
        }
    }
    let mut out = best.expect("at least one evaluation time");
    out.per_cell = per_cell;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{rectangle, RectangleSpec};
    use crate::physics::{hydrostatic_background, BackgroundKind};

    fn setup(p: usize) -> (Arc<DgSpace>, BackgroundState, PhysicalConstants) {
        let spec = RectangleSpec::with_cell_count([0.0, 2.0], [0.0, 1.0], 30).with_degree(p);
        let space = Arc::new(DgSpace::new(rectangle(&spec).unwrap(), 0).unwrap());
        let c = PhysicalConstants::default();
        let bg = hydrostatic_background(BackgroundKind::ConstantTheta { theta0: 300.0 }, [0.0, 0.0], &c).unwrap();
        (space, bg, c)
    }

    #[test]
    fn reproduces_enriched_polynomials() {
        let (space, _, _) = setup(2);
        let f = |x: [f64; 2]| 1.0 + x[0] * x[0] * x[1] - 0.5 * x[1].powi(3) + x[0];
        let r = reconstruct_function(&space, f, Quantity::Density);
        assert!(r.flagged.is_empty());
        for (k, poly) in r.polys.iter().enumerate() {
            for x in &space.cells[k].qx {
                assert!((poly.eval(*x) - f(*x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn error_of_quadratic_against_linears() {
        // one reference triangle, R q = x^2 and p = 1
        let mesh = crate::mesh::TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![1],
            (0..3).map(|e| crate::mesh::BoundaryEdge { v: [e, (e + 1) % 3], tag: crate::mesh::BoundaryTag::NoFlux, curved: false }).collect(),
            None,
        )
        .unwrap();
        let space = DgSpace::new(mesh, 0).unwrap();
        let r = reconstruct_function(&space, |x| x[0] * x[0], Quantity::Density);
        let (e, _) = interpolation_error(&r, &space);
        // dense Gram projection onto {1, x, y} with exact monomial integrals
        // int x^a y^b = a! b! / (a + b + 2)!
        let fct = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        let mono = |a: u32, b: u32| fct(a) * fct(b) / fct(a + b + 2);
        let basis = [(0, 0), (1, 0), (0, 1)];
        let g = DMatrix::from_fn(3, 3, |i, j| mono(basis[i].0 + basis[j].0, basis[i].1 + basis[j].1));
        let rhs = DVector::from_fn(3, |i, _| mono(basis[i].0 + 2, basis[i].1));
        let c = g.clone().lu().solve(&rhs).unwrap();
        let exact = (mono(4, 0) - c.dot(&rhs)).sqrt();
        assert!((e - exact).abs() < 1e-12, "{e} {exact}");
    }

    #[test]
    fn constant_field_has_no_error() {
        let (space, bg, c) = setup(1);
        let field = SpatialField::project(space.clone(), |_| Vec4::new(1.2, 0.0, 0.0, 1e5));
        let r = reconstruct_field(&field, Quantity::Density, &bg, &c, 0.0).unwrap();
        let (e, per) = interpolation_error(&r, &space);
        assert!(e < 1e-12);
        assert!((e * e - per.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-24);
    }

    #[test]
    fn cell_means_are_kept() {
        let (space, bg, c) = setup(1);
        let field = SpatialField::project(space.clone(), |x| Vec4::new((4.0 * x[0]).sin() + 2.0, 0.0, 0.0, 1e5));
        let r = reconstruct_field(&field, Quantity::Density, &bg, &c, 0.0).unwrap();
        for k in 0..space.n_cells() {
            let cell = &space.cells[k];
            let m: f64 = (0..cell.nq()).map(|q| cell.qw[q] * r.polys[k].eval(cell.qx[q])).sum::<f64>() / cell.area;
            assert!((m - field.cell_mean(k)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn directional_derivative_of_square() {
        let p = LocalPoly { center: [0.0, 0.0], scale: 2.0, degree: 2, coef: vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0] };
        // (x/2)^2 has second derivative 1/2 along x and 0 along y
        assert!((p.directional_derivative([1.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!(p.directional_derivative([0.0, 1.0]).abs() < 1e-15);
    }
}

//! Discrete fields: single-time spatial fields and space-time slab solutions.

use std::sync::Arc;

use rayon::prelude::*;

use super::basis::time_basis;
use super::quadrature::TriangleRule;
use super::space::DgSpace;
use crate::error::{Error, Result};
use crate::physics::Vec4;

/// Spatial DG field with coefficients at `spatial_offsets[K] + 4 i + c`.
#[derive(Clone, Debug)]
pub struct SpatialField {
    pub space: Arc<DgSpace>,
    pub coeffs: Vec<f64>,
}

/// Space-time solution on `[t0, t0 + tau]` with coefficients at
/// `offsets[K] + 4 (l nb + i) + c`.
#[derive(Clone, Debug)]
pub struct SlabSolution {
    pub space: Arc<DgSpace>,
    pub t0: f64,
    pub tau: f64,
    pub coeffs: Vec<f64>,
}

/// Sum of `coef[4 i + c] phi[i]` over `i < nb`, with gradients.
#[inline]
pub fn eval_point(coef: &[f64], phi: &[f64], grad: &[[f64; 2]], nb: usize) -> (Vec4, [[f64; 2]; 4]) {
    let mut w = Vec4::zeros();
    let mut g = [[0.0; 2]; 4];
    for i in 0..nb {
        let (p, d) = (phi[i], grad[i]);
        for c in 0..4 {
            let u = coef[4 * i + c];
            w[c] += u * p;
            g[c][0] += u * d[0];
            g[c][1] += u * d[1];
        }
    }
    (w, g)
}

impl SpatialField {
    pub fn zeros(space: Arc<DgSpace>) -> Self {
        let n = space.n_spatial_dofs();
        SpatialField { space, coeffs: vec![0.0; n] }
    }

    /// L2 projection of a function evaluated at volume quadrature points.
    pub fn project(space: Arc<DgSpace>, f: impl Fn([f64; 2]) -> Vec4 + Sync) -> Self {
        let blocks: Vec<Vec<f64>> = space
            .cells
            .par_iter()
            .map(|cell| {
                let mut b = vec![0.0; cell.nb * 4];
                for q in 0..cell.nq() {
                    let v = f(cell.qx[q]);
                    for i in 0..cell.nb {
                        let s = cell.qw[q] * cell.phi[q * cell.nbe + i];
                        for c in 0..4 {
                            b[4 * i + c] += s * v[c];
                        }
                    }
                }
                b
            })
            .collect();
        SpatialField { space, coeffs: blocks.concat() }
    }

    pub fn cell_coeffs(&self, k: usize) -> &[f64] {
        let o = self.space.spatial_offsets[k];
        &self.coeffs[o..o + 4 * self.space.cells[k].nb]
    }

    /// Value at a reference point of a cell.
    pub fn eval_ref(&self, k: usize, xi: [f64; 2]) -> Vec4 {
        let (phi, grad) = self.space.basis_at_ref(k, xi);
        eval_point(self.cell_coeffs(k), &phi, &grad, self.space.cells[k].nb).0
    }

    pub fn eval_in(&self, k: usize, x: [f64; 2]) -> Vec4 {
        let (phi, grad) = self.space.basis_at(k, x);
        eval_point(self.cell_coeffs(k), &phi, &grad, self.space.cells[k].nb).0
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<Vec4> {
        Ok(self.eval_in(self.space.locate(x)?, x))
    }

    /// Cell average.
    pub fn cell_mean(&self, k: usize) -> Vec4 {
        let c = self.cell_coeffs(k);
        // phi_0 is the constant 1/sqrt|K|
        Vec4::new(c[0], c[1], c[2], c[3]) / self.space.cells[k].area.sqrt()
    }

    /// Domain integral of each component.
    pub fn integral(&self) -> Vec4 {
        (0..self.space.n_cells()).map(|k| self.cell_mean(k) * self.space.cells[k].area).sum()
    }

    /// `int f(x, w_h(x)) dx` by volume quadrature.
    pub fn integrate(&self, f: impl Fn([f64; 2], &Vec4) -> f64 + Sync) -> f64 {
        self.space
            .cells
            .par_iter()
            .enumerate()
            .map(|(k, cell)| {
                let coef = self.cell_coeffs(k);
                (0..cell.nq())
                    .map(|q| {
                        let o = q * cell.nbe;
                        let (w, _) = eval_point(coef, &cell.phi[o..], &cell.grad[o..], cell.nb);
                        cell.qw[q] * f(cell.qx[q], &w)
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    /// Values at every volume quadrature point of a cell.
    pub fn values_at_quadrature(&self, k: usize) -> Vec<Vec4> {
        let cell = &self.space.cells[k];
        let coef = self.cell_coeffs(k);
        (0..cell.nq())
            .map(|q| eval_point(coef, &cell.phi[q * cell.nbe..], &cell.grad[q * cell.nbe..], cell.nb).0)
            .collect()
    }

    /// Moments `(w, phi_a)_K` for the enriched basis of `target`, cell by cell
    /// (layout `4 a + c`, `a < nbe`).
    ///
    /// Uses the coefficients directly when both spaces live on the same mesh.
    /// Straight target cells are integrated exactly over their intersections
    /// with the source cells; curved ones (or cells touching curved source
    /// cells) use a composite rule over `4^levels` sub-triangles.
    pub fn moments_on(&self, target: &DgSpace, levels: u32) -> Vec<Vec<f64>> {
        if same_geometry(&self.space, target) {
            return (0..target.n_cells())
                .map(|k| {
                    let nbe = target.cells[k].nbe;
                    let src = self.cell_coeffs(k);
                    let mut m = vec![0.0; 4 * nbe];
                    let n = m.len().min(src.len());
                    m[..n].copy_from_slice(&src[..n]);
                    m
                })
                .collect();
        }
        (0..target.n_cells())
            .into_par_iter()
            .map(|k| self.intersection_moments(target, k).unwrap_or_else(|| self.composite_moments(target, k, levels)))
            .collect()
    }

    fn intersection_moments(&self, target: &DgSpace, k: usize) -> Option<Vec<f64>> {
        if target.mesh.curved_edge(k).is_some() {
            return None;
        }
        let cell = &target.cells[k];
        let tv = target.mesh.cell_vertices(k);
        let area = crate::mesh::signed_area(tv[0], tv[1], tv[2]);
        let centroid = target.mesh.centroid(k);
        let start = self.space.locate(centroid).ok()?;
        let src_mesh = &self.space.mesh;
        let mut m = vec![0.0; 4 * cell.nbe];
        let mut covered = 0.0;
        let mut seen = vec![start];
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            let sv = src_mesh.cell_vertices(s);
            let poly = clip_triangle(&tv, &sv);
            let mut part = 0.0;
            for i in 1..poly.len().saturating_sub(1) {
                part += crate::mesh::signed_area(poly[0], poly[i], poly[i + 1]);
            }
            if part <= 1e-13 * area {
                continue;
            }
            if src_mesh.curved_edge(s).is_some() {
                return None;
            }
            covered += part;
            let rule = TriangleRule::with_degree(self.space.cells[s].p + cell.p + 1);
            for i in 1..poly.len() - 1 {
                let (a, b, c) = (poly[0], poly[i], poly[i + 1]);
                let jac = 2.0 * crate::mesh::signed_area(a, b, c);
                if jac <= 0.0 {
                    continue;
                }
                for (r, w) in rule.points.iter().zip(&rule.weights) {
                    let x = [
                        a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]),
                        a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1]),
                    ];
                    let v = self.eval_in(s, x);
                    let (phi, _) = target.basis_at(k, x);
                    for j in 0..cell.nbe {
                        for comp in 0..4 {
                            m[4 * j + comp] += w * jac * v[comp] * phi[j];
                        }
                    }
                }
            }
            for n in src_mesh.neighbors(s) {
                if !seen.contains(&n) {
                    seen.push(n);
                    queue.push_back(n);
                }
            }
        }
        if ((covered - area) / area).abs() > 1e-9 {
            return None;
        }
        Some(m)
    }

    fn composite_moments(&self, target: &DgSpace, k: usize, levels: u32) -> Vec<f64> {
        let subs = sub_triangles(levels);
        let cell = &target.cells[k];
        let rule = TriangleRule::with_degree(2 * cell.p + 4);
        let mut m = vec![0.0; 4 * cell.nbe];
        let mut hint = None;
        for tri in &subs {
            let jac = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
            for (r, w) in rule.points.iter().zip(&rule.weights) {
                let xi = [
                    tri[0][0] + r[0] * (tri[1][0] - tri[0][0]) + r[1] * (tri[2][0] - tri[0][0]),
                    tri[0][1] + r[0] * (tri[1][1] - tri[0][1]) + r[1] * (tri[2][1] - tri[0][1]),
                ];
                let (x, j) = target.mesh.map_with_jacobian(k, xi);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let src_cell = match hint {
                    Some(h) if inside(&self.space, h, x) => h,
                    _ => match self.space.locate(x) {
                        Ok(c) => c,
                        Err(_) => continue,
                    },
                };
                hint = Some(src_cell);
                let v = self.eval_in(src_cell, x);
                let (phi, _) = target.basis_at_ref(k, xi);
                let s = w * jac * det;
                for a in 0..cell.nbe {
                    for c in 0..4 {
                        m[4 * a + c] += s * v[c] * phi[a];
                    }
                }
            }
        }
        m
    }

    /// Transfer to another space; refines the composite rule once when the
    /// transferred mass drifts by more than `1e-6` (relative).
    pub fn transfer_to(&self, target: Arc<DgSpace>) -> SpatialField {
        let project = |levels| {
            let m = self.moments_on(&target, levels);
            let coeffs: Vec<f64> = m.iter().enumerate().flat_map(|(k, mk)| mk[..4 * target.cells[k].nb].to_vec()).collect();
            SpatialField { space: target.clone(), coeffs }
        };
        let out = project(2);
        if same_geometry(&self.space, &target) {
            return out;
        }
        let m0 = self.integral()[0];
        if ((out.integral()[0] - m0) / m0).abs() > 1e-6 {
            return project(4);
        }
        out
    }
}

fn inside(space: &DgSpace, k: usize, x: [f64; 2]) -> bool {
    let v = space.mesh.cell_vertices(k);
    let s = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
    let area = crate::mesh::signed_area(v[0], v[1], v[2]);
    let tol = -1e-12 * area.abs();
    space.mesh.curved_edge(k).is_none() && s(v[0], v[1]) >= tol && s(v[1], v[2]) >= tol && s(v[2], v[0]) >= tol
}

/// Sutherland-Hodgman clip of the counter-clockwise triangle `subject` by
/// the counter-clockwise triangle `clip`.
fn clip_triangle(subject: &[[f64; 2]; 3], clip: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
    let mut poly: Vec<[f64; 2]> = subject.to_vec();
    for e in 0..3 {
        let (a, b) = (clip[e], clip[(e + 1) % 3]);
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly
}

pub(crate) fn same_geometry(a: &DgSpace, b: &DgSpace) -> bool {
    std::ptr::eq(a, b) || (a.mesh.vertices == b.mesh.vertices && a.mesh.cells == b.mesh.cells)
}

/// Uniform `4^levels` subdivision of the reference triangle.
pub fn sub_triangles(levels: u32) -> Vec<[[f64; 2]; 3]> {
    let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let m = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let (m01, m12, m20) = (m(t[0], t[1]), m(t[1], t[2]), m(t[2], t[0]));
            next.push([t[0], m01, m20]);
            next.push([m01, t[1], m12]);
            next.push([m20, m12, t[2]]);
            next.push([m01, m12, m20]);
        }
        tris = next;
    }
    tris
}

impl SlabSolution {
    pub fn zeros(space: Arc<DgSpace>, t0: f64, tau: f64) -> Self {
        let n = space.n_dofs();
        SlabSolution { space, t0, tau, coeffs: vec![0.0; n] }
    }

    /// Solution constant in time equal to `field` (same space).
    pub fn constant(field: &SpatialField, t0: f64, tau: f64) -> Self {
        let space = field.space.clone();
        let mut s = Self::zeros(space.clone(), t0, tau);
        let l0 = tau.sqrt();
        for k in 0..space.n_cells() {
            let src = field.cell_coeffs(k);
            let o = space.offsets[k];
            for (j, v) in src.iter().enumerate() {
                s.coeffs[o + j] = v * l0;
            }
        }
        s
    }

    pub fn cell_coeffs(&self, k: usize) -> &[f64] {
        &self.coeffs[self.space.offsets[k]..self.space.offsets[k + 1]]
    }

    /// The spatial field at time `t` (one-sided limits at the slab ends).
    pub fn at_time(&self, t: f64) -> Result<SpatialField> {
        let slack = 1e-12 * self.tau.max(self.t0.abs());
        if t < self.t0 - slack || t > self.t0 + self.tau + slack {
            return Err(Error::OutsideSlab { t, t0: self.t0, t1: self.t0 + self.tau });
        }
        let q = self.space.q;
        let (lv, _) = time_basis(q, self.t0, self.tau, t.clamp(self.t0, self.t0 + self.tau));
        Ok(self.combine(&lv))
    }

    /// Polynomial continuation of the slab to any time (no range check).
    pub fn extrapolate_at(&self, t: f64) -> SpatialField {
        let (lv, _) = time_basis(self.space.q, self.t0, self.tau, t);
        self.combine(&lv)
    }

    /// Spatial field `sum_l weights[l] u_l`.
    pub fn combine(&self, weights: &[f64]) -> SpatialField {
        let space = &self.space;
        let mut out = vec![0.0; space.n_spatial_dofs()];
        for k in 0..space.n_cells() {
            let nb4 = 4 * space.cells[k].nb;
            let src = self.cell_coeffs(k);
            let dst = &mut out[space.spatial_offsets[k]..space.spatial_offsets[k] + nb4];
            for (l, wl) in weights.iter().enumerate().take(space.q + 1) {
                for j in 0..nb4 {
                    dst[j] += wl * src[l * nb4 + j];
                }
            }
        }
        SpatialField { space: space.clone(), coeffs: out }
    }

    pub fn end_trace(&self) -> SpatialField {
        self.at_time(self.t0 + self.tau).expect("slab end lies in the slab")
    }

    pub fn eval(&self, x: [f64; 2], t: f64) -> Result<Vec4> {
        self.at_time(t)?.eval(x)
    }

    /// Coefficients of `sum_l f_l(t)` where the spatial fields are given at
    /// the time points and fit by interpolation in the orthonormal basis
    /// (used for extrapolated initial guesses).
    pub fn from_time_samples(space: Arc<DgSpace>, t0: f64, tau: f64, samples: &[(f64, &SpatialField)]) -> Self {
        let q = space.q;
        assert_eq!(samples.len(), q + 1);
        let m = nalgebra::DMatrix::from_fn(q + 1, q + 1, |r, l| time_basis(q, t0, tau, samples[r].0).0[l]);
        let inv = m.try_inverse().expect("distinct sample times");
        let mut s = Self::zeros(space.clone(), t0, tau);
        for k in 0..space.n_cells() {
            let nb4 = 4 * space.cells[k].nb;
            let o = space.offsets[k];
            for l in 0..=q {
                for (r, (_, f)) in samples.iter().enumerate() {
                    let c = inv[(l, r)];
                    let src = f.cell_coeffs(k);
                    for j in 0..nb4 {
                        s.coeffs[o + l * nb4 + j] += c * src[j];
                    }
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, RectangleSpec};

    fn space(n: usize, p: usize, q: usize) -> Arc<DgSpace> {
        let spec = RectangleSpec::with_cell_count([0.0, 2.0], [0.0, 1.0], n).with_degree(p);
        Arc::new(DgSpace::new(rectangle(&spec).unwrap(), q).unwrap())
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let s = space(16, 2, 0);
        let f = |x: [f64; 2]| Vec4::new(1.0 + x[0] * x[1], x[0] * x[0], 3.0 - x[1], 2.0 * x[0] - x[1] * x[1]);
        let u = SpatialField::project(s, f);
        for x in [[0.3, 0.2], [1.7, 0.9], [1.0, 0.5]] {
            assert!((u.eval(x).unwrap() - f(x)).norm() < 1e-12);
        }
        let area: f64 = 2.0;
        assert!((u.integral()[2] - (3.0 * area - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn slab_time_evaluation() {
        let s = space(4, 1, 2);
        let f0 = SpatialField::project(s.clone(), |x| Vec4::new(x[0], 1.0, 0.0, 2.0));
        let f1 = SpatialField::project(s.clone(), |x| Vec4::new(2.0 * x[0], 0.0, 1.0, 2.0));
        let f2 = SpatialField::project(s.clone(), |x| Vec4::new(3.0 * x[0], 0.0, 2.0, 2.0));
        let slab = SlabSolution::from_time_samples(s, 1.0, 0.5, &[(1.0, &f0), (1.25, &f1), (1.5, &f2)]);
        let mid = slab.eval([0.4, 0.4], 1.25).unwrap();
        assert!((mid - Vec4::new(0.8, 0.0, 1.0, 2.0)).norm() < 1e-12);
        assert!(matches!(slab.at_time(2.0), Err(Error::OutsideSlab { .. })));
        assert!((slab.end_trace().eval([1.0, 0.5]).unwrap()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_between_meshes_preserves_linear_fields() {
        let a = space(20, 1, 0);
        let b = space(46, 2, 0);
        let f = |x: [f64; 2]| Vec4::new(1.0 + x[0], x[1], 0.5, x[0] - x[1]);
        let u = SpatialField::project(a, f);
        let v = u.transfer_to(b);
        assert!((v.eval([1.3, 0.77]).unwrap() - f([1.3, 0.77])).norm() < 1e-11);
        assert!((v.integral() - u.integral()).norm() < 1e-11);
    }

    #[test]
    fn transfer_conserves_integrals_of_discontinuous_fields() {
        let a = space(30, 3, 0);
        let b = space(53, 1, 0);
        let u = SpatialField::project(a, |x| Vec4::new((3.0 * x[0]).sin() + 2.0, x[1].exp(), 0.0, (x[0] * x[1]).cos()));
        let v = u.transfer_to(b);
        let (iu, iv) = (u.integral(), v.integral());
        for c in 0..4 {
            assert!((iu[c] - iv[c]).abs() < 1e-12 * (1.0 + iu[c].abs()), "{c}: {} {}", iu[c], iv[c]);
        }
    }

    #[test]
    fn clipping_overlapping_triangles() {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let s = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        let poly = clip_triangle(&t, &s);
        let mut area = 0.0;
        for i in 1..poly.len() - 1 {
            area += crate::mesh::signed_area(poly[0], poly[i], poly[i + 1]);
        }
        assert!((area - 0.25).abs() < 1e-15);
        assert!(clip_triangle(&t, &[[2.0, 0.0], [3.0, 0.0], [2.0, 1.0]]).is_empty());
    }
}

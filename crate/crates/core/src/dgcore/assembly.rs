//! Space-time residual and its linearization.
//!
//! The spatial form is the flux-splitting DG discretization with SIPG
//! viscous terms. Per cell and time node it is evaluated test function by
//! test function; each face is visited from both adjacent cells, which keeps
//! the cell loops independent and the result bitwise reproducible under any
//! thread count.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::time_basis;
use super::field::{eval_point, SlabSolution, SpatialField};
use super::flux::{boundary_state, split_jacobian, FluxKind};
use super::quadrature::gauss_legendre_unit;
use super::space::{DgSpace, FaceData};
use crate::error::Result;
use crate::physics::{
    convective_flux, flux_jacobians, gravity_matrix, gravity_source, viscous_flux, viscous_matrices, Mat4,
    PhysicalConstants, Vec4,
};
use crate::solver::sparse::BlockSparse;

pub type FarField = Arc<dyn Fn([f64; 2]) -> Vec4 + Send + Sync>;

/// Physical and numerical parameters of the spatial operator.
#[derive(Clone)]
pub struct Problem {
    pub constants: PhysicalConstants,
    pub flux: FluxKind,
    /// Interior-penalty constant.
    pub c_sigma: f64,
    /// Exterior state for nonreflecting boundaries (the initial/background state).
    pub far_field: Option<FarField>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("constants", &self.constants)
            .field("flux", &self.flux)
            .field("c_sigma", &self.c_sigma)
            .field("far_field", &self.far_field.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(constants: PhysicalConstants) -> Self {
        Problem { constants, flux: FluxKind::Vijayasundaram, c_sigma: 20.0, far_field: None }
    }

    pub fn with_far_field(mut self, f: FarField) -> Self {
        self.far_field = Some(f);
        self
    }

    fn viscous(&self) -> bool {
        self.constants.mu > 0.0
    }
}

/// Gauss-Legendre rule in time and the temporal basis tabulated on it,
/// including the enriched degree `q + 1`.
#[derive(Clone, Debug)]
pub struct TimeRule {
    pub q: usize,
    pub t0: f64,
    pub tau: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[g][l] = L_l(t_g)`, `l <= q + 1`.
    pub values: Vec<Vec<f64>>,
    /// `dvalues[g][l] = L_l'(t_g)`.
    pub dvalues: Vec<Vec<f64>>,
    /// `L_l(t0+)`.
    pub start: Vec<f64>,
    /// `deriv[(l, l')] = int L_l L_l'^prime dt`, `l <= q + 1`, `l' <= q + 1`.
    pub deriv: DMatrix<f64>,
}

impl TimeRule {
    pub fn new(q: usize, t0: f64, tau: f64) -> Self {
        let (s, w) = gauss_legendre_unit(q + 2);
        let nodes: Vec<f64> = s.iter().map(|s| t0 + s * tau).collect();
        let weights: Vec<f64> = w.iter().map(|w| w * tau).collect();
        let mut deriv = DMatrix::zeros(q + 2, q + 2);
        let mut values = Vec::with_capacity(nodes.len());
        let mut dvalues = Vec::with_capacity(nodes.len());
        for (t, wt) in nodes.iter().zip(&weights) {
            let (v, dv) = time_basis(q + 1, t0, tau, *t);
            for l in 0..q + 2 {
                for lp in 0..q + 2 {
                    deriv[(l, lp)] += wt * v[l] * dv[lp];
                }
            }
            values.push(v);
            dvalues.push(dv);
        }
        let start = time_basis(q + 1, t0, tau, t0).0;
        TimeRule { q, t0, tau, nodes, weights, values, dvalues, start, deriv }
    }
}

/// Test space of a residual evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestSpace {
    /// Use spatial degree `p + 1`.
    pub space: bool,
    /// Use temporal degree `q + 1`.
    pub time: bool,
}

impl TestSpace {
    pub const PLAIN: TestSpace = TestSpace { space: false, time: false };
    pub const FULL: TestSpace = TestSpace { space: true, time: true };
}

/// The discrete operator on one space.
#[derive(Clone, Debug)]
pub struct Operator {
    pub space: Arc<DgSpace>,
    pub problem: Problem,
}

/// Linearized face coefficients for test side `s` and trial side `t`:
/// `m0 phi_s phi_t + sum_j m1[j] phi_s d_j phi_t + sum_j m2[j] d_j phi_s phi_t`.
#[derive(Clone, Copy)]
struct FaceLin {
    m0: Mat4,
    m1: [Mat4; 2],
    m2: [Mat4; 2],
}

impl FaceLin {
    fn zero() -> Self {
        FaceLin { m0: Mat4::zeros(), m1: [Mat4::zeros(); 2], m2: [Mat4::zeros(); 2] }
    }
}

fn side_arrays(fd: &FaceData, side: usize) -> (&[f64], &[[f64; 2]]) {
    if side == 0 {
        (&fd.phi_l, &fd.grad_l)
    } else {
        (&fd.phi_r, &fd.grad_r)
    }
}

fn normal_combination(k: &[[Mat4; 2]; 2], n: [f64; 2], j: usize) -> Mat4 {
    k[0][j] * n[0] + k[1][j] * n[1]
}

impl Operator {
    pub fn new(space: Arc<DgSpace>, problem: Problem) -> Self {
        Operator { space, problem }
    }

    fn c(&self) -> &PhysicalConstants {
        &self.problem.constants
    }

    fn penalty(&self, fd: &FaceData, rho: f64) -> f64 {
        let c = self.c();
        let p = fd.right.map_or(0, |r| self.space.cells[r].p).max(self.space.cells[fd.left].p).max(1) as f64;
        let diff = (4.0 / 3.0f64).max(c.kappa / c.pr);
        self.problem.c_sigma * p * p * c.mu * diff / (rho * fd.h)
    }

    fn cell_of_side(fd: &FaceData, side: usize) -> usize {
        if side == 0 {
            fd.left
        } else {
            fd.right.unwrap()
        }
    }

    fn trace(&self, fd: &FaceData, side: usize, q: usize, u: &[f64]) -> (Vec4, [[f64; 2]; 4]) {
        let k = Self::cell_of_side(fd, side);
        let cell = &self.space.cells[k];
        let (phi, grad) = side_arrays(fd, side);
        let o = self.space.spatial_offsets[k];
        eval_point(&u[o..], &phi[q * cell.nbe..], &grad[q * cell.nbe..], cell.nb)
    }

    /// Total normal flux `H` (tested with `+phi_L`, `-phi_R`) and the
    /// symmetry-term vectors `z_s` (tested with `grad phi_s`) at one face point.
    fn face_point(&self, fd: &FaceData, q: usize, u: &[f64]) -> Result<(Vec4, [[Vec4; 2]; 2])> {
        let c = self.c();
        let n = fd.normal[q];
        let (wl, gl) = self.trace(fd, 0, q, u);
        let visc = self.problem.viscous();
        let mut z = [[Vec4::zeros(); 2]; 2];
        if fd.right.is_some() {
            let (wr, gr) = self.trace(fd, 1, q, u);
            let wbar = 0.5 * (wl + wr);
            let (pp, pm) = split_jacobian(&wbar, n, self.problem.flux, c)?;
            let mut h = pp * wl + pm * wr;
            if visc {
                let rl = viscous_flux(&wl, &gl, c)?;
                let rr = viscous_flux(&wr, &gr, c)?;
                let jump = wl - wr;
                h -= 0.5 * ((rl[0] + rr[0]) * n[0] + (rl[1] + rr[1]) * n[1]);
                h += self.penalty(fd, wbar[0]) * jump;
                let kl = viscous_matrices(&wl, c)?;
                let kr = viscous_matrices(&wr, c)?;
                for j in 0..2 {
                    z[0][j] = -0.5 * normal_combination(&kl, n, j).transpose() * jump;
                    z[1][j] = -0.5 * normal_combination(&kr, n, j).transpose() * jump;
                }
            }
            Ok((h, z))
        } else {
            let tag = fd.tag.expect("boundary face carries a tag");
            let far = self.problem.far_field.as_ref().map(|f| f(fd.qx[q]));
            let (wd, _) = boundary_state(tag, &wl, n, far.as_ref(), c)?;
            let wbar = 0.5 * (wl + wd);
            let (pp, pm) = split_jacobian(&wbar, n, self.problem.flux, c)?;
            let mut h = pp * wl + pm * wd;
            if visc {
                let rl = viscous_flux(&wl, &gl, c)?;
                let jump = wl - wd;
                h -= rl[0] * n[0] + rl[1] * n[1];
                h += self.penalty(fd, wbar[0]) * jump;
                let kl = viscous_matrices(&wl, c)?;
                for j in 0..2 {
                    z[0][j] = -normal_combination(&kl, n, j).transpose() * jump;
                }
            }
            Ok((h, z))
        }
    }

    /// Linearized face coefficients `[s][t]` at one face point around `u`.
    fn face_point_lin(&self, fd: &FaceData, q: usize, u: &[f64]) -> Result<[[FaceLin; 2]; 2]> {
        let c = self.c();
        let n = fd.normal[q];
        let (wl, _) = self.trace(fd, 0, q, u);
        let visc = self.problem.viscous();
        let mut out = [[FaceLin::zero(); 2]; 2];
        if fd.right.is_some() {
            let (wr, _) = self.trace(fd, 1, q, u);
            let wbar = 0.5 * (wl + wr);
            let (pp, pm) = split_jacobian(&wbar, n, self.problem.flux, c)?;
            let sigma = if visc { self.penalty(fd, wbar[0]) } else { 0.0 };
            let (kl, kr) = if visc {
                (viscous_matrices(&wl, c)?, viscous_matrices(&wr, c)?)
            } else {
                ([[Mat4::zeros(); 2]; 2], [[Mat4::zeros(); 2]; 2])
            };
            let sgn = [1.0, -1.0];
            let ps = [pp, pm];
            let ks = [kl, kr];
            for s in 0..2 {
                for t in 0..2 {
                    let fl = &mut out[s][t];
                    fl.m0 = sgn[s] * (ps[t] + Mat4::identity() * (sigma * sgn[t]));
                    if visc {
                        for j in 0..2 {
                            fl.m1[j] = -0.5 * sgn[s] * normal_combination(&ks[t], n, j);
                            fl.m2[j] = -0.5 * sgn[t] * normal_combination(&ks[s], n, j).transpose();
                        }
                    }
                }
            }
        } else {
            let tag = fd.tag.expect("boundary face carries a tag");
            let far = self.problem.far_field.as_ref().map(|f| f(fd.qx[q]));
            let (wd, dwd) = boundary_state(tag, &wl, n, far.as_ref(), c)?;
            let wbar = 0.5 * (wl + wd);
            let (pp, pm) = split_jacobian(&wbar, n, self.problem.flux, c)?;
            let d = dwd.unwrap_or_else(Mat4::zeros);
            let fl = &mut out[0][0];
            fl.m0 = pp + pm * d;
            if visc {
                let sigma = self.penalty(fd, wbar[0]);
                let idm = Mat4::identity() - d;
                fl.m0 += sigma * idm;
                let kl = viscous_matrices(&wl, c)?;
                for j in 0..2 {
                    let kn = normal_combination(&kl, n, j);
                    fl.m1[j] = -kn;
                    fl.m2[j] = -(kn.transpose() * idm);
                }
            }
        }
        Ok(out)
    }

    /// Spatial residual of cell `k` against `na` test functions (layout `4 a + c`).
    fn cell_spatial_residual(&self, k: usize, u: &[f64], na: usize, out: &mut [f64]) -> Result<()> {
        let c = self.c();
        let cell = &self.space.cells[k];
        let nbe = cell.nbe;
        let uk = &u[self.space.spatial_offsets[k]..];
        let visc = self.problem.viscous();
        for q in 0..cell.nq() {
            let (w, g) = eval_point(uk, &cell.phi[q * nbe..], &cell.grad[q * nbe..], cell.nb);
            let f = convective_flux(&w, c)?;
            let mut fx = f;
            if visc {
                let r = viscous_flux(&w, &g, c)?;
                fx[0] -= r[0];
                fx[1] -= r[1];
            }
            let s = gravity_source(&w, c);
            let wq = cell.qw[q];
            for a in 0..na {
                let phi = cell.phi[q * nbe + a];
                let d = cell.grad[q * nbe + a];
                for comp in 0..4 {
                    out[4 * a + comp] -= wq * (fx[0][comp] * d[0] + fx[1][comp] * d[1] + s[comp] * phi);
                }
            }
        }
        for f in self.space.mesh.cell_faces(k) {
            let fd = &self.space.faces[f];
            let sides: Vec<usize> = (0..2).filter(|&s| s == 0 && fd.left == k || s == 1 && fd.right == Some(k)).collect();
            if sides.is_empty() {
                continue;
            }
            for q in 0..fd.qw.len() {
                let (h, z) = self.face_point(fd, q, u)?;
                for &s in &sides {
                    let (phi, grad) = side_arrays(fd, s);
                    let sg = if s == 0 { 1.0 } else { -1.0 };
                    let wq = fd.qw[q];
                    for a in 0..na {
                        let p = phi[q * nbe + a];
                        let d = grad[q * nbe + a];
                        for comp in 0..4 {
                            out[4 * a + comp] += wq * (sg * h[comp] * p + z[s][0][comp] * d[0] + z[s][1][comp] * d[1]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `a_h(w, phi_i e_c)` for all basis functions (layout of the spatial field).
    pub fn spatial_residual(&self, u: &SpatialField) -> Result<Vec<f64>> {
        let blocks: Vec<Vec<f64>> = (0..self.space.n_cells())
            .into_par_iter()
            .map(|k| {
                let mut r = vec![0.0; 4 * self.space.cells[k].nb];
                self.cell_spatial_residual(k, &u.coeffs, self.space.cells[k].nb, &mut r)?;
                Ok(r)
            })
            .collect::<Result<_>>()?;
        Ok(blocks.concat())
    }

    /// Column cells of each block row: the cell and its face neighbors.
    pub fn pattern(&self) -> Vec<Vec<usize>> {
        (0..self.space.n_cells())
            .map(|k| {
                let mut cols: Vec<usize> = vec![k];
                for f in self.space.mesh.cell_faces(k) {
                    let fd = &self.space.faces[f];
                    cols.push(fd.left);
                    if let Some(r) = fd.right {
                        cols.push(r);
                    }
                }
                cols.sort_unstable();
                cols.dedup();
                cols
            })
            .collect()
    }

    /// Spatial Jacobian blocks of row `k` linearized around `u`, one per pattern column.
    fn row_spatial_jacobian(&self, k: usize, cols: &[usize], u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let c = self.c();
        let space = &self.space;
        let cell = &space.cells[k];
        let (nb, nbe) = (cell.nb, cell.nbe);
        let mut blocks: Vec<DMatrix<f64>> = cols.iter().map(|&j| DMatrix::zeros(4 * nb, 4 * space.cells[j].nb)).collect();
        let diag = cols.iter().position(|&j| j == k).unwrap();
        let uk = &u[space.spatial_offsets[k]..];
        let visc = self.problem.viscous();
        let b = gravity_matrix(c);
        {
            let m = &mut blocks[diag];
            for q in 0..cell.nq() {
                let (w, _) = eval_point(uk, &cell.phi[q * nbe..], &cell.grad[q * nbe..], nb);
                let a = flux_jacobians(&w, c)?;
                let kv = if visc { Some(viscous_matrices(&w, c)?) } else { None };
                let wq = cell.qw[q];
                for ia in 0..nb {
                    let pa = cell.phi[q * nbe + ia];
                    let da = cell.grad[q * nbe + ia];
                    for ib in 0..nb {
                        let pb = cell.phi[q * nbe + ib];
                        let db = cell.grad[q * nbe + ib];
                        let mut e = -(a[0] * (da[0] * pb) + a[1] * (da[1] * pb)) - b * (pa * pb);
                        if let Some(kv) = &kv {
                            for i in 0..2 {
                                for j in 0..2 {
                                    e += kv[i][j] * (da[i] * db[j]);
                                }
                            }
                        }
                        for r in 0..4 {
                            for s in 0..4 {
                                m[(4 * ia + r, 4 * ib + s)] += wq * e[(r, s)];
                            }
                        }
                    }
                }
            }
        }
        for f in space.mesh.cell_faces(k) {
            let fd = &space.faces[f];
            let sides: Vec<usize> = (0..2).filter(|&s| s == 0 && fd.left == k || s == 1 && fd.right == Some(k)).collect();
            if sides.is_empty() {
                continue;
            }
            let trials: &[usize] = if fd.right.is_some() { &[0, 1] } else { &[0] };
            for q in 0..fd.qw.len() {
                let lin = self.face_point_lin(fd, q, u)?;
                let wq = fd.qw[q];
                for &s in &sides {
                    let (phs, grs) = side_arrays(fd, s);
                    for &t in trials {
                        let kt = Self::cell_of_side(fd, t);
                        let ct = &space.cells[kt];
                        let (pht, grt) = side_arrays(fd, t);
                        let col = cols.iter().position(|&j| j == kt).unwrap();
                        let m = &mut blocks[col];
                        let fl = &lin[s][t];
                        for ia in 0..nb {
                            let pa = phs[q * nbe + ia];
                            let da = grs[q * nbe + ia];
                            for ib in 0..ct.nb {
                                let pb = pht[q * ct.nbe + ib];
                                let db = grt[q * ct.nbe + ib];
                                let mut e = fl.m0 * (pa * pb);
                                if visc {
                                    e += fl.m1[0] * (pa * db[0]) + fl.m1[1] * (pa * db[1]);
                                    e += fl.m2[0] * (da[0] * pb) + fl.m2[1] * (da[1] * pb);
                                }
                                for r in 0..4 {
                                    for s2 in 0..4 {
                                        m[(4 * ia + r, 4 * ib + s2)] += wq * e[(r, s2)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(blocks)
    }

    /// Spatial Jacobian of [`Self::spatial_residual`] (as used by the slab matrix).
    pub fn spatial_jacobian(&self, u: &SpatialField) -> Result<BlockSparse> {
        let pattern = self.pattern();
        let mut m = BlockSparse::with_pattern(self.space.spatial_offsets.clone(), &pattern);
        let rows: Vec<Vec<DMatrix<f64>>> = (0..self.space.n_cells())
            .into_par_iter()
            .map(|k| self.row_spatial_jacobian(k, &pattern[k], &u.coeffs))
            .collect::<Result<_>>()?;
        let mut p = 0;
        for row in rows {
            for b in row {
                m.blocks[p] = b;
                p += 1;
            }
        }
        Ok(m)
    }

    /// Space-time residual of a slab solution.
    ///
    /// `prev` holds the moments `(w(t0-), phi_a)_K` against the enriched
    /// spatial basis (layout `4 a + c`, `a < nbe`). The output of cell `K` has
    /// layout `4 (l na + a) + c` with `na` and the number of temporal tests
    /// selected by `tests`.
    pub fn slab_residual(&self, sol: &SlabSolution, prev: &[Vec<f64>], tests: TestSpace) -> Result<Vec<Vec<f64>>> {
        let space = &self.space;
        let q = space.q;
        let rule = TimeRule::new(q, sol.t0, sol.tau);
        let node_fields: Vec<SpatialField> = rule.values.iter().map(|v| sol.combine(&v[..=q])).collect();
        let nt = q + 1 + tests.time as usize;
        (0..space.n_cells())
            .into_par_iter()
            .map(|k| {
                let cell = &space.cells[k];
                let nb = cell.nb;
                let na = if tests.space { cell.nbe } else { nb };
                let mut r = vec![0.0; 4 * nt * na];
                let mut s = vec![0.0; 4 * na];
                for (g, f) in node_fields.iter().enumerate() {
                    s.iter_mut().for_each(|x| *x = 0.0);
                    self.cell_spatial_residual(k, &f.coeffs, na, &mut s)?;
                    for l in 0..nt {
                        let c = rule.weights[g] * rule.values[g][l];
                        for (j, sj) in s.iter().enumerate() {
                            r[4 * l * na + j] += c * sj;
                        }
                    }
                }
                let uk = sol.cell_coeffs(k);
                for l in 0..nt {
                    for a in 0..na {
                        for comp in 0..4 {
                            let mut start = 0.0;
                            let mut dt = 0.0;
                            if a < nb {
                                for lp in 0..=q {
                                    let v = uk[4 * (lp * nb + a) + comp];
                                    dt += rule.deriv[(l, lp)] * v;
                                    start += rule.start[lp] * v;
                                }
                            }
                            let pm = prev[k].get(4 * a + comp).copied().unwrap_or(0.0);
                            r[4 * (l * na + a) + comp] += dt + rule.start[l] * (start - pm);
                        }
                    }
                }
                Ok(r)
            })
            .collect()
    }

    /// Flattened plain slab residual in the layout of the slab unknowns.
    pub fn slab_residual_vec(&self, sol: &SlabSolution, prev: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.slab_residual(sol, prev, TestSpace::PLAIN)?.concat())
    }

    /// Matrix of the space-time form linearized around `lin`.
    pub fn slab_matrix(&self, lin: &SlabSolution) -> Result<BlockSparse> {
        let space = &self.space;
        let q = space.q;
        let rule = TimeRule::new(q, lin.t0, lin.tau);
        let node_fields: Vec<SpatialField> = rule.values.iter().map(|v| lin.combine(&v[..=q])).collect();
        let pattern = self.pattern();
        let nt = q + 1;
        let rows: Vec<Vec<DMatrix<f64>>> = (0..space.n_cells())
            .into_par_iter()
            .map(|k| {
                let cols = &pattern[k];
                let nb = space.cells[k].nb;
                let mut out: Vec<DMatrix<f64>> =
                    cols.iter().map(|&j| DMatrix::zeros(4 * nt * nb, 4 * nt * space.cells[j].nb)).collect();
                for (g, f) in node_fields.iter().enumerate() {
                    let sp = self.row_spatial_jacobian(k, cols, &f.coeffs)?;
                    for (blk, s) in out.iter_mut().zip(&sp) {
                        let (rs, cs) = (s.nrows(), s.ncols());
                        for l in 0..nt {
                            for lp in 0..nt {
                                let c = rule.weights[g] * rule.values[g][l] * rule.values[g][lp];
                                let mut view = blk.view_mut((l * rs, lp * cs), (rs, cs));
                                view += s * c;
                            }
                        }
                    }
                }
                let d = cols.iter().position(|&j| j == k).unwrap();
                let nb4 = 4 * nb;
                for l in 0..nt {
                    for lp in 0..nt {
                        let c = rule.deriv[(l, lp)] + rule.start[l] * rule.start[lp];
                        for j in 0..nb4 {
                            out[d][(l * nb4 + j, lp * nb4 + j)] += c;
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut m = BlockSparse::with_pattern(space.offsets.clone(), &pattern);
        let mut p = 0;
        for row in rows {
            for b in row {
                m.blocks[p] = b;
                p += 1;
            }
        }
        Ok(m)
    }
}

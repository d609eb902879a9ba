//! Restarted GMRES with left preconditioning.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Relative tolerance on the preconditioned residual.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 60, max_iter: 600, tol: 1e-2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// Final relative preconditioned residual.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` with preconditioner `M^{-1}` starting from `x`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    opts: &GmresOptions,
) -> Result<GmresReport> {
    let n = b.len();
    let mb = precond(b);
    let bnorm = norm(&mb);
    if !bnorm.is_finite() {
        return Err(Error::GmresBreakdown("non-finite right-hand side".into()));
    }
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresReport { iterations: 0, residual: 0.0, converged: true });
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut rel = f64::INFINITY;
    while total < opts.max_iter {
        let ax = apply(x);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let r = precond(&r0);
        let beta = norm(&r);
        rel = beta / bnorm;
        if !rel.is_finite() {
            return Err(Error::GmresBreakdown("non-finite residual".into()));
        }
        if rel <= opts.tol {
            return Ok(GmresReport { iterations: total, residual: rel, converged: true });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < opts.max_iter {
            let mut w = precond(&apply(&v[k]));
            // modified Gram-Schmidt
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= h[i][k] * vj;
                }
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                return Err(Error::GmresBreakdown("zero Krylov column".into()));
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            let hk1 = h[k + 1][k];
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            rel = g[k + 1].abs() / bnorm;
            let happy = hk1 <= 1e-14 * beta;
            if !happy {
                v.push(w.iter().map(|x| x / hk1).collect());
            }
            k += 1;
            if rel <= opts.tol || happy {
                break;
            }
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * v[j][i];
            }
        }
        if rel <= opts.tol {
            return Ok(GmresReport { iterations: total, residual: rel, converged: true });
        }
    }
    Ok(GmresReport { iterations: total, residual: rel, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 40;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if j == i + 1 {
                -1.3
            } else if i == j + 1 {
                -0.7
            } else if j == (i * 7 + 3) % n {
                0.2
            } else {
                0.0
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; n];
        let opts = GmresOptions { restart: 10, max_iter: 500, tol: 1e-12 };
        let apply = |v: &[f64]| (&a * DVector::from_column_slice(v)).as_slice().to_vec();
        let rep = gmres(apply, |v| v.to_vec(), &b, &mut x, &opts).unwrap();
        assert!(rep.converged);
        let r = &a * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.norm() < 1e-10);
    }
}

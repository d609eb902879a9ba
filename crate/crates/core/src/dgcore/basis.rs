//! Orthonormal polynomial bases: Dubiner-type modal basis on the reference
//! triangle and scaled Legendre polynomials in time.

/// Number of polynomials of total degree `<= p` in two variables.
#[inline]
pub fn dim_p(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Values and reference gradients of the orthonormal triangle basis up to
/// total degree `p`, ordered by increasing total degree.
///
/// The basis is orthonormal in `L2` of the reference triangle `(0,0),(1,0),(0,1)`.
pub fn triangle_basis(p: usize, xi: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
    let (x, y) = (xi[0], xi[1]);
    // Q_i(x, y) = (1-y)^i P_i(2x/(1-y) - 1), built by a singularity-free recurrence.
    let mut q = vec![0.0; p + 1];
    let mut dq = vec![[0.0; 2]; p + 1];
    q[0] = 1.0;
    if p >= 1 {
        q[1] = 2.0 * x - 1.0 + y;
        dq[1] = [2.0, 1.0];
    }
    let s = 1.0 - y;
    for n in 1..p {
        let nf = n as f64;
        let lin = 2.0 * x - s;
        let dlin = [2.0, 1.0];
        q[n + 1] = ((2.0 * nf + 1.0) * lin * q[n] - nf * s * s * q[n - 1]) / (nf + 1.0);
        for d in 0..2 {
            let ds2 = if d == 1 { -2.0 * s } else { 0.0 };
            dq[n + 1][d] = ((2.0 * nf + 1.0) * (dlin[d] * q[n] + lin * dq[n][d]) - nf * (ds2 * q[n - 1] + s * s * dq[n - 1][d])) / (nf + 1.0);
        }
    }
    let t = 2.0 * y - 1.0;
    let mut idx = 0;
    let mut jac = vec![0.0; p + 1];
    let mut djac = vec![0.0; p + 1];
    for n in 0..=p {
        for i in (0..=n).rev() {
            let j = n - i;
            jacobi(2 * i + 1, j, t, &mut jac, &mut djac);
            let c = (2.0 * (2 * i + 1) as f64 * (i + j + 1) as f64).sqrt();
            values[idx] = c * q[i] * jac[j];
            // d/dy of P_j(2y - 1) = 2 P_j'
            grads[idx] = [c * dq[i][0] * jac[j], c * (dq[i][1] * jac[j] + q[i] * 2.0 * djac[j])];
            idx += 1;
        }
    }
}

/// Jacobi polynomials `P_k^{(alpha, 0)}(t)` and derivatives for `k <= n`.
fn jacobi(alpha: usize, n: usize, t: f64, v: &mut [f64], dv: &mut [f64]) {
    let a = alpha as f64;
    v[0] = 1.0;
    dv[0] = 0.0;
    if n == 0 {
        return;
    }
    v[1] = 0.5 * (a + 2.0) * t + 0.5 * a;
    dv[1] = 0.5 * (a + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let c1 = 2.0 * (kf + 1.0) * (kf + a + 1.0) * (2.0 * kf + a);
        let c2 = (2.0 * kf + a + 1.0) * a * a;
        let c3 = (2.0 * kf + a) * (2.0 * kf + a + 1.0) * (2.0 * kf + a + 2.0);
        let c4 = 2.0 * (kf + a) * kf * (2.0 * kf + a + 2.0);
        v[k + 1] = ((c2 + c3 * t) * v[k] - c4 * v[k - 1]) / c1;
        dv[k + 1] = ((c2 + c3 * t) * dv[k] + c3 * v[k] - c4 * dv[k - 1]) / c1;
    }
}

/// Legendre polynomials `P_l` and derivatives on `[-1, 1]` for `l <= q`.
pub fn legendre(q: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; q + 1];
    let mut dp = vec![0.0; q + 1];
    p[0] = 1.0;
    if q >= 1 {
        p[1] = s;
        dp[1] = 1.0;
    }
    for l in 1..q {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * s * p[l] - lf * p[l - 1]) / (lf + 1.0);
        dp[l + 1] = dp[l - 1] + (2.0 * lf + 1.0) * p[l];
    }
    (p, dp)
}

/// Orthonormal Legendre basis on `[t0, t0 + tau]`: values and time derivatives at `t`.
pub fn time_basis(q: usize, t0: f64, tau: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    let s = 2.0 * (t - t0) / tau - 1.0;
    let (p, dp) = legendre(q, s);
    let mut v = Vec::with_capacity(q + 1);
    let mut dv = Vec::with_capacity(q + 1);
    for l in 0..=q {
        let c = ((2 * l + 1) as f64 / tau).sqrt();
        v.push(c * p[l]);
        dv.push(c * dp[l] * 2.0 / tau);
    }
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::super::quadrature::{gauss_legendre, TriangleRule};
    use super::*;

    #[test]
    fn orthonormal_on_reference_triangle() {
        for p in 0..=9 {
            let n = dim_p(p);
            let rule = TriangleRule::with_degree(2 * p + 2);
            let mut g = vec![0.0; n * n];
            let mut v = vec![0.0; n];
            let mut d = vec![[0.0; 2]; n];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                triangle_basis(p, *x, &mut v, &mut d);
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] += w * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((g[i * n + j] - e).abs() < 1e-12, "p={p} ({i},{j}) {}", g[i * n + j]);
                }
            }
        }
    }

    #[test]
    fn hierarchical_by_degree() {
        // the first dim_p(k) functions span P_k: a degree-k function has no higher modes
        let x = [0.2, 0.3];
        let mut v = vec![0.0; dim_p(4)];
        let mut d = vec![[0.0; 2]; dim_p(4)];
        triangle_basis(4, x, &mut v, &mut d);
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-14);
        let mut v2 = vec![0.0; dim_p(2)];
        let mut d2 = vec![[0.0; 2]; dim_p(2)];
        triangle_basis(2, x, &mut v2, &mut d2);
        assert_eq!(&v[..dim_p(2)], &v2[..]);
    }

    #[test]
    fn gradients_match_differences() {
        let p = 6;
        let n = dim_p(p);
        let x = [0.27, 0.41];
        let mut v = vec![0.0; n];
        let mut d = vec![[0.0; 2]; n];
        triangle_basis(p, x, &mut v, &mut d);
        let h = 1e-6;
        for c in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let (mut vp, mut vm) = (vec![0.0; n], vec![0.0; n]);
            let mut dd = vec![[0.0; 2]; n];
            triangle_basis(p, xp, &mut vp, &mut dd);
            triangle_basis(p, xm, &mut vm, &mut dd);
            for i in 0..n {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - d[i][c]).abs() < 1e-6 * (1.0 + d[i][c].abs()), "i={i} c={c}");
            }
        }
    }

    #[test]
    fn time_basis_orthonormal() {
        let (t0, tau) = (3.0, 0.5);
        let (x, w) = gauss_legendre(5);
        let mut g = [[0.0; 3]; 3];
        for (s, ws) in x.iter().zip(&w) {
            let t = t0 + 0.5 * tau * (s + 1.0);
            let (v, _) = time_basis(2, t0, tau, t);
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += 0.5 * tau * ws * v[i] * v[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        let (_, dv) = time_basis(1, t0, tau, t0 + 0.1);
        assert!((dv[1] - 3f64.sqrt() / tau.sqrt() * 2.0 / tau).abs() < 1e-12);
    }
}

use serde::{Deserialize, Serialize};

/// A boundary given as the graph `x2 = g(x1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCurve {
    /// `g(x1) = h_c exp(-(x1/a_c)^2) cos^2(pi x1 / lambda_c)`, a five-peak mountain chain.
    Schaer { h_c: f64, a_c: f64, lambda_c: f64 },
    /// `g(x1) = height`.
    Flat { height: f64 },
}

impl BoundaryCurve {
    pub fn height(&self, x1: f64) -> f64 {
        match *self {
            BoundaryCurve::Schaer { h_c, a_c, lambda_c } => {
                let c = (std::f64::consts::PI * x1 / lambda_c).cos();
                h_c * (-(x1 / a_c).powi(2)).exp() * c * c
            }
            BoundaryCurve::Flat { height } => height,
        }
    }

    /// Point of the true curve above the chord parameter `s` between `a` and `b`.
    pub fn curve_point(&self, a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
        let x = a[0] + s * (b[0] - a[0]);
        [x, self.height(x)]
    }

    /// Cubic interpolant of the curve through the parameters 0, 1/3, 2/3, 1.
    pub fn edge_point(&self, a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
        let nodes = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let pts = [a, self.curve_point(a, b, nodes[1]), self.curve_point(a, b, nodes[2]), b];
        let mut out = [0.0; 2];
        for i in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if i != j {
                    l *= (s - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            out[0] += l * pts[i][0];
            out[1] += l * pts[i][1];
        }
        out
    }
}

/// Cubic Lagrange shape functions on the reference triangle and their
/// gradients with respect to `(xi, eta)`.
///
/// Node order: vertices 0..3, then two nodes per edge `k` (from vertex
/// `(k+1)%3` towards `(k+2)%3`), then the interior node.
pub fn p3_shape(xi: [f64; 2]) -> ([f64; 10], [[f64; 2]; 10]) {
    let l = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut n = [0.0; 10];
    let mut dn = [[0.0; 2]; 10];
    for i in 0..3 {
        let li = l[i];
        n[i] = 0.5 * li * (3.0 * li - 1.0) * (3.0 * li - 2.0);
        let d = 0.5 * (27.0 * li * li - 18.0 * li + 2.0);
        dn[i] = [d * dl[i][0], d * dl[i][1]];
    }
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        // node nearer i, then node nearer j
        for (slot, (a, b)) in [(i, j), (j, i)].into_iter().enumerate() {
            let (la, lb) = (l[a], l[b]);
            let idx = 3 + 2 * k + slot;
            n[idx] = 4.5 * la * lb * (3.0 * la - 1.0);
            let da = 4.5 * lb * (6.0 * la - 1.0);
            let db = 4.5 * la * (3.0 * la - 1.0);
            dn[idx] = [da * dl[a][0] + db * dl[b][0], da * dl[a][1] + db * dl[b][1]];
        }
    }
    n[9] = 27.0 * l[0] * l[1] * l[2];
    for c in 0..2 {
        dn[9][c] = 27.0 * (dl[0][c] * l[1] * l[2] + l[0] * dl[1][c] * l[2] + l[0] * l[1] * dl[2][c]);
    }
    (n, dn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schaer() -> BoundaryCurve {
        BoundaryCurve::Schaer { h_c: 250.0, a_c: 5000.0, lambda_c: 4000.0 }
    }

    #[test]
    fn peak_height() {
        assert_eq!(schaer().height(0.0), 250.0);
        let far = schaer().height(25000.0);
        let expected = 250.0 * (-25.0f64).exp() * (std::f64::consts::PI * 6.25).cos().powi(2);
        assert!((far - expected).abs() < 1e-15);
        assert!(far < 3.6e-9);
    }

    #[test]
    fn edge_endpoints_exact() {
        let c = schaer();
        let a = [100.0, c.height(100.0)];
        let b = [300.0, c.height(300.0)];
        assert_eq!(c.edge_point(a, b, 0.0), a);
        assert_eq!(c.edge_point(a, b, 1.0), b);
    }

    #[test]
    fn cubic_edge_accuracy() {
        let c = schaer();
        for start in [-1000.0, -300.0, 0.0, 850.0, 2000.0] {
            let a = [start, c.height(start)];
            let b = [start + 200.0, c.height(start + 200.0)];
            for k in 0..=400 {
                let s = k as f64 / 400.0;
                let p = c.edge_point(a, b, s);
                assert!((p[1] - c.height(p[0])).abs() <= 1e-3 * 250.0);
            }
        }
    }

    #[test]
    fn shape_partition_of_unity_and_nodality() {
        let nodes: [[f64; 2]; 10] = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [2.0 / 3.0, 1.0 / 3.0],
            [1.0 / 3.0, 2.0 / 3.0],
            [0.0, 2.0 / 3.0],
            [0.0, 1.0 / 3.0],
            [1.0 / 3.0, 0.0],
            [2.0 / 3.0, 0.0],
            [1.0 / 3.0, 1.0 / 3.0],
        ];
        for (k, x) in nodes.iter().enumerate() {
            let (n, dn) = p3_shape(*x);
            for (j, v) in n.iter().enumerate() {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-13, "node {k} fn {j}: {v}");
            }
            let s: [f64; 2] = dn.iter().fold([0.0, 0.0], |a, d| [a[0] + d[0], a[1] + d[1]]);
            assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
        }
        // gradient against central differences
        let x = [0.21, 0.33];
        let (_, dn) = p3_shape(x);
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (np, _) = p3_shape(xp);
            let (nm, _) = p3_shape(xm);
            for j in 0..10 {
                assert!(((np[j] - nm[j]) / (2.0 * h) - dn[j][c]).abs() < 1e-7);
            }
        }
    }
}

//! Riemannian metric tensors prescribing local edge lengths.

use super::{PointLocator, TriMesh};

/// Symmetric 2x2 tensor `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Metric2 {
    pub fn isotropic(h: f64) -> Self {
        Metric2 { a: 1.0 / (h * h), b: 0.0, c: 1.0 / (h * h) }
    }

    /// Metric with edge length `h1` along direction `angle` and `h2` across it.
    pub fn from_sizes(h1: f64, h2: f64, angle: f64) -> Self {
        Self::from_eigen(1.0 / (h1 * h1), 1.0 / (h2 * h2), angle)
    }

    /// `R diag(l1, l2) R^T` with the first eigenvector at `angle`.
    pub fn from_eigen(l1: f64, l2: f64, angle: f64) -> Self {
        let (s, co) = angle.sin_cos();
        Metric2 { a: l1 * co * co + l2 * s * s, b: (l1 - l2) * co * s, c: l1 * s * s + l2 * co * co }
    }

    /// Eigenvalues (descending) and the angle of the eigenvector of the largest one.
    pub fn eigen(&self) -> (f64, f64, f64) {
        let tr = 0.5 * (self.a + self.c);
        let d = (0.25 * (self.a - self.c).powi(2) + self.b * self.b).sqrt();
        let l1 = tr + d;
        let l2 = tr - d;
        let angle = if d == 0.0 { 0.0 } else { 0.5 * (2.0 * self.b).atan2(self.a - self.c) };
        (l1, l2, angle)
    }

    pub fn is_spd(&self) -> bool {
        self.a > 0.0 && self.a * self.c - self.b * self.b > 0.0 && self.a.is_finite() && self.c.is_finite()
    }

    fn map_eigen(&self, f: impl Fn(f64) -> f64) -> Self {
        let (l1, l2, angle) = self.eigen();
        Self::from_eigen(f(l1), f(l2), angle)
    }

    pub fn log(&self) -> Self {
        self.map_eigen(f64::ln)
    }

    pub fn exp(&self) -> Self {
        self.map_eigen(f64::exp)
    }

    pub fn scale(&self, s: f64) -> Self {
        Metric2 { a: self.a * s, b: self.b * s, c: self.c * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        Metric2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c }
    }

    /// `sqrt(e^T M e)`.
    pub fn length(&self, e: [f64; 2]) -> f64 {
        (self.a * e[0] * e[0] + 2.0 * self.b * e[0] * e[1] + self.c * e[1] * e[1]).max(0.0).sqrt()
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// Limit the size ratio `h_max / h_min` to `max_ratio` and sizes to `[h_min, h_max]`.
    pub fn bounded(&self, max_ratio: f64, h_min: f64, h_max: f64) -> Self {
        let (l1, l2, angle) = self.eigen();
        let l1 = l1.clamp(1.0 / (h_max * h_max), 1.0 / (h_min * h_min));
        let l2 = l2.clamp(1.0 / (h_max * h_max), 1.0 / (h_min * h_min));
        let l2 = l2.max(l1 / (max_ratio * max_ratio));
        Self::from_eigen(l1, l2, angle)
    }

    /// Log-Euclidean weighted mean.
    pub fn log_mean(items: &[(f64, Metric2)]) -> Metric2 {
        let mut acc = Metric2 { a: 0.0, b: 0.0, c: 0.0 };
        let mut wsum = 0.0;
        for (w, m) in items {
            acc = acc.add(&m.log().scale(*w));
            wsum += w;
        }
        acc.scale(1.0 / wsum).exp()
    }

    /// The metric in which the straight triangle is equilateral with unit edges.
    pub fn implied_by_triangle(v: &[[f64; 2]; 3]) -> Self {
        // Solve e_k^T M e_k = 1 for the three edges.
        let e: Vec<[f64; 2]> = (0..3).map(|k| [v[(k + 1) % 3][0] - v[k][0], v[(k + 1) % 3][1] - v[k][1]]).collect();
        let m = nalgebra::Matrix3::from_fn(|r, col| match col {
            0 => e[r][0] * e[r][0],
            1 => 2.0 * e[r][0] * e[r][1],
            _ => e[r][1] * e[r][1],
        });
        let sol = m.lu().solve(&nalgebra::Vector3::new(1.0, 1.0, 1.0)).unwrap_or(nalgebra::Vector3::new(1.0, 0.0, 1.0));
        Metric2 { a: sol[0], b: sol[1], c: sol[2] }
    }
}

/// Metric tensors at the vertices of a background mesh plus a target degree per
/// background cell.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub mesh: TriMesh,
    pub vertex_metric: Vec<Metric2>,
    pub cell_degree: Vec<usize>,
    log_metric: Vec<Metric2>,
    locator: PointLocator,
}

impl MetricField {
    pub fn new(mesh: TriMesh, vertex_metric: Vec<Metric2>, cell_degree: Vec<usize>) -> Self {
        assert_eq!(vertex_metric.len(), mesh.vertices.len());
        assert_eq!(cell_degree.len(), mesh.n_cells());
        let log_metric = vertex_metric.iter().map(|m| m.log()).collect();
        let locator = PointLocator::new(&mesh);
        MetricField { mesh, vertex_metric, cell_degree, log_metric, locator }
    }

    /// Constant metric over the whole mesh.
    pub fn uniform(mesh: &TriMesh, m: Metric2) -> Self {
        let nv = mesh.vertices.len();
        Self::new(mesh.clone(), vec![m; nv], mesh.degrees.clone())
    }

    /// Metric at an arbitrary point by log-Euclidean interpolation.
    pub fn at(&self, x: [f64; 2]) -> Metric2 {
        match self.locator.locate_nearest(&self.mesh, x) {
            Ok((k, bary)) => {
                let c = self.mesh.cells[k];
                let mut acc = Metric2 { a: 0.0, b: 0.0, c: 0.0 };
                for i in 0..3 {
                    let w = bary[i].clamp(0.0, 1.0);
                    acc = acc.add(&self.log_metric[c[i]].scale(w));
                }
                let s: f64 = bary.iter().map(|b| b.clamp(0.0, 1.0)).sum();
                acc.scale(1.0 / s).exp()
            }
            Err(_) => self.vertex_metric[0],
        }
    }

    pub fn degree_at(&self, x: [f64; 2]) -> usize {
        match self.locator.locate_nearest(&self.mesh, x) {
            Ok((k, _)) => self.cell_degree[k],
            Err(_) => self.cell_degree[0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_round_trip() {
        let m = Metric2::from_sizes(2.0, 10.0, 0.3);
        let (l1, l2, angle) = m.eigen();
        assert!((l1 - 0.25).abs() < 1e-14 && (l2 - 0.01).abs() < 1e-14);
        assert!((angle - 0.3).abs() < 1e-12);
        let back = m.log().exp();
        assert!((back.a - m.a).abs() < 1e-14 && (back.b - m.b).abs() < 1e-14);
    }

    #[test]
    fn unit_triangle_metric() {
        let v = [[0.0, 0.0], [2.0, 0.0], [1.0, 3f64.sqrt()]];
        let m = Metric2::implied_by_triangle(&v);
        assert!((m.a - 0.25).abs() < 1e-12 && m.b.abs() < 1e-12 && (m.c - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bounded_caps_ratio() {
        let m = Metric2::from_sizes(1.0, 1e6, 0.0).bounded(1000.0, 1e-3, 1e9);
        let (l1, l2, _) = m.eigen();
        assert!(((l1 / l2).sqrt() - 1000.0).abs() < 1e-6);
    }
}

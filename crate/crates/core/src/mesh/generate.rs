use super::{BoundaryCurve, BoundaryEdge, BoundaryTag, TriMesh};
use crate::error::{Error, Result};

/// Structured triangulation of a rectangle (optionally with a terrain-following
/// curved bottom) built from horizontal strips.
///
/// Level `k` is the horizontal line `k` (bottom to top) split into
/// `levels[k]` equal segments; each strip between two levels with `a` and `b`
/// segments holds `a + b` triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub levels: Vec<usize>,
    /// Tags of the bottom, right, top and left sides.
    pub tags: [BoundaryTag; 4],
    pub bottom_curve: Option<BoundaryCurve>,
    pub degree: usize,
}

impl RectangleSpec {
    /// `nx x ny` squares, each split into two right triangles.
    pub fn uniform_right_split(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Self {
        RectangleSpec {
            x,
            y,
            levels: vec![nx; ny + 1],
            tags: [BoundaryTag::NoFlux; 4],
            bottom_curve: None,
            degree: 1,
        }
    }

    /// Quasi-uniform mesh with exactly `n_cells` triangles of near-equilateral shape.
    pub fn with_cell_count(x: [f64; 2], y: [f64; 2], n_cells: usize) -> Self {
        let w = x[1] - x[0];
        let h = y[1] - y[0];
        let side = (4.0 * w * h / (3f64.sqrt() * n_cells as f64)).sqrt();
        let mut ns = ((h / (side * 3f64.sqrt() / 2.0)).round() as usize).max(1);
        while 2 * ns > n_cells {
            ns -= 1;
        }
        let base = n_cells / (2 * ns);
        let mut rem = n_cells - 2 * ns * base;
        let mut levels = vec![base; ns + 1];
        // interior levels contribute two cells per extra segment, end levels one
        let mut k = 1;
        while rem >= 2 && k < ns {
            levels[k] += 1;
            rem -= 2;
            k += 2;
        }
        let mut k = 2;
        while rem >= 2 && k < ns {
            levels[k] += 1;
            rem -= 2;
            k += 2;
        }
        if rem == 1 {
            levels[0] += 1;
            rem = 0;
        }
        debug_assert_eq!(rem, 0);
        RectangleSpec { x, y, levels, tags: [BoundaryTag::NoFlux; 4], bottom_curve: None, degree: 1 }
    }

    pub fn n_cells(&self) -> usize {
        self.levels.windows(2).map(|w| w[0] + w[1]).sum()
    }

    pub fn with_tags(mut self, tags: [BoundaryTag; 4]) -> Self {
        self.tags = tags;
        self
    }

    pub fn with_degree(mut self, p: usize) -> Self {
        self.degree = p;
        self
    }
}

/// Build the mesh described by `spec`.
pub fn rectangle(spec: &RectangleSpec) -> Result<TriMesh> {
    if spec.levels.len() < 2 || spec.levels.iter().any(|&n| n == 0) {
        return Err(Error::Range { key: "levels".into(), msg: format!("{:?}", spec.levels) });
    }
    let (x0, x1) = (spec.x[0], spec.x[1]);
    let (y0, y1) = (spec.y[0], spec.y[1]);
    let ns = spec.levels.len() - 1;
    let mut vertices = Vec::new();
    let mut level_start = Vec::with_capacity(ns + 1);
    for (k, &n) in spec.levels.iter().enumerate() {
        level_start.push(vertices.len());
        let frac = k as f64 / ns as f64;
        for i in 0..=n {
            let x = if i == n { x1 } else { x0 + (x1 - x0) * i as f64 / n as f64 };
            let bottom = spec.bottom_curve.map_or(y0, |c| c.height(x));
            let y = if k == ns { y1 } else { bottom + frac * (y1 - bottom) };
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::new();
    for k in 0..ns {
        let (a, b) = (spec.levels[k], spec.levels[k + 1]);
        let (sb, st) = (level_start[k], level_start[k + 1]);
        let (mut i, mut j) = (0, 0);
        while i < a || j < b {
            let advance_bottom = if i == a {
                false
            } else if j == b {
                true
            } else {
                let xb = vertices[sb + i + 1][0] + vertices[sb + i][0];
                let xt = vertices[st + j + 1][0] + vertices[st + j][0];
                xb <= xt
            };
            if advance_bottom {
                cells.push([sb + i, sb + i + 1, st + j]);
                i += 1;
            } else {
                cells.push([sb + i, st + j + 1, st + j]);
                j += 1;
            }
        }
    }
    let mut boundary = Vec::new();
    let [t_bottom, t_right, t_top, t_left] = spec.tags;
    let n0 = spec.levels[0];
    for i in 0..n0 {
        boundary.push(BoundaryEdge { v: [i, i + 1], tag: t_bottom, curved: spec.bottom_curve.is_some() });
    }
    let ntop = spec.levels[ns];
    for i in 0..ntop {
        let s = level_start[ns];
        boundary.push(BoundaryEdge { v: [s + i + 1, s + i], tag: t_top, curved: false });
    }
    for k in 0..ns {
        let r0 = level_start[k] + spec.levels[k];
        let r1 = level_start[k + 1] + spec.levels[k + 1];
        boundary.push(BoundaryEdge { v: [r0, r1], tag: t_right, curved: false });
        boundary.push(BoundaryEdge { v: [level_start[k + 1], level_start[k]], tag: t_left, curved: false });
    }
    let degrees = vec![spec.degree; cells.len()];
    TriMesh::new(vertices, cells, degrees, boundary, spec.bottom_curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cell_counts() {
        for (w, h, n) in [(51200.0, 6400.0, 117), (1000.0, 1000.0, 556), (1000.0, 1000.0, 2248), (1000.0, 1000.0, 500)] {
            let spec = RectangleSpec::with_cell_count([0.0, w], [0.0, h], n);
            assert_eq!(spec.n_cells(), n);
            let m = rectangle(&spec).unwrap();
            assert_eq!(m.n_cells(), n);
            let area: f64 = (0..m.n_cells()).map(|k| m.straight_area(k)).sum();
            assert!((area - w * h).abs() < 1e-9 * w * h);
        }
    }

    #[test]
    fn table_mesh_dof() {
        let m = rectangle(&RectangleSpec::with_cell_count([-25600.0, 25600.0], [0.0, 6400.0], 117).with_degree(3)).unwrap();
        assert_eq!(m.total_dof_per_equation(), 1170);
    }

    #[test]
    fn curved_bottom_follows_terrain() {
        let curve = BoundaryCurve::Schaer { h_c: 250.0, a_c: 5000.0, lambda_c: 4000.0 };
        let mut spec = RectangleSpec::with_cell_count([-25000.0, 25000.0], [0.0, 21000.0], 400);
        spec.bottom_curve = Some(curve);
        let m = rectangle(&spec).unwrap();
        for b in m.boundary.iter().filter(|b| b.curved) {
            for &v in &b.v {
                let p = m.vertices[v];
                assert!((p[1] - curve.height(p[0])).abs() < 1e-10);
            }
        }
        let flat = 50000.0 * 21000.0;
        assert!(m.total_area() < flat);
    }
}

//! Metric-driven remeshing by local operations: edge splits, edge collapses,
//! metric Delaunay flips and metric-weighted smoothing.

use std::collections::HashMap;

use log::warn;

use super::{signed_area, BoundaryCurve, BoundaryEdge, BoundaryTag, Metric2, MetricField, TriMesh, MAX_DEGREE};
use crate::error::Result;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
pub struct RemeshOptions {
    pub max_sweeps: usize,
    /// Stop once the fraction of edges outside `[1/sqrt 2, sqrt 2]` drops below this.
    pub tolerated_fraction: f64,
    /// Edges shorter than this are never split.
    pub h_min: f64,
    pub max_anisotropy: f64,
    pub smoothing_passes: usize,
    pub degree_range: (usize, usize),
}

impl Default for RemeshOptions {
    fn default() -> Self {
        RemeshOptions {
            max_sweeps: 30,
            tolerated_fraction: 0.05,
            h_min: 0.0,
            max_anisotropy: 1000.0,
            smoothing_passes: 2,
            degree_range: (1, MAX_DEGREE),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemeshReport {
    pub sweeps: usize,
    pub violating_fraction: f64,
    /// `false` when the sweep limit was hit before the tolerance was met.
    pub converged: bool,
}

struct Work<'a> {
    pts: Vec<[f64; 2]>,
    met: Vec<Metric2>,
    logm: Vec<Metric2>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    vtris: Vec<Vec<usize>>,
    bedges: HashMap<(usize, usize), (BoundaryTag, bool)>,
    on_boundary: Vec<bool>,
    fixed: Vec<bool>,
    curve: Option<BoundaryCurve>,
    field: &'a MetricField,
    opts: &'a RemeshOptions,
    diam: f64,
}

#[inline]
fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<'a> Work<'a> {
    fn new(mesh: &TriMesh, field: &'a MetricField, opts: &'a RemeshOptions) -> Self {
        let mut w = Work {
            pts: mesh.vertices.clone(),
            met: vec![],
            logm: vec![],
            tris: mesh.cells.clone(),
            alive: vec![true; mesh.n_cells()],
            vtris: vec![Vec::new(); mesh.vertices.len()],
            bedges: HashMap::new(),
            on_boundary: vec![false; mesh.vertices.len()],
            fixed: vec![false; mesh.vertices.len()],
            curve: mesh.curve,
            field,
            opts,
            diam: mesh.diameter(),
        };
        for (t, c) in w.tris.iter().enumerate() {
            for &v in c {
                w.vtris[v].push(t);
            }
        }
        for b in &mesh.boundary {
            w.bedges.insert(key(b.v[0], b.v[1]), (b.tag, b.curved));
            w.on_boundary[b.v[0]] = true;
            w.on_boundary[b.v[1]] = true;
        }
        // corners, periodic vertices and tag changes stay fixed
        let mut incident: Vec<Vec<(usize, BoundaryTag, bool)>> = vec![Vec::new(); mesh.vertices.len()];
        for b in &mesh.boundary {
            incident[b.v[0]].push((b.v[1], b.tag, b.curved));
            incident[b.v[1]].push((b.v[0], b.tag, b.curved));
        }
        for (v, inc) in incident.iter().enumerate() {
            if inc.is_empty() {
                continue;
            }
            let fixed = inc.len() != 2
                || inc.iter().any(|e| e.1.is_periodic())
                || inc[0].1 != inc[1].1
                || inc[0].2 != inc[1].2
                || (!inc[0].2 && {
                    let p = w.pts[v];
                    let (a, b) = (w.pts[inc[0].0], w.pts[inc[1].0]);
                    let e1 = [a[0] - p[0], a[1] - p[1]];
                    let e2 = [b[0] - p[0], b[1] - p[1]];
                    let cross = e1[0] * e2[1] - e1[1] * e2[0];
                    cross.abs() > 1e-10 * (e1[0].hypot(e1[1]) * e2[0].hypot(e2[1]))
                });
            w.fixed[v] = fixed;
        }
        for i in 0..w.pts.len() {
            let m = w.metric_at(w.pts[i]);
            w.met.push(m);
            w.logm.push(m.log());
        }
        w
    }

    fn metric_at(&self, x: [f64; 2]) -> Metric2 {
        let h_max = self.diam.max(1e-300);
        let h_min = if self.opts.h_min > 0.0 { self.opts.h_min } else { 1e-9 * h_max };
        self.field.at(x).bounded(self.opts.max_anisotropy, h_min, h_max)
    }

    fn add_vertex(&mut self, p: [f64; 2], boundary: bool) -> usize {
        let m = self.metric_at(p);
        self.pts.push(p);
        self.met.push(m);
        self.logm.push(m.log());
        self.vtris.push(Vec::new());
        self.on_boundary.push(boundary);
        self.fixed.push(false);
        self.pts.len() - 1
    }

    fn mlen(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let e = [pb[0] - pa[0], pb[1] - pa[1]];
        let mid = self.logm[a].add(&self.logm[b]).scale(0.5).exp();
        (self.met[a].length(e) + 4.0 * mid.length(e) + self.met[b].length(e)) / 6.0
    }

    fn area(&self, t: [usize; 3]) -> f64 {
        signed_area(self.pts[t[0]], self.pts[t[1]], self.pts[t[2]])
    }

    /// Minimal admissible area for a triangle near vertex `v`.
    fn area_floor(&self, v: usize) -> f64 {
        // a tiny fraction of the metric unit-triangle area
        let det = self.met[v].det().max(1e-300);
        1e-6 / det.sqrt()
    }

    fn edge_tris(&self, a: usize, b: usize) -> Vec<usize> {
        self.vtris[a].iter().copied().filter(|&t| self.tris[t].contains(&b)).collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (t, c) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (c[k], c[(k + 1) % 3]);
                let other = self.edge_tris(a, b);
                // count each edge once: from its lowest-id triangle
                if other.iter().all(|&o| o >= t) {
                    out.push(key(a, b));
                }
            }
        }
        out
    }

    fn replace_tri(&mut self, t: usize, new: [usize; 3]) {
        for &v in &self.tris[t] {
            self.vtris[v].retain(|&x| x != t);
        }
        self.tris[t] = new;
        for &v in &new {
            self.vtris[v].push(t);
        }
    }

    fn push_tri(&mut self, new: [usize; 3]) {
        let t = self.tris.len();
        self.tris.push(new);
        self.alive.push(true);
        for &v in &new {
            self.vtris[v].push(t);
        }
    }

    fn kill_tri(&mut self, t: usize) {
        for &v in &self.tris[t] {
            self.vtris[v].retain(|&x| x != t);
        }
        self.alive[t] = false;
    }

    /// Rotate so that the triangle reads `(a, b, c)` with `a -> b` in CCW order.
    fn oriented(&self, t: usize, a: usize, b: usize) -> Option<[usize; 3]> {
        let c = self.tris[t];
        for k in 0..3 {
            if c[k] == a && c[(k + 1) % 3] == b {
                return Some([a, b, c[(k + 2) % 3]]);
            }
        }
        None
    }

    fn split(&mut self, a: usize, b: usize) -> bool {
        let tris = self.edge_tris(a, b);
        if tris.is_empty() {
            return false;
        }
        let bkey = key(a, b);
        let binfo = self.bedges.get(&bkey).copied();
        if let Some((tag, _)) = binfo {
            if tag.is_periodic() {
                return false;
            }
        }
        let (pa, pb) = (self.pts[a], self.pts[b]);
        if 0.5 * (pa[0] - pb[0]).hypot(pa[1] - pb[1]) < self.opts.h_min {
            return false;
        }
        let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if let (Some((_, true)), Some(curve)) = (binfo, self.curve) {
            m = curve.curve_point(pa, pb, 0.5);
        }
        let mut plan = Vec::new();
        for &t in &tris {
            let o = self.oriented(t, a, b).or_else(|| self.oriented(t, b, a)).unwrap();
            let (u, v, c) = (o[0], o[1], o[2]);
            let a1 = signed_area(self.pts[u], m, self.pts[c]);
            let a2 = signed_area(m, self.pts[v], self.pts[c]);
            if a1 <= 0.0 || a2 <= 0.0 {
                return false;
            }
            plan.push((t, u, v, c));
        }
        let nv = self.add_vertex(m, binfo.is_some());
        for (t, u, v, c) in plan {
            self.replace_tri(t, [u, nv, c]);
            self.push_tri([nv, v, c]);
        }
        if let Some(info) = binfo {
            self.bedges.remove(&bkey);
            self.bedges.insert(key(a, nv), info);
            self.bedges.insert(key(nv, b), info);
        }
        true
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &t in &self.vtris[v] {
            for &u in &self.tris[t] {
                if u != v && !out.contains(&u) {
                    out.push(u);
                }
            }
        }
        out
    }

    /// Collapse vertex `a` onto `b`.
    fn collapse(&mut self, a: usize, b: usize) -> bool {
        if self.fixed[a] {
            return false;
        }
        let shared = self.edge_tris(a, b);
        if shared.is_empty() {
            return false;
        }
        let edge_is_boundary = self.bedges.contains_key(&key(a, b));
        if self.on_boundary[a] {
            if !edge_is_boundary {
                return false;
            }
        } else if edge_is_boundary {
            return false;
        }
        // link condition
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na.iter().copied().filter(|x| nb.contains(x)).collect();
        let opposite: Vec<usize> = shared
            .iter()
            .map(|&t| *self.tris[t].iter().find(|&&x| x != a && x != b).unwrap())
            .collect();
        if common.len() != opposite.len() || !common.iter().all(|c| opposite.contains(c)) {
            return false;
        }
        if !self.on_boundary[a] && self.on_boundary[b] && shared.len() != 2 {
            return false;
        }
        let floor = self.area_floor(b);
        let star: Vec<usize> = self.vtris[a].clone();
        let mut new_tris = Vec::new();
        for &t in &star {
            if shared.contains(&t) {
                continue;
            }
            let mut c = self.tris[t];
            for v in c.iter_mut() {
                if *v == a {
                    *v = b;
                }
            }
            let area = self.area(c);
            if area <= floor.min(0.01 * self.area(self.tris[t]).abs()) {
                return false;
            }
            new_tris.push((t, c));
        }
        for &x in &na {
            if x != b && !nb.contains(&x) && self.mlen(b, x) > 1.5 * self.mlen(a, x).max(1.0) {
                return false;
            }
        }
        for &t in &shared {
            self.kill_tri(t);
        }
        for (t, c) in new_tris {
            self.replace_tri(t, c);
        }
        if self.on_boundary[a] {
            self.bedges.remove(&key(a, b));
            let other: Vec<(usize, usize)> = self.bedges.keys().copied().filter(|k| k.0 == a || k.1 == a).collect();
            for k in other {
                let info = self.bedges.remove(&k).unwrap();
                let c = if k.0 == a { k.1 } else { k.0 };
                self.bedges.insert(key(b, c), info);
            }
        }
        true
    }

    fn flip_if_better(&mut self, a: usize, b: usize) -> bool {
        if self.bedges.contains_key(&key(a, b)) {
            return false;
        }
        let tris = self.edge_tris(a, b);
        if tris.len() != 2 {
            return false;
        }
        let (t1, t2) = (tris[0], tris[1]);
        let Some(o1) = self.oriented(t1, a, b).or_else(|| self.oriented(t1, b, a)) else { return false };
        let (u, v, c) = (o1[0], o1[1], o1[2]);
        let Some(o2) = self.oriented(t2, v, u) else { return false };
        let d = o2[2];
        if self.edge_tris(c, d).len() > 0 {
            return false;
        }
        let m = Metric2::log_mean(&[(1.0, self.met[u]), (1.0, self.met[v]), (1.0, self.met[c]), (1.0, self.met[d])]);
        let (l1, l2, ang) = m.eigen();
        let half = Metric2::from_eigen(l1.sqrt(), l2.sqrt(), ang);
        let tr = |p: [f64; 2]| [half.a * p[0] + half.b * p[1], half.b * p[0] + half.c * p[1]];
        let (pu, pv, pc, pd) = (tr(self.pts[u]), tr(self.pts[v]), tr(self.pts[c]), tr(self.pts[d]));
        let incircle = {
            let r = |p: [f64; 2]| [p[0] - pd[0], p[1] - pd[1], (p[0] - pd[0]).powi(2) + (p[1] - pd[1]).powi(2)];
            let (x, y, z) = (r(pu), r(pv), r(pc));
            x[0] * (y[1] * z[2] - y[2] * z[1]) - x[1] * (y[0] * z[2] - y[2] * z[0]) + x[2] * (y[0] * z[1] - y[1] * z[0])
        };
        let scale = {
            let s = (pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2);
            s * s
        };
        if incircle <= 1e-9 * scale {
            return false;
        }
        let n1 = [c, u, d];
        let n2 = [d, v, c];
        if self.area(n1) <= 0.0 || self.area(n2) <= 0.0 {
            return false;
        }
        self.replace_tri(t1, n1);
        self.replace_tri(t2, n2);
        true
    }

    fn smooth(&mut self) {
        for v in 0..self.pts.len() {
            if self.on_boundary[v] || self.vtris[v].is_empty() {
                continue;
            }
            let nbrs = self.neighbors(v);
            let x = self.pts[v];
            let mut target = [0.0; 2];
            for &j in &nbrs {
                let l = self.mlen(v, j).max(1e-12);
                let p = self.pts[j];
                target[0] += p[0] + (x[0] - p[0]) / l;
                target[1] += p[1] + (x[1] - p[1]) / l;
            }
            target[0] /= nbrs.len() as f64;
            target[1] /= nbrs.len() as f64;
            let mut omega = 0.5;
            for _ in 0..4 {
                let cand = [x[0] + omega * (target[0] - x[0]), x[1] + omega * (target[1] - x[1])];
                self.pts[v] = cand;
                let ok = self.vtris[v].iter().all(|&t| {
                    let c = self.tris[t];
                    let p = |i: usize| if c[i] == v { x } else { self.pts[c[i]] };
                    let old = signed_area(p(0), p(1), p(2));
                    self.area(c) > 1e-3 * old
                });
                if ok {
                    let m = self.metric_at(cand);
                    self.met[v] = m;
                    self.logm[v] = m.log();
                    break;
                }
                self.pts[v] = x;
                omega *= 0.5;
            }
        }
    }

    fn violating_fraction(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let bad = edges
            .iter()
            .filter(|&&(a, b)| {
                let l = self.mlen(a, b);
                !(1.0 / SQRT2..=SQRT2).contains(&l)
            })
            .count();
        bad as f64 / edges.len() as f64
    }

    fn sweep(&mut self) {
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (self.mlen(a, b), a, b))
            .filter(|&(l, _, _)| l > SQRT2)
            .collect();
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in cand {
            if self.mlen(a, b) > SQRT2 {
                self.split(a, b);
            }
        }
        self.flips();
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (self.mlen(a, b), a, b))
            .filter(|&(l, _, _)| l < 1.0 / SQRT2)
            .collect();
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in cand {
            if self.edge_tris(a, b).is_empty() || self.mlen(a, b) >= 1.0 / SQRT2 {
                continue;
            }
            if !self.collapse(a, b) {
                self.collapse(b, a);
            }
        }
        self.flips();
        for _ in 0..self.opts.smoothing_passes {
            self.smooth();
            self.flips();
        }
    }

    fn flips(&mut self) {
        for _ in 0..5 {
            let mut any = false;
            for (a, b) in self.edges() {
                if self.flip_if_better(a, b) {
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }

    fn into_mesh(self, degree_range: (usize, usize)) -> Result<TriMesh> {
        let mut remap = vec![usize::MAX; self.pts.len()];
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        for (t, c) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            let mut nc = [0; 3];
            for k in 0..3 {
                if remap[c[k]] == usize::MAX {
                    remap[c[k]] = vertices.len();
                    vertices.push(self.pts[c[k]]);
                }
                nc[k] = remap[c[k]];
            }
            cells.push(nc);
        }
        let mut bkeys: Vec<_> = self.bedges.iter().collect();
        bkeys.sort_by_key(|(k, _)| **k);
        let boundary = bkeys
            .into_iter()
            .map(|(k, &(tag, curved))| BoundaryEdge { v: [remap[k.0], remap[k.1]], tag, curved })
            .collect();
        let degrees = cells
            .iter()
            .map(|c: &[usize; 3]| {
                let x = [
                    (vertices[c[0]][0] + vertices[c[1]][0] + vertices[c[2]][0]) / 3.0,
                    (vertices[c[0]][1] + vertices[c[1]][1] + vertices[c[2]][1]) / 3.0,
                ];
                self.field.degree_at(x).clamp(degree_range.0, degree_range.1)
            })
            .collect();
        TriMesh::new(vertices, cells, degrees, boundary, self.curve)
    }
}

/// Generate a mesh whose edges have approximately unit length in `metric`.
///
/// Boundary vertices at corners, tag changes and periodic sides are kept; new
/// boundary vertices are inserted on the boundary curve.
pub fn adapt_to_metric(mesh: &TriMesh, metric: &MetricField, opts: &RemeshOptions) -> Result<(TriMesh, RemeshReport)> {
    let mut w = Work::new(mesh, metric, opts);
    let mut report = RemeshReport { sweeps: 0, violating_fraction: w.violating_fraction(), converged: false };
    if report.violating_fraction <= opts.tolerated_fraction {
        // already adapted: only improve shape
        w.flips();
        report.converged = true;
        let m = w.into_mesh(opts.degree_range)?;
        return Ok((m, report));
    }
    for s in 0..opts.max_sweeps {
        w.sweep();
        report.sweeps = s + 1;
        report.violating_fraction = w.violating_fraction();
        if report.violating_fraction <= opts.tolerated_fraction {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        warn!("remeshing stopped after {} sweeps with {:.1}% violating edges", report.sweeps, 100.0 * report.violating_fraction);
    }
    let m = w.into_mesh(opts.degree_range)?;
    Ok((m, report))
}

#[cfg(test)]
mod tests {
    use super::super::{rectangle, RectangleSpec};
    use super::*;

    fn mean_edge(m: &TriMesh) -> f64 {
        let mut s = 0.0;
        for k in 0..m.n_cells() {
            for e in 0..3 {
                s += m.edge_length(k, e);
            }
        }
        s / (3 * m.n_cells()) as f64
    }

    #[test]
    fn isotropic_fixed_point() {
        let m = rectangle(&RectangleSpec::with_cell_count([0.0, 1.0], [0.0, 1.0], 200)).unwrap();
        let h = mean_edge(&m);
        let field = MetricField::uniform(&m, Metric2::isotropic(h));
        let (out, rep) = adapt_to_metric(&m, &field, &RemeshOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(out.n_cells(), m.n_cells());
    }

    #[test]
    fn refinement_quadruples_cells() {
        let m = rectangle(&RectangleSpec::with_cell_count([0.0, 1.0], [0.0, 1.0], 200)).unwrap();
        let h = mean_edge(&m);
        let field = MetricField::uniform(&m, Metric2::isotropic(h / 2.0));
        let (out, rep) = adapt_to_metric(&m, &field, &RemeshOptions::default()).unwrap();
        let ratio = out.n_cells() as f64 / m.n_cells() as f64;
        assert!((ratio - 4.0).abs() <= 1.2, "ratio {ratio}, report {rep:?}");
        let area: f64 = (0..out.n_cells()).map(|k| out.straight_area(k)).sum();
        assert!((area - 1.0).abs() < 1e-8);
    }
}

//! Conforming triangulations with per-cell polynomial degree, tagged boundary
//! edges, periodic pairing and curved (cubic) boundary edges.

mod curved;
mod generate;
mod io;
mod locate;
pub mod metric;
mod remesh;

pub use curved::{p3_shape, BoundaryCurve};
pub use generate::{rectangle, RectangleSpec};
pub use io::{read_mesh, write_mesh};
pub use locate::PointLocator;
pub use metric::{Metric2, MetricField};
pub use remesh::{adapt_to_metric, RemeshOptions, RemeshReport};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// Axis of a symmetry line: `X1` means the line `x1 = const` (normal along x1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    NoFlux,
    NonReflecting,
    /// Edges with the same id are paired by a common translation.
    Periodic(u32),
    Symmetric(Axis),
}

impl BoundaryTag {
    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryTag::Periodic(_))
    }
}

/// A boundary edge as supplied by the generator or mesh file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
    /// Whether the edge follows the mesh's boundary curve.
    pub curved: bool,
}

/// A mesh face: either an interior edge shared by two cells, a periodic pair
/// (treated as interior with a translation), or a physical boundary edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    /// Owner cell and its local edge index.
    pub left: (usize, usize),
    /// Neighbour cell and local edge index, `None` on the physical boundary.
    pub right: Option<(usize, usize)>,
    /// Index into [`TriMesh::boundary`] for boundary faces (owner side for periodic pairs).
    pub boundary: Option<usize>,
    /// Translation mapping owner-side points onto the neighbour side (non-zero for periodic pairs).
    pub shift: [f64; 2],
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 3]>,
    pub degrees: Vec<usize>,
    pub boundary: Vec<BoundaryEdge>,
    pub curve: Option<BoundaryCurve>,
    #[serde(skip)]
    faces: Vec<Face>,
    #[serde(skip)]
    cell_faces: Vec<[usize; 3]>,
    #[serde(skip)]
    curved_cells: Vec<Option<usize>>,
}

/// Signed area of the straight triangle `(a, b, c)`.
#[inline]
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl TriMesh {
    /// Validate the raw description and derive faces and neighbour relations.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        degrees: Vec<usize>,
        boundary: Vec<BoundaryEdge>,
        curve: Option<BoundaryCurve>,
    ) -> Result<Self> {
        let mut mesh = TriMesh {
            vertices,
            cells,
            degrees,
            boundary,
            curve,
            faces: vec![],
            cell_faces: vec![],
            curved_cells: vec![],
        };
        mesh.build_connectivity()?;
        Ok(mesh)
    }

    /// Recompute derived data after deserialization or manual edits.
    pub fn build_connectivity(&mut self) -> Result<()> {
        let nv = self.vertices.len();
        if self.degrees.len() != self.cells.len() {
            return Err(Error::NonConforming(format!(
                "{} degrees for {} cells",
                self.degrees.len(),
                self.cells.len()
            )));
        }
        for (k, c) in self.cells.iter().enumerate() {
            if c.iter().any(|&v| v >= nv) {
                return Err(Error::NonConforming(format!("cell {k} references a missing vertex")));
            }
            let area = signed_area(self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]);
            if !(area > 0.0) {
                return Err(Error::InvertedCell { cell: k, area });
            }
            let p = self.degrees[k];
            if !(1..=MAX_DEGREE).contains(&p) {
                return Err(Error::Range { key: "degree".into(), msg: format!("cell {k} has degree {p}") });
            }
        }
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (k, c) in self.cells.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (c[(e + 1) % 3], c[(e + 2) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((k, e));
            }
        }
        let mut bmap: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, be) in self.boundary.iter().enumerate() {
            let key = (be.v[0].min(be.v[1]), be.v[0].max(be.v[1]));
            if bmap.insert(key, i).is_some() {
                return Err(Error::NonConforming(format!("duplicate boundary edge {:?}", be.v)));
            }
            match edges.get(&key) {
                Some(list) if list.len() == 1 => {}
                _ => return Err(Error::NonConforming(format!("boundary edge {:?} is not a mesh boundary edge", be.v))),
            }
        }
        // owner-oriented boundary edge direction
        for (key, list) in &edges {
            if list.len() > 2 {
                return Err(Error::NonConforming(format!("edge {key:?} shared by {} cells", list.len())));
            }
            if list.len() == 1 {
                let Some(&bi) = bmap.get(key) else {
                    return Err(Error::NonConforming(format!("untagged boundary edge {key:?}")));
                };
                let (k, e) = list[0];
                let c = self.cells[k];
                self.boundary[bi].v = [c[(e + 1) % 3], c[(e + 2) % 3]];
            }
        }
        let partner = self.match_periodic()?;

        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut faces = Vec::with_capacity(keys.len());
        let mut cell_faces = vec![[usize::MAX; 3]; self.cells.len()];
        let mut owner_of_boundary: HashMap<usize, usize> = HashMap::new();
        for key in keys {
            let list = &edges[&key];
            if list.len() == 2 {
                let (l, r) = if list[0].0 < list[1].0 { (list[0], list[1]) } else { (list[1], list[0]) };
                cell_faces[l.0][l.1] = faces.len();
                cell_faces[r.0][r.1] = faces.len();
                faces.push(Face { left: l, right: Some(r), boundary: None, shift: [0.0; 2] });
            } else {
                let bi = bmap[&key];
                let (k, e) = list[0];
                if let Some(pj) = partner[bi] {
                    if let Some(&f) = owner_of_boundary.get(&pj) {
                        cell_faces[k][e] = f;
                        continue;
                    }
                    let other = self.boundary[pj];
                    let okey = (other.v[0].min(other.v[1]), other.v[0].max(other.v[1]));
                    let r = edges[&okey][0];
                    let a = self.vertices[self.boundary[bi].v[1]];
                    let c = self.vertices[other.v[0]];
                    let shift = [c[0] - a[0], c[1] - a[1]];
                    owner_of_boundary.insert(bi, faces.len());
                    cell_faces[k][e] = faces.len();
                    faces.push(Face { left: (k, e), right: Some(r), boundary: Some(bi), shift });
                } else {
                    cell_faces[k][e] = faces.len();
                    faces.push(Face { left: (k, e), right: None, boundary: Some(bi), shift: [0.0; 2] });
                }
            }
        }
        // fix up neighbour-side references of periodic faces registered later
        for (bi, &f) in &owner_of_boundary {
            let pj = partner[*bi].unwrap();
            let other = self.boundary[pj];
            let okey = (other.v[0].min(other.v[1]), other.v[0].max(other.v[1]));
            let (k, e) = edges[&okey][0];
            cell_faces[k][e] = f;
        }
        let mut curved_cells = vec![None; self.cells.len()];
        for f in &faces {
            if let (None, Some(bi)) = (f.right, f.boundary) {
                if self.boundary[bi].curved {
                    if self.curve.is_none() {
                        return Err(Error::NonConforming("curved edge without boundary curve".into()));
                    }
                    curved_cells[f.left.0] = Some(f.left.1);
                }
            }
        }
        self.faces = faces;
        self.cell_faces = cell_faces;
        self.curved_cells = curved_cells;
        Ok(())
    }

    /// For every boundary edge, the index of its periodic partner.
    fn match_periodic(&self) -> Result<Vec<Option<usize>>> {
        let mut partner = vec![None; self.boundary.len()];
        let mut groups: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, be) in self.boundary.iter().enumerate() {
            if let BoundaryTag::Periodic(id) = be.tag {
                groups.entry(id).or_default().push(i);
            }
        }
        let diam = self.diameter().max(1e-300);
        let tol = 1e-9 * diam;
        for (id, list) in groups {
            if list.len() % 2 != 0 {
                return Err(Error::UnmatchedPeriodicPair(format!("group {id} has {} edges", list.len())));
            }
            let e0 = self.boundary[list[0]];
            let (a0, b0) = (self.vertices[e0.v[0]], self.vertices[e0.v[1]]);
            let mut found = None;
            'cand: for &j in &list[1..] {
                let f = self.boundary[j];
                let (c, d) = (self.vertices[f.v[0]], self.vertices[f.v[1]]);
                let s = [c[0] - b0[0], c[1] - b0[1]];
                if (d[0] - a0[0] - s[0]).abs() > tol || (d[1] - a0[1] - s[1]).abs() > tol {
                    continue;
                }
                // the translation must pair every edge in the group
                let mut trial = vec![None; self.boundary.len()];
                for &i in &list {
                    if trial[i].is_some() {
                        continue;
                    }
                    let e = self.boundary[i];
                    let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
                    let mut hit = None;
                    for &k in &list {
                        if k == i || trial[k].is_some() {
                            continue;
                        }
                        let g = self.boundary[k];
                        let (c2, d2) = (self.vertices[g.v[0]], self.vertices[g.v[1]]);
                        for sign in [1.0, -1.0] {
                            let ok = (c2[0] - b[0] - sign * s[0]).abs() <= tol
                                && (c2[1] - b[1] - sign * s[1]).abs() <= tol
                                && (d2[0] - a[0] - sign * s[0]).abs() <= tol
                                && (d2[1] - a[1] - sign * s[1]).abs() <= tol;
                            if ok {
                                hit = Some(k);
                            }
                        }
                        if hit.is_some() {
                            break;
                        }
                    }
                    match hit {
                        Some(k) => {
                            trial[i] = Some(k);
                            trial[k] = Some(i);
                        }
                        None => continue 'cand,
                    }
                }
                found = Some(trial);
                break;
            }
            let Some(trial) = found else {
                return Err(Error::UnmatchedPeriodicPair(format!("group {id}: no common translation")));
            };
            for &i in &list {
                partner[i] = trial[i];
            }
        }
        Ok(partner)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn cell_faces(&self, cell: usize) -> [usize; 3] {
        self.cell_faces[cell]
    }

    /// Local edge index of the curved edge of `cell`, if any.
    pub fn curved_edge(&self, cell: usize) -> Option<usize> {
        self.curved_cells[cell]
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.n_interior_faces()
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; 2]; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    /// Area of the straight triangle spanned by the cell vertices.
    pub fn straight_area(&self, cell: usize) -> f64 {
        let v = self.cell_vertices(cell);
        signed_area(v[0], v[1], v[2])
    }

    pub fn centroid(&self, cell: usize) -> [f64; 2] {
        let v = self.cell_vertices(cell);
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Endpoints of local edge `e` in counter-clockwise order of the cell.
    pub fn edge_points(&self, cell: usize, e: usize) -> ([f64; 2], [f64; 2]) {
        let c = self.cells[cell];
        (self.vertices[c[(e + 1) % 3]], self.vertices[c[(e + 2) % 3]])
    }

    pub fn edge_length(&self, cell: usize, e: usize) -> f64 {
        let (a, b) = self.edge_points(cell, e);
        dist(a, b)
    }

    /// Outward unit normal of a straight edge.
    pub fn edge_normal(&self, cell: usize, e: usize) -> [f64; 2] {
        let (a, b) = self.edge_points(cell, e);
        let l = dist(a, b);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(lo, hi)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Longest edge of the cell.
    pub fn cell_diameter(&self, cell: usize) -> f64 {
        (0..3).map(|e| self.edge_length(cell, e)).fold(0.0, f64::max)
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        // periodic pairs count as two geometric edges
        self.faces.len() + self.faces.iter().filter(|f| f.is_interior() && f.boundary.is_some()).count()
    }

    pub fn total_dof_per_equation(&self) -> usize {
        self.degrees.iter().map(|&p| (p + 1) * (p + 2) / 2).sum()
    }

    /// Neighbouring cells across edges (including periodic neighbours).
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(3);
        for &f in &self.cell_faces[cell] {
            let face = &self.faces[f];
            if let Some(r) = face.right {
                let other = if face.left.0 == cell { r.0 } else { face.left.0 };
                if other != cell && !out.contains(&other) {
                    out.push(other);
                }
            }
        }
        out
    }

    /// Boundary tag of the vertex pair, if it is a tagged boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for b in &self.boundary {
            on[b.v[0]] = true;
            on[b.v[1]] = true;
        }
        on
    }

    /// Reference-to-physical map of a cell (P3 isoparametric for curved cells).
    pub fn map_point(&self, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        self.map_with_jacobian(cell, xi).0
    }

    /// Physical point and Jacobian `J[a][b] = dx_a / dxi_b`.
    pub fn map_with_jacobian(&self, cell: usize, xi: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let v = self.cell_vertices(cell);
        match self.curved_cells.get(cell).copied().flatten() {
            None => {
                let j = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
                let x = [v[0][0] + j[0][0] * xi[0] + j[0][1] * xi[1], v[0][1] + j[1][0] * xi[0] + j[1][1] * xi[1]];
                (x, j)
            }
            Some(e) => {
                let nodes = self.p3_nodes(cell, e);
                let (n, dn) = p3_shape(xi);
                let mut x = [0.0; 2];
                let mut j = [[0.0; 2]; 2];
                for k in 0..10 {
                    for a in 0..2 {
                        x[a] += n[k] * nodes[k][a];
                        for b in 0..2 {
                            j[a][b] += dn[k][b] * nodes[k][a];
                        }
                    }
                }
                (x, j)
            }
        }
    }

    /// Ten P3 geometry nodes: vertices, two nodes per edge, interior node.
    ///
    /// Edge `k` nodes are ordered from vertex `(k+1)%3` to `(k+2)%3`.
    fn p3_nodes(&self, cell: usize, curved_edge: usize) -> [[f64; 2]; 10] {
        let v = self.cell_vertices(cell);
        let mut nodes = [[0.0; 2]; 10];
        nodes[..3].copy_from_slice(&v);
        for k in 0..3 {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            for (s_idx, s) in [1.0 / 3.0, 2.0 / 3.0].into_iter().enumerate() {
                let p = if k == curved_edge {
                    self.curve.as_ref().unwrap().edge_point(a, b, s)
                } else {
                    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
                };
                nodes[3 + 2 * k + s_idx] = p;
            }
        }
        let mut c = [0.0; 2];
        for k in 3..9 {
            c[0] += nodes[k][0] / 4.0;
            c[1] += nodes[k][1] / 4.0;
        }
        for vtx in &v {
            c[0] -= vtx[0] / 6.0;
            c[1] -= vtx[1] / 6.0;
        }
        nodes[9] = c;
        nodes
    }

    /// Reference coordinates of physical point `x` in `cell` (Newton iteration for curved cells).
    pub fn inverse_map(&self, cell: usize, x: [f64; 2]) -> [f64; 2] {
        let v = self.cell_vertices(cell);
        let area2 = 2.0 * signed_area(v[0], v[1], v[2]);
        let mut xi = [
            ((x[0] - v[0][0]) * (v[2][1] - v[0][1]) - (x[1] - v[0][1]) * (v[2][0] - v[0][0])) / area2,
            ((v[1][0] - v[0][0]) * (x[1] - v[0][1]) - (v[1][1] - v[0][1]) * (x[0] - v[0][0])) / area2,
        ];
        if self.curved_edge(cell).is_none() {
            return xi;
        }
        for _ in 0..20 {
            let (y, j) = self.map_with_jacobian(cell, xi);
            let r = [x[0] - y[0], x[1] - y[1]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let d = [(j[1][1] * r[0] - j[0][1] * r[1]) / det, (-j[1][0] * r[0] + j[0][0] * r[1]) / det];
            xi[0] += d[0];
            xi[1] += d[1];
            if d[0].abs() + d[1].abs() < 1e-15 {
                break;
            }
        }
        xi
    }

    /// Sum of true (curved) cell areas, via a reference quadrature of the map Jacobian.
    pub fn total_area(&self) -> f64 {
        let rule = crate::dgcore::quadrature::TriangleRule::with_degree(6);
        (0..self.n_cells())
            .map(|k| {
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&xi, &w)| {
                        let (_, j) = self.map_with_jacobian(k, xi);
                        w * (j[0][0] * j[1][1] - j[0][1] * j[1][0])
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Whether every cell has a positive Jacobian at a set of sample points.
    pub fn check_orientation(&self) -> Result<()> {
        for k in 0..self.n_cells() {
            let a = self.straight_area(k);
            if !(a > 0.0) {
                return Err(Error::InvertedCell { cell: k, area: a });
            }
        }
        Ok(())
    }

    /// Replace all cell degrees.
    pub fn with_degree(mut self, p: usize) -> Self {
        self.degrees.iter_mut().for_each(|d| *d = p);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag() -> BoundaryTag {
        BoundaryTag::NoFlux
    }

    fn be(a: usize, b: usize) -> BoundaryEdge {
        BoundaryEdge { v: [a, b], tag: tag(), curved: false }
    }

    #[test]
    fn single_triangle() {
        let m = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![1],
            vec![be(0, 1), be(1, 2), be(2, 0)],
            None,
        )
        .unwrap();
        assert_eq!(m.n_interior_faces(), 0);
        assert_eq!(m.n_boundary_faces(), 3);
    }

    #[test]
    fn two_triangles() {
        let m = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![1, 1],
            vec![be(0, 1), be(1, 2), be(2, 3), be(3, 0)],
            None,
        )
        .unwrap();
        assert_eq!(m.n_interior_faces(), 1);
        assert_eq!(m.n_boundary_faces(), 4);
        assert_eq!(m.neighbors(0), vec![1]);
    }

    #[test]
    fn inverted_and_nonconforming_detected() {
        let r = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![1],
            vec![be(0, 1), be(1, 2), be(2, 0)],
            None,
        );
        assert!(matches!(r, Err(Error::InvertedCell { .. })));
        let r = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![1],
            vec![be(0, 1), be(1, 2)],
            None,
        );
        assert!(matches!(r, Err(Error::NonConforming(_))));
    }

    #[test]
    fn euler_characteristic_of_split_square() {
        let spec = RectangleSpec::uniform_right_split([0.0, 1.0], [0.0, 1.0], 2, 2);
        let m = rectangle(&spec).unwrap();
        assert_eq!(m.n_cells(), 8);
        let v = m.vertices.len() as i64;
        let e = m.n_edges() as i64;
        let f = m.n_cells() as i64;
        assert_eq!(v - e + f, 1);
    }

    #[test]
    fn periodic_pairs_become_interior() {
        let mut spec = RectangleSpec::uniform_right_split([0.0, 3.0], [0.0, 1.0], 3, 2);
        spec.tags = [tag(), BoundaryTag::Periodic(0), tag(), BoundaryTag::Periodic(0)];
        let m = rectangle(&spec).unwrap();
        let periodic: Vec<_> = m.faces().iter().filter(|f| f.is_interior() && f.boundary.is_some()).collect();
        assert_eq!(periodic.len(), 2);
        for f in periodic {
            assert!((f.shift[0].abs() - 3.0).abs() < 1e-12 && f.shift[1].abs() < 1e-12);
        }
    }

    #[test]
    fn unmatched_periodic_rejected() {
        let r = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![1],
            vec![
                BoundaryEdge { v: [0, 1], tag: BoundaryTag::Periodic(0), curved: false },
                BoundaryEdge { v: [1, 2], tag: BoundaryTag::Periodic(0), curved: false },
                be(2, 0),
            ],
            None,
        );
        assert!(matches!(r, Err(Error::UnmatchedPeriodicPair(_))));
    }
}

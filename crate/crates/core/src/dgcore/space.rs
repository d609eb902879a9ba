//! Discrete function spaces: per-cell orthonormal modal bases tabulated at
//! volume and edge quadrature points.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::{dim_p, triangle_basis};
use super::quadrature::{gauss_legendre_unit, TriangleRule};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, PointLocator, TriMesh};

/// Reference vertices of the unit triangle.
const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// How reference basis values become physical ones.
#[derive(Clone, Debug)]
enum BasisMap {
    /// `phi = psi * scale`, `grad phi = scale * J^{-T} grad psi`.
    Affine { scale: f64 },
    /// `phi = L^{-1} psi` with `L` the Cholesky factor of the curved-cell Gram matrix.
    Curved { linv: DMatrix<f64> },
}

/// Quadrature data of one cell. Basis arrays hold the enriched basis
/// (degree `p + 1`), row-major by quadrature point.
#[derive(Clone, Debug)]
pub struct CellData {
    pub p: usize,
    pub nb: usize,
    pub nbe: usize,
    pub area: f64,
    pub diameter: f64,
    pub qx: Vec<[f64; 2]>,
    pub qw: Vec<f64>,
    pub phi: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// `int grad phi_i . grad phi_j` for the enriched basis.
    pub stiffness: DMatrix<f64>,
    map: BasisMap,
}

impl CellData {
    #[inline]
    pub fn nq(&self) -> usize {
        self.qw.len()
    }
}

/// Quadrature data of one face.
#[derive(Clone, Debug)]
pub struct FaceData {
    pub left: usize,
    pub right: Option<usize>,
    pub tag: Option<BoundaryTag>,
    pub qx: Vec<[f64; 2]>,
    pub qw: Vec<f64>,
    pub normal: Vec<[f64; 2]>,
    pub phi_l: Vec<f64>,
    pub grad_l: Vec<[f64; 2]>,
    pub phi_r: Vec<f64>,
    pub grad_r: Vec<[f64; 2]>,
    /// Edge-normal cell width `2|K| / |gamma|` (minimum of both sides).
    pub h: f64,
    pub length: f64,
}

/// Space-time DG space on one mesh with temporal degree `q`.
#[derive(Clone, Debug)]
pub struct DgSpace {
    pub mesh: TriMesh,
    pub q: usize,
    pub cells: Vec<CellData>,
    pub faces: Vec<FaceData>,
    /// Offset of each cell block in the slab coefficient vector.
    pub offsets: Vec<usize>,
    /// Offset of each cell block in a spatial (single time level) vector.
    pub spatial_offsets: Vec<usize>,
    pub locator: PointLocator,
}

fn ref_basis(p: usize, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let n = dim_p(p);
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 2]; n];
    triangle_basis(p, xi, &mut v, &mut g);
    (v, g)
}

fn inv2(j: [[f64; 2]; 2]) -> ([[f64; 2]; 2], f64) {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    ([[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]], det)
}

impl BasisMap {
    fn apply(&self, psi: &[f64], dpsi: &[[f64; 2]], jinv: [[f64; 2]; 2], v: &mut [f64], g: &mut [[f64; 2]]) {
        // physical gradient of the reference functions: J^{-T} grad_xi
        let phys = |d: [f64; 2]| [jinv[0][0] * d[0] + jinv[1][0] * d[1], jinv[0][1] * d[0] + jinv[1][1] * d[1]];
        match self {
            BasisMap::Affine { scale, .. } => {
                for i in 0..psi.len() {
                    v[i] = scale * psi[i];
                    let d = phys(dpsi[i]);
                    g[i] = [scale * d[0], scale * d[1]];
                }
            }
            BasisMap::Curved { linv } => {
                let n = psi.len();
                for i in 0..n {
                    let mut acc = 0.0;
                    let mut ga = [0.0; 2];
                    for j in 0..=i {
                        let l = linv[(i, j)];
                        acc += l * psi[j];
                        let d = phys(dpsi[j]);
                        ga[0] += l * d[0];
                        ga[1] += l * d[1];
                    }
                    v[i] = acc;
                    g[i] = ga;
                }
            }
        }
    }
}

fn build_cell(mesh: &TriMesh, k: usize) -> Result<CellData> {
    let p = mesh.degrees[k];
    let pe = p + 1;
    let nb = dim_p(p);
    let nbe = dim_p(pe);
    let rule = TriangleRule::with_degree(2 * pe + 2);
    let nq = rule.len();
    let mut qx = Vec::with_capacity(nq);
    let mut qw = Vec::with_capacity(nq);
    let mut jinvs = Vec::with_capacity(nq);
    let mut psis = Vec::with_capacity(nq);
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let (x, j) = mesh.map_with_jacobian(k, *xi);
        let (jinv, det) = inv2(j);
        if !(det > 0.0) {
            return Err(Error::InvertedCell { cell: k, area: det });
        }
        qx.push(x);
        qw.push(w * det);
        jinvs.push(jinv);
        psis.push(ref_basis(pe, *xi));
    }
    let map = if mesh.curved_edge(k).is_none() {
        let (_, j) = mesh.map_with_jacobian(k, [0.0, 0.0]);
        let (_, det) = inv2(j);
        BasisMap::Affine { scale: 1.0 / det.sqrt() }
    } else {
        let mut g = DMatrix::zeros(nbe, nbe);
        for q in 0..nq {
            let psi = &psis[q].0;
            for i in 0..nbe {
                for j in 0..=i {
                    g[(i, j)] += qw[q] * psi[i] * psi[j];
                }
            }
        }
        for i in 0..nbe {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        let chol = g.cholesky().ok_or(Error::SingularGram(k))?;
        let l = chol.l();
        let linv = l.solve_lower_triangular(&DMatrix::identity(nbe, nbe)).ok_or(Error::SingularGram(k))?;
        BasisMap::Curved { linv }
    };
    let mut phi = vec![0.0; nq * nbe];
    let mut grad = vec![[0.0; 2]; nq * nbe];
    for q in 0..nq {
        let (psi, dpsi) = &psis[q];
        map.apply(psi, dpsi, jinvs[q], &mut phi[q * nbe..(q + 1) * nbe], &mut grad[q * nbe..(q + 1) * nbe]);
    }
    let mut stiffness = DMatrix::zeros(nbe, nbe);
    for q in 0..nq {
        let g = &grad[q * nbe..(q + 1) * nbe];
        for i in 0..nbe {
            for j in 0..nbe {
                stiffness[(i, j)] += qw[q] * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    let area = qw.iter().sum();
    Ok(CellData { p, nb, nbe, area, diameter: mesh.cell_diameter(k), qx, qw, phi, grad, stiffness, map })
}

impl DgSpace {
    pub fn new(mesh: TriMesh, q: usize) -> Result<Self> {
        let cells: Vec<CellData> = (0..mesh.n_cells()).into_par_iter().map(|k| build_cell(&mesh, k)).collect::<Result<_>>()?;
        let mut offsets = Vec::with_capacity(cells.len() + 1);
        let mut spatial_offsets = Vec::with_capacity(cells.len() + 1);
        let (mut o, mut so) = (0, 0);
        for c in &cells {
            offsets.push(o);
            spatial_offsets.push(so);
            o += (q + 1) * c.nb * 4;
            so += c.nb * 4;
        }
        offsets.push(o);
        spatial_offsets.push(so);
        let mut space = DgSpace { locator: PointLocator::new(&mesh), mesh, q, cells, faces: vec![], offsets, spatial_offsets };
        let faces: Vec<FaceData> = (0..space.mesh.faces().len()).into_par_iter().map(|f| space.build_face(f)).collect();
        space.faces = faces;
        Ok(space)
    }

    fn build_face(&self, f: usize) -> FaceData {
        let face = self.mesh.faces()[f];
        let (kl, el) = face.left;
        let pl = self.cells[kl].p;
        let pr = face.right.map_or(0, |(kr, _)| self.cells[kr].p);
        let n = pl.max(pr) + 3;
        let (s, ws) = gauss_legendre_unit(n);
        let tag = face.boundary.map(|b| self.mesh.boundary[b].tag).filter(|_| face.right.is_none());
        let (a, b) = (REF[(el + 1) % 3], REF[(el + 2) % 3]);
        let mut out = FaceData {
            left: kl,
            right: face.right.map(|r| r.0),
            tag,
            qx: vec![],
            qw: vec![],
            normal: vec![],
            phi_l: vec![],
            grad_l: vec![],
            phi_r: vec![],
            grad_r: vec![],
            h: 0.0,
            length: 0.0,
        };
        for (sq, wq) in s.iter().zip(&ws) {
            let xi = [a[0] + sq * (b[0] - a[0]), a[1] + sq * (b[1] - a[1])];
            let (x, j) = self.mesh.map_with_jacobian(kl, xi);
            let t = [j[0][0] * (b[0] - a[0]) + j[0][1] * (b[1] - a[1]), j[1][0] * (b[0] - a[0]) + j[1][1] * (b[1] - a[1])];
            let len = t[0].hypot(t[1]);
            out.qx.push(x);
            out.qw.push(wq * len);
            out.normal.push([t[1] / len, -t[0] / len]);
            let (v, g) = self.basis_at_ref(kl, xi);
            out.phi_l.extend(v);
            out.grad_l.extend(g);
            if let Some((kr, er)) = face.right {
                let (ar, br) = (REF[(er + 1) % 3], REF[(er + 2) % 3]);
                let sr = 1.0 - sq;
                let xir = [ar[0] + sr * (br[0] - ar[0]), ar[1] + sr * (br[1] - ar[1])];
                let (v, g) = self.basis_at_ref(kr, xir);
                out.phi_r.extend(v);
                out.grad_r.extend(g);
            }
        }
        out.length = out.qw.iter().sum();
        let mut h = 2.0 * self.cells[kl].area / out.length;
        if let Some((kr, _)) = face.right {
            h = h.min(2.0 * self.cells[kr].area / out.length);
        }
        out.h = h;
        out
    }

    /// Enriched basis values and physical gradients at reference point `xi` of `cell`.
    pub fn basis_at_ref(&self, cell: usize, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let c = &self.cells[cell];
        let (psi, dpsi) = ref_basis(c.p + 1, xi);
        let (_, j) = self.mesh.map_with_jacobian(cell, xi);
        let (jinv, _) = inv2(j);
        let mut v = vec![0.0; c.nbe];
        let mut g = vec![[0.0; 2]; c.nbe];
        c.map.apply(&psi, &dpsi, jinv, &mut v, &mut g);
        (v, g)
    }

    /// Enriched basis values and gradients at physical point `x` in `cell`.
    pub fn basis_at(&self, cell: usize, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let xi = self.mesh.inverse_map(cell, x);
        self.basis_at_ref(cell, xi)
    }

    /// Number of unknowns of a slab, `(q+1) * 4 * sum dim(p_K)`.
    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_spatial_dofs(&self) -> usize {
        *self.spatial_offsets.last().unwrap()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn block_size(&self, cell: usize) -> usize {
        (self.q + 1) * self.cells[cell].nb * 4
    }

    /// The same mesh with a different temporal degree.
    pub fn with_q(&self, q: usize) -> Self {
        let mut s = self.clone();
        s.q = q;
        let mut o = 0;
        for (k, c) in s.cells.iter().enumerate() {
            s.offsets[k] = o;
            o += (q + 1) * c.nb * 4;
        }
        *s.offsets.last_mut().unwrap() = o;
        s
    }

    /// Locate a physical point, tolerating curved-boundary bulges.
    pub fn locate(&self, x: [f64; 2]) -> Result<usize> {
        Ok(self.locator.locate_nearest(&self.mesh, x)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, BoundaryCurve, RectangleSpec};

    #[test]
    fn mass_matrix_is_identity() {
        let mut spec = RectangleSpec::with_cell_count([-2000.0, 2000.0], [0.0, 3000.0], 24).with_degree(3);
        spec.bottom_curve = Some(BoundaryCurve::Schaer { h_c: 250.0, a_c: 5000.0, lambda_c: 4000.0 });
        let space = DgSpace::new(rectangle(&spec).unwrap(), 1).unwrap();
        assert!((0..space.n_cells()).any(|k| space.mesh.curved_edge(k).is_some()));
        for c in &space.cells {
            let n = c.nbe;
            for i in 0..n {
                for j in 0..n {
                    let m: f64 = (0..c.nq()).map(|q| c.qw[q] * c.phi[q * n + i] * c.phi[q * n + j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((m - e).abs() < 1e-12, "{m}");
                }
            }
        }
    }

    #[test]
    fn dof_count() {
        let spec = RectangleSpec::with_cell_count([0.0, 1.0], [0.0, 1.0], 10).with_degree(2);
        let space = DgSpace::new(rectangle(&spec).unwrap(), 1).unwrap();
        assert_eq!(space.n_dofs(), 2 * 10 * 4 * 6);
    }

    #[test]
    fn face_points_agree_from_both_sides() {
        let spec = RectangleSpec::with_cell_count([0.0, 1.0], [0.0, 1.0], 12).with_degree(2);
        let space = DgSpace::new(rectangle(&spec).unwrap(), 0).unwrap();
        for f in space.faces.iter().filter(|f| f.right.is_some()) {
            let r = f.right.unwrap();
            let nbe = space.cells[r].nbe;
            for (q, x) in f.qx.iter().enumerate() {
                let (v, _) = space.basis_at(r, *x);
                for i in 0..nbe {
                    assert!((v[i] - f.phi_r[q * nbe + i]).abs() < 1e-9);
                }
            }
        }
    }
}

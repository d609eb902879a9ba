use super::TriMesh;
use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Bucket grid over cell bounding boxes for point location.
#[derive(Clone, Debug)]
pub struct PointLocator {
    lo: [f64; 2],
    cell_size: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

fn barycentric(v: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let l1 = ((x[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (x[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (x[1] - v[0][1]) - (x[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

impl PointLocator {
    pub fn new(mesh: &TriMesh) -> Self {
        let (mut lo, mut hi) = mesh.bounding_box();
        // curved cells may bulge beyond the vertex hull
        let pad = 1e-6 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        lo = [lo[0] - pad, lo[1] - pad];
        hi = [hi[0] + pad, hi[1] + pad];
        let n = mesh.n_cells().max(1);
        let aspect = (hi[0] - lo[0]) / (hi[1] - lo[1]);
        let ny = ((n as f64 / aspect).sqrt().ceil() as usize).clamp(1, 2048);
        let nx = ((n as f64 / ny as f64).ceil() as usize).clamp(1, 2048);
        let cell_size = [(hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        for k in 0..mesh.n_cells() {
            let v = mesh.cell_vertices(k);
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for p in &v {
                for d in 0..2 {
                    blo[d] = blo[d].min(p[d]);
                    bhi[d] = bhi[d].max(p[d]);
                }
            }
            let i0 = (((blo[0] - lo[0]) / cell_size[0]).floor().max(0.0) as usize).min(nx - 1);
            let i1 = (((bhi[0] - lo[0]) / cell_size[0]).floor().max(0.0) as usize).min(nx - 1);
            let j0 = (((blo[1] - lo[1]) / cell_size[1]).floor().max(0.0) as usize).min(ny - 1);
            let j1 = (((bhi[1] - lo[1]) / cell_size[1]).floor().max(0.0) as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        PointLocator { lo, cell_size, dims: [nx, ny], buckets }
    }

    fn bucket_of(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let fi = (x[0] - self.lo[0]) / self.cell_size[0];
        let fj = (x[1] - self.lo[1]) / self.cell_size[1];
        if fi < 0.0 || fj < 0.0 || !fi.is_finite() || !fj.is_finite() {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        if i >= self.dims[0] || j >= self.dims[1] {
            return None;
        }
        Some((i, j))
    }

    /// Containing cell (lowest id on ties) and barycentric coordinates with respect
    /// to the straight triangle.
    pub fn locate(&self, mesh: &TriMesh, x: [f64; 2]) -> Result<(usize, [f64; 3])> {
        let Some((i, j)) = self.bucket_of(x) else {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        };
        // bucket lists are built in ascending cell order
        for &k in &self.buckets[j * self.dims[0] + i] {
            let b = barycentric(&mesh.cell_vertices(k), x);
            if b.iter().all(|&l| l >= -EPS) {
                return Ok((k, b));
            }
        }
        Err(Error::OutsideDomain { x: x[0], y: x[1] })
    }

    /// Like [`Self::locate`] but falls back to the nearest cell (largest minimum
    /// barycentric coordinate) in the surrounding buckets; used for points on
    /// curved boundary bulges.
    pub fn locate_nearest(&self, mesh: &TriMesh, x: [f64; 2]) -> Result<(usize, [f64; 3])> {
        if let Ok(r) = self.locate(mesh, x) {
            return Ok(r);
        }
        let fi = ((x[0] - self.lo[0]) / self.cell_size[0]).floor();
        let fj = ((x[1] - self.lo[1]) / self.cell_size[1]).floor();
        if !fi.is_finite() || !fj.is_finite() {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for radius in 0..3i64 {
            for dj in -radius..=radius {
                for di in -radius..=radius {
                    let (i, j) = (fi as i64 + di, fj as i64 + dj);
                    if i < 0 || j < 0 || i >= self.dims[0] as i64 || j >= self.dims[1] as i64 {
                        continue;
                    }
                    for &k in &self.buckets[j as usize * self.dims[0] + i as usize] {
                        let b = barycentric(&mesh.cell_vertices(k), x);
                        let m = b[0].min(b[1]).min(b[2]);
                        if best.as_ref().is_none_or(|(bm, bk, _)| m > *bm || (m == *bm && k < *bk)) {
                            best = Some((m, k, b));
                        }
                    }
                }
            }
            if let Some((m, k, b)) = best {
                if m > -0.5 {
                    return Ok((k, b));
                }
            }
        }
        Err(Error::OutsideDomain { x: x[0], y: x[1] })
    }
}

impl TriMesh {
    /// Convenience wrapper building a throwaway locator.
    pub fn locate_point(&self, x: [f64; 2]) -> Result<(usize, [f64; 3])> {
        PointLocator::new(self).locate(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{rectangle, RectangleSpec};
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn centroid_and_shared_edge() {
        let m = rectangle(&RectangleSpec::uniform_right_split([0.0, 1.0], [0.0, 1.0], 2, 2)).unwrap();
        let loc = PointLocator::new(&m);
        for k in 0..m.n_cells() {
            let (c, b) = loc.locate(&m, m.centroid(k)).unwrap();
            assert_eq!(c, k);
            for l in b {
                assert!((l - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        for f in m.faces().iter().filter(|f| f.is_interior()) {
            let (a, b) = m.edge_points(f.left.0, f.left.1);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let (c, _) = loc.locate(&m, mid).unwrap();
            assert_eq!(c, f.left.0.min(f.right.unwrap().0));
        }
        assert!(matches!(loc.locate(&m, [2.0, 0.5]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn random_round_trip() {
        let m = rectangle(&RectangleSpec::with_cell_count([0.0, 3.0], [0.0, 1.0], 200)).unwrap();
        let loc = PointLocator::new(&m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let k = rng.gen_range(0..m.n_cells());
            let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let x = m.map_point(k, [a, b]);
            let (c, bary) = loc.locate(&m, x).unwrap();
            assert!(bary.iter().all(|&l| l >= -1e-12 && l <= 1.0 + 1e-12));
            if c != k {
                let own = barycentric(&m.cell_vertices(k), x);
                assert!(own.iter().any(|l| l.abs() < 1e-9));
                assert!(c < k);
            }
        }
    }
}

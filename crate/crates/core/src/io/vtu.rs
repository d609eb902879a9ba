//! VTK unstructured-grid output of a spatial field.
//!
//! Each cell of degree `p` is split into `p^2` sub-triangles of its
//! reference subdivision; points are not shared between cells so jumps stay
//! visible. Output is ASCII and depends only on the field.

use std::fmt::Write as _;
use std::path::Path;

use crate::dgcore::SpatialField;
use crate::error::Result;
use crate::physics::{primitive_from_conserved, BackgroundState, ConservedState, PhysicalConstants};

/// Reference points and sub-triangles of the uniform `n`-subdivision.
pub fn subdivision(n: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let n = n.max(1);
    let mut idx = vec![vec![0usize; n + 1]; n + 1];
    let mut pts = Vec::new();
    for j in 0..=n {
        for i in 0..=n - j {
            idx[i][j] = pts.len();
            pts.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut tris = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n - j {
            tris.push([idx[i][j], idx[i + 1][j], idx[i][j + 1]]);
            if i + j + 1 < n {
                tris.push([idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1]]);
            }
        }
    }
    (pts, tris)
}

struct Columns {
    points: Vec<[f64; 2]>,
    conn: Vec<[usize; 3]>,
    degree: Vec<usize>,
    rho: Vec<f64>,
    vel: Vec<[f64; 2]>,
    p: Vec<f64>,
    temperature: Vec<f64>,
    theta: Vec<f64>,
    theta_prime: Vec<f64>,
}

fn columns(field: &SpatialField, bg: &BackgroundState, c: &PhysicalConstants) -> Result<Columns> {
    let mesh = &field.space.mesh;
    let mut out = Columns {
        points: vec![],
        conn: vec![],
        degree: vec![],
        rho: vec![],
        vel: vec![],
        p: vec![],
        temperature: vec![],
        theta: vec![],
        theta_prime: vec![],
    };
    for k in 0..mesh.n_cells() {
        let pk = mesh.degrees[k];
        let (pts, tris) = subdivision(pk);
        let base = out.points.len();
        for xi in &pts {
            let x = mesh.map_point(k, *xi);
            let w = field.eval_ref(k, *xi);
            let s = primitive_from_conserved(&ConservedState(w), c)?;
            out.points.push(x);
            out.rho.push(s.rho);
            out.vel.push([s.v1, s.v2]);
            out.p.push(s.p);
            out.temperature.push(s.temperature);
            out.theta.push(s.theta);
            out.theta_prime.push(s.theta - bg.theta_bar(x[1]));
        }
        for t in tris {
            out.conn.push([base + t[0], base + t[1], base + t[2]]);
            out.degree.push(pk);
        }
    }
    Ok(out)
}

fn scalar(s: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(s, "        <DataArray type=\"Float64\" Name=\"{name}\" format=\"ascii\">");
    for x in v {
        let _ = writeln!(s, "          {x:.12e}");
    }
    s.push_str("        </DataArray>\n");
}

/// Render the VTU document.
pub fn render(field: &SpatialField, bg: &BackgroundState, c: &PhysicalConstants, t: f64) -> Result<String> {
    let col = columns(field, bg, c)?;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n  <UnstructuredGrid>\n");
    let _ = writeln!(s, "    <FieldData>\n      <DataArray type=\"Float64\" Name=\"TIME\" NumberOfTuples=\"1\" format=\"ascii\">{t:.12e}</DataArray>\n    </FieldData>");
    let _ = writeln!(s, "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{}\">", col.points.len(), col.conn.len());
    s.push_str("      <PointData Scalars=\"rho\" Vectors=\"velocity\">\n");
    scalar(&mut s, "rho", &col.rho);
    s.push_str("        <DataArray type=\"Float64\" Name=\"velocity\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for v in &col.vel {
        let _ = writeln!(s, "          {:.12e} {:.12e} 0", v[0], v[1]);
    }
    s.push_str("        </DataArray>\n");
    scalar(&mut s, "pressure", &col.p);
    scalar(&mut s, "temperature", &col.temperature);
    scalar(&mut s, "theta", &col.theta);
    scalar(&mut s, "theta_perturbation", &col.theta_prime);
    s.push_str("      </PointData>\n      <CellData Scalars=\"degree\">\n");
    s.push_str("        <DataArray type=\"Int32\" Name=\"degree\" format=\"ascii\">\n");
    for d in &col.degree {
        let _ = writeln!(s, "          {d}");
    }
    s.push_str("        </DataArray>\n      </CellData>\n      <Points>\n");
    s.push_str("        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for x in &col.points {
        let _ = writeln!(s, "          {:.12e} {:.12e} 0", x[0], x[1]);
    }
    s.push_str("        </DataArray>\n      </Points>\n      <Cells>\n");
    s.push_str("        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n");
    for t in &col.conn {
        let _ = writeln!(s, "          {} {} {}", t[0], t[1], t[2]);
    }
    s.push_str("        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n");
    for i in 0..col.conn.len() {
        let _ = writeln!(s, "          {}", 3 * (i + 1));
    }
    s.push_str("        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n");
    for _ in 0..col.conn.len() {
        s.push_str("          5\n");
    }
    s.push_str("        </DataArray>\n      </Cells>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    Ok(s)
}

pub fn write(path: &Path, field: &SpatialField, bg: &BackgroundState, c: &PhysicalConstants, t: f64) -> Result<()> {
    std::fs::write(path, render(field, bg, c, t)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdivision_counts() {
        for n in 1..=8 {
            let (pts, tris) = subdivision(n);
            assert_eq!(pts.len(), (n + 1) * (n + 2) / 2);
            assert_eq!(tris.len(), n * n);
            let area: f64 = tris
                .iter()
                .map(|t| crate::mesh::signed_area(pts[t[0]], pts[t[1]], pts[t[2]]))
                .inspect(|a| assert!(*a > 0.0))
                .sum();
            assert!((area - 0.5).abs() < 1e-14);
        }
    }
}

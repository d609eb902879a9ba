//! Plain-text mesh format.
//!
//! ```text
//! # comment lines start with '#'
//! vertices <nv>
//! <x> <y>                       (nv lines)
//! cells <nc>
//! <v1> <v2> <v3> <p>            (nc lines, counter-clockwise)
//! boundary <nb>
//! <v1> <v2> <tag> [curved]      (nb lines)
//! curve schaer <h_c> <a_c> <lambda_c>     (optional)
//! ```
//!
//! Tags: `noflux`, `nonreflecting`, `periodic:<id>`, `symmetric:x1`, `symmetric:x2`.

use std::fmt::Write as _;
use std::path::Path;

use super::{Axis, BoundaryCurve, BoundaryEdge, BoundaryTag, TriMesh};
use crate::error::{Error, Result};

fn tag_name(t: BoundaryTag) -> String {
    match t {
        BoundaryTag::NoFlux => "noflux".into(),
        BoundaryTag::NonReflecting => "nonreflecting".into(),
        BoundaryTag::Periodic(id) => format!("periodic:{id}"),
        BoundaryTag::Symmetric(Axis::X1) => "symmetric:x1".into(),
        BoundaryTag::Symmetric(Axis::X2) => "symmetric:x2".into(),
    }
}

pub(crate) fn parse_tag(s: &str) -> Option<BoundaryTag> {
    match s {
        "noflux" => Some(BoundaryTag::NoFlux),
        "nonreflecting" => Some(BoundaryTag::NonReflecting),
        "symmetric:x1" => Some(BoundaryTag::Symmetric(Axis::X1)),
        "symmetric:x2" => Some(BoundaryTag::Symmetric(Axis::X2)),
        _ => s.strip_prefix("periodic:").and_then(|id| id.parse().ok()).map(BoundaryTag::Periodic),
    }
}

pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:e} {:e}", v[0], v[1]).unwrap();
    }
    writeln!(s, "cells {}", mesh.cells.len()).unwrap();
    for (c, p) in mesh.cells.iter().zip(&mesh.degrees) {
        writeln!(s, "{} {} {} {}", c[0], c[1], c[2], p).unwrap();
    }
    writeln!(s, "boundary {}", mesh.boundary.len()).unwrap();
    for b in &mesh.boundary {
        writeln!(s, "{} {} {}{}", b.v[0], b.v[1], tag_name(b.tag), if b.curved { " curved" } else { "" }).unwrap();
    }
    match mesh.curve {
        Some(BoundaryCurve::Schaer { h_c, a_c, lambda_c }) => {
            writeln!(s, "curve schaer {h_c:e} {a_c:e} {lambda_c:e}").unwrap();
        }
        Some(BoundaryCurve::Flat { height }) => {
            writeln!(s, "curve flat {height:e}").unwrap();
        }
        None => {}
    }
    s
}

pub fn mesh_from_str(text: &str) -> Result<TriMesh> {
    let err = |line: usize, key: &str, msg: &str| Error::Parse { line, key: key.into(), msg: msg.into() };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut pos = 0;
    let take = |pos: &mut usize| -> Result<(usize, Vec<&str>)> {
        let (ln, l) = *lines.get(*pos).ok_or_else(|| err(0, "mesh", "unexpected end of file"))?;
        *pos += 1;
        Ok((ln, l.split_whitespace().collect()))
    };
    let num = |ln: usize, s: &str, key: &str| -> Result<f64> { s.parse().map_err(|_| err(ln, key, "not a number")) };
    let idx = |ln: usize, s: &str, key: &str| -> Result<usize> { s.parse().map_err(|_| err(ln, key, "not an index")) };
    let (ln, t) = take(&mut pos)?;
    if t.first() != Some(&"vertices") || t.len() != 2 {
        return Err(err(ln, "vertices", "missing section header"));
    }
    let nv = idx(ln, t[1], "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = take(&mut pos)?;
        if t.len() != 2 {
            return Err(err(ln, "vertices", "expected `x y`"));
        }
        vertices.push([num(ln, t[0], "x")?, num(ln, t[1], "y")?]);
    }
    let (ln, t) = take(&mut pos)?;
    if t.first() != Some(&"cells") || t.len() != 2 {
        return Err(err(ln, "cells", "missing section header"));
    }
    let nc = idx(ln, t[1], "cells")?;
    let mut cells = Vec::with_capacity(nc);
    let mut degrees = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, t) = take(&mut pos)?;
        if t.len() != 4 {
            return Err(err(ln, "cells", "expected `v1 v2 v3 p`"));
        }
        cells.push([idx(ln, t[0], "v1")?, idx(ln, t[1], "v2")?, idx(ln, t[2], "v3")?]);
        degrees.push(idx(ln, t[3], "p")?);
    }
    let (ln, t) = take(&mut pos)?;
    if t.first() != Some(&"boundary") || t.len() != 2 {
        return Err(err(ln, "boundary", "missing section header"));
    }
    let nb = idx(ln, t[1], "boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, t) = take(&mut pos)?;
        if t.len() < 3 || t.len() > 4 || (t.len() == 4 && t[3] != "curved") {
            return Err(err(ln, "boundary", "expected `v1 v2 tag [curved]`"));
        }
        let tag = parse_tag(t[2]).ok_or_else(|| err(ln, "tag", "unknown boundary tag"))?;
        boundary.push(BoundaryEdge { v: [idx(ln, t[0], "v1")?, idx(ln, t[1], "v2")?], tag, curved: t.len() == 4 });
    }
    let mut curve = None;
    if let Ok((ln, t)) = take(&mut pos) {
        curve = Some(match t.as_slice() {
            ["curve", "schaer", h, a, l] => BoundaryCurve::Schaer {
                h_c: num(ln, h, "h_c")?,
                a_c: num(ln, a, "a_c")?,
                lambda_c: num(ln, l, "lambda_c")?,
            },
            ["curve", "flat", h] => BoundaryCurve::Flat { height: num(ln, h, "height")? },
            _ => return Err(err(ln, "curve", "unrecognised trailing line")),
        });
    }
    TriMesh::new(vertices, cells, degrees, boundary, curve)
}

pub fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::super::{rectangle, RectangleSpec};
    use super::*;

    #[test]
    fn round_trip() {
        let spec = RectangleSpec::with_cell_count([0.0, 3.0], [0.0, 1.0], 30).with_tags([
            BoundaryTag::NoFlux,
            BoundaryTag::Periodic(1),
            BoundaryTag::NonReflecting,
            BoundaryTag::Periodic(1),
        ]);
        let m = rectangle(&spec).unwrap();
        let back = mesh_from_str(&mesh_to_string(&m)).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.boundary, m.boundary);
        assert_eq!(back.faces(), m.faces());
    }

    #[test]
    fn bad_tag_reports_line() {
        let text = "vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2 1\nboundary 3\n0 1 wall\n1 2 noflux\n2 0 noflux\n";
        match mesh_from_str(text) {
            Err(Error::Parse { line, key, .. }) => {
                assert_eq!(line, 8);
                assert_eq!(key, "tag");
            }
            other => panic!("{other:?}"),
        }
    }
}

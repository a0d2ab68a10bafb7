//! Line-oriented text format:
//!
//! ```text
//! steklovmesh 1
//! nodes <N>
//! <idx> <x> <y>
//! tris <M>
//! <idx> <a> <b> <c>
//! bedges <K>
//! <idx> <a> <b> <tag>
//! ppairs <P>
//! <slave> <master>
//! ```
//!
//! Coordinates are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, GeometryError, Mesh};

const HEADER: &str = "steklovmesh 1";

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.nodes.len() + mesh.triangles.len()));
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i} {:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "tris {}", mesh.triangles.len());
    for (i, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "bedges {}", mesh.boundary_edges.len());
    for (i, e) in mesh.boundary_edges.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", e.a, e.b, e.tag.code());
    }
    let _ = writeln!(s, "ppairs {}", mesh.periodic_pairs.len());
    for (a, b) in &mesh.periodic_pairs {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn mesh_write(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), GeometryError> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn mesh_read(path: impl AsRef<Path>) -> Result<Mesh, GeometryError> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> GeometryError {
        GeometryError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_fields(&mut self) -> Result<Vec<&'a str>, GeometryError> {
        loop {
            let Some((i, l)) = self.inner.next() else {
                self.line += 1;
                return Err(self.err("unexpected end of file"));
            };
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l.split_whitespace().collect());
            }
        }
    }

    fn section(&mut self, name: &str) -> Result<usize, GeometryError> {
        let f = self.next_fields()?;
        if f.len() != 2 || f[0] != name {
            return Err(self.err(format!("expected \"{name} <count>\"")));
        }
        self.parse(f[1])
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, GeometryError> {
        s.parse().map_err(|_| self.err(format!("cannot parse {s:?}")))
    }

    fn record(&mut self, width: usize, index: Option<usize>) -> Result<Vec<&'a str>, GeometryError> {
        let f = self.next_fields()?;
        if f.len() != width {
            return Err(self.err(format!("expected {width} fields, found {}", f.len())));
        }
        if let Some(i) = index {
            if self.parse::<usize>(f[0])? != i {
                return Err(self.err(format!("expected record index {i}")));
            }
        }
        Ok(f)
    }
}

/// Parses the text format and validates every mesh invariant.
pub fn mesh_from_str(text: &str) -> Result<Mesh, GeometryError> {
    let mut lx = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lx.next_fields()?.join(" ") != HEADER {
        return Err(lx.err(format!("expected header {HEADER:?}")));
    }
    let n = lx.section("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let f = lx.record(3, Some(i))?;
        nodes.push([lx.parse(f[1])?, lx.parse(f[2])?]);
    }
    let m = lx.section("tris")?;
    let mut triangles = Vec::with_capacity(m);
    for i in 0..m {
        let f = lx.record(4, Some(i))?;
        triangles.push([lx.parse(f[1])?, lx.parse(f[2])?, lx.parse(f[3])?]);
    }
    let k = lx.section("bedges")?;
    let mut boundary_edges = Vec::with_capacity(k);
    for i in 0..k {
        let f = lx.record(4, Some(i))?;
        let code: u8 = lx.parse(f[3])?;
        let tag = BoundaryTag::from_code(code).ok_or_else(|| lx.err(format!("unknown tag {code}")))?;
        let (a, b): (usize, usize) = (lx.parse(f[1])?, lx.parse(f[2])?);
        if a >= n || b >= n {
            return Err(lx.err("boundary edge references a missing node"));
        }
        boundary_edges.push(BoundaryEdge { a, b, tag });
    }
    let p = lx.section("ppairs")?;
    let mut periodic_pairs = Vec::with_capacity(p);
    for _ in 0..p {
        let f = lx.record(2, None)?;
        periodic_pairs.push((lx.parse(f[0])?, lx.parse(f[1])?));
    }
    let mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        periodic_pairs,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cell_mesh, CellGeometry};

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = build_cell_mesh(&CellGeometry::disk(0.3, 16)).unwrap();
        let back = mesh_from_str(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(mesh, back);
        for (p, q) in mesh.nodes.iter().zip(&back.nodes) {
            assert_eq!(p[0].to_bits(), q[0].to_bits());
            assert_eq!(p[1].to_bits(), q[1].to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cell.mesh");
        let mesh = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
        mesh_write(&mesh, &path).unwrap();
        assert_eq!(mesh_read(&path).unwrap(), mesh);
    }

    const TINY: &str = "steklovmesh 1
nodes 3
0 0 0
1 1 0
2 0 1
tris 1
0 0 1 2
bedges 3
0 0 1 5
1 1 2 4
2 2 0 3
ppairs 0
";

    #[test]
    fn tiny_file_parses() {
        let mesh = mesh_from_str(TINY).unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn zero_area_triangle_rejected() {
        let bad = TINY.replace("2 0 1\n", "2 2 0\n");
        assert!(matches!(mesh_from_str(&bad), Err(GeometryError::InvalidMesh(_))));
    }

    #[test]
    fn bad_periodic_pair_rejected() {
        let bad = TINY.replace("ppairs 0\n", "ppairs 1\n2 1\n");
        assert!(matches!(mesh_from_str(&bad), Err(GeometryError::InvalidMesh(_))));
        let ok = TINY.replace("ppairs 0\n", "ppairs 1\n1 0\n");
        assert!(mesh_from_str(&ok).is_ok());
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(mesh_from_str("steklovmesh 2\n"), Err(GeometryError::Parse { line: 1, .. })));
        let bad = TINY.replace("1 1 0\n", "1 x 0\n");
        assert!(matches!(mesh_from_str(&bad), Err(GeometryError::Parse { line: 4, .. })));
        let bad = TINY.replace("ppairs 0\n", "");
        assert!(matches!(mesh_from_str(&bad), Err(GeometryError::Parse { .. })));
    }
}

//! The "smpbe-mesh 1" text format.
//!
//! ```text
//! smpbe-mesh 1
//! <vertex count>
//! x y z
//! <tet count>
//! i j k l solute|solvent
//! <facet count>
//! i j k
//! ```

use std::fmt::Write as _;
use std::io::BufRead;

use super::{InterfaceMesh, Region};
use crate::error::{Result, SmpbeError};

const HEADER: &str = "smpbe-mesh 1";

/// Floats are written with 17 significant digits, which round-trips exactly.
pub fn export_mesh(mesh: &InterfaceMesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.vertices.len() + mesh.tets.len()));
    s.push_str(HEADER);
    s.push('\n');
    let _ = writeln!(s, "{}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "{}", mesh.tets.len());
    for (t, r) in mesh.tets.iter().zip(&mesh.regions) {
        let _ = writeln!(s, "{} {} {} {} {}", t[0], t[1], t[2], t[3], r.name());
    }
    let _ = writeln!(s, "{}", mesh.interface_facets.len());
    for f in &mesh.interface_facets {
        let _ = writeln!(s, "{} {} {}", f[0], f[1], f[2]);
    }
    s
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    lineno: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<(usize, String)> {
        loop {
            self.lineno += 1;
            match self.inner.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok((self.lineno, line));
                    }
                }
                None => return Err(SmpbeError::Parse { line: self.lineno, msg: "unexpected end of file".into() }),
            }
        }
    }

    fn count(&mut self) -> Result<usize> {
        let (line, text) = self.next_line()?;
        text.trim()
            .parse()
            .map_err(|_| SmpbeError::Parse { line, msg: format!("expected a count, found '{}'", text.trim()) })
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| SmpbeError::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| SmpbeError::Parse { line, msg: format!("malformed {what} '{tok}'") })
}

/// Reads and validates a mesh. Tets must be positively oriented.
pub fn import_mesh<R: BufRead>(reader: R) -> Result<InterfaceMesh> {
    let mut lines = Lines { inner: reader.lines(), lineno: 0 };
    let (line, header) = lines.next_line()?;
    if header.trim() != HEADER {
        return Err(SmpbeError::Parse { line, msg: format!("expected header '{HEADER}'") });
    }
    let nv = lines.count()?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines.next_line()?;
        let mut it = text.split_whitespace();
        let mut p = [0.0f64; 3];
        for c in &mut p {
            *c = field(it.next(), line, "coordinate")?;
            if !c.is_finite() {
                return Err(SmpbeError::Parse { line, msg: "non-finite coordinate".into() });
            }
        }
        vertices.push(p);
    }
    let nt = lines.count()?;
    let mut tets = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, text) = lines.next_line()?;
        let mut it = text.split_whitespace();
        let mut t = [0usize; 4];
        for v in &mut t {
            *v = field(it.next(), line, "vertex index")?;
            if *v >= nv {
                return Err(SmpbeError::Parse {
                    line,
                    msg: format!("vertex index {v} out of range (mesh has {nv} vertices)"),
                });
            }
        }
        let region = match it.next() {
            Some("solute") => Region::Solute,
            Some("solvent") => Region::Solvent,
            Some(other) => return Err(SmpbeError::Parse { line, msg: format!("unknown region label '{other}'") }),
            None => return Err(SmpbeError::Parse { line, msg: "missing region label".into() }),
        };
        let vol = super::signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
        if !(vol > 0.0) {
            return Err(SmpbeError::Parse { line, msg: format!("tet has non-positive volume {vol:e}") });
        }
        tets.push(t);
        regions.push(region);
    }
    let nf = lines.count()?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, text) = lines.next_line()?;
        let mut it = text.split_whitespace();
        let mut f = [0usize; 3];
        for v in &mut f {
            *v = field(it.next(), line, "vertex index")?;
            if *v >= nv {
                return Err(SmpbeError::Parse {
                    line,
                    msg: format!("vertex index {v} out of range (mesh has {nv} vertices)"),
                });
            }
        }
        facets.push(f);
    }
    Ok(InterfaceMesh::from_parts(vertices, tets, regions, facets))
}

pub fn import_mesh_str(text: &str) -> Result<InterfaceMesh> {
    import_mesh(text.as_bytes())
}

pub fn read_mesh_file(path: &std::path::Path) -> Result<InterfaceMesh> {
    let f = std::fs::File::open(path)?;
    import_mesh(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tet() {
        let text = "smpbe-mesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1\n0 1 2 3 solvent\n0\n";
        let m = import_mesh_str(text).unwrap();
        assert_eq!(m.tets.len(), 1);
        assert_eq!(m.interface_facets.len(), 0);
        assert_eq!(m.regions[0], Region::Solvent);
    }

    #[test]
    fn bad_index_reports_line() {
        let text = "smpbe-mesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1\n0 1 2 999 solvent\n0\n";
        match import_mesh_str(text) {
            Err(SmpbeError::Parse { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("999"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_region_and_orientation() {
        let bad_region = "smpbe-mesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1\n0 1 2 3 water\n0\n";
        assert!(import_mesh_str(bad_region).is_err());
        let flipped = "smpbe-mesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1\n0 2 1 3 solute\n0\n";
        assert!(import_mesh_str(flipped).is_err());
    }
}

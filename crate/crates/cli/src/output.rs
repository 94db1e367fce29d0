//! Field, gradient and table writers.

use std::fmt::Write as _;

use smpbe_core::composite::CompositeField;
use smpbe_core::mesh::InterfaceMesh;

use crate::CliError;

/// Shortest text that reads back to the same `f64` is not what we want here;
/// every float gets 17 significant digits so files diff cleanly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Lattice points in lattice order, then the mesh nodes that are not lattice
/// points.
pub fn field_rows(field: &CompositeField) -> Vec<([f64; 3], f64)> {
    let layout = &field.layout;
    let g = layout.partition.lattice;
    let mut rows = Vec::with_capacity(field.lattice.len());
    for (l, &v) in field.lattice.iter().enumerate() {
        let [i, j, k] = g.ijk(l);
        rows.push((g.point(i, j, k), v));
    }
    for (v, link) in layout.mesh.lattice_links.iter().enumerate() {
        if link.is_none() {
            rows.push((layout.mesh.vertices[v], field.mesh[v]));
        }
    }
    rows
}

pub fn field_csv(field: &CompositeField) -> String {
    let rows = field_rows(field);
    let mut s = String::with_capacity(rows.len() * 96);
    s.push_str("x,y,z,value\n");
    for (p, v) in rows {
        let _ = writeln!(s, "{},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]), fmt_f64(v));
    }
    s
}

/// Reads `x,y,z,value` rows back.
pub fn read_field_csv(text: &str) -> Result<Vec<([f64; 3], f64)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.trim() == "x,y,z,value" {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config { line: i + 1, msg: format!("bad number: {e}") })?;
        if cols.len() != 4 {
            return Err(CliError::Config { line: i + 1, msg: format!("expected 4 columns, found {}", cols.len()) });
        }
        out.push(([cols[0], cols[1], cols[2]], cols[3]));
    }
    Ok(out)
}

/// `-∇u` on the lattice by central differences (one-sided on the outer
/// boundary).
pub fn lattice_field_strength(field: &CompositeField) -> Vec<[f64; 3]> {
    let g = field.layout.partition.lattice;
    let h = g.h;
    let u = &field.lattice;
    (0..u.len())
        .map(|l| {
            let ijk = g.ijk(l);
            let mut e = [0.0; 3];
            for d in 0..3 {
                let mut lo = ijk;
                let mut hi = ijk;
                if ijk[d] > 0 {
                    lo[d] -= 1;
                }
                if ijk[d] < g.dims[d] {
                    hi[d] += 1;
                }
                let span = (hi[d] - lo[d]) as f64 * h;
                e[d] = -(u[g.index(hi[0], hi[1], hi[2])] - u[g.index(lo[0], lo[1], lo[2])]) / span;
            }
            e
        })
        .collect()
}

pub fn gradient_csv(field: &CompositeField) -> String {
    let g = field.layout.partition.lattice;
    let e = lattice_field_strength(field);
    let mut s = String::with_capacity(e.len() * 140);
    s.push_str("x,y,z,ex,ey,ez\n");
    for (l, v) in e.iter().enumerate() {
        let [i, j, k] = g.ijk(l);
        let p = g.point(i, j, k);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(p[2]),
            fmt_f64(v[0]),
            fmt_f64(v[1]),
            fmt_f64(v[2])
        );
    }
    s
}

/// Lattice values and `-∇u` as legacy VTK structured points.
pub fn lattice_vtk(field: &CompositeField, name: &str) -> String {
    let g = field.layout.partition.lattice;
    let n = [g.dims[0] + 1, g.dims[1] + 1, g.dims[2] + 1];
    let e = lattice_field_strength(field);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{name}\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", n[0], n[1], n[2]);
    let _ = writeln!(s, "ORIGIN {} {} {}", fmt_f64(g.origin[0]), fmt_f64(g.origin[1]), fmt_f64(g.origin[2]));
    let _ = writeln!(s, "SPACING {} {} {}", fmt_f64(g.h), fmt_f64(g.h), fmt_f64(g.h));
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", field.lattice.len());
    for &v in &field.lattice {
        let _ = writeln!(s, "{}", fmt_f64(v));
    }
    s.push_str("VECTORS E double\n");
    for v in &e {
        let _ = writeln!(s, "{} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]));
    }
    s
}

/// Mesh values as a legacy VTK unstructured grid with the region of each
/// tetrahedron (0 solute, 1 solvent).
pub fn mesh_vtk(mesh: &InterfaceMesh, values: &[f64], name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{name}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
    }
    let nt = mesh.num_tets();
    let _ = writeln!(s, "CELLS {} {}", nt, 5 * nt);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("10\n");
    }
    let _ = writeln!(s, "CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for r in &mesh.regions {
        let code = match r {
            smpbe_core::mesh::Region::Solute => 0,
            smpbe_core::mesh::Region::Solvent => 1,
        };
        let _ = writeln!(s, "{code}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", values.len());
    for &v in values {
        let _ = writeln!(s, "{}", fmt_f64(v));
    }
    s
}

/// Ordered `key = value` report.
#[derive(Debug, Default, Clone)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn put_f64(&mut self, key: impl Into<String>, value: f64) {
        self.lines.push((key.into(), fmt_f64(value)));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Parses a rendered report.
    pub fn parse(text: &str) -> Self {
        let lines = text
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        Self { lines }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 0.0, -0.0, 1e-300] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::default();
        r.put("scenario", "born");
        r.put_f64("error", 0.25);
        let back = Report::parse(&r.render());
        assert_eq!(back.get("scenario"), Some("born"));
        assert_eq!(back.get("error").unwrap().parse::<f64>().unwrap(), 0.25);
        assert_eq!(back.get("missing"), None);
    }
}

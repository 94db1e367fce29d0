//! Whitespace-tolerant PQR reader and writer.

use std::io::BufRead;

use crate::error::{Result, SmpbeError};
use crate::model::{Atom, ChargeSystem};

/// Parses ATOM/HETATM records; the last five fields of each record are
/// `x y z charge radius`. Other records are skipped.
pub fn parse_pqr<R: BufRead>(reader: R) -> Result<ChargeSystem> {
    let mut atoms = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"ATOM") | Some(&"HETATM") => {}
            _ => continue,
        }
        if fields.len() < 6 {
            return Err(SmpbeError::Parse {
                line: lineno,
                msg: format!("expected at least 5 numeric fields, found {}", fields.len() - 1),
            });
        }
        let tail = &fields[fields.len() - 5..];
        let mut v = [0.0; 5];
        for (k, tok) in tail.iter().enumerate() {
            v[k] = tok.parse::<f64>().map_err(|_| SmpbeError::Parse {
                line: lineno,
                msg: format!("malformed numeric field '{tok}'"),
            })?;
            if !v[k].is_finite() {
                return Err(SmpbeError::Parse { line: lineno, msg: format!("non-finite field '{tok}'") });
            }
        }
        if v[4] < 0.0 {
            return Err(SmpbeError::Parse { line: lineno, msg: format!("negative radius {}", v[4]) });
        }
        atoms.push(Atom { position: [v[0], v[1], v[2]], charge: v[3], radius: v[4] });
    }
    ChargeSystem::new(atoms)
}

pub fn parse_pqr_str(text: &str) -> Result<ChargeSystem> {
    parse_pqr(text.as_bytes())
}

pub fn read_pqr_file(path: &std::path::Path) -> Result<ChargeSystem> {
    let f = std::fs::File::open(path)?;
    parse_pqr(std::io::BufReader::new(f))
}

/// Writes one ATOM record per atom with round-trip float formatting.
pub fn write_pqr(charges: &ChargeSystem) -> String {
    let mut out = String::new();
    for (i, a) in charges.atoms().iter().enumerate() {
        out.push_str(&format!(
            "ATOM {} X UNK 1 {:e} {:e} {:e} {:e} {:e}\n",
            i + 1,
            a.position[0],
            a.position[1],
            a.position[2],
            a.charge,
            a.radius
        ));
    }
    out.push_str("END\n");
    out
}

//! Run settings with layered overrides: defaults, then a `key = value`
//! config file, then command-line flags.

use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Born,
    Manufactured,
    Dipole,
    Molecule,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "born" => Ok(Scenario::Born),
            "manufactured" => Ok(Scenario::Manufactured),
            "dipole" => Ok(Scenario::Dipole),
            "molecule" => Ok(Scenario::Molecule),
            other => Err(CliError::Usage(format!(
                "unknown scenario '{other}' (expected born, manufactured, dipole or molecule)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Born => "born",
            Scenario::Manufactured => "manufactured",
            Scenario::Dipole => "dipole",
            Scenario::Molecule => "molecule",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Vtk,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "vtk" => Ok(Format::Vtk),
            other => Err(CliError::Usage(format!("unsupported format '{other}' (expected csv or vtk)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Zero,
    Analytic,
}

/// `start:step:end` over `xi = ln I_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scan {
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl Scan {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Usage(format!("--is-scan expects start:step:end, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if !(v[1] > 0.0) || v[2] < v[0] || v.iter().any(|x| !x.is_finite()) {
            return Err(bad());
        }
        Ok(Self { start: v[0], step: v[1], end: v[2] })
    }

    /// Grid values `start + j step` up to `end` (inclusive, with a small
    /// tolerance for the last point).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|j| self.start + self.step * j as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub mu: Option<u32>,
    pub omega_psi: f64,
    pub omega_p: f64,
    pub lambda: f64,
    pub eps_p: f64,
    pub eps_s: f64,
    pub ionic_strength: f64,
    pub temperature: f64,
    pub tol_dd: f64,
    pub tol_newton: f64,
    pub tol_linear: f64,
    pub max_sweeps: usize,
    pub max_newton: usize,
    pub pbe: bool,
    pub boundary: Option<BoundaryKind>,
    pub format: Format,
    pub is_scan: Option<Scan>,
    pub margin: f64,
    /// Refinement levels for convergence runs; scenario default when unset.
    pub levels: Option<usize>,
    pub radius: f64,
    pub first_direction: bool,
    pub gradient: bool,
    pub threads: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n: None,
            m: None,
            mu: None,
            omega_psi: 1.275,
            omega_p: 1.225,
            lambda: 3.11,
            eps_p: 2.0,
            eps_s: 80.0,
            ionic_strength: 0.1,
            temperature: 298.15,
            tol_dd: 1e-6,
            tol_newton: 1e-7,
            tol_linear: 1e-8,
            max_sweeps: 100,
            max_newton: 50,
            pbe: false,
            boundary: None,
            format: Format::Csv,
            is_scan: None,
            margin: 2.0,
            levels: None,
            radius: 1.0,
            first_direction: false,
            gradient: false,
            threads: 0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Usage(format!("invalid value '{v}' for {key}")))
}

fn flag(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value '{v}' for {key} (expected true or false)"))),
    }
}

impl Settings {
    /// Applies one override. Keys are the long flag names without dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "n" => self.n = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "mu" => self.mu = Some(num(key, value)?),
            "omega-psi" => self.omega_psi = num(key, value)?,
            "omega-p" => self.omega_p = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "eps-p" => self.eps_p = num(key, value)?,
            "eps-s" => self.eps_s = num(key, value)?,
            "is" => self.ionic_strength = num(key, value)?,
            "temp" => self.temperature = num(key, value)?,
            "tol-dd" => self.tol_dd = num(key, value)?,
            "tol-newton" => self.tol_newton = num(key, value)?,
            "tol-linear" => self.tol_linear = num(key, value)?,
            "max-sweeps" => self.max_sweeps = num(key, value)?,
            "max-newton" => self.max_newton = num(key, value)?,
            "pbe" => self.pbe = flag(key, value)?,
            "boundary" => {
                self.boundary = Some(match value.trim() {
                    "zero" => BoundaryKind::Zero,
                    "analytic" => BoundaryKind::Analytic,
                    other => return Err(CliError::Usage(format!("unknown boundary '{other}' (expected zero or analytic)"))),
                })
            }
            "format" => self.format = Format::parse(value.trim())?,
            "is-scan" => self.is_scan = Some(Scan::parse(value)?),
            "margin" => self.margin = num(key, value)?,
            "levels" => self.levels = Some(num(key, value)?),
            "radius" => self.radius = num(key, value)?,
            "first-direction" => self.first_direction = flag(key, value)?,
            "gradient" => self.gradient = flag(key, value)?,
            "threads" => self.threads = num(key, value)?,
            other => return Err(CliError::Usage(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config { line: i + 1, msg: format!("expected key = value, found '{line}'") })?;
            self.set(k.trim(), v.trim()).map_err(|e| CliError::Config { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)?;
        self.apply_file_text(&text)
    }
}

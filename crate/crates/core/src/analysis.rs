//! Post-processing: ion concentrations, solvation and binding energies,
//! the Born-ball reference solution and error norms.

use crate::composite::CompositeField;
use crate::error::{Result, SmpbeError};
use crate::model::constants::AVOGADRO;
use crate::model::{ChargeSystem, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IonModel {
    Smpbe,
    Pbe,
}

/// `(C_Na, C_Cl)` in mol/L at potential `u`, and whether the value
/// saturated at `f64::MAX`.
pub fn concentration_pair(u: f64, params: &ModelParams, model: IonModel) -> (f64, f64, bool) {
    let i_s = params.ionic_strength;
    let a = match model {
        IonModel::Smpbe => params.size_factor(),
        IonModel::Pbe => 0.0,
    };
    if a == 0.0 {
        let na = i_s * (-u).exp();
        let cl = i_s * u.exp();
        let sat = na.is_infinite() || cl.is_infinite();
        return (na.min(f64::MAX), cl.min(f64::MAX), sat);
    }
    // Multiply through by 2 e^{-|u|} so nothing overflows.
    let e = (-u.abs()).exp();
    let den = 2.0 * e + a * (1.0 + e * e);
    let (big, small) = (2.0 * i_s / den, 2.0 * i_s * e * e / den);
    if u >= 0.0 {
        (small, big, false)
    } else {
        (big, small, false)
    }
}

/// Concentrations at every value of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Concentrations {
    pub na: Vec<f64>,
    pub cl: Vec<f64>,
    /// Some value overflowed (PBE only).
    pub saturated: bool,
}

pub fn concentrations(u: &[f64], params: &ModelParams, model: IonModel) -> Result<Concentrations> {
    let mut out = Concentrations { na: Vec::with_capacity(u.len()), cl: Vec::with_capacity(u.len()), saturated: false };
    for &x in u {
        if !x.is_finite() {
            return Err(SmpbeError::NonFinite("potential passed to concentrations".into()));
        }
        let (na, cl, sat) = concentration_pair(x, params, model);
        out.na.push(na);
        out.cl.push(cl);
        out.saturated |= sat;
    }
    Ok(out)
}

/// Largest possible SMPBE concentration, `10²⁷/(N_A Λ³)` mol/L.
pub fn saturation_concentration(lambda: f64) -> f64 {
    1e27 / (AVOGADRO * lambda.powi(3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Electrostatic solvation free energy, kcal/mol.
    pub de: f64,
    /// Contribution of each atom, kcal/mol.
    pub per_atom: Vec<f64>,
    pub ionic_strength: f64,
    pub params: ModelParams,
}

/// `ΔE = (N_A k_B T / 4184) / 2 · Σ z_j (Psi(r_j) + Phi(r_j))`.
pub fn solvation_energy(
    psi: &CompositeField,
    phi: &CompositeField,
    charges: &ChargeSystem,
    params: &ModelParams,
) -> Result<EnergyReport> {
    let mesh = &psi.layout.mesh;
    let reaction: Vec<f64> = psi.mesh.iter().zip(&phi.mesh).map(|(a, b)| a + b).collect();
    let points: Vec<[f64; 3]> = charges.atoms().iter().map(|a| a.position).collect();
    let values = mesh.eval_at_points(&reaction, &points)?;
    let pre = 0.5 * params.kt_kcal_per_mol();
    let per_atom: Vec<f64> = charges.atoms().iter().zip(&values).map(|(a, v)| pre * a.charge * v).collect();
    let de = per_atom.iter().sum();
    Ok(EnergyReport { de, per_atom, ionic_strength: params.ionic_strength, params: params.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    /// `(xi, E_b)` with `xi = ln I_s`.
    pub points: Vec<(f64, f64)>,
    pub m: f64,
    pub b: f64,
    /// `-m` converted to J/mol and divided by `N_A k_B T`.
    pub m_s: f64,
    /// Largest absolute deviation from the line.
    pub residual: f64,
}

/// Least-squares line `y = m x + b`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(SmpbeError::InvalidParameter("a line fit needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(SmpbeError::InvalidParameter("all abscissae are equal".into()));
    }
    let m = sxy / sxx;
    Ok((m, my - m * mx))
}

/// Fits binding energies (kcal/mol) against `xi = ln I_s`.
pub fn binding_slope(energies: &[(f64, f64)], temperature: f64) -> Result<SlopeFit> {
    if let Some(&(i, _)) = energies.iter().find(|(i, _)| !(*i > 0.0)) {
        return Err(SmpbeError::InvalidParameter(format!("ionic strength must be positive, got {i}")));
    }
    let points: Vec<(f64, f64)> = energies.iter().map(|&(i, e)| (i.ln(), e)).collect();
    let (m, b) = fit_line(&points)?;
    let residual = points.iter().fold(0.0f64, |r, &(x, y)| r.max((y - (m * x + b)).abs()));
    let kt_j_per_mol = AVOGADRO * crate::model::constants::BOLTZMANN * temperature;
    let m_s = -m * crate::model::constants::JOULES_PER_KCAL / kt_j_per_mol;
    Ok(SlopeFit { points, m, b, m_s, residual })
}

/// `xi_j = -3 + 0.2 j`, `j = 0..=10`.
pub fn xi_grid() -> Vec<f64> {
    (0..=10).map(|j| -3.0 + 0.2 * j as f64).collect()
}

/// A ball of permittivity `eps_p` with one charge at its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornBall {
    pub center: [f64; 3],
    pub radius: f64,
    pub charge: f64,
    pub alpha: f64,
    pub eps_p: f64,
    pub eps_s: f64,
}

impl BornBall {
    /// Takes the ball from the single atom of `charges`.
    pub fn new(charges: &ChargeSystem, params: &ModelParams) -> Result<Self> {
        if charges.len() != 1 {
            return Err(SmpbeError::Unsupported(format!(
                "the Born solution needs exactly one charge, got {}",
                charges.len()
            )));
        }
        let a = &charges.atoms()[0];
        if !(a.radius > 0.0) {
            return Err(SmpbeError::InvalidParameter("Born ball radius must be positive".into()));
        }
        Ok(Self {
            center: a.position,
            radius: a.radius,
            charge: a.charge,
            alpha: params.alpha,
            eps_p: params.eps_p,
            eps_s: params.eps_s,
        })
    }

    /// `u(r)`; infinite at the center.
    pub fn eval(&self, r: [f64; 3]) -> f64 {
        let d = (0..3).map(|k| (r[k] - self.center[k]).powi(2)).sum::<f64>().sqrt();
        let c = self.charge * self.alpha / (4.0 * std::f64::consts::PI);
        if d < self.radius {
            c * (1.0 / self.eps_s - 1.0 / self.eps_p) / self.radius + c / (self.eps_p * d)
        } else {
            c / (self.eps_s * d)
        }
    }

    /// Reaction potential at the center, `u - G`.
    pub fn reaction_at_center(&self) -> f64 {
        self.charge * self.alpha / (4.0 * std::f64::consts::PI * self.radius) * (1.0 / self.eps_s - 1.0 / self.eps_p)
    }

    /// Solvation energy in kcal/mol.
    pub fn energy(&self, params: &ModelParams) -> f64 {
        0.5 * params.kt_kcal_per_mol() * self.charge * self.reaction_at_center()
    }
}

/// `u` of the Born ball built from `charges` at `r`.
pub fn born_analytic(r: [f64; 3], charges: &ChargeSystem, params: &ModelParams) -> Result<f64> {
    let ball = BornBall::new(charges, params)?;
    if (0..3).all(|k| r[k] == ball.center[k]) {
        return Err(SmpbeError::AtAtomCenter { atom: 0 });
    }
    Ok(ball.eval(r))
}

/// Every global lattice point, then the mesh nodes that are not lattice
/// points. Lattice points of the central box without a node of their own
/// carry the mesh interpolant.
pub fn sample_points(field: &CompositeField) -> Vec<([f64; 3], f64)> {
    let layout = &field.layout;
    let g = layout.partition.lattice;
    let mut out = Vec::with_capacity(field.lattice.len() + field.mesh.len() / 4);
    for l in 0..field.lattice.len() {
        let [i, j, k] = g.ijk(l);
        out.push((g.point(i, j, k), field.lattice[l]));
    }
    for (v, link) in layout.mesh.lattice_links.iter().enumerate() {
        if link.is_none() {
            out.push((layout.mesh.vertices[v], field.mesh[v]));
        }
    }
    out
}

/// `|u - u_h| / |u|` in the discrete l² norm over [`sample_points`],
/// skipping points closer than `h/2` to any of `centers`.
pub fn rel_l2_error(u_h: &CompositeField, u_ref: &dyn Fn([f64; 3]) -> f64, centers: &[[f64; 3]]) -> Result<f64> {
    let guard2 = (0.5 * u_h.layout.partition.h).powi(2);
    let (mut num, mut den) = (0.0, 0.0);
    for (p, v) in sample_points(u_h) {
        if centers.iter().any(|c| (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>() < guard2) {
            continue;
        }
        let r = u_ref(p);
        num += (r - v).powi(2);
        den += r * r;
    }
    if den == 0.0 {
        return Err(SmpbeError::InvalidParameter("reference solution vanishes at every sample point".into()));
    }
    Ok((num / den).sqrt())
}

/// `max |u(x) + u(-x)| / max |u|` over mirrored lattice points, for a
/// partition symmetric about `x = 0`. Points within `h/2` of `centers` are
/// skipped.
pub fn x_antisymmetry(field: &CompositeField, centers: &[[f64; 3]]) -> f64 {
    let part = &field.layout.partition;
    let g = part.lattice;
    let n = g.dims[0];
    let guard2 = (0.5 * part.h).powi(2);
    let near = |p: [f64; 3]| centers.iter().any(|c| (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>() < guard2);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for l in 0..field.lattice.len() {
        let [i, j, k] = g.ijk(l);
        let p = g.point(i, j, k);
        let q = g.point(n - i, j, k);
        if near(p) || near(q) || field.layout.is_orphan_lattice(l) || field.layout.is_orphan_lattice(g.index(n - i, j, k)) {
            continue;
        }
        let a = field.lattice[l];
        let b = field.lattice[g.index(n - i, j, k)];
        if a.is_finite() && b.is_finite() {
            worst = worst.max((a + b).abs());
            scale = scale.max(a.abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;

    fn born() -> (ChargeSystem, ModelParams) {
        let c = ChargeSystem::new(vec![Atom { position: [0.0; 3], charge: 1.0, radius: 1.0 }]).unwrap();
        (c, ModelParams::standard())
    }

    #[test]
    fn bulk_concentration() {
        let p = ModelParams::standard();
        let (na, cl, _) = concentration_pair(0.0, &p, IonModel::Smpbe);
        let expect = 0.1 / (1.0 + p.size_factor());
        assert!((na - expect).abs() < 1e-15 && (cl - expect).abs() < 1e-15);
        assert!((na - 0.09964).abs() < 5e-6);
    }

    #[test]
    fn saturation() {
        let p = ModelParams::standard();
        let sat = saturation_concentration(p.lambda);
        assert!((sat - 55.2).abs() < 0.05, "{sat}");
        let (na, _, _) = concentration_pair(-800.0, &p, IonModel::Smpbe);
        assert!((na - sat).abs() < 1e-9 * sat);
        let (na, _, flag) = concentration_pair(-800.0, &p, IonModel::Pbe);
        assert!(flag && na == f64::MAX);
    }

    #[test]
    fn born_values() {
        let (c, p) = born();
        let inside = born_analytic([0.0, 0.0, 0.999_999_999_999], &c, &p).unwrap();
        let outside = born_analytic([0.0, 0.0, 1.0], &c, &p).unwrap();
        assert!((inside - outside).abs() < 1e-8);
        assert!((outside - 7.006).abs() < 1e-3, "{outside}");
        let two = born_analytic([2.0, 0.0, 0.0], &c, &p).unwrap();
        assert!((two - 3.503).abs() < 1e-3);
        let ball = BornBall::new(&c, &p).unwrap();
        assert!((ball.reaction_at_center() + 273.2).abs() < 0.05);
        assert!((ball.energy(&p) + 80.9).abs() < 0.05, "{}", ball.energy(&p));
        assert!(born_analytic([0.0; 3], &c, &p).is_err());
    }

    #[test]
    fn line_fit_exact() {
        let pts: Vec<(f64, f64)> = xi_grid().iter().map(|&x| (x.exp(), 2.0 * x + 1.0)).collect();
        let fit = binding_slope(&pts, 298.15).unwrap();
        assert!((fit.m - 2.0).abs() < 1e-12 && (fit.b - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit_line(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }
}

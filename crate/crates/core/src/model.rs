//! Physical constants, model coefficients and the nonlinear ionic terms.

use crate::error::{Result, SmpbeError};

/// CODATA 2018 values (SI).
pub mod constants {
    /// Elementary charge, C.
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Vacuum permittivity, F/m.
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    /// Boltzmann constant, J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Avogadro constant, 1/mol.
    pub const AVOGADRO: f64 = 6.022_140_76e23;
    /// Joules per kilocalorie.
    pub const JOULES_PER_KCAL: f64 = 4184.0;
}

use constants::*;

/// Returns `(alpha, kappa2, m)` for temperature `t` (K) and ionic strength `i_s` (mol/L).
///
/// Lengths are in angstroms, so `kappa2` is in 1/Å² and `m` in 1/Å³.
pub fn derive_constants(t: f64, i_s: f64) -> Result<(f64, f64, f64)> {
    if !t.is_finite() || t <= 0.0 {
        return Err(SmpbeError::InvalidParameter(format!("temperature must be positive, got {t}")));
    }
    if !i_s.is_finite() || i_s < 0.0 {
        return Err(SmpbeError::InvalidParameter(format!(
            "ionic strength must be non-negative, got {i_s}"
        )));
    }
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    let base = e2 / (VACUUM_PERMITTIVITY * BOLTZMANN * t);
    let alpha = 1e10 * base;
    let kappa2 = 2.0 * i_s * 1e-17 * AVOGADRO * base;
    let m = 1e-27 * AVOGADRO * i_s;
    Ok((alpha, kappa2, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eps_p: f64,
    pub eps_s: f64,
    /// Ion/water cube side in Å. Zero gives the classical PBE.
    pub lambda: f64,
    pub temperature: f64,
    pub ionic_strength: f64,
    pub alpha: f64,
    pub kappa2: f64,
    pub m: f64,
}

impl ModelParams {
    pub fn new(eps_p: f64, eps_s: f64, lambda: f64, temperature: f64, ionic_strength: f64) -> Result<Self> {
        if !(eps_p.is_finite() && eps_p > 0.0) {
            return Err(SmpbeError::InvalidParameter(format!("eps_p must be positive, got {eps_p}")));
        }
        // Equal permittivities are allowed: they switch off the interface jump.
        if !(eps_s.is_finite() && eps_s >= eps_p) {
            return Err(SmpbeError::InvalidParameter(format!(
                "eps_s must be at least eps_p, got eps_s = {eps_s}, eps_p = {eps_p}"
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(SmpbeError::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
        }
        let (alpha, kappa2, m) = derive_constants(temperature, ionic_strength)?;
        Ok(Self { eps_p, eps_s, lambda, temperature, ionic_strength, alpha, kappa2, m })
    }

    /// eps_p = 2, eps_s = 80, Λ = 3.11 Å, T = 298.15 K, I_s = 0.1 mol/L.
    pub fn standard() -> Self {
        Self::new(2.0, 80.0, 3.11, 298.15, 0.1).expect("standard parameters are valid")
    }

    pub fn with_ionic_strength(&self, i_s: f64) -> Result<Self> {
        Self::new(self.eps_p, self.eps_s, self.lambda, self.temperature, i_s)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.eps_p, self.eps_s, lambda, self.temperature, self.ionic_strength)
    }

    pub fn with_permittivities(&self, eps_p: f64, eps_s: f64) -> Result<Self> {
        Self::new(eps_p, eps_s, self.lambda, self.temperature, self.ionic_strength)
    }

    /// The size factor `2 M Λ³`.
    pub fn size_factor(&self) -> f64 {
        2.0 * self.m * self.lambda.powi(3)
    }

    /// `k_B T` per mole in kcal/mol.
    pub fn kt_kcal_per_mol(&self) -> f64 {
        AVOGADRO * BOLTZMANN * self.temperature / JOULES_PER_KCAL
    }

    pub fn reaction_coeffs(&self, u: f64) -> (f64, f64) {
        reaction_coeffs(u, self)
    }

    pub fn nl(&self, u: f64) -> f64 {
        reaction_coeffs(u, self).0
    }

    pub fn nl_prime(&self, u: f64) -> f64 {
        reaction_coeffs(u, self).1
    }

    /// Antiderivative of `nl`: `κ²/a · ln(1 + a cosh u)` with `a = 2MΛ³`,
    /// or `κ² cosh u` when `a = 0`.
    pub fn energy_density(&self, u: f64) -> f64 {
        if self.kappa2 == 0.0 {
            return 0.0;
        }
        let a = self.size_factor();
        if a == 0.0 {
            return saturate(self.kappa2 * u.cosh());
        }
        let w = u.abs();
        let log_term = if w < 30.0 {
            (a * w.cosh()).ln_1p()
        } else {
            let e = (-w).exp();
            (2.0 * e + a * (1.0 + e * e)).ln() - std::f64::consts::LN_2 + w
        };
        self.kappa2 / a * log_term
    }

    /// Upper bound of `|nl|` when Λ > 0.
    pub fn nl_bound(&self) -> f64 {
        let a = self.size_factor();
        if a > 0.0 {
            self.kappa2 / a
        } else {
            f64::INFINITY
        }
    }
}

fn saturate(x: f64) -> f64 {
    if x.is_infinite() {
        f64::MAX.copysign(x)
    } else {
        x
    }
}

/// `nl(u) = κ² sinh u / (1 + a cosh u)` and its derivative, `a = 2MΛ³`.
///
/// Both are evaluated through `e^{-|u|}` so that they stay finite for any
/// finite `u` when `a > 0`. For `a = 0` the PBE values saturate at `f64::MAX`.
pub fn reaction_coeffs(u: f64, params: &ModelParams) -> (f64, f64) {
    let k2 = params.kappa2;
    if k2 == 0.0 {
        return (0.0, 0.0);
    }
    let a = params.size_factor();
    let w = u.abs();
    let e = (-w).exp();
    let one_minus_e2 = -(-2.0 * w).exp_m1();
    let den = 2.0 * e + a * (1.0 + e * e);
    if den == 0.0 {
        return (f64::MAX.copysign(u), f64::MAX);
    }
    let mut nl = saturate(k2 * one_minus_e2 / den);
    if u < 0.0 {
        nl = -nl;
    }
    let nlp = saturate(k2 * 2.0 * e * (1.0 + 2.0 * a * e + e * e) / (den * den));
    (nl, nlp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: [f64; 3],
    /// Charge number in units of e_c.
    pub charge: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSystem {
    atoms: Vec<Atom>,
}

impl ChargeSystem {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SmpbeError::NoAtoms);
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.position.iter().any(|x| !x.is_finite()) || !a.charge.is_finite() {
                return Err(SmpbeError::InvalidParameter(format!("atom {i} has non-finite data")));
            }
            if !(a.radius.is_finite() && a.radius >= 0.0) {
                return Err(SmpbeError::InvalidParameter(format!("atom {i} has invalid radius {}", a.radius)));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn net_charge(&self) -> f64 {
        self.atoms.iter().map(|a| a.charge).sum()
    }

    /// Mean of the atom positions.
    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for a in &self.atoms {
            for d in 0..3 {
                c[d] += a.position[d];
            }
        }
        let n = self.atoms.len() as f64;
        c.map(|x| x / n)
    }

    pub fn concat(&self, other: &ChargeSystem) -> ChargeSystem {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        ChargeSystem { atoms }
    }

    /// Same atoms with every charge multiplied by `factor`.
    pub fn scaled_charges(&self, factor: f64) -> ChargeSystem {
        ChargeSystem {
            atoms: self.atoms.iter().map(|a| Atom { charge: a.charge * factor, ..a.clone() }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn standard_constants() {
        let (alpha, k2, m) = derive_constants(298.15, 0.1).unwrap();
        assert_relative_eq!(alpha, 7042.94, max_relative = 5e-6);
        assert_relative_eq!(k2, 0.84827, max_relative = 5e-5);
        assert_relative_eq!(m, 6.0221e-5, max_relative = 5e-5);
    }

    #[test]
    fn zero_salt() {
        let (alpha, k2, m) = derive_constants(298.15, 0.0).unwrap();
        assert_relative_eq!(alpha, 7042.94, max_relative = 5e-6);
        assert_eq!(k2, 0.0);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn doubled_salt() {
        let (_, k2, m) = derive_constants(298.15, 0.2).unwrap();
        assert_relative_eq!(k2, 1.69654, max_relative = 5e-5);
        assert_relative_eq!(m, 1.20442e-4, max_relative = 5e-5);
    }

    #[test]
    fn bad_temperature() {
        assert!(derive_constants(0.0, 0.1).is_err());
        assert!(derive_constants(f64::NAN, 0.1).is_err());
        assert!(derive_constants(-3.0, 0.1).is_err());
    }

    #[test]
    fn coefficients_at_zero() {
        let p = ModelParams::standard();
        let a = p.size_factor();
        let (nl, nlp) = p.reaction_coeffs(0.0);
        assert_eq!(nl, 0.0);
        assert_relative_eq!(nlp, p.kappa2 * (a + 1.0) / (1.0 + a).powi(2), max_relative = 1e-14);
    }

    #[test]
    fn pbe_limit() {
        let p = ModelParams::standard().with_lambda(0.0).unwrap();
        let (nl, nlp) = p.reaction_coeffs(1.0);
        assert_relative_eq!(nl, p.kappa2 * 1f64.sinh(), max_relative = 1e-14);
        assert_relative_eq!(nlp, p.kappa2 * 1f64.cosh(), max_relative = 1e-14);
    }

    #[test]
    fn large_argument_saturates() {
        let p = ModelParams::standard();
        let a = p.size_factor();
        // 1 + a cosh 50 is about 1e18, so the leftover 1/(a cosh 50) is far below 1e-6.
        let exact = p.kappa2 * 50f64.sinh() / (1.0 + a * 50f64.cosh());
        let (nl, _) = p.reaction_coeffs(50.0);
        assert_relative_eq!(nl, exact, max_relative = 1e-12);
        assert_relative_eq!(nl, p.kappa2 / a, max_relative = 1e-6);
        let (nl, nlp) = p.reaction_coeffs(1e6);
        assert!(nl.is_finite() && nlp.is_finite());
    }

    #[test]
    fn matches_direct_formula_moderate_u() {
        let p = ModelParams::standard();
        let a = p.size_factor();
        for &u in &[-7.5, -1.0, -1e-3, 1e-9, 0.3, 2.0, 11.0] {
            let (nl, nlp) = p.reaction_coeffs(u);
            let c = f64::cosh(u);
            assert_relative_eq!(nl, p.kappa2 * f64::sinh(u) / (1.0 + a * c), max_relative = 1e-12);
            assert_relative_eq!(nlp, p.kappa2 * (a + c) / (1.0 + a * c).powi(2), max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_density_derivative_is_nl() {
        for lambda in [0.0, 3.11] {
            let p = ModelParams::standard().with_lambda(lambda).unwrap();
            for &u in &[-3.0, -0.2, 0.5, 4.0, 25.0, 40.0] {
                let h = 1e-5;
                let fd = (p.energy_density(u + h) - p.energy_density(u - h)) / (2.0 * h);
                assert_relative_eq!(fd, p.nl(u), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(ModelParams::new(0.0, 80.0, 3.11, 298.15, 0.1).is_err());
        assert!(ModelParams::new(80.0, 2.0, 3.11, 298.15, 0.1).is_err());
        assert!(ModelParams::new(2.0, 80.0, -1.0, 298.15, 0.1).is_err());
        assert!(ModelParams::new(2.0, 80.0, 3.11, 298.15, -0.1).is_err());
    }

    #[test]
    fn charge_system_checks() {
        assert!(matches!(ChargeSystem::new(vec![]), Err(SmpbeError::NoAtoms)));
        let bad = Atom { position: [0.0, f64::NAN, 0.0], charge: 1.0, radius: 1.0 };
        assert!(ChargeSystem::new(vec![bad]).is_err());
        let neg = Atom { position: [0.0; 3], charge: 1.0, radius: -1.0 };
        assert!(ChargeSystem::new(vec![neg]).is_err());
        let cs = ChargeSystem::new(vec![
            Atom { position: [0.0; 3], charge: 0.25, radius: 1.0 },
            Atom { position: [1.0, 0.0, 0.0], charge: -0.5, radius: 1.0 },
        ])
        .unwrap();
        assert_eq!(cs.net_charge(), -0.25);
    }
}

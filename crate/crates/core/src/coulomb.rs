//! Coulomb potential `G` of the fixed charges in a uniform medium of
//! permittivity `eps_p`, and its gradient.

use rayon::prelude::*;

use crate::error::{Result, SmpbeError};
use crate::model::{ChargeSystem, ModelParams};

const CENTER_GUARD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CoulombField {
    pub charges: ChargeSystem,
    /// `alpha / (4 pi eps_p)`.
    pub scale: f64,
}

impl CoulombField {
    pub fn new(charges: ChargeSystem, params: &ModelParams) -> Self {
        let scale = params.alpha / (4.0 * std::f64::consts::PI * params.eps_p);
        Self { charges, scale }
    }

    fn check(&self, p: [f64; 3]) -> Result<()> {
        for (i, a) in self.charges.atoms().iter().enumerate() {
            if dist2(p, a.position) < CENTER_GUARD * CENTER_GUARD {
                return Err(SmpbeError::AtAtomCenter { atom: i });
            }
        }
        Ok(())
    }

    pub fn g(&self, p: [f64; 3]) -> Result<f64> {
        self.check(p)?;
        Ok(self.g_unchecked(p))
    }

    pub fn grad_g(&self, p: [f64; 3]) -> Result<[f64; 3]> {
        self.check(p)?;
        Ok(self.grad_g_unchecked(p))
    }

    /// Sum without the center check; infinite or NaN at an atom center.
    pub fn g_unchecked(&self, p: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in self.charges.atoms() {
            s += a.charge / dist2(p, a.position).sqrt();
        }
        self.scale * s
    }

    pub fn grad_g_unchecked(&self, p: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for a in self.charges.atoms() {
            let d = [p[0] - a.position[0], p[1] - a.position[1], p[2] - a.position[2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let w = a.charge / (r2 * r2.sqrt());
            for k in 0..3 {
                g[k] -= w * d[k];
            }
        }
        g.map(|x| self.scale * x)
    }

    pub fn eval_g(&self, points: &[[f64; 3]]) -> Result<Vec<f64>> {
        for &p in points {
            self.check(p)?;
        }
        Ok(points.par_iter().map(|&p| self.g_unchecked(p)).collect())
    }

    pub fn eval_grad_g(&self, points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
        for &p in points {
            self.check(p)?;
        }
        Ok(points.par_iter().map(|&p| self.grad_g_unchecked(p)).collect())
    }

    /// Like [`eval_g`](Self::eval_g), but points at an atom center get NaN
    /// instead of failing the whole batch.
    pub fn eval_g_masked(&self, points: &[[f64; 3]]) -> Vec<f64> {
        points
            .par_iter()
            .map(|&p| if self.check(p).is_ok() { self.g_unchecked(p) } else { f64::NAN })
            .collect()
    }
}

#[inline]
pub(crate) fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

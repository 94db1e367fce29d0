//! Preconditioned conjugate gradients shared by the box solvers.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgSettings {
    /// Stop when `|r| <= tol_rel |r0|`, where `r0 = b - A x0`.
    pub tol_rel: f64,
    /// Absolute floor on `|r|`.
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for PcgSettings {
    fn default() -> Self {
        Self { tol_rel: 1e-8, abs_tol: 1e-12, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub initial_residual: f64,
    pub residual: f64,
    pub converged: bool,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from the initial guess in `x`.
///
/// Besides the relative and absolute tolerances, the iteration also stops
/// once `|r|` reaches `1e-13 |b|`, below which round-off dominates.
pub fn pcg<A, M>(mut apply: A, mut precond: M, b: &[f64], x: &mut [f64], settings: &PcgSettings) -> PcgOutcome
where
    A: FnMut(&[f64], &mut [f64]),
    M: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    assert_eq!(x.len(), n, "solution and rhs lengths differ");
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = norm2(&r);
    let target = (settings.tol_rel * r0).max(settings.abs_tol).max(1e-13 * norm2(b));
    if r0 <= target || n == 0 {
        return PcgOutcome { iterations: 0, initial_residual: r0, residual: r0, converged: true };
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = r0;
    for it in 1..=settings.max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            log::warn!("pcg: operator not positive definite along search direction (pAp = {pq:e})");
            return PcgOutcome { iterations: it, initial_residual: r0, residual: res, converged: false };
        }
        let a = rz / pq;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * q[i];
        }
        res = norm2(&r);
        if res <= target {
            return PcgOutcome { iterations: it, initial_residual: r0, residual: res, converged: true };
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    log::warn!("pcg: no convergence in {} iterations (residual {res:e}, initial {r0:e})", settings.max_iter);
    PcgOutcome { iterations: settings.max_iter, initial_residual: r0, residual: res, converged: false }
}

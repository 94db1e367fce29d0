//! 7-point finite differences on uniform boxes and the multigrid-preconditioned
//! CG solver for them.
//!
//! Grid functions are stored as full arrays over all grid points, x fastest.
//! Unknowns are the interior points; Dirichlet values live on the boundary
//! entries and are folded into the right-hand side.

mod multigrid;

pub use multigrid::{pcg_mg, pcg_mg_solve, prolong_add, restrict, MgHierarchy};

use crate::error::{Result, SmpbeError};
use crate::partition::{IndexBox, UniformGrid};

#[derive(Debug, Clone)]
pub struct BoxProblem {
    pub grid: UniformGrid,
    pub diffusion: f64,
    /// Per-point reaction coefficient, `None` for zero.
    pub reaction: Option<Vec<f64>>,
    /// Per-point source (interior entries used).
    pub rhs: Vec<f64>,
    /// Per-point Dirichlet data (boundary entries used).
    pub dirichlet: Vec<f64>,
}

impl BoxProblem {
    /// Poisson problem with zero source and zero Dirichlet data.
    pub fn new(grid: UniformGrid, diffusion: f64) -> Self {
        let n = grid.num_points();
        Self { grid, diffusion, reaction: None, rhs: vec![0.0; n], dirichlet: vec![0.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.num_points();
        if self.rhs.len() != n || self.dirichlet.len() != n {
            return Err(SmpbeError::InvalidParameter("box problem arrays do not match the grid".into()));
        }
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(SmpbeError::InvalidParameter(format!("diffusion must be positive, got {}", self.diffusion)));
        }
        if let Some(c) = &self.reaction {
            if c.len() != n {
                return Err(SmpbeError::InvalidParameter("reaction array does not match the grid".into()));
            }
            if let Some(bad) = c.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
                return Err(SmpbeError::InvalidParameter(format!("reaction coefficient must be >= 0, got {bad}")));
            }
        }
        if self.rhs.iter().chain(&self.dirichlet).any(|v| !v.is_finite()) {
            return Err(SmpbeError::NonFinite("box problem data".into()));
        }
        Ok(())
    }

    /// Right-hand side with the Dirichlet data folded in; zero on the boundary.
    pub fn folded_rhs(&self) -> Vec<f64> {
        let g = &self.grid;
        let [nx, ny, nz] = g.dims;
        let s = self.diffusion / (g.h * g.h);
        let mut b = vec![0.0; g.num_points()];
        for k in 1..nz {
            for j in 1..ny {
                for i in 1..nx {
                    let idx = g.index(i, j, k);
                    let mut acc = self.rhs[idx];
                    let nb = [
                        (i - 1, j, k),
                        (i + 1, j, k),
                        (i, j - 1, k),
                        (i, j + 1, k),
                        (i, j, k - 1),
                        (i, j, k + 1),
                    ];
                    for (a, bb, c) in nb {
                        if g.is_boundary([a, bb, c]) {
                            acc += s * self.dirichlet[g.index(a, bb, c)];
                        }
                    }
                    b[idx] = acc;
                }
            }
        }
        b
    }

    /// `A v` on the interior unknowns, treating boundary entries of `v` as zero.
    pub fn apply_operator(&self, v: &[f64]) -> Vec<f64> {
        let mut masked = v.to_vec();
        zero_boundary(&self.grid, &mut masked);
        let mut out = vec![0.0; v.len()];
        apply_stencil(&self.grid.dims, self.grid.h, self.diffusion, self.reaction.as_deref(), &masked, &mut out);
        out
    }

    /// `b - A v` with Dirichlet data folded into `b`; zero on the boundary.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let b = self.folded_rhs();
        let av = self.apply_operator(v);
        b.iter().zip(&av).map(|(b, a)| b - a).collect()
    }
}

pub(crate) fn zero_boundary(g: &UniformGrid, v: &mut [f64]) {
    let [nx, ny, nz] = g.dims;
    for k in 0..=nz {
        for j in 0..=ny {
            let edge = k == 0 || k == nz || j == 0 || j == ny;
            let base = g.index(0, j, k);
            if edge {
                v[base..=base + nx].iter_mut().for_each(|x| *x = 0.0);
            } else {
                v[base] = 0.0;
                v[base + nx] = 0.0;
            }
        }
    }
}

/// Interior stencil kernel; requires zero boundary entries in `v`.
pub(crate) fn apply_stencil(
    dims: &[usize; 3],
    h: f64,
    diffusion: f64,
    reaction: Option<&[f64]>,
    v: &[f64],
    out: &mut [f64],
) {
    let [nx, ny, nz] = *dims;
    let sx = nx + 1;
    let sxy = sx * (ny + 1);
    let s = diffusion / (h * h);
    out.iter_mut().for_each(|x| *x = 0.0);
    for k in 1..nz {
        for j in 1..ny {
            let base = j * sx + k * sxy;
            for i in 1..nx {
                let c = base + i;
                let nb = v[c - 1] + v[c + 1] + v[c - sx] + v[c + sx] + v[c - sxy] + v[c + sxy];
                let mut y = s * (6.0 * v[c] - nb);
                if let Some(r) = reaction {
                    y += r[c] * v[c];
                }
                out[c] = y;
            }
        }
    }
}

/// 7-point Laplacian of lattice values at the interior points of `range`.
///
/// The result is a full array over the box grid with zero boundary entries.
pub fn discrete_laplacian(lattice: &UniformGrid, values: &[f64], range: &IndexBox) -> Vec<f64> {
    let d = range.dims();
    let box_grid = UniformGrid { origin: [0.0; 3], h: lattice.h, dims: d };
    let mut out = vec![0.0; box_grid.num_points()];
    let sx = lattice.shape()[0];
    let sxy = sx * lattice.shape()[1];
    let inv = 1.0 / (lattice.h * lattice.h);
    for k in 1..d[2] {
        for j in 1..d[1] {
            for i in 1..d[0] {
                let c = lattice.index(range.lo[0] + i, range.lo[1] + j, range.lo[2] + k);
                let v = values[c];
                let diff = (values[c - 1] - v)
                    + (values[c + 1] - v)
                    + (values[c - sx] - v)
                    + (values[c + sx] - v)
                    + (values[c - sxy] - v)
                    + (values[c + sxy] - v);
                out[box_grid.index(i, j, k)] = diff * inv;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> UniformGrid {
        UniformGrid::new([0.0; 3], 1.0 / n as f64, [n; 3]).unwrap()
    }

    fn sample(g: &UniformGrid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..g.num_points())
            .map(|idx| {
                let [i, j, k] = g.ijk(idx);
                f(g.point(i, j, k))
            })
            .collect()
    }

    #[test]
    fn constant_in_kernel_away_from_boundary() {
        let g = grid(6);
        let p = BoxProblem::new(g, 80.0);
        let av = p.apply_operator(&vec![1.0; g.num_points()]);
        let s = 80.0 / (g.h * g.h);
        for idx in 0..g.num_points() {
            let ijk = g.ijk(idx);
            if g.is_boundary(ijk) {
                assert_eq!(av[idx], 0.0);
                continue;
            }
            let deficit = (0..3).map(|d| (ijk[d] == 1) as usize + (ijk[d] == g.dims[d] - 1) as usize).sum::<usize>();
            assert!((av[idx] - s * deficit as f64).abs() < 1e-9 * s);
        }
    }

    #[test]
    fn linear_field_zero_residual() {
        let g = grid(5);
        let mut p = BoxProblem::new(g, 3.0);
        let v = sample(&g, |x| x[0] - 2.0 * x[1] + 0.5 * x[2]);
        p.dirichlet = v.clone();
        let r = p.residual(&v);
        assert!(r.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn quadratic_field() {
        let g = grid(6);
        let eps = 80.0;
        let mut p = BoxProblem::new(g, eps);
        let v = sample(&g, |x| x[0] * x[0]);
        // A v (with the boundary part moved back from the rhs) is -eps * 2.
        p.dirichlet = v.clone();
        let fold = p.folded_rhs();
        let av = p.apply_operator(&v);
        for idx in 0..g.num_points() {
            if !g.is_boundary(g.ijk(idx)) {
                assert!((av[idx] - fold[idx] + 2.0 * eps).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn laplacian_of_quadratics() {
        let g = UniformGrid::new([-1.0; 3], 0.25, [8; 3]).unwrap();
        let range = IndexBox::new([1, 2, 0], [7, 8, 6]);
        let c = sample(&g, |_| 3.7);
        assert!(discrete_laplacian(&g, &c, &range).iter().all(|&v| v == 0.0));
        let q = sample(&g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let lap = discrete_laplacian(&g, &q, &range);
        let bg = UniformGrid { origin: [0.0; 3], h: 0.25, dims: range.dims() };
        for idx in 0..bg.num_points() {
            if !bg.is_boundary(bg.ijk(idx)) {
                assert!((lap[idx] - 6.0).abs() < 1e-12);
            }
        }
    }
}

use nalgebra::{DMatrix, DVector, LU};

use super::{apply_stencil, zero_boundary, BoxProblem};
use crate::error::{Result, SmpbeError};
use crate::krylov::{pcg, PcgOutcome, PcgSettings};
use crate::partition::UniformGrid;

/// Largest coarsest-level system factored densely.
const MAX_DENSE_UNKNOWNS: usize = 4096;
const FALLBACK_SWEEPS: usize = 8;

#[derive(Debug, Clone)]
struct Level {
    dims: [usize; 3],
    h: f64,
    reaction: Option<Vec<f64>>,
    x: Vec<f64>,
    f: Vec<f64>,
    r: Vec<f64>,
}

impl Level {
    fn new(dims: [usize; 3], h: f64, reaction: Option<Vec<f64>>) -> Self {
        let n = (dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1);
        Self { dims, h, reaction, x: vec![0.0; n], f: vec![0.0; n], r: vec![0.0; n] }
    }

    fn interior(&self) -> [usize; 3] {
        self.dims.map(|d| d - 1)
    }

    fn num_interior(&self) -> usize {
        self.interior().iter().product()
    }
}

#[derive(Debug, Clone)]
enum Coarse {
    Dense { lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn> },
    Sweeps,
}

/// Geometric multigrid hierarchy for one box operator.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    diffusion: f64,
    levels: Vec<Level>,
    coarse: Coarse,
}

fn can_coarsen(dims: [usize; 3]) -> bool {
    dims.iter().all(|&d| d >= 4 && d % 2 == 0 && d - 1 > 2)
}

impl MgHierarchy {
    /// Levels are halved while every axis has more than two interior points
    /// and an even interval count.
    pub fn new(grid: &UniformGrid, diffusion: f64, reaction: Option<&[f64]>) -> Self {
        let mut levels = vec![Level::new(grid.dims, grid.h, reaction.map(|r| r.to_vec()))];
        loop {
            let last = levels.last().unwrap();
            let interior_min = last.interior().into_iter().min().unwrap();
            if interior_min <= 2 {
                break;
            }
            if last.dims.iter().any(|d| d % 2 != 0) {
                log::warn!("multigrid: odd interval count {:?} stops coarsening", last.dims);
                break;
            }
            debug_assert!(can_coarsen(last.dims));
            let cd = last.dims.map(|d| d / 2);
            let creact = last.reaction.as_ref().map(|r| inject(&last.dims, r, &cd));
            let lvl = Level::new(cd, last.h * 2.0, creact);
            levels.push(lvl);
        }
        let last = levels.last().unwrap();
        let coarse = if last.num_interior() <= MAX_DENSE_UNKNOWNS {
            Coarse::Dense { lu: dense_operator(last, diffusion).lu() }
        } else {
            log::warn!(
                "multigrid: coarsest level has {} unknowns; using {FALLBACK_SWEEPS} symmetric Gauss-Seidel sweeps",
                last.num_interior()
            );
            Coarse::Sweeps
        };
        Self { diffusion, levels, coarse }
    }

    pub fn for_problem(problem: &BoxProblem) -> Self {
        Self::new(&problem.grid, problem.diffusion, problem.reaction.as_deref())
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn coarsest_unknowns(&self) -> usize {
        self.levels.last().unwrap().num_interior()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.levels[0].dims
    }

    /// One V-cycle with zero initial guess: forward Gauss-Seidel before
    /// restriction, backward Gauss-Seidel after prolongation.
    pub fn vcycle(&mut self, rhs: &[f64], out: &mut [f64]) {
        let l0 = &mut self.levels[0];
        assert_eq!(rhs.len(), l0.f.len(), "rhs does not match hierarchy");
        l0.f.copy_from_slice(rhs);
        zero_boundary_dims(&l0.dims, &mut l0.f);
        self.cycle(0);
        out.copy_from_slice(&self.levels[0].x);
    }

    fn cycle(&mut self, l: usize) {
        let diffusion = self.diffusion;
        if l + 1 == self.levels.len() {
            let lvl = &mut self.levels[l];
            match &self.coarse {
                Coarse::Dense { lu } => solve_dense(lu, lvl),
                Coarse::Sweeps => {
                    lvl.x.iter_mut().for_each(|v| *v = 0.0);
                    for _ in 0..FALLBACK_SWEEPS {
                        gauss_seidel(lvl, diffusion, true);
                        gauss_seidel(lvl, diffusion, false);
                    }
                }
            }
            return;
        }
        {
            let lvl = &mut self.levels[l];
            lvl.x.iter_mut().for_each(|v| *v = 0.0);
            gauss_seidel(lvl, diffusion, true);
            apply_stencil(&lvl.dims, lvl.h, diffusion, lvl.reaction.as_deref(), &lvl.x, &mut lvl.r);
            for i in 0..lvl.r.len() {
                lvl.r[i] = lvl.f[i] - lvl.r[i];
            }
            zero_boundary_dims(&lvl.dims, &mut lvl.r);
        }
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&fine[l], &mut coarse[0]);
            restrict(&fine.dims, &fine.r, &coarse.dims, &mut coarse.f);
        }
        self.cycle(l + 1);
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&mut fine[l], &coarse[0]);
            prolong_add(&coarse.dims, &coarse.x, &fine.dims, &mut fine.x);
        }
        gauss_seidel(&mut self.levels[l], diffusion, false);
    }
}

fn zero_boundary_dims(dims: &[usize; 3], v: &mut [f64]) {
    let g = UniformGrid { origin: [0.0; 3], h: 1.0, dims: *dims };
    zero_boundary(&g, v);
}

#[inline]
fn idx(dims: &[usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + (dims[0] + 1) * (j + (dims[1] + 1) * k)
}

fn inject(fd: &[usize; 3], fine: &[f64], cd: &[usize; 3]) -> Vec<f64> {
    let mut out = vec![0.0; (cd[0] + 1) * (cd[1] + 1) * (cd[2] + 1)];
    for k in 0..=cd[2] {
        for j in 0..=cd[1] {
            for i in 0..=cd[0] {
                out[idx(cd, i, j, k)] = fine[idx(fd, 2 * i, 2 * j, 2 * k)];
            }
        }
    }
    out
}

fn gauss_seidel(lvl: &mut Level, diffusion: f64, forward: bool) {
    let [nx, ny, nz] = lvl.dims;
    let sx = nx + 1;
    let sxy = sx * (ny + 1);
    let s = diffusion / (lvl.h * lvl.h);
    let x = &mut lvl.x;
    let f = &lvl.f;
    let react = lvl.reaction.as_deref();
    let mut update = |c: usize| {
        let nb = x[c - 1] + x[c + 1] + x[c - sx] + x[c + sx] + x[c - sxy] + x[c + sxy];
        let diag = 6.0 * s + react.map_or(0.0, |r| r[c]);
        x[c] = (f[c] + s * nb) / diag;
    };
    if forward {
        for k in 1..nz {
            for j in 1..ny {
                let base = j * sx + k * sxy;
                for i in 1..nx {
                    update(base + i);
                }
            }
        }
    } else {
        for k in (1..nz).rev() {
            for j in (1..ny).rev() {
                let base = j * sx + k * sxy;
                for i in (1..nx).rev() {
                    update(base + i);
                }
            }
        }
    }
}

fn interior_numbering(dims: &[usize; 3]) -> Vec<Option<usize>> {
    let n = (dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1);
    let mut map = vec![None; n];
    let mut next = 0;
    for k in 1..dims[2] {
        for j in 1..dims[1] {
            for i in 1..dims[0] {
                map[idx(dims, i, j, k)] = Some(next);
                next += 1;
            }
        }
    }
    map
}

fn dense_operator(lvl: &Level, diffusion: f64) -> DMatrix<f64> {
    let n = lvl.num_interior();
    let map = interior_numbering(&lvl.dims);
    let s = diffusion / (lvl.h * lvl.h);
    let mut a = DMatrix::zeros(n, n);
    let d = lvl.dims;
    for k in 1..d[2] {
        for j in 1..d[1] {
            for i in 1..d[0] {
                let c = idx(&d, i, j, k);
                let row = map[c].unwrap();
                a[(row, row)] = 6.0 * s + lvl.reaction.as_ref().map_or(0.0, |r| r[c]);
                for (a2, b2, c2) in
                    [(i - 1, j, k), (i + 1, j, k), (i, j - 1, k), (i, j + 1, k), (i, j, k - 1), (i, j, k + 1)]
                {
                    if let Some(col) = map[idx(&d, a2, b2, c2)] {
                        a[(row, col)] = -s;
                    }
                }
            }
        }
    }
    a
}

fn solve_dense(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>, lvl: &mut Level) {
    let map = interior_numbering(&lvl.dims);
    let n = lvl.num_interior();
    let mut b = DVector::zeros(n);
    for (c, m) in map.iter().enumerate() {
        if let Some(r) = m {
            b[*r] = lvl.f[c];
        }
    }
    let sol = lu.solve(&b).expect("coarsest multigrid operator is nonsingular");
    lvl.x.iter_mut().for_each(|v| *v = 0.0);
    for (c, m) in map.iter().enumerate() {
        if let Some(r) = m {
            lvl.x[c] = sol[*r];
        }
    }
}

/// Full-weighting restriction of a fine residual onto the coarse interior.
pub fn restrict(fd: &[usize; 3], fine: &[f64], cd: &[usize; 3], coarse: &mut [f64]) {
    const W: [f64; 3] = [0.25, 0.5, 0.25];
    coarse.iter_mut().for_each(|v| *v = 0.0);
    for k in 1..cd[2] {
        for j in 1..cd[1] {
            for i in 1..cd[0] {
                let mut acc = 0.0;
                for (dk, wk) in W.iter().enumerate() {
                    for (dj, wj) in W.iter().enumerate() {
                        let row = idx(fd, 2 * i - 1, 2 * j + dj - 1, 2 * k + dk - 1);
                        let w = wk * wj;
                        acc += w * (W[0] * fine[row] + W[1] * fine[row + 1] + W[2] * fine[row + 2]);
                    }
                }
                coarse[idx(cd, i, j, k)] = acc;
            }
        }
    }
}

/// Adds the trilinear interpolant of coarse interior values to the fine interior.
pub fn prolong_add(cd: &[usize; 3], coarse: &[f64], fd: &[usize; 3], fine: &mut [f64]) {
    let axis = |i: usize| -> [(usize, f64); 2] {
        if i % 2 == 0 {
            [(i / 2, 1.0), (i / 2, 0.0)]
        } else {
            [(i / 2, 0.5), (i / 2 + 1, 0.5)]
        }
    };
    for k in 1..fd[2] {
        let ak = axis(k);
        for j in 1..fd[1] {
            let aj = axis(j);
            for i in 1..fd[0] {
                let ai = axis(i);
                let mut acc = 0.0;
                for &(ck, wk) in &ak {
                    if wk == 0.0 || ck == 0 || ck == cd[2] {
                        continue;
                    }
                    for &(cj, wj) in &aj {
                        if wj == 0.0 || cj == 0 || cj == cd[1] {
                            continue;
                        }
                        for &(ci, wi) in &ai {
                            if wi == 0.0 || ci == 0 || ci == cd[0] {
                                continue;
                            }
                            acc += wk * wj * wi * coarse[idx(cd, ci, cj, ck)];
                        }
                    }
                }
                fine[idx(fd, i, j, k)] += acc;
            }
        }
    }
}

/// CG preconditioned by one V-cycle of `hier` per iteration.
///
/// `x0` is a full array whose interior entries give the initial guess. The
/// returned array carries the Dirichlet data on its boundary entries.
pub fn pcg_mg(
    problem: &BoxProblem,
    hier: &mut MgHierarchy,
    x0: Option<&[f64]>,
    settings: &PcgSettings,
) -> Result<(Vec<f64>, PcgOutcome)> {
    problem.validate()?;
    if hier.dims() != problem.grid.dims {
        return Err(SmpbeError::InvalidParameter(format!(
            "hierarchy built for {:?}, problem has {:?}",
            hier.dims(),
            problem.grid.dims
        )));
    }
    let g = problem.grid;
    let b = problem.folded_rhs();
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; g.num_points()],
    };
    zero_boundary(&g, &mut x);
    let react = problem.reaction.as_deref();
    let out = pcg(
        |v, y| apply_stencil(&g.dims, g.h, problem.diffusion, react, v, y),
        |r, z| hier.vcycle(r, z),
        &b,
        &mut x,
        settings,
    );
    for idx in 0..x.len() {
        if g.is_boundary(g.ijk(idx)) {
            x[idx] = problem.dirichlet[idx];
        }
    }
    Ok((x, out))
}

/// Builds a hierarchy and solves from a zero initial guess.
pub fn pcg_mg_solve(problem: &BoxProblem, settings: &PcgSettings) -> Result<(Vec<f64>, PcgOutcome)> {
    let mut hier = MgHierarchy::for_problem(problem);
    pcg_mg(problem, &mut hier, None, settings)
}

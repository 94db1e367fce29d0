use crate::composite::CompositeField;
use crate::error::Result;
use crate::fd::{pcg_mg, BoxProblem, MgHierarchy};
use crate::fem::{CsrMatrix, FemContext, Ilu0};
use crate::krylov::{pcg, PcgSettings};
use crate::partition::BoxPartition;

/// Counts from one overlapped Schwarz iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepStats {
    pub sweeps: usize,
    pub converged: bool,
    /// Relative sup-norm change of the last sweep.
    pub final_change: f64,
    /// PCG-MG iterations of every box solve.
    pub mg_iterations: Vec<usize>,
    /// PCG-ILU iterations of every central solve.
    pub ilu_iterations: Vec<usize>,
}

/// A finite-difference box with its problem data and multigrid hierarchy.
#[derive(Debug)]
pub struct FdBoxSolver {
    pub k: usize,
    pub problem: BoxProblem,
    hier: MgHierarchy,
}

impl FdBoxSolver {
    pub fn new(partition: &BoxPartition, k: usize, diffusion: f64, reaction: Option<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let grid = partition.box_grid(k);
        let n = grid.num_points();
        let hier = MgHierarchy::new(&grid, diffusion, reaction.as_deref());
        let problem = BoxProblem { grid, diffusion, reaction, rhs, dirichlet: vec![0.0; n] };
        Self { k, problem, hier }
    }

    pub fn laplace(partition: &BoxPartition, k: usize, diffusion: f64) -> Self {
        let n = partition.box_grid(k).num_points();
        Self::new(partition, k, diffusion, None, vec![0.0; n])
    }

    pub fn hierarchy(&self) -> &MgHierarchy {
        &self.hier
    }

    /// Solves with Dirichlet data and initial guess read from `field`.
    pub fn solve(&mut self, field: &CompositeField, settings: &PcgSettings) -> Result<(Vec<f64>, usize)> {
        let current = field.gather_box(self.k)?;
        self.problem.dirichlet.copy_from_slice(&current);
        let (x, out) = pcg_mg(&self.problem, &mut self.hier, Some(&current), settings)?;
        if !out.converged {
            log::warn!("box {}: PCG-MG stopped at residual {:.3e}", self.k + 1, out.residual);
        }
        Ok((x, out.iterations))
    }
}

/// The central-box finite element system with a fixed matrix and load.
#[derive(Debug)]
pub struct CentralSolver<'a> {
    fem: &'a FemContext,
    matrix: CsrMatrix,
    ilu: Ilu0,
    load: Vec<f64>,
}

impl<'a> CentralSolver<'a> {
    pub fn new(fem: &'a FemContext, reaction: Option<&[f64]>, load: Vec<f64>) -> Self {
        let mut matrix = fem.reduced.clone();
        if let Some(r) = reaction {
            for (i, &v) in fem.free.iter().enumerate() {
                let p = matrix.find(i, i).expect("diagonal entry");
                matrix.val[p] += r[v];
            }
        }
        let ilu = Ilu0::new(&matrix);
        Self { fem, matrix, ilu, load }
    }

    /// Nodal solution with Dirichlet data read from `field`.
    pub fn solve(&self, field: &CompositeField, settings: &PcgSettings) -> (Vec<f64>, usize) {
        let mut boundary = field.mesh.clone();
        for (v, val) in field.central_dirichlet() {
            boundary[v] = val;
        }
        let rhs = self.fem.reduced_rhs(&self.load, &boundary);
        let mut x: Vec<f64> = self.fem.free.iter().map(|&v| field.mesh[v]).collect();
        let out = pcg(|v, y| self.matrix.mul(v, y), |r, z| self.ilu.apply(r, z), &rhs, &mut x, settings);
        if !out.converged {
            log::warn!("central box: PCG-ILU stopped at residual {:.3e}", out.residual);
        }
        (self.fem.expand(&x, &boundary), out.iterations)
    }
}

/// Multiplicative overlapped Schwarz iteration: the six finite-difference
/// boxes in `config.box_order`, then the central box, each relaxed with
/// `omega`. Stops when the sup-norm change of a sweep falls below
/// `tol_dd` times the sup norm of the field.
pub(crate) fn sweep(
    field: &mut CompositeField,
    fd: &mut [FdBoxSolver],
    central: &CentralSolver<'_>,
    omega: f64,
    config: &super::SolverConfig,
    settings: &PcgSettings,
) -> Result<SweepStats> {
    let mut stats = SweepStats::default();
    for m in 1..=config.max_sweeps {
        let before = field.clone();
        for &k in &config.box_order {
            let (x, its) = fd[k].solve(field, settings)?;
            stats.mg_iterations.push(its);
            field.relax_box(k, &x, omega)?;
        }
        let (nodal, its) = central.solve(field, settings);
        stats.ilu_iterations.push(its);
        field.relax_central(&nodal, omega)?;
        let change = field.max_diff(&before);
        let scale = field.max_abs();
        stats.sweeps = m;
        stats.final_change = if scale > 0.0 { change / scale } else { change };
        log::debug!("sweep {m}: change {change:.3e} of {scale:.3e}");
        if change <= config.tol_dd * scale {
            stats.converged = true;
            return Ok(stats);
        }
    }
    log::warn!(
        "overlapped box iteration stopped after {} sweeps (relative change {:.3e})",
        config.max_sweeps,
        stats.final_change
    );
    Ok(stats)
}

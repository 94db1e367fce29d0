//! The hybrid solver: Coulomb splitting, overlapped seven-box Schwarz
//! iterations for `Psi` and for the Newton directions, and the damped Newton
//! loop for `Phi`.

mod functional;
mod schwarz;

pub use functional::Functional;
pub use schwarz::{CentralSolver, FdBoxSolver, SweepStats};

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::composite::{CompositeField, FieldLayout};
use crate::coulomb::CoulombField;
use crate::error::{Result, SmpbeError};
use crate::fem::FemContext;
use crate::krylov::PcgSettings;
use crate::mesh::{build_central_mesh, InterfaceMesh, LatticeCoupling, LevelSetGeometry};
use crate::model::{ChargeSystem, ModelParams};
use crate::partition::BoxPartition;

pub type PointFn = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// Values of `u` prescribed on the outer boundary of Ω.
#[derive(Clone)]
pub enum BoundaryData {
    Zero,
    Analytic(PointFn),
}

/// Extra source added on the solvent side.
#[derive(Clone)]
pub enum SolventSource {
    None,
    Analytic(PointFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    /// Full first Newton step from zero, taken without line search.
    FirstDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStop {
    /// `|Phi_{k+1} - Phi_k|_inf <= tol_newton`.
    Increment,
    /// `|J'(Phi_{k+1})| <= tol_newton`.
    Gradient,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryData::Zero => "Zero",
            BoundaryData::Analytic(_) => "Analytic",
        })
    }
}

impl fmt::Debug for SolventSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolventSource::None => "None",
            SolventSource::Analytic(_) => "Analytic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub omega_psi: f64,
    pub omega_p: f64,
    pub tol_dd: f64,
    pub max_sweeps: usize,
    pub tol_newton: f64,
    pub max_newton: usize,
    pub tol_linear: f64,
    pub max_linear: usize,
    pub max_halvings: usize,
    pub boundary: BoundaryData,
    pub source: SolventSource,
    pub phi0: InitialGuess,
    pub newton_stop: NewtonStop,
    /// Order of the six finite-difference boxes within a sweep; the central
    /// box always comes last.
    pub box_order: [usize; 6],
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            omega_psi: 1.275,
            omega_p: 1.225,
            tol_dd: 1e-6,
            max_sweeps: 100,
            tol_newton: 1e-7,
            max_newton: 50,
            tol_linear: 1e-8,
            max_linear: 1000,
            max_halvings: 20,
            boundary: BoundaryData::Zero,
            source: SolventSource::None,
            phi0: InitialGuess::Zero,
            newton_stop: NewtonStop::Increment,
            box_order: [0, 1, 2, 3, 4, 5],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("omega_psi", self.omega_psi), ("omega_p", self.omega_p)] {
            if !(w > 1.0 && w < 2.0) {
                return Err(SmpbeError::InvalidParameter(format!("{name} must lie in (1, 2), got {w}")));
            }
        }
        for (name, t) in [("tol_dd", self.tol_dd), ("tol_newton", self.tol_newton), ("tol_linear", self.tol_linear)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(SmpbeError::InvalidParameter(format!("{name} must be positive, got {t}")));
            }
        }
        if self.max_sweeps == 0 || self.max_linear == 0 {
            return Err(SmpbeError::InvalidParameter("iteration limits must be positive".into()));
        }
        let mut seen = [false; 6];
        for &k in &self.box_order {
            if k >= 6 || seen[k] {
                return Err(SmpbeError::InvalidParameter(format!("box order {:?} is not a permutation of 0..6", self.box_order)));
            }
            seen[k] = true;
        }
        Ok(())
    }

    pub fn pcg_settings(&self) -> PcgSettings {
        PcgSettings { tol_rel: self.tol_linear, abs_tol: 1e-12, max_iter: self.max_linear }
    }
}

/// Where the central-box mesh comes from.
#[derive(Debug, Clone)]
pub enum MeshSource {
    /// Union of the atom spheres.
    Atoms,
    Geometry(LevelSetGeometry),
    Mesh(InterfaceMesh),
}

/// Everything that stays fixed during a solve.
pub struct SolverContext {
    pub params: ModelParams,
    pub layout: Arc<FieldLayout>,
    pub coulomb: CoulombField,
    pub fem: FemContext,
    /// `G` at lattice points and mesh nodes (NaN at atom centers).
    pub g: CompositeField,
    /// Solvent source, zero where unused.
    pub source: Option<CompositeField>,
    /// Solvent mass of lattice points from cubes outside the central box.
    pub(crate) lattice_mass: Vec<f64>,
}

impl fmt::Debug for SolverContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverContext")
            .field("lattice_points", &self.layout.num_lattice())
            .field("mesh_nodes", &self.layout.num_nodes())
            .finish()
    }
}

impl SolverContext {
    pub fn new(
        charges: &ChargeSystem,
        partition: BoxPartition,
        mesh: MeshSource,
        params: &ModelParams,
        config: &SolverConfig,
    ) -> Result<Self> {
        let mesh = match mesh {
            MeshSource::Atoms => build_central_mesh(&partition, &LevelSetGeometry::from_atoms(charges)?)?,
            MeshSource::Geometry(geom) => build_central_mesh(&partition, &geom)?,
            MeshSource::Mesh(mut m) => {
                if m.coupling == LatticeCoupling::Detached {
                    m.attach(&partition)?;
                }
                if m.coupling == LatticeCoupling::Interpolated {
                    log::warn!("mesh nodes are not all lattice points; box data is exchanged by interpolation");
                }
                m
            }
        };
        Self::from_mesh(charges, Arc::new(partition), Arc::new(mesh), params, config)
    }

    pub fn from_mesh(
        charges: &ChargeSystem,
        partition: Arc<BoxPartition>,
        mesh: Arc<InterfaceMesh>,
        params: &ModelParams,
        config: &SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        let layout = Arc::new(FieldLayout::new(partition, mesh)?);
        let coulomb = CoulombField::new(charges.clone(), params);
        let fem = FemContext::new(&layout.mesh, params)?;
        let g = CompositeField::from_fn(Arc::clone(&layout), |p| coulomb.g(p).unwrap_or(f64::NAN));
        let lattice_mass = functional::outer_lattice_mass(&layout.partition);
        let source = match &config.source {
            SolventSource::None => None,
            SolventSource::Analytic(f) => {
                let mut s = CompositeField::zeros(Arc::clone(&layout));
                let part = &layout.partition;
                for l in 0..s.lattice.len() {
                    let ijk = part.lattice.ijk(l);
                    if !part.d_range.contains_interior(ijk) {
                        let [i, j, k] = ijk;
                        s.lattice[l] = f(part.lattice.point(i, j, k));
                    }
                }
                for v in 0..s.mesh.len() {
                    if fem.solvent_mass[v] > 0.0 {
                        s.mesh[v] = f(layout.mesh.vertices[v]);
                    }
                }
                Some(s)
            }
        };
        Ok(Self { params: params.clone(), layout, coulomb, fem, g, source, lattice_mass })
    }

    pub fn partition(&self) -> &BoxPartition {
        &self.layout.partition
    }

    pub fn mesh(&self) -> &InterfaceMesh {
        &self.layout.mesh
    }

    pub fn zeros(&self) -> CompositeField {
        CompositeField::zeros(Arc::clone(&self.layout))
    }

    /// Solves for `Psi` with `u = boundary` on ∂Ω.
    pub fn solve_psi(&self, config: &SolverConfig) -> Result<(CompositeField, SweepStats)> {
        let mut psi = self.zeros();
        match &config.boundary {
            BoundaryData::Zero => psi.set_domain_boundary(|p| -self.coulomb.g_unchecked(p)),
            BoundaryData::Analytic(f) => psi.set_domain_boundary(|p| f(p) - self.coulomb.g_unchecked(p)),
        }
        let settings = config.pcg_settings();
        let mut fd: Vec<FdBoxSolver> =
            (0..6).map(|k| FdBoxSolver::laplace(self.partition(), k, self.params.eps_s)).collect();
        let load = self.fem.psi_load(&self.layout.mesh, &self.coulomb, &self.params)?;
        let central = CentralSolver::new(&self.fem, None, load);
        let stats = schwarz::sweep(&mut psi, &mut fd, &central, config.omega_psi, config, &settings)?;
        Ok((psi, stats))
    }

    /// Newton direction at `phi`, given `base = G + Psi`.
    pub fn solve_direction(
        &self,
        base: &CompositeField,
        phi: &CompositeField,
        config: &SolverConfig,
    ) -> Result<(CompositeField, SweepStats)> {
        let w = base.lincomb(1.0, phi, 1.0);
        let part = self.partition();
        let eps_s = self.params.eps_s;
        let mut fd = Vec::with_capacity(6);
        for k in 0..6 {
            let range = part.boxes[k];
            let lap = crate::fd::discrete_laplacian(&part.lattice, &phi.lattice, &range);
            let mut reaction = vec![0.0; range.num_points()];
            let mut rhs = vec![0.0; range.num_points()];
            for (i, ijk) in range.points().enumerate() {
                if !range.contains_interior(ijk) {
                    continue;
                }
                let l = part.lattice_index(ijk);
                if !w.lattice[l].is_finite() {
                    return Err(SmpbeError::NonFinite(format!("potential at lattice point {ijk:?}")));
                }
                let (nl, nlp) = self.params.reaction_coeffs(w.lattice[l]);
                reaction[i] = nlp;
                let s = self.source.as_ref().map_or(0.0, |s| s.lattice[l]);
                rhs[i] = eps_s * lap[i] - nl + s;
            }
            let reaction = if self.params.kappa2 == 0.0 { None } else { Some(reaction) };
            fd.push(FdBoxSolver::new(part, k, eps_s, reaction, rhs));
        }
        let src = self.source.as_ref().map(|s| s.mesh.as_slice());
        let (diag, load) = self.fem.direction_terms(&w.mesh, &phi.mesh, &self.params, src)?;
        let central = CentralSolver::new(&self.fem, Some(&diag), load);
        let mut p = self.zeros();
        let settings = config.pcg_settings();
        let stats = schwarz::sweep(&mut p, &mut fd, &central, config.omega_p, config, &settings)?;
        Ok((p, stats))
    }

    pub fn functional<'a>(&'a self, base: &'a CompositeField) -> Functional<'a> {
        Functional::new(self, base)
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub lambda: f64,
    pub halvings: usize,
    pub j_before: f64,
    pub j_after: f64,
    pub grad_before: f64,
    pub grad_after: f64,
    /// `lambda * |p|_inf`.
    pub update_norm: f64,
    pub sweeps: usize,
}

impl NewtonStep {
    /// Whether the step satisfies the line-search acceptance rule.
    pub fn acceptable(&self) -> bool {
        self.j_after <= self.j_before || self.grad_after <= self.grad_before
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub setup: f64,
    pub psi: f64,
    pub newton: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub psi: SweepStats,
    pub directions: Vec<SweepStats>,
    pub newton: Vec<NewtonStep>,
    pub newton_converged: bool,
    pub final_j: f64,
    pub final_grad: f64,
    pub lattice_points: usize,
    pub mesh_nodes: usize,
    pub mesh_tets: usize,
    pub timings: Timings,
}

impl SolveReport {
    fn all_sweeps(&self) -> impl Iterator<Item = &SweepStats> {
        std::iter::once(&self.psi).chain(&self.directions)
    }

    /// Average PCG-MG iterations per box solve.
    pub fn avg_pcg_mg(&self) -> f64 {
        mean(self.all_sweeps().flat_map(|s| s.mg_iterations.iter().copied()))
    }

    /// Average PCG-ILU iterations per central solve.
    pub fn avg_pcg_ilu(&self) -> f64 {
        mean(self.all_sweeps().flat_map(|s| s.ilu_iterations.iter().copied()))
    }

    /// Average sweeps per Schwarz iteration.
    pub fn avg_sweeps(&self) -> f64 {
        mean(self.all_sweeps().map(|s| s.sweeps))
    }

    pub fn newton_iterations(&self) -> usize {
        self.newton.len()
    }
}

fn mean(it: impl Iterator<Item = usize>) -> f64 {
    let (s, n) = it.fold((0usize, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s as f64 / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct SmpbeSolution {
    pub u: CompositeField,
    pub g: CompositeField,
    pub psi: CompositeField,
    pub phi: CompositeField,
    pub report: SolveReport,
}

impl SmpbeSolution {
    pub fn layout(&self) -> &Arc<FieldLayout> {
        &self.u.layout
    }
}

/// Runs the whole solve: mesh, Coulomb part, `Psi`, Newton loop for `Phi`.
pub fn solve_smpbe(
    charges: &ChargeSystem,
    partition: BoxPartition,
    mesh: MeshSource,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<SmpbeSolution> {
    let t0 = Instant::now();
    let ctx = SolverContext::new(charges, partition, mesh, params, config)?;
    let setup = t0.elapsed().as_secs_f64();
    solve_with_context(&ctx, config, setup, t0)
}

/// Same as [`solve_smpbe`] with a prepared context.
pub fn solve_in_context(ctx: &SolverContext, config: &SolverConfig) -> Result<SmpbeSolution> {
    solve_with_context(ctx, config, 0.0, Instant::now())
}

fn solve_with_context(ctx: &SolverContext, config: &SolverConfig, setup: f64, t0: Instant) -> Result<SmpbeSolution> {
    config.validate()?;
    let mut report = SolveReport {
        lattice_points: ctx.layout.num_lattice(),
        mesh_nodes: ctx.layout.num_nodes(),
        mesh_tets: ctx.mesh().num_tets(),
        ..Default::default()
    };
    report.timings.setup = setup;

    let t_psi = Instant::now();
    let (psi, psi_stats) = ctx.solve_psi(config)?;
    log::info!("psi: {} sweeps, change {:.3e}", psi_stats.sweeps, psi_stats.final_change);
    report.psi = psi_stats;
    report.timings.psi = t_psi.elapsed().as_secs_f64();

    let t_newton = Instant::now();
    let base = ctx.g.lincomb(1.0, &psi, 1.0);
    let functional = ctx.functional(&base);
    let mut phi = ctx.zeros();
    if config.phi0 == InitialGuess::FirstDirection {
        let (p, stats) = ctx.solve_direction(&base, &phi, config)?;
        report.directions.push(stats);
        phi = p;
    }
    let mut j = functional.value(&phi)?;
    let mut gnorm = functional.gradient_norm(&phi)?;
    if !j.is_finite() {
        return Err(SmpbeError::NonFinite("energy functional".into()));
    }
    let mut converged = false;
    for step in 1..=config.max_newton {
        let (p, stats) = ctx.solve_direction(&base, &phi, config)?;
        let sweeps = stats.sweeps;
        report.directions.push(stats);
        let pmax = p.max_abs();
        let mut lambda = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            let trial = phi.lincomb(1.0, &p, lambda);
            let jt = functional.value(&trial)?;
            let gt = functional.gradient_norm(&trial)?;
            if jt.is_finite() && (jt <= j || gt <= gnorm) {
                break Some((trial, jt, gt));
            }
            if lambda * pmax <= config.tol_newton {
                // The step is below the stopping tolerance; no admissible
                // decrease is resolvable at this scale.
                break None;
            }
            if halvings == config.max_halvings {
                return Err(SmpbeError::LineSearch { step, halvings });
            }
            lambda *= 0.5;
            halvings += 1;
        };
        let Some((trial, jt, gt)) = accepted else {
            converged = true;
            break;
        };
        let rec = NewtonStep {
            lambda,
            halvings,
            j_before: j,
            j_after: jt,
            grad_before: gnorm,
            grad_after: gt,
            update_norm: lambda * pmax,
            sweeps,
        };
        log::info!(
            "newton {step}: lambda {lambda}, |dphi| {:.3e}, J {jt:.10e}, |J'| {gt:.3e}, sweeps {sweeps}",
            rec.update_norm
        );
        report.newton.push(rec);
        phi = trial;
        j = jt;
        gnorm = gt;
        let done = match config.newton_stop {
            NewtonStop::Increment => lambda * pmax <= config.tol_newton,
            NewtonStop::Gradient => gnorm <= config.tol_newton,
        };
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("newton iteration did not converge in {} steps", config.max_newton);
    }
    report.newton_converged = converged;
    report.final_j = j;
    report.final_grad = gnorm;
    report.timings.newton = t_newton.elapsed().as_secs_f64();

    let u = base.lincomb(1.0, &phi, 1.0);
    report.timings.total = t0.elapsed().as_secs_f64();
    Ok(SmpbeSolution { u, g: ctx.g.clone(), psi, phi, report })
}

//! Scenario drivers.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use smpbe_core::analysis::{binding_slope, concentration_pair, rel_l2_error, solvation_energy, BornBall, IonModel, SlopeFit};
use smpbe_core::mesh::{read_mesh_file, InterfaceMesh, LevelSetGeometry};
use smpbe_core::model::{Atom, ChargeSystem, ModelParams};
use smpbe_core::partition::{bounding_box_for, BoxPartition, Cube};
use smpbe_core::pqr::read_pqr_file;
use smpbe_core::solver::{
    solve_smpbe, BoundaryData, InitialGuess, MeshSource, NewtonStop, SmpbeSolution, SolventSource, SolverConfig,
};
use smpbe_core::SmpbeError;

use crate::config::{BoundaryKind, Format, Scenario, Settings};
use crate::output::{field_csv, fmt_f64, gradient_csv, lattice_vtk, mesh_vtk, Report};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub settings: Settings,
    /// Molecule inputs: one structure, or complex then the two partners.
    pub pqr: Vec<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub out: PathBuf,
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let molecule = self.scenario == Scenario::Molecule;
        if molecule {
            if self.pqr.is_empty() {
                return Err(CliError::Usage("the molecule scenario needs --pqr".into()));
            }
            if self.pqr.len() != 1 && self.pqr.len() != 3 {
                return Err(CliError::Usage(format!(
                    "give one PQR file, or three (complex, then both partners); got {}",
                    self.pqr.len()
                )));
            }
            if self.mesh.is_some() && self.pqr.len() != 1 {
                return Err(CliError::Usage("--mesh works with a single PQR file".into()));
            }
            if self.settings.boundary == Some(BoundaryKind::Analytic) {
                return Err(CliError::Usage("no analytic boundary data exists for molecules".into()));
            }
        } else {
            if !self.pqr.is_empty() || self.mesh.is_some() {
                return Err(CliError::Usage("--pqr and --mesh are only used by the molecule scenario".into()));
            }
            if self.settings.is_scan.is_some() {
                return Err(CliError::Usage("--is-scan is only used by the molecule scenario".into()));
            }
        }
        if self.scenario == Scenario::Dipole && self.settings.boundary == Some(BoundaryKind::Analytic) {
            return Err(CliError::Usage("no analytic boundary data exists for the dipole".into()));
        }
        if self.settings.levels == Some(0) {
            return Err(CliError::Usage("--levels must be at least 1".into()));
        }
        Ok(())
    }

    fn params(&self, ionic_strength: f64) -> Result<ModelParams, CliError> {
        let s = &self.settings;
        let lambda = if s.pbe { 0.0 } else { s.lambda };
        Ok(ModelParams::new(s.eps_p, s.eps_s, lambda, s.temperature, ionic_strength)?)
    }

    fn solver_config(&self, boundary: BoundaryData, source: SolventSource) -> SolverConfig {
        let s = &self.settings;
        SolverConfig {
            omega_psi: s.omega_psi,
            omega_p: s.omega_p,
            tol_dd: s.tol_dd,
            max_sweeps: s.max_sweeps,
            tol_newton: s.tol_newton,
            max_newton: s.max_newton,
            tol_linear: s.tol_linear,
            boundary,
            source,
            phi0: if s.first_direction { InitialGuess::FirstDirection } else { InitialGuess::Zero },
            newton_stop: if s.gradient { NewtonStop::Gradient } else { NewtonStop::Increment },
            ..SolverConfig::default()
        }
    }
}

/// Numbers from one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub label: String,
    pub n: u32,
    pub m: u32,
    pub mu: u32,
    pub h: f64,
    pub ionic_strength: f64,
    pub lattice_points: usize,
    pub mesh_nodes: usize,
    pub mesh_tets: usize,
    pub error: Option<f64>,
    pub energy: f64,
    pub reference_energy: Option<f64>,
    pub avg_pcg_mg: f64,
    pub avg_pcg_ilu: f64,
    pub avg_sweeps: f64,
    pub psi_sweeps: usize,
    pub newton_iterations: usize,
    pub newton_converged: bool,
    pub final_j: f64,
    pub final_grad: f64,
    pub seconds: f64,
}

impl LevelSummary {
    fn new(label: String, part: (u32, u32, u32, f64), params: &ModelParams, sol: &SmpbeSolution, energy: f64) -> Self {
        let r = &sol.report;
        Self {
            label,
            n: part.0,
            m: part.1,
            mu: part.2,
            h: part.3,
            ionic_strength: params.ionic_strength,
            lattice_points: r.lattice_points,
            mesh_nodes: r.mesh_nodes,
            mesh_tets: r.mesh_tets,
            error: None,
            energy,
            reference_energy: None,
            avg_pcg_mg: r.avg_pcg_mg(),
            avg_pcg_ilu: r.avg_pcg_ilu(),
            avg_sweeps: r.avg_sweeps(),
            psi_sweeps: r.psi.sweeps,
            newton_iterations: r.newton_iterations(),
            newton_converged: r.newton_converged,
            final_j: r.final_j,
            final_grad: r.final_grad,
            seconds: r.timings.total,
        }
    }

    fn write(&self, report: &mut Report, prefix: &str) {
        report.put(format!("{prefix}.label"), &self.label);
        report.put(format!("{prefix}.n"), self.n);
        report.put(format!("{prefix}.m"), self.m);
        report.put(format!("{prefix}.mu"), self.mu);
        report.put_f64(format!("{prefix}.h"), self.h);
        report.put_f64(format!("{prefix}.ionic_strength"), self.ionic_strength);
        report.put(format!("{prefix}.lattice_points"), self.lattice_points);
        report.put(format!("{prefix}.mesh_nodes"), self.mesh_nodes);
        report.put(format!("{prefix}.mesh_tets"), self.mesh_tets);
        if let Some(e) = self.error {
            report.put_f64(format!("{prefix}.error"), e);
        }
        report.put_f64(format!("{prefix}.energy_kcal_per_mol"), self.energy);
        if let Some(e) = self.reference_energy {
            report.put_f64(format!("{prefix}.reference_energy_kcal_per_mol"), e);
        }
        report.put_f64(format!("{prefix}.avg_pcg_mg"), self.avg_pcg_mg);
        report.put_f64(format!("{prefix}.avg_pcg_ilu"), self.avg_pcg_ilu);
        report.put_f64(format!("{prefix}.avg_sweeps"), self.avg_sweeps);
        report.put(format!("{prefix}.psi_sweeps"), self.psi_sweeps);
        report.put(format!("{prefix}.newton_iterations"), self.newton_iterations);
        report.put(format!("{prefix}.newton_converged"), self.newton_converged);
        report.put_f64(format!("{prefix}.final_j"), self.final_j);
        report.put_f64(format!("{prefix}.final_grad"), self.final_grad);
        report.put(format!("{prefix}.seconds"), format!("{:.3}", self.seconds));
    }
}

/// One row of an ionic-strength scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub xi: f64,
    pub ionic_strength: f64,
    /// Solvation energy of the complex, then of each partner.
    pub energies: Vec<f64>,
    pub binding: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub levels: Vec<LevelSummary>,
    /// `log2(e_j / e_{j+1})` between consecutive levels.
    pub orders: Vec<f64>,
    pub scan: Vec<ScanRow>,
    pub slope: Option<SlopeFit>,
    pub report: Report,
}

/// The field written to disk with what is needed to post-process it.
struct Final {
    solution: SmpbeSolution,
    params: ModelParams,
    geometry: LevelSetGeometry,
}

struct Computed {
    levels: Vec<LevelSummary>,
    orders: Vec<f64>,
    scan: Vec<ScanRow>,
    slope: Option<SlopeFit>,
    last: Option<Final>,
}

fn core_err(e: SmpbeError) -> CliError {
    match e {
        SmpbeError::LineSearch { .. } | SmpbeError::NonFinite(_) => CliError::Diverged(e.to_string()),
        other => CliError::Core(other),
    }
}

fn solve(
    charges: &ChargeSystem,
    partition: BoxPartition,
    mesh: MeshSource,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<SmpbeSolution, CliError> {
    solve_smpbe(charges, partition, mesh, params, config).map_err(core_err)
}

fn part_info(p: &BoxPartition) -> (u32, u32, u32, f64) {
    (p.n, p.m, p.mu, p.h)
}

fn born(spec: &RunSpec, default_levels: usize) -> Result<Computed, CliError> {
    let s = &spec.settings;
    let params = spec.params(s.ionic_strength)?;
    let a = s.radius;
    let charges = ChargeSystem::new(vec![Atom { position: [0.0; 3], charge: 1.0, radius: a }])?;
    let ball = BornBall::new(&charges, &params)?;
    let n0 = s.n.unwrap_or(4);
    let m0 = s.m.unwrap_or(n0.saturating_sub(2).max(1));
    let mu = s.mu.unwrap_or(2);
    let boundary = match s.boundary.unwrap_or(BoundaryKind::Analytic) {
        BoundaryKind::Zero => BoundaryData::Zero,
        BoundaryKind::Analytic => BoundaryData::Analytic(Arc::new(move |r| ball.eval(r))),
    };
    let p2 = params.clone();
    let source = SolventSource::Analytic(Arc::new(move |r| p2.nl(ball.eval(r))));
    let config = spec.solver_config(boundary, source);
    let d = Cube::new([-2.0 * a; 3], 4.0 * a);
    let mut levels = Vec::new();
    let mut last = None;
    for j in 0..s.levels.unwrap_or(default_levels) as u32 {
        let part = BoxPartition::build(d, n0 + j, m0 + j, mu)?;
        let info = part_info(&part);
        log::info!("born: level {j}, h = {}", info.3);
        let sol = solve(&charges, part, MeshSource::Atoms, &params, &config)?;
        let e = solvation_energy(&sol.psi, &sol.phi, &charges, &params)?;
        let mut row = LevelSummary::new(format!("born_n{}", info.0), info, &params, &sol, e.de);
        row.error = Some(rel_l2_error(&sol.u, &|r| ball.eval(r), &[ball.center])?);
        row.reference_energy = Some(ball.energy(&params));
        levels.push(row);
        last = Some(Final { solution: sol, params: params.clone(), geometry: LevelSetGeometry::from_atoms(&charges)? });
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].error.unwrap_or(f64::NAN) / w[1].error.unwrap_or(f64::NAN)).log2())
        .collect();
    Ok(Computed { levels, orders, scan: Vec::new(), slope: None, last })
}

fn dipole_charges() -> Result<ChargeSystem, CliError> {
    Ok(ChargeSystem::new(vec![
        Atom { position: [1.0, 0.0, 0.0], charge: 3.0, radius: 1.5 },
        Atom { position: [-1.0, 0.0, 0.0], charge: -3.0, radius: 1.5 },
    ])?)
}

fn dipole(spec: &RunSpec) -> Result<Computed, CliError> {
    let s = &spec.settings;
    let params = spec.params(s.ionic_strength)?;
    let charges = dipole_charges()?;
    let n0 = s.n.unwrap_or(5);
    let m0 = s.m.unwrap_or(2);
    let mu = s.mu.unwrap_or(2);
    let config = spec.solver_config(BoundaryData::Zero, SolventSource::None);
    let d = Cube::new([-4.0; 3], 8.0);
    let mut levels = Vec::new();
    let mut last = None;
    for j in 0..s.levels.unwrap_or(1) as u32 {
        let part = BoxPartition::build(d, n0 + j, m0 + j, mu)?;
        let info = part_info(&part);
        let sol = solve(&charges, part, MeshSource::Atoms, &params, &config)?;
        let e = solvation_energy(&sol.psi, &sol.phi, &charges, &params)?;
        levels.push(LevelSummary::new(format!("dipole_n{}", info.0), info, &params, &sol, e.de));
        last = Some(Final { solution: sol, params: params.clone(), geometry: LevelSetGeometry::from_atoms(&charges)? });
    }
    Ok(Computed { levels, orders: Vec::new(), scan: Vec::new(), slope: None, last })
}

/// Smallest margin, at least `margin`, that keeps every sphere `2h` away from
/// the boundary of D at refinement `n`.
pub fn molecule_box(charges: &ChargeSystem, margin: f64, n: u32) -> Cube {
    let tight = bounding_box_for(charges, 0.0);
    let extent = tight.side;
    let c = 2.1;
    let cells = (1u64 << n) as f64;
    let need = if cells > 2.0 * c { c * extent / (cells - 2.0 * c) } else { margin };
    let m = margin.max(need);
    if m > margin {
        log::warn!("margin raised from {margin} to {m:.4} to keep atoms 2h inside D");
    }
    bounding_box_for(charges, m)
}

/// D for an imported mesh covering the central box `D ± tau`.
pub fn box_from_mesh(mesh: &InterfaceMesh, n: u32, m: u32) -> Result<Cube, CliError> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &mesh.vertices {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let side = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    if !(side > 0.0) {
        return Err(CliError::Usage("mesh has no extent".into()));
    }
    if (0..3).any(|d| ((hi[d] - lo[d]) - side).abs() > 1e-6 * side) {
        return Err(CliError::Usage("mesh does not cover a cube".into()));
    }
    let l = side / (1.0 + 2f64.powi(m as i32 + 1 - n as i32));
    let tau = 2f64.powi(m as i32) * l / 2f64.powi(n as i32);
    Ok(Cube::new(lo.map(|x| x + tau), l))
}

fn molecule(spec: &RunSpec) -> Result<Computed, CliError> {
    let s = &spec.settings;
    let systems: Vec<ChargeSystem> = spec.pqr.iter().map(|p| read_pqr_file(p)).collect::<Result<_, _>>()?;
    let n = s.n.unwrap_or(5);
    let m = s.m.unwrap_or(2);
    let mu = s.mu.unwrap_or(2);
    let imported = match &spec.mesh {
        Some(p) => Some(read_mesh_file(p)?),
        None => None,
    };
    let d = match &imported {
        Some(mesh) => box_from_mesh(mesh, n, m)?,
        None => molecule_box(&systems[0], s.margin, n),
    };
    let config = spec.solver_config(BoundaryData::Zero, SolventSource::None);
    let run_one = |params: &ModelParams, k: usize| -> Result<(f64, SmpbeSolution), CliError> {
        let part = BoxPartition::build(d, n, m, mu)?;
        let source = match &imported {
            Some(mesh) => MeshSource::Mesh(mesh.clone()),
            None => MeshSource::Atoms,
        };
        let sol = solve(&systems[k], part, source, params, &config)?;
        let e = solvation_energy(&sol.psi, &sol.phi, &systems[k], params)?;
        Ok((e.de, sol))
    };
    let info = {
        let p = BoxPartition::build(d, n, m, mu)?;
        part_info(&p)
    };
    let names: Vec<String> = spec
        .pqr
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "molecule".into()))
        .collect();

    if let Some(scan) = s.is_scan {
        let xis = scan.values();
        let job = |&xi: &f64| -> Result<(ScanRow, Vec<LevelSummary>), CliError> {
            let i_s = xi.exp();
            let params = spec.params(i_s)?;
            let mut energies = Vec::new();
            let mut rows = Vec::new();
            for k in 0..systems.len() {
                let (de, sol) = run_one(&params, k)?;
                rows.push(LevelSummary::new(format!("{}_xi{}", names[k], fmt_f64(xi)), info, &params, &sol, de));
                energies.push(de);
            }
            let binding = if energies.len() == 3 { energies[0] - energies[1] - energies[2] } else { energies[0] };
            Ok((ScanRow { xi, ionic_strength: i_s, energies, binding }, rows))
        };
        let results: Vec<Result<(ScanRow, Vec<LevelSummary>), CliError>> = if s.threads > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(s.threads)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
            pool.install(|| xis.par_iter().map(job).collect())
        } else {
            xis.par_iter().map(job).collect()
        };
        let mut scan_rows = Vec::new();
        let mut levels = Vec::new();
        for r in results {
            let (row, lv) = r?;
            scan_rows.push(row);
            levels.extend(lv);
        }
        let pairs: Vec<(f64, f64)> = scan_rows.iter().map(|r| (r.ionic_strength, r.binding)).collect();
        let slope = binding_slope(&pairs, s.temperature)?;
        return Ok(Computed { levels, orders: Vec::new(), scan: scan_rows, slope: Some(slope), last: None });
    }

    let params = spec.params(s.ionic_strength)?;
    let mut levels = Vec::new();
    let mut last = None;
    for k in 0..systems.len() {
        let (de, sol) = run_one(&params, k)?;
        levels.push(LevelSummary::new(names[k].clone(), info, &params, &sol, de));
        if k == 0 {
            last = Some(Final { solution: sol, params: params.clone(), geometry: LevelSetGeometry::from_atoms(&systems[0])? });
        }
    }
    Ok(Computed { levels, orders: Vec::new(), scan: Vec::new(), slope: None, last })
}

fn put_settings(report: &mut Report, spec: &RunSpec) {
    let s = &spec.settings;
    report.put("scenario", spec.scenario.name());
    for (i, p) in spec.pqr.iter().enumerate() {
        report.put(format!("pqr{i}"), p.display());
    }
    if let Some(m) = &spec.mesh {
        report.put("mesh", m.display());
    }
    report.put_f64("omega_psi", s.omega_psi);
    report.put_f64("omega_p", s.omega_p);
    report.put_f64("lambda", if s.pbe { 0.0 } else { s.lambda });
    report.put("pbe", s.pbe);
    report.put_f64("eps_p", s.eps_p);
    report.put_f64("eps_s", s.eps_s);
    report.put_f64("ionic_strength", s.ionic_strength);
    report.put_f64("temperature", s.temperature);
    report.put_f64("tol_dd", s.tol_dd);
    report.put_f64("tol_newton", s.tol_newton);
    report.put_f64("tol_linear", s.tol_linear);
    report.put("max_sweeps", s.max_sweeps);
    report.put("max_newton", s.max_newton);
    report.put("newton_stop", if s.gradient { "gradient" } else { "increment" });
    report.put("initial_guess", if s.first_direction { "first_direction" } else { "zero" });
}

fn concentration_csv(fin: &Final) -> String {
    use std::fmt::Write as _;
    let field = &fin.solution.u;
    let part = &field.layout.partition;
    let g = part.lattice;
    let zc = part.d.center()[2];
    let k = (((zc - g.origin[2]) / g.h).round().max(0.0) as usize).min(g.dims[2]);
    let mut s = String::from("x,y,z,u,c_na,c_cl\n");
    for j in 0..=g.dims[1] {
        for i in 0..=g.dims[0] {
            let p = g.point(i, j, k);
            let u = field.lattice[g.index(i, j, k)];
            let (na, cl) = if fin.geometry.phi(p) < 0.0 || !u.is_finite() {
                (0.0, 0.0)
            } else {
                let (na, cl, _) = concentration_pair(u, &fin.params, IonModel::Smpbe);
                (na, cl)
            };
            let _ = writeln!(s, "{},{},{},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]), fmt_f64(u), fmt_f64(na), fmt_f64(cl));
        }
    }
    s
}

fn write_outputs(spec: &RunSpec, c: &Computed, report: &mut Report) -> Result<(), CliError> {
    use std::fmt::Write as _;
    let out = &spec.out;
    let mut energy = String::from("label,n,h,ionic_strength,energy_kcal_per_mol,reference_kcal_per_mol\n");
    for l in &c.levels {
        let _ = writeln!(
            energy,
            "{},{},{},{},{},{}",
            l.label,
            l.n,
            fmt_f64(l.h),
            fmt_f64(l.ionic_strength),
            fmt_f64(l.energy),
            l.reference_energy.map(fmt_f64).unwrap_or_default()
        );
    }
    write(out, "energy.csv", &energy)?;

    if !c.scan.is_empty() {
        let fit = c.slope.as_ref();
        let mut t = String::from("xi,ionic_strength,");
        for k in 0..c.scan[0].energies.len() {
            let _ = write!(t, "energy{k},");
        }
        t.push_str("binding,fit\n");
        for r in &c.scan {
            let _ = write!(t, "{},{},", fmt_f64(r.xi), fmt_f64(r.ionic_strength));
            for e in &r.energies {
                let _ = write!(t, "{},", fmt_f64(*e));
            }
            let f = fit.map(|f| f.m * r.xi + f.b).unwrap_or(f64::NAN);
            let _ = writeln!(t, "{},{}", fmt_f64(r.binding), fmt_f64(f));
        }
        write(out, "slope.csv", &t)?;
    }

    if let Some(fin) = &c.last {
        let u = &fin.solution.u;
        match spec.settings.format {
            Format::Csv => {
                write(out, "field.csv", &field_csv(u))?;
                write(out, "gradient.csv", &gradient_csv(u))?;
            }
            Format::Vtk => {
                write(out, "field.vtk", &lattice_vtk(u, "u on the global lattice"))?;
                write(out, "mesh.vtk", &mesh_vtk(&u.layout.mesh, &u.mesh, "u on the central-box mesh"))?;
            }
        }
        let conc = concentration_csv(fin);
        let max_c = conc
            .lines()
            .skip(1)
            .filter_map(|l| {
                let v: Vec<f64> = l.split(',').skip(4).filter_map(|x| x.parse().ok()).collect();
                v.into_iter().reduce(f64::max)
            })
            .fold(0.0, f64::max);
        report.put_f64("max_concentration", max_c);
        write(out, "concentration.csv", &conc)?;
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Runs a scenario and writes its files into `spec.out`. The report is
/// written even when the solve fails.
pub fn run(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    spec.validate()?;
    fs::create_dir_all(&spec.out)?;
    let t0 = Instant::now();
    let mut report = Report::default();
    put_settings(&mut report, spec);
    let computed = match spec.scenario {
        Scenario::Born => born(spec, 2),
        Scenario::Manufactured => born(spec, 1),
        Scenario::Dipole => dipole(spec),
        Scenario::Molecule => molecule(spec),
    };
    let computed = match computed {
        Ok(c) => c,
        Err(e) => {
            report.put("status", format!("failed: {e}"));
            write(&spec.out, "report.txt", &report.render())?;
            return Err(e);
        }
    };
    for (j, l) in computed.levels.iter().enumerate() {
        l.write(&mut report, &format!("level{j}"));
    }
    for (j, o) in computed.orders.iter().enumerate() {
        report.put_f64(format!("order{j}"), *o);
    }
    if let Some(f) = &computed.slope {
        report.put_f64("slope_m", f.m);
        report.put_f64("slope_b", f.b);
        report.put_f64("slope_m_s", f.m_s);
        report.put_f64("slope_residual", f.residual);
    }
    write_outputs(spec, &computed, &mut report)?;
    let diverged: Vec<&str> =
        computed.levels.iter().filter(|l| !l.newton_converged).map(|l| l.label.as_str()).collect();
    report.put("status", if diverged.is_empty() { "converged".to_string() } else { format!("not converged: {}", diverged.join(" ")) });
    report.put("seconds", format!("{:.3}", t0.elapsed().as_secs_f64()));
    write(&spec.out, "report.txt", &report.render())?;
    if !diverged.is_empty() {
        return Err(CliError::Diverged(format!("Newton iteration did not converge for {}", diverged.join(", "))));
    }
    Ok(RunOutcome { levels: computed.levels, orders: computed.orders, scan: computed.scan, slope: computed.slope, report })
}

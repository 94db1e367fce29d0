//! One test per acceptance criterion. Each prints a single PASS/FAIL line to
//! stderr (uncaptured) and then asserts.

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use smpbe_core::analysis::{
    binding_slope, concentration_pair, rel_l2_error, sample_points, saturation_concentration, solvation_energy,
    x_antisymmetry, xi_grid, BornBall, IonModel,
};
use smpbe_core::composite::CompositeField;
use smpbe_core::fd::{prolong_add, restrict, MgHierarchy};
use smpbe_core::krylov::dot;
use smpbe_core::model::{Atom, ChargeSystem, ModelParams};
use smpbe_core::partition::{BoxPartition, Cube, UniformGrid};
use smpbe_core::pqr::read_pqr_file;
use smpbe_core::solver::{
    solve_smpbe, BoundaryData, Functional, MeshSource, SmpbeSolution, SolventSource, SolverConfig, SolverContext,
};

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion} [{verdict}] {title}: {detail}");
}

// ---------------------------------------------------------------- shared runs

struct BornRun {
    h: f64,
    error: f64,
    energy: f64,
    exact_energy: f64,
    solution: SmpbeSolution,
}

fn born_charges() -> ChargeSystem {
    ChargeSystem::new(vec![Atom { position: [0.0; 3], charge: 1.0, radius: 1.0 }]).unwrap()
}

/// Unit Born ball, D = (-2,2)^3, Omega = (-6,6)^3, analytic boundary data and
/// the matching solvent source.
fn born_run(n: u32, ionic_strength: f64) -> BornRun {
    let charges = born_charges();
    let params = ModelParams::standard().with_ionic_strength(ionic_strength).unwrap();
    let ball = BornBall::new(&charges, &params).unwrap();
    let p2 = params.clone();
    let config = SolverConfig {
        boundary: BoundaryData::Analytic(Arc::new(move |r| ball.eval(r))),
        source: SolventSource::Analytic(Arc::new(move |r| p2.nl(ball.eval(r)))),
        ..SolverConfig::default()
    };
    let part = BoxPartition::build(Cube::new([-2.0; 3], 4.0), n, n - 2, 2).unwrap();
    let h = part.h;
    let solution = solve_smpbe(&charges, part, MeshSource::Atoms, &params, &config).unwrap();
    let error = rel_l2_error(&solution.u, &|r| ball.eval(r), &[ball.center]).unwrap();
    let energy = solvation_energy(&solution.psi, &solution.phi, &charges, &params).unwrap().de;
    BornRun { h, error, energy, exact_energy: ball.energy(&params), solution }
}

fn born_salt() -> &'static [BornRun; 2] {
    static RUNS: OnceLock<[BornRun; 2]> = OnceLock::new();
    RUNS.get_or_init(|| [born_run(4, 0.1), born_run(5, 0.1)])
}

fn born_no_salt() -> &'static [BornRun; 2] {
    static RUNS: OnceLock<[BornRun; 2]> = OnceLock::new();
    RUNS.get_or_init(|| [born_run(4, 0.0), born_run(5, 0.0)])
}

fn dipole_charges() -> ChargeSystem {
    ChargeSystem::new(vec![
        Atom { position: [1.0, 0.0, 0.0], charge: 3.0, radius: 1.5 },
        Atom { position: [-1.0, 0.0, 0.0], charge: -3.0, radius: 1.5 },
    ])
    .unwrap()
}

struct DipoleRun {
    energy: f64,
    solution: SmpbeSolution,
    params: ModelParams,
}

fn dipole_run(n: u32, params: ModelParams) -> DipoleRun {
    let charges = dipole_charges();
    let part = BoxPartition::build(Cube::new([-4.0; 3], 8.0), n, n - 3, 2).unwrap();
    let solution = solve_smpbe(&charges, part, MeshSource::Atoms, &params, &SolverConfig::default()).unwrap();
    let energy = solvation_energy(&solution.psi, &solution.phi, &charges, &params).unwrap().de;
    DipoleRun { energy, solution, params }
}

/// SMPBE at h = 0.5 and 0.25.
fn dipole_smpbe() -> &'static [DipoleRun; 2] {
    static RUNS: OnceLock<[DipoleRun; 2]> = OnceLock::new();
    RUNS.get_or_init(|| [dipole_run(4, ModelParams::standard()), dipole_run(5, ModelParams::standard())])
}

fn dipole_pbe() -> &'static DipoleRun {
    static RUN: OnceLock<DipoleRun> = OnceLock::new();
    RUN.get_or_init(|| dipole_run(5, ModelParams::standard().with_lambda(0.0).unwrap()))
}

/// Largest ion concentration at solvent sample points.
fn max_concentration(run: &DipoleRun, model: IonModel) -> f64 {
    let atoms = dipole_charges();
    sample_points(&run.solution.u)
        .into_iter()
        .filter(|(p, _)| {
            atoms.atoms().iter().all(|a| {
                let d2: f64 = (0..3).map(|k| (p[k] - a.position[k]).powi(2)).sum();
                d2.sqrt() >= a.radius - 1e-9
            })
        })
        .map(|(_, u)| {
            let (na, cl, _) = concentration_pair(u, &run.params, model);
            na.max(cl)
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- criteria

#[test]
fn criterion_1_born_convergence() {
    let runs = born_salt();
    let bands = [5.77e-2, 1.56e-2];
    let order = (runs[0].error / runs[1].error).log2();
    let in_band: Vec<bool> =
        runs.iter().zip(bands).map(|(r, b)| r.error >= b / 3.0 && r.error <= 3.0 * b).collect();
    let order_ok = (1.5..=2.5).contains(&order);
    let pass = in_band.iter().all(|&b| b) && order_ok;
    let detail = format!(
        "h={} err={:.3e} (band [{:.3e}, {:.3e}]), h={} err={:.3e} (band [{:.3e}, {:.3e}]), order={order:.3} (need [1.5, 2.5])",
        runs[0].h,
        runs[0].error,
        bands[0] / 3.0,
        bands[0] * 3.0,
        runs[1].h,
        runs[1].error,
        bands[1] / 3.0,
        bands[1] * 3.0,
    );
    report(1, "Born-ball convergence", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_2_inner_solvers_h_independent() {
    let runs = born_salt();
    let r: Vec<_> = runs.iter().map(|r| &r.solution.report).collect();
    let mg = [r[0].avg_pcg_mg(), r[1].avg_pcg_mg()];
    let sweeps = [r[0].avg_sweeps(), r[1].avg_sweeps()];
    let newton = [r[0].newton_iterations(), r[1].newton_iterations()];
    let pass = mg.iter().all(|&m| m <= 15.0)
        && (mg[0] - mg[1]).abs() <= 2.0
        && sweeps.iter().all(|&s| s <= 30.0)
        && (sweeps[0] - sweeps[1]).abs() <= 3.0
        && newton.iter().all(|&n| n <= 20)
        && r.iter().all(|r| r.newton_converged);
    let detail = format!(
        "PCG-MG {:.2}/{:.2}, PCG-ILU {:.2}/{:.2}, sweeps {:.2}/{:.2}, Newton {}/{}",
        mg[0],
        mg[1],
        r[0].avg_pcg_ilu(),
        r[1].avg_pcg_ilu(),
        sweeps[0],
        sweeps[1],
        newton[0],
        newton[1]
    );
    report(2, "h-independent inner solvers", pass, &detail);
    assert!(pass, "{detail}");
}

fn transfer_mismatch(n: usize) -> f64 {
    let fd = [n; 3];
    let cd = [n / 2; 3];
    let (nf, nc) = ((n + 1).pow(3), (n / 2 + 1).pow(3));
    let fg = UniformGrid::new([0.0; 3], 1.0, fd).unwrap();
    let cg = UniformGrid::new([0.0; 3], 2.0, cd).unwrap();
    let fi: Vec<usize> = (0..nf).filter(|&i| !fg.is_boundary(fg.ijk(i))).collect();
    let ci: Vec<usize> = (0..nc).filter(|&i| !cg.is_boundary(cg.ijk(i))).collect();
    let mut r = vec![vec![0.0; fi.len()]; ci.len()];
    for (col, &f) in fi.iter().enumerate() {
        let mut e = vec![0.0; nf];
        e[f] = 1.0;
        let mut out = vec![0.0; nc];
        restrict(&fd, &e, &cd, &mut out);
        for (row, &c) in ci.iter().enumerate() {
            r[row][col] = out[c];
        }
    }
    let mut worst = 0.0f64;
    for (col, &c) in ci.iter().enumerate() {
        let mut e = vec![0.0; nc];
        e[c] = 1.0;
        let mut out = vec![0.0; nf];
        prolong_add(&cd, &e, &fd, &mut out);
        for (row, &f) in fi.iter().enumerate() {
            worst = worst.max((out[f] - 8.0 * r[col][row]).abs());
        }
    }
    worst
}

fn vcycle_asymmetry() -> f64 {
    let grid = UniformGrid::new([0.0; 3], 0.25, [16; 3]).unwrap();
    let n = grid.num_points();
    let reaction: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
    let mut hier = MgHierarchy::new(&grid, 80.0, Some(&reaction));
    let pick = |seed: usize| -> Vec<f64> {
        (0..n)
            .map(|i| if grid.is_boundary(grid.ijk(i)) { 0.0 } else { ((i * seed) % 101) as f64 / 50.0 - 1.0 })
            .collect()
    };
    let (v, w) = (pick(13), pick(37));
    let (mut mv, mut mw) = (vec![0.0; n], vec![0.0; n]);
    hier.vcycle(&v, &mut mv);
    hier.vcycle(&w, &mut mw);
    let (a, b) = (dot(&mv, &w), dot(&v, &mw));
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn criterion_3_multigrid_structure() {
    let p = BoxPartition::build(Cube::new([-2.0; 3], 4.0), 4, 2, 4).unwrap();
    let got: Vec<(usize, usize)> = (0..6)
        .map(|k| {
            let h = MgHierarchy::new(&p.box_grid(k), 80.0, None);
            (h.num_levels(), h.coarsest_unknowns())
        })
        .collect();
    let expect = vec![(5, 16), (4, 54), (4, 12), (4, 12), (4, 54), (5, 16)];
    let transfer = transfer_mismatch(4).max(transfer_mismatch(8));
    let asym = vcycle_asymmetry();
    let pass = got == expect && transfer == 0.0 && asym <= 1e-10;
    let detail = format!("(levels, coarsest unknowns) per box {got:?}, |P - 8R^T| = {transfer:e}, V-cycle asymmetry {asym:.2e}");
    report(3, "multigrid structure", pass, &detail);
    assert!(pass, "{detail}");
}

/// Smooth perturbation vanishing on the outer boundary.
fn bump(ctx: &SolverContext, amp: f64) -> CompositeField {
    let o = ctx.partition().omega();
    let (lo, side) = (o.lower, o.side);
    CompositeField::from_fn(Arc::clone(&ctx.layout), move |p| {
        let s: f64 = (0..3).map(|d| (std::f64::consts::PI * (p[d] - lo[d]) / side).sin()).product();
        amp * s * (1.0 + 0.3 * (0.7 * p[0]).cos())
    })
}

/// Observed orders of the first and second Taylor remainders of `J` around a
/// smooth `phi`.
fn taylor_orders() -> (Vec<f64>, Vec<f64>) {
    let charges = born_charges();
    let params = ModelParams::standard();
    let ball = BornBall::new(&charges, &params).unwrap();
    let p2 = params.clone();
    let config = SolverConfig {
        boundary: BoundaryData::Analytic(Arc::new(move |r| ball.eval(r))),
        source: SolventSource::Analytic(Arc::new(move |r| p2.nl(ball.eval(r)))),
        ..SolverConfig::default()
    };
    let part = BoxPartition::build(Cube::new([-2.0; 3], 4.0), 4, 2, 2).unwrap();
    let ctx = SolverContext::new(&charges, part, MeshSource::Atoms, &params, &config).unwrap();
    let (psi, _) = ctx.solve_psi(&config).unwrap();
    let base = ctx.g.lincomb(1.0, &psi, 1.0);
    let j = ctx.functional(&base);
    let phi = bump(&ctx, 0.3);
    let delta = bump(&ctx, 1.0);
    let j0 = j.value(&phi).unwrap();
    let g0 = j.gradient(&phi).unwrap();
    let hd = j.hessian_apply(&phi, &delta).unwrap();
    let slope = Functional::directional(&g0, &delta);
    let ts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &t in &ts {
        let moved = phi.lincomb(1.0, &delta, t);
        first.push(((j.value(&moved).unwrap() - j0) / t - slope).abs());
        let gt = j.gradient(&moved).unwrap();
        let r = gt.lincomb(1.0, &g0, -1.0).lincomb(1.0, &hd, -t);
        second.push(Functional::norm(&r));
    }
    let orders = |v: &[f64]| v.windows(2).map(|w| (w[0] / w[1]).log2()).collect::<Vec<_>>();
    (orders(&first), orders(&second))
}

#[test]
fn criterion_4_newton_correctness() {
    let mut steps = 0;
    let mut bad = Vec::new();
    let salt = born_salt();
    let no_salt = born_no_salt();
    let dip = dipole_smpbe();
    let reports = [
        ("born I_s=0.1 n=4", &salt[0].solution.report),
        ("born I_s=0.1 n=5", &salt[1].solution.report),
        ("born I_s=0 n=4", &no_salt[0].solution.report),
        ("born I_s=0 n=5", &no_salt[1].solution.report),
        ("dipole n=4", &dip[0].solution.report),
        ("dipole n=5", &dip[1].solution.report),
        ("dipole PBE n=5", &dipole_pbe().solution.report),
    ];
    for (name, r) in reports {
        if !r.newton_converged {
            continue;
        }
        for (k, s) in r.newton.iter().enumerate() {
            steps += 1;
            if !s.acceptable() {
                bad.push(format!("{name} step {k}"));
            }
        }
    }
    let (first, second) = taylor_orders();
    let first_ok = first.iter().all(|o| (o - 1.0).abs() < 0.15);
    let second_ok = second.iter().all(|o| (o - 2.0).abs() < 0.15);
    let pass = bad.is_empty() && steps > 0 && first_ok && second_ok;
    let detail = format!(
        "{steps} Newton steps checked, {} rejected {bad:?}; J' remainder orders {first:.3?}, J'' remainder orders {second:.3?}",
        bad.len()
    );
    report(4, "Newton correctness", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_dipole_physics() {
    let smpbe = &dipole_smpbe()[1];
    let pbe = dipole_pbe();
    let c_smpbe = max_concentration(smpbe, IonModel::Smpbe);
    let c_pbe = max_concentration(pbe, IonModel::Pbe);
    let centers: Vec<[f64; 3]> = dipole_charges().atoms().iter().map(|a| a.position).collect();
    let anti = x_antisymmetry(&smpbe.solution.u, &centers);
    let pass = c_smpbe <= 55.2 * (1.0 + 1e-6) && c_pbe > 100.0 && anti <= 0.05;
    let detail = format!(
        "max SMPBE concentration {c_smpbe:.4} mol/L, max PBE concentration {c_pbe:.4e} mol/L, x-antisymmetry {anti:.3e}"
    );
    report(5, "dipole physics", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6_energy_stability() {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let salt = born_salt();
    let no_salt = born_no_salt();
    let dip = dipole_smpbe();
    let born_salt_gap = rel(salt[0].energy, salt[1].energy);
    let born_gap = rel(no_salt[0].energy, no_salt[1].energy);
    let dip_gap = rel(dip[0].energy, dip[1].energy);
    let analytic = rel(no_salt[1].energy, no_salt[1].exact_energy);
    let pass = born_salt_gap < 0.02 && born_gap < 0.02 && dip_gap < 0.02 && analytic < 0.02;
    let detail = format!(
        "Born I_s=0.1 dE {:.4}/{:.4} (gap {born_salt_gap:.2e}); Born I_s=0 dE {:.4}/{:.4} (gap {born_gap:.2e}, \
         {analytic:.2e} from analytic {:.4}); dipole dE {:.4}/{:.4} (gap {dip_gap:.2e}) kcal/mol",
        salt[0].energy,
        salt[1].energy,
        no_salt[0].energy,
        no_salt[1].energy,
        no_salt[1].exact_energy,
        dip[0].energy,
        dip[1].energy,
    );
    report(6, "solvation-energy stability", pass, &detail);
    assert!(pass, "{detail}");
}

/// Runs the binding scan when a directory with `complex.pqr`, `a.pqr` and
/// `b.pqr` is named by `SMPBE_BINDING_DATA`.
fn binding_scan() -> Option<Result<f64, String>> {
    let dir = PathBuf::from(std::env::var_os("SMPBE_BINDING_DATA")?);
    let load = |name: &str| read_pqr_file(&dir.join(name)).map_err(|e| e.to_string());
    let run = || -> Result<f64, String> {
        let systems = [load("complex.pqr")?, load("a.pqr")?, load("b.pqr")?];
        let complex = &systems[0];
        let (mut lo, mut hi) = ([f64::MAX; 3], [f64::MIN; 3]);
        for a in complex.atoms() {
            for k in 0..3 {
                lo[k] = lo[k].min(a.position[k] - a.radius);
                hi[k] = hi[k].max(a.position[k] + a.radius);
            }
        }
        let n = 5;
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let margin = 2.0f64.max(2.1 * extent / ((1u32 << n) as f64 - 4.2));
        let side = extent + 2.0 * margin;
        let lower: [f64; 3] = std::array::from_fn(|k| 0.5 * (lo[k] + hi[k]) - 0.5 * side);
        let d = Cube::new(lower, side);
        let mut table = Vec::new();
        for xi in xi_grid() {
            let params = ModelParams::standard().with_ionic_strength(xi.exp()).map_err(|e| e.to_string())?;
            let mut e = [0.0; 3];
            for (slot, sys) in e.iter_mut().zip(&systems) {
                let part = BoxPartition::build(d, n, 2, 2).map_err(|e| e.to_string())?;
                let sol = solve_smpbe(sys, part, MeshSource::Atoms, &params, &SolverConfig::default())
                    .map_err(|e| e.to_string())?;
                *slot = solvation_energy(&sol.psi, &sol.phi, sys, &params).map_err(|e| e.to_string())?.de;
            }
            table.push((xi.exp(), e[0] - e[1] - e[2]));
        }
        Ok(binding_slope(&table, 298.15).map_err(|e| e.to_string())?.m_s)
    };
    Some(run())
}

#[test]
fn criterion_7_binding_slope_machinery() {
    let mut worst = 0.0f64;
    for (m, b) in [(-1.2, 3.5), (0.0, -7.25), (2.75, 0.125), (-0.8843, -12.6)] {
        let pts: Vec<(f64, f64)> = xi_grid().iter().map(|&xi| (xi.exp(), m * xi + b)).collect();
        let fit = binding_slope(&pts, 298.15).unwrap();
        worst = worst.max((fit.m - m).abs()).max((fit.b - b).abs());
    }
    let grid = xi_grid();
    let grid_ok = grid.len() == 11 && grid.iter().enumerate().all(|(j, &x)| (x - (-3.0 + 0.2 * j as f64)).abs() == 0.0);
    let mut pass = worst <= 1e-12 && grid_ok;
    let mut detail = format!("exact-line fit error {worst:.2e}, xi grid {grid:.1?}");
    match binding_scan() {
        None => detail.push_str("; binding reproduction skipped (SMPBE_BINDING_DATA not set)"),
        Some(Ok(ms)) => {
            let ok = (-1.6..=-1.39).contains(&ms);
            pass &= ok;
            detail.push_str(&format!("; m_s = {ms:.4} (need [-1.6, -1.39])"));
        }
        Some(Err(e)) => {
            pass = false;
            detail.push_str(&format!("; binding scan failed: {e}"));
        }
    }
    report(7, "binding-slope machinery", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_8_property_checks() {
    let mut failures = Vec::new();
    let params = ModelParams::standard();

    // Concentration bounds over a wide range of potentials. The supremum is
    // 1e27/(N_A L^3) = 55.2037 mol/L, reached only as |u| grows without bound;
    // the rounded 55.2 figure holds while |u| stays below about 15.9.
    let c_sat = saturation_concentration(3.11);
    let mut c_max = 0.0f64;
    let mut literal_limit = f64::INFINITY;
    for k in -400..=400 {
        let u = k as f64 * 0.05;
        let (na, cl, _) = concentration_pair(u, &params, IonModel::Smpbe);
        let c = na.max(cl);
        c_max = c_max.max(c);
        if c > 55.2 * (1.0 + 1e-6) {
            literal_limit = literal_limit.min(u.abs());
        }
        let (na2, cl2, _) = concentration_pair(-u, &params, IonModel::Smpbe);
        if na != cl2 || cl != na2 {
            failures.push(format!("ion symmetry at u = {u}"));
        }
    }
    if c_max > c_sat * (1.0 + 1e-12) {
        failures.push(format!("concentration {c_max} above saturation {c_sat}"));
    }

    // Operator symmetry of the finite-element block on a Born mesh.
    let salt = born_salt();
    let mesh = &salt[0].solution.u.layout.mesh;
    let fem = smpbe_core::fem::FemContext::new(mesh, &params).unwrap();
    let asym = fem.stiffness.asymmetry();
    if asym > 1e-12 {
        failures.push(format!("stiffness asymmetry {asym:e}"));
    }

    // Mesh volume conservation.
    let part = &salt[0].solution.u.layout.partition;
    let (lo, hi) = part.box_cube(6);
    let exact: f64 = (0..3).map(|d| hi[d] - lo[d]).product();
    let vol = mesh.total_volume();
    if (vol - exact).abs() > 1e-10 * exact {
        failures.push(format!("mesh volume {vol} vs {exact}"));
    }

    // PQR round trip.
    let sys = dipole_charges();
    let back = smpbe_core::pqr::parse_pqr_str(&smpbe_core::pqr::write_pqr(&sys)).unwrap();
    if back != sys {
        failures.push("PQR round trip".into());
    }

    // Deterministic reruns.
    let again = born_run(4, 0.1);
    let bits = |f: &CompositeField| f.lattice.iter().chain(&f.mesh).map(|x| x.to_bits()).collect::<Vec<_>>();
    if bits(&again.solution.u) != bits(&salt[0].solution.u) {
        failures.push("rerun differs".into());
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!(
            "concentration max {c_max:.4} <= saturation {c_sat:.4} (rounded 55.2*(1+1e-6) first exceeded at |u| = {literal_limit}), stiffness asymmetry {asym:.1e}, mesh volume error {:.1e}, PQR round trip and rerun identical; full suite in tests/properties.rs",
            (vol - exact).abs()
        )
    } else {
        failures.join("; ")
    };
    report(8, "property suites", pass, &detail);
    assert!(pass, "{detail}");
}

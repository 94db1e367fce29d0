use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use smpbe::{run, CliError, RunSpec, Scenario, Settings};

/// Solve the size-modified Poisson-Boltzmann equation with the hybrid
/// finite element / finite difference box solver.
#[derive(Parser, Debug)]
#[command(name = "smpbe", version)]
struct Args {
    /// born, manufactured, dipole or molecule
    #[arg(value_name = "SCENARIO")]
    positional: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    /// PQR input; repeat as complex, partner A, partner B for binding energies.
    #[arg(long)]
    pqr: Vec<PathBuf>,
    /// Tetrahedral mesh of the central box.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value = "smpbe-out")]
    out: PathBuf,
    /// `key = value` settings file, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long = "omega-psi")]
    omega_psi: Option<String>,
    #[arg(long = "omega-p")]
    omega_p: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long = "eps-p")]
    eps_p: Option<String>,
    #[arg(long = "eps-s")]
    eps_s: Option<String>,
    /// Ionic strength, mol/L.
    #[arg(long = "is")]
    ionic_strength: Option<String>,
    /// Temperature, K.
    #[arg(long)]
    temp: Option<String>,
    #[arg(long = "tol-dd")]
    tol_dd: Option<String>,
    #[arg(long = "tol-newton")]
    tol_newton: Option<String>,
    #[arg(long = "tol-linear")]
    tol_linear: Option<String>,
    #[arg(long = "max-sweeps")]
    max_sweeps: Option<String>,
    #[arg(long = "max-newton")]
    max_newton: Option<String>,
    /// Classical PBE (Λ = 0).
    #[arg(long)]
    pbe: bool,
    /// start:step:end in ln I_s.
    #[arg(long = "is-scan", allow_hyphen_values = true)]
    is_scan: Option<String>,
    /// zero or analytic
    #[arg(long)]
    boundary: Option<String>,
    /// csv or vtk
    #[arg(long)]
    format: Option<String>,
    /// Extra margin around the atoms when D is built from a PQR file, Å.
    #[arg(long)]
    margin: Option<String>,
    /// Number of refinement levels for convergence runs.
    #[arg(long)]
    levels: Option<String>,
    /// Born ball radius, Å.
    #[arg(long)]
    radius: Option<String>,
    /// Start Newton from a full first step.
    #[arg(long = "first-direction")]
    first_direction: bool,
    /// Stop Newton on the gradient norm instead of the increment.
    #[arg(long)]
    gradient: bool,
    /// Worker threads for ionic-strength scans (0 = all cores).
    #[arg(long)]
    threads: Option<String>,
}

fn spec_from(args: Args) -> Result<RunSpec, CliError> {
    let name = match (&args.positional, &args.scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Usage(format!("scenario given twice: '{a}' and '{b}'")));
        }
        (Some(a), _) => a.clone(),
        (None, Some(b)) => b.clone(),
        (None, None) => return Err(CliError::Usage("no scenario given".into())),
    };
    let scenario = Scenario::parse(&name)?;
    let mut settings = Settings::default();
    if let Some(path) = &args.config {
        settings.apply_file(path)?;
    }
    let flags = [
        ("n", args.n),
        ("m", args.m),
        ("mu", args.mu),
        ("omega-psi", args.omega_psi),
        ("omega-p", args.omega_p),
        ("lambda", args.lambda),
        ("eps-p", args.eps_p),
        ("eps-s", args.eps_s),
        ("is", args.ionic_strength),
        ("temp", args.temp),
        ("tol-dd", args.tol_dd),
        ("tol-newton", args.tol_newton),
        ("tol-linear", args.tol_linear),
        ("max-sweeps", args.max_sweeps),
        ("max-newton", args.max_newton),
        ("is-scan", args.is_scan),
        ("boundary", args.boundary),
        ("format", args.format),
        ("margin", args.margin),
        ("levels", args.levels),
        ("radius", args.radius),
        ("threads", args.threads),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            settings.set(key, &v)?;
        }
    }
    if args.pbe {
        settings.pbe = true;
    }
    if args.first_direction {
        settings.first_direction = true;
    }
    if args.gradient {
        settings.gradient = true;
    }
    Ok(RunSpec { scenario, settings, pqr: args.pqr, mesh: args.mesh, out: args.out })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = spec_from(args).and_then(|spec| {
        let outcome = run(&spec)?;
        for l in &outcome.levels {
            match l.error {
                Some(e) => println!("{}: h = {} error = {e:.4e} dE = {:.4} kcal/mol", l.label, l.h, l.energy),
                None => println!("{}: h = {} dE = {:.4} kcal/mol", l.label, l.h, l.energy),
            }
        }
        for (j, o) in outcome.orders.iter().enumerate() {
            println!("order {j}: {o:.3}");
        }
        if let Some(f) = &outcome.slope {
            println!("slope m = {:.6} b = {:.6} m_s = {:.6}", f.m, f.b, f.m_s);
        }
        println!("outputs in {}", spec.out.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use frlab::bilinear::verify_appendix_interactions;
use frlab::diagnostics::{
    check_lyapunov_trajectory, energy_ladder, euler_blowup_bound, fit_blowup_rate, hypo_lyapunov_criterion, origin_strain_lambda,
    regularity_functionals, saturation_time, sup_weighted,
};
use frlab::dyadic::{lyapunov, preset, DyadicSystem, Model};
use frlab::error::LatticeError;
use frlab::evolve::{galerkin_psi, h1_norm, integrate_dyadic, integrate_galerkin, SimConfig, Trajectory};
use frlab::field::{s_tilde, FieldFile, SpectralField};
use frlab::lattice::{verify_lattice_identities, ShellTable, MAX_SHELL};
use frlab::physical::{default_sheet_truncation, synthesize, vortex_sheet, Bump, GeneralFieldFile, GeneralSpectralField};

use output::{write_csv, Manifest};

#[derive(Parser, Debug)]
#[command(name = "frlab", version, about = "Fourier-restricted Euler / hypodissipative Navier-Stokes toolkit")]
struct Cli {
    /// Flat JSON file of flag values; flags given on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact checks on the constraint lattice.
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Interaction catalogue checks against direct convolution.
    Interactions {
        #[command(subcommand)]
        action: InteractionAction,
    },
    /// Integrate the reduced (or full Galerkin) system and write a CSV trajectory.
    Simulate(SimulateArgs),
    /// Blowup bound, energy ladder, Lyapunov criterion and regularity checks on a trajectory CSV.
    Diagnose(DiagnoseArgs),
    /// Sample u, vorticity, strain eigenvalues and det S on an M^3 grid.
    Grid(GridArgs),
    /// Build the mollified vortex sheet and check its closed-form strain values.
    Sheet(SheetArgs),
}

#[derive(Subcommand, Debug)]
enum LatticeAction {
    Verify(LatticeArgs),
}

#[derive(Subcommand, Debug)]
enum InteractionAction {
    Verify(InteractionArgs),
}

#[derive(Args, Debug, Serialize)]
struct LatticeArgs {
    /// Highest shell for the identity checks.
    #[arg(long, default_value_t = 20)]
    max_shell: usize,
    /// Highest shell for the exhaustive pair search.
    #[arg(long, default_value_t = 6)]
    pair_shell: usize,
    /// JSON report path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct InteractionArgs {
    /// Highest index m of the catalogue.
    #[arg(long, default_value_t = 10)]
    max_m: usize,
    /// Relative tolerance on the coefficients.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Euler,
    Hypo,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Euler)]
    model: ModelKind,
    /// Dissipation exponent alpha of (-Laplacian)^alpha (hypo only).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Viscosity (hypo only).
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Exponent gamma of the Lyapunov column H_gamma.
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Truncation N: shells 0..=N.
    #[arg(long)]
    shells: usize,
    /// "delta0", "geometric(q)" or a file with one value per line.
    #[arg(long)]
    psi0: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Stop once the H^1 norm of psi exceeds this (default: 0.1 (sqrt 3)^N |psi0| if above twice the initial H^1 norm, else never).
    #[arg(long)]
    blowup_threshold: Option<f64>,
    /// Integrate the full Galerkin system and reduce to psi at each step.
    #[arg(long)]
    galerkin: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DiagnoseArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    traj: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Dissipation exponent alpha; 0 with nu = 0 means Euler.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Ladder ratio r in (1/3, sqrt2/(sqrt2 + 3/2)).
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    /// Relative tolerance for the Lyapunov inequalities.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// Field JSON: lattice entries or general modes (as written by `sheet`).
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SheetArgs {
    /// Mollification width in (0, 1).
    #[arg(long)]
    epsilon: f64,
    /// Modes per axis (default: ceil(400/epsilon)).
    #[arg(long)]
    truncation: Option<usize>,
    /// Quadrature nodes on [0, 1/4] for the bump transform.
    #[arg(long, default_value_t = 20_000)]
    bump_nodes: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Verification(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(usage)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn lattice_verify(a: &LatticeArgs, manifest: &mut Manifest) -> CliResult {
    if a.pair_shell > a.max_shell {
        return Err(CliError::Usage("--pair-shell must not exceed --max-shell".into()));
    }
    let rep = match verify_lattice_identities(a.max_shell, a.pair_shell) {
        Ok(r) => r,
        Err(e @ LatticeError::TruncationTooDeep { .. }) => return Err(usage(e)),
        Err(e) => return Err(CliError::Verification(e.to_string())),
    };
    emit_json(&rep, a.out.as_deref())?;
    manifest.output(a.out.as_deref());
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Verification("lattice identities failed".into()))
    }
}

fn interactions_verify(a: &InteractionArgs, manifest: &mut Manifest) -> CliResult {
    if a.max_m > MAX_SHELL / 2 - 1 {
        return Err(CliError::Usage(format!("--max-m must be at most {}", MAX_SHELL / 2 - 1)));
    }
    let rep = verify_appendix_interactions(a.max_m, a.tol).map_err(|e| CliError::Verification(e.to_string()))?;
    emit_json(&rep, a.out.as_deref())?;
    manifest.output(a.out.as_deref());
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Verification("interaction catalogue mismatch".into()))
    }
}

fn read_psi0(src: &str, n: usize) -> Result<Vec<f64>, CliError> {
    if let Some(p) = preset(src, n) {
        return Ok(p);
    }
    let path = Path::new(src);
    if !path.exists() {
        return Err(CliError::Usage(format!("--psi0 {src:?} is neither a preset nor a file")));
    }
    let text = fs::read_to_string(path)?;
    let mut vals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches(',');
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => vals.push(v),
            Err(_) if i == 0 => {} // header
            Err(_) => return Err(CliError::Usage(format!("{src}:{}: not a number: {line}", i + 1))),
        }
    }
    if vals.len() > n + 1 {
        return Err(CliError::Usage(format!("{src} has {} values, truncation allows {}", vals.len(), n + 1)));
    }
    vals.resize(n + 1, 0.0);
    Ok(vals)
}

fn model_from(kind: ModelKind, alpha: f64, nu: f64) -> Result<Model, CliError> {
    match kind {
        ModelKind::Euler => Ok(Model::Euler),
        ModelKind::Hypo => {
            if !(nu > 0.0) || !(alpha >= 0.0) {
                return Err(CliError::Usage("hypo needs --nu > 0 and --alpha >= 0".into()));
            }
            Ok(Model::Hypo { alpha, nu })
        }
    }
}

fn simulate(a: &SimulateArgs, manifest: &mut Manifest) -> CliResult {
    let model = model_from(a.model, a.alpha, a.nu)?;
    if !(a.gamma > 0.0) {
        return Err(CliError::Usage("--gamma must be positive".into()));
    }
    if a.galerkin && a.shells > MAX_SHELL {
        return Err(CliError::Usage(format!("--galerkin supports at most {MAX_SHELL} shells")));
    }
    let psi0 = read_psi0(&a.psi0, a.shells)?;
    let l2 = psi0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut cfg = SimConfig::new(model, a.shells, a.t_end);
    cfg.rtol = a.rtol;
    cfg.atol = a.atol;
    cfg.max_steps = a.max_steps;
    // H^1 of a truncated run is capped by (sqrt 3)^N |psi0|; stop at a tenth of the cap when that is a real climb.
    let default_threshold = 0.1 * 3f64.sqrt().powi(a.shells as i32) * l2;
    cfg.blowup_threshold = a.blowup_threshold.unwrap_or(if default_threshold > 2.0 * h1_norm(&psi0) {
        default_threshold
    } else {
        f64::INFINITY
    });
    let (ts, psis, termination) = if a.galerkin {
        let table = Arc::new(ShellTable::new(a.shells).map_err(usage)?);
        let u0 = SpectralField::from_psi(table, &psi0).map_err(usage)?;
        // The Galerkin stop test uses the critical Sobolev norm, about 23 times the H^1 norm of psi.
        let mut gcfg = cfg.clone();
        gcfg.blowup_threshold *= 23.0;
        let (sys, tr) = integrate_galerkin(&u0, &gcfg).map_err(CliError::Usage)?;
        let psis = galerkin_psi(&sys, &tr, 1e-8).map_err(|e| CliError::Verification(e.to_string()))?;
        (tr.ts, psis, tr.termination)
    } else {
        let (_, tr) = integrate_dyadic(&psi0, &cfg).map_err(CliError::Usage)?;
        (tr.ts, tr.ys, tr.termination)
    };
    let n = a.shells;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..=n).map(|i| format!("psi_{i}")));
    header.extend(["E_0", "H1", "H_gamma", "lambda_origin", "sup_weighted"].map(String::from));
    let mut rows = Vec::with_capacity(ts.len());
    for (t, y) in ts.iter().zip(&psis) {
        let mut row = vec![*t];
        row.extend_from_slice(y);
        row.push(DyadicSystem::shell_energy(y, 0));
        row.push(h1_norm(y));
        row.push(lyapunov(y, a.gamma).map_err(usage)?.0);
        row.push(origin_strain_lambda(y));
        row.push(sup_weighted(y));
        rows.push(row);
    }
    write_csv(&a.out, &header, &rows)?;
    manifest.output(Some(&a.out));
    manifest.note("termination", json!(termination.name()));
    manifest.note("steps", json!(ts.len() - 1));
    eprintln!("{} steps, t_last = {:.17e}, termination: {}", ts.len() - 1, ts.last().unwrap(), termination.name());
    Ok(())
}

/// Reads a `simulate` CSV back into a trajectory with derivatives from the model.
fn read_trajectory(path: &Path, sys: &DyadicSystem) -> Result<Trajectory, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(usage)?;
    let header = rdr.headers().map_err(usage)?.clone();
    let t_col = header.iter().position(|h| h == "t").ok_or_else(|| usage("trajectory has no t column"))?;
    let psi_cols: Vec<usize> = (0..).map_while(|i| header.iter().position(|h| h == format!("psi_{i}"))).collect();
    if psi_cols.is_empty() {
        return Err(usage("trajectory has no psi_0 column"));
    }
    if psi_cols.len() != sys.dim() {
        return Err(usage(format!("trajectory has {} shells, expected {}", psi_cols.len(), sys.dim())));
    }
    let (mut ts, mut ys, mut fs) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(usage)?;
        let parse = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| usage(format!("bad number {:?}: {e}", &rec[i])));
        ts.push(parse(t_col)?);
        let y: Vec<f64> = psi_cols.iter().map(|&c| parse(c)).collect::<Result<_, _>>()?;
        fs.push(sys.rhs_vec(&y));
        ys.push(y);
    }
    if ts.len() < 2 {
        return Err(usage("trajectory needs at least two samples"));
    }
    Ok(Trajectory { ts, ys, fs, termination: frlab::evolve::Termination::ReachedTEnd, rejected_steps: 0 })
}

fn count_shells(path: &Path) -> Result<usize, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(usage)?;
    let header = rdr.headers().map_err(usage)?;
    Ok(header.iter().filter(|h| h.starts_with("psi_")).count())
}

fn diagnose(a: &DiagnoseArgs, manifest: &mut Manifest) -> CliResult {
    let shells = count_shells(&a.traj)?;
    if shells == 0 {
        return Err(usage("trajectory has no psi columns"));
    }
    let model = if a.nu > 0.0 { model_from(ModelKind::Hypo, a.alpha, a.nu)? } else { Model::Euler };
    let sys = DyadicSystem::new(model, shells - 1);
    let tr = read_trajectory(&a.traj, &sys)?;
    let psi0 = &tr.ys[0];
    let e0 = DyadicSystem::shell_energy(psi0, 0);
    let positive = tr.ys.iter().flatten().all(|x| *x >= -1e-10);
    let mut failures: Vec<String> = Vec::new();
    let mut report = serde_json::Map::new();
    report.insert("samples".into(), json!(tr.len()));
    report.insert("saturation_time".into(), json!(saturation_time(&tr)));

    if model == Model::Euler {
        let bound = euler_blowup_bound(e0).map_err(usage)?;
        report.insert("blowup_bound".into(), json!(bound));
        if positive {
            let ladder = energy_ladder(&tr, a.r, 1e-10).map_err(usage)?;
            if !ladder.all_reliable_hold {
                failures.push("energy ladder: some t_n > T_n".into());
            }
            report.insert("ladder".into(), json!(ladder));
        } else {
            report.insert("ladder".into(), json!("skipped: data not coefficient-positive"));
        }
        let sat = saturation_time(&tr).unwrap_or(f64::INFINITY);
        let mut worst: f64 = f64::NEG_INFINITY;
        for ((t, y), f) in tr.ts.iter().zip(&tr.ys).zip(&tr.fs) {
            if *t > sat {
                break;
            }
            let r = regularity_functionals(y, Some(f));
            let scale = 4.0 * 2f64.sqrt() * std::f64::consts::PI * r.sup_weighted * r.h1_norm * r.h1_norm;
            worst = worst.max(r.gronwall_residual.unwrap() / scale.max(f64::MIN_POSITIVE));
        }
        if positive && worst > 1e-10 {
            failures.push(format!("Gronwall inequality violated (relative residual {worst:e})"));
        }
        report.insert("max_relative_gronwall_residual".into(), json!(worst));
        report.insert("blowup_fit".into(), json!(fit_blowup_rate(&tr, Some(bound.t_star))));
    } else {
        let at = s_tilde(a.alpha);
        match hypo_lyapunov_criterion(psi0, a.gamma, at, a.nu) {
            Ok(c) => {
                if c.qualifies {
                    let sat = saturation_time(&tr).unwrap_or(tr.t_last());
                    let chk = check_lyapunov_trajectory(&sys, &tr, a.gamma, c.kappa, sat, a.tol).map_err(usage)?;
                    if !(chk.lower_bound_holds && chk.differential_holds) {
                        failures.push("Lyapunov inequality violated".into());
                    }
                    report.insert("lyapunov_check".into(), json!(chk));
                }
                report.insert("lyapunov_criterion".into(), json!(c));
            }
            Err(e) => {
                report.insert("lyapunov_criterion".into(), json!(format!("not applicable: {e}")));
            }
        }
        report.insert("blowup_fit".into(), json!(fit_blowup_rate(&tr, None)));
    }
    let last = tr.ys.last().unwrap();
    report.insert("final_functionals".into(), json!(regularity_functionals(last, None)));
    report.insert("failures".into(), json!(failures));
    emit_json(&report, a.out.as_deref())?;
    manifest.output(a.out.as_deref());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn load_field(path: &Path) -> Result<GeneralSpectralField, CliError> {
    let text = fs::read_to_string(path)?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(usage)?;
    // `sheet` reports carry the field under "field".
    if let Some(inner) = value.get_mut("field").map(serde_json::Value::take) {
        value = inner;
    }
    if value.get("modes").is_some() {
        let file: GeneralFieldFile = serde_json::from_value(value).map_err(usage)?;
        return GeneralSpectralField::from_file(&file).map_err(usage);
    }
    let file: FieldFile = serde_json::from_value(value).map_err(usage)?;
    let table = Arc::new(ShellTable::new(file.truncation).map_err(usage)?);
    let f = SpectralField::from_entries(table, &file).map_err(usage)?;
    Ok(GeneralSpectralField::from_spectral(&f))
}

fn grid(a: &GridArgs, manifest: &mut Manifest) -> CliResult {
    if a.resolution.checked_pow(3).map_or(true, |n| n > 1 << 27) {
        return Err(CliError::Usage("--resolution too large (at most 512)".into()));
    }
    let field = load_field(&a.field)?;
    let g =synthesize(&field, a.resolution).map_err(usage)?;
    let header: Vec<String> = ["x", "y", "z", "u1", "u2", "u3", "omega1", "omega2", "omega3", "lambda1", "lambda2", "lambda3", "detS"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<f64>> = g
        .samples
        .iter()
        .map(|s| {
            let mut r = s.x.to_vec();
            r.extend_from_slice(&s.u);
            r.extend_from_slice(&s.vorticity);
            r.extend_from_slice(&s.eigenvalues());
            r.push(s.det_strain());
            r
        })
        .collect();
    write_csv(&a.out, &header, &rows)?;
    manifest.output(Some(&a.out));
    manifest.note("lambda2_plus_sup", json!(g.lambda2_plus_sup()));
    Ok(())
}

#[derive(Serialize)]
struct SheetReport {
    epsilon: f64,
    truncation: usize,
    g0: f64,
    origin_minus_4det: f64,
    origin_target: f64,
    offset_minus_4det: f64,
    offset_target: f64,
    helicity: f64,
    sigma_mirror_deviation: f64,
    passed: bool,
    field: GeneralFieldFile,
}

fn sheet(a: &SheetArgs, manifest: &mut Manifest) -> CliResult {
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return Err(CliError::Usage("--epsilon must lie in (0, 1)".into()));
    }
    if a.bump_nodes < 16 {
        return Err(CliError::Usage("--bump-nodes must be at least 16".into()));
    }
    let g = Bump::new(a.bump_nodes);
    let m = a.truncation.unwrap_or_else(|| default_sheet_truncation(a.epsilon));
    let s = vortex_sheet(a.epsilon, &g, m).map_err(usage)?;
    let d0 = -4.0 * s.field.evaluate([0.0; 3]).det_strain();
    let d1 = -4.0 * s.field.evaluate([0.0, 1.0 / 3.0, 1.0 / 3.0]).det_strain();
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
    let helicity = s.field.helicity();
    let passed = rel(d0, s.origin_target()) < a.tol && rel(d1, s.offset_target()) < a.tol && helicity.abs() < 1e-12;
    let rep = SheetReport {
        epsilon: a.epsilon,
        truncation: m,
        g0: s.g0,
        origin_minus_4det: d0,
        origin_target: s.origin_target(),
        offset_minus_4det: d1,
        offset_target: s.offset_target(),
        helicity,
        sigma_mirror_deviation: s.field.sigma_mirror_deviation(),
        passed,
        field: s.field.to_file(),
    };
    match &a.out {
        Some(p) => emit_json(&rep, Some(p))?,
        None => {
            let mut v = serde_json::to_value(&rep).map_err(usage)?;
            v.as_object_mut().unwrap().remove("field");
            emit_json(&v, None)?;
        }
    }
    manifest.output(a.out.as_deref());
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("vortex sheet identities outside tolerance".into()))
    }
}

fn run(cli: &Cli, manifest: &mut Manifest) -> CliResult {
    match &cli.command {
        Command::Lattice { action: LatticeAction::Verify(a) } => lattice_verify(a, manifest),
        Command::Interactions { action: InteractionAction::Verify(a) } => interactions_verify(a, manifest),
        Command::Simulate(a) => simulate(a, manifest),
        Command::Diagnose(a) => diagnose(a, manifest),
        Command::Grid(a) => grid(a, manifest),
        Command::Sheet(a) => sheet(a, manifest),
    }
}

fn command_config(cli: &Cli) -> (&'static str, serde_json::Value) {
    let v = |x: serde_json::Result<serde_json::Value>| x.unwrap_or(serde_json::Value::Null);
    match &cli.command {
        Command::Lattice { action: LatticeAction::Verify(a) } => ("lattice verify", v(serde_json::to_value(a))),
        Command::Interactions { action: InteractionAction::Verify(a) } => ("interactions verify", v(serde_json::to_value(a))),
        Command::Simulate(a) => ("simulate", v(serde_json::to_value(a))),
        Command::Diagnose(a) => ("diagnose", v(serde_json::to_value(a))),
        Command::Grid(a) => ("grid", v(serde_json::to_value(a))),
        Command::Sheet(a) => ("sheet", v(serde_json::to_value(a))),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 || rayon::ThreadPoolBuilder::new().num_threads(j).build_global().is_err() {
            eprintln!("error: --jobs must be a positive thread count");
            return ExitCode::from(2);
        }
    }
    let (name, cfg) = command_config(&cli);
    let mut manifest = Manifest::new(name, cfg, cli.jobs);
    let result = run(&cli, &mut manifest);
    manifest.finish(result.is_ok());
    if let Err(e) = manifest.write() {
        eprintln!("warning: could not write manifest: {e}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

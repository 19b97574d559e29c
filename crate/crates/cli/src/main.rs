use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use spikelab::acceptance::{self, Context, Outcome};
use spikelab::ground_state::{integrals, solve_ground_state, GroundStateConstants, RadialProfile};
use spikelab::nlep::{local_spectrum, nlep_spectrum, nlep_tau_scan, tau_crossing, RadialOperator};
use spikelab::pde_sim::{run, write_snapshot, SimConfig};
use spikelab::reduced_problem::{
    asymptotic_radius, asymptotic_radius_centre, equilibrium_radius, equilibrium_radius_centre, ModelParams,
    ReducedConstants,
};
use spikelab::stability::{classify, classify_centre, hessian_oracle};

const VERSION_TAG: &str = "spikelab/1";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] spikelab::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0} acceptance criteria failed")]
    Criteria(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use spikelab::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Config(_) | E::DomainError { .. } | E::RegimeError(_) | E::InvalidK(_) | E::Io(_)) => 2,
            CliError::Core(_) | CliError::Criteria(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Spike clusters in the precursor Gierer-Meinhardt system.
#[derive(Debug, Parser)]
#[command(name = "spikelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radial ground state and its integral constants.
    Groundstate(GroundstateArgs),
    /// Equilibrium radius of a symmetric cluster.
    Equilibrium(EquilibriumArgs),
    /// Small-eigenvalue verdict for a cluster.
    Stability(StabilityArgs),
    /// Large-eigenvalue spectrum of one angular mode.
    Nlep(NlepArgs),
    /// Time-step the full system from a key = value config file.
    Simulate(SimulateArgs),
    /// Run the acceptance ladder and print a pass/fail table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct GroundstateArgs {
    #[arg(long, default_value_t = 20.0)]
    r_max: f64,
    #[arg(long, default_value_t = 4000)]
    points: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the profile as `profile.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long = "D", default_value_t = 1e-4)]
    d: f64,
    #[arg(long, default_value_t = 2.0)]
    mu2: f64,
    #[arg(long)]
    with_centre: bool,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.epsilon, self.d, 0.0, 1.0, self.mu2)?)
    }
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Cross-check with the finite-difference Hessian of the reduced energy.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
struct NlepArgs {
    #[arg(long, default_value_t = 0)]
    mode: usize,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Comma-separated τ values to scan with the multiplier 2/(1 + τλ).
    #[arg(long, value_delimiter = ',')]
    tau_scan: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    cells: usize,
    #[arg(long, default_value_t = 20.0)]
    r_max: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn profile() -> Result<RadialProfile> {
    Ok(solve_ground_state(20.0, 4000, 1e-8)?)
}

fn ground_constants() -> Result<GroundStateConstants> {
    Ok(integrals(&profile()?))
}

fn emit(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn tagged<T: Serialize>(body: &T) -> Result<Value> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(map) = &mut v {
        map.insert("version".into(), VERSION_TAG.into());
    }
    Ok(v)
}

fn groundstate(args: GroundstateArgs) -> Result<()> {
    let p = solve_ground_state(args.r_max, args.points, args.tol)?;
    let c = integrals(&p);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        p.write_csv(fs::File::create(dir.join("profile.csv"))?)?;
    }
    emit(&json!({
        "version": VERSION_TAG,
        "r_max": p.r_max(),
        "points": p.len(),
        "w0": c.w0,
        "int_w2": c.int_w2,
        "int_w3": c.int_w3,
        "c1": c.c1,
        "c2": c.c2,
    }))
}

fn equilibrium(args: EquilibriumArgs) -> Result<()> {
    let m = &args.model;
    let params = m.params()?;
    let rc = ReducedConstants::new(m.k, &params, &ground_constants()?)?;
    let (sol, asym) = if m.with_centre {
        (equilibrium_radius_centre(m.k, &params, &rc)?, asymptotic_radius_centre(&params, &rc))
    } else {
        (equilibrium_radius(m.k, &params, &rc)?, asymptotic_radius(m.k, &params, &rc))
    };
    emit(&json!({
        "version": VERSION_TAG,
        "k": m.k,
        "with_centre": m.with_centre,
        "R_numeric": sol.radius,
        "R_asymptotic": asym.ok(),
        "residual": sol.residual,
        "nondegeneracy": sol.nondegeneracy,
        "sigma": params.sigma(),
        "xi": rc.xi,
        "warnings": params.regime_warnings(),
    }))
}

fn stability(args: StabilityArgs) -> Result<()> {
    let m = &args.model;
    let params = m.params()?;
    let report = if m.with_centre { classify_centre(m.k)? } else { classify(m.k)? };
    let oracle = if args.oracle {
        let rc = ReducedConstants::new(m.k, &params, &ground_constants()?)?;
        Some(hessian_oracle(m.k, m.with_centre, &params, &rc)?)
    } else {
        None
    };
    emit(&json!({
        "version": VERSION_TAG,
        "k": report.k,
        "with_centre": report.with_centre,
        "mu": report.mu_values,
        "verdict": report.verdict.to_string(),
        "witness": report.witness,
        "kernel_modes": report.kernel_modes,
        "warnings": report.warnings,
        "oracle_signs": oracle.as_ref().map(|o| o.signs.clone()),
        "oracle": oracle,
    }))
}

fn nlep(args: NlepArgs) -> Result<()> {
    let p = profile()?;
    let op = RadialOperator::new(&p, args.mode, args.gamma, args.cells, args.r_max)?;
    let spectrum = nlep_spectrum(&op, &p)?;
    let local = local_spectrum(&op, &p)?;
    let (scan, crossing) = if args.tau_scan.is_empty() {
        (None, None)
    } else {
        let scan = nlep_tau_scan(&p, &op, &args.tau_scan, Complex64::new(-1.0, 0.0))?;
        let crossing = tau_crossing(&scan);
        (Some(scan), crossing)
    };
    emit(&json!({
        "version": VERSION_TAG,
        "spectrum": spectrum,
        "local": local,
        "tau_scan": scan,
        "tau_crossing": crossing,
    }))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let config = SimConfig::parse(&text)?;
    fs::create_dir_all(args.out.join("snapshots"))?;
    let p = profile()?;
    let out = run(&config, &p, true)?;
    for (i, state) in out.snapshots.iter().enumerate() {
        write_snapshot(&args.out.join("snapshots").join(format!("frame_{i:04}.bin")), state)?;
    }
    write_snapshot(&args.out.join("final.bin"), &out.final_state)?;
    out.track.write_csv(fs::File::create(args.out.join("track.csv"))?)?;
    let last = out.track.frames.last();
    let summary = json!({
        "version": VERSION_TAG,
        "config": config,
        "steps": out.steps,
        "frames": out.track.frames.len(),
        "final_time": out.final_state.t,
        "final_spikes": last.map_or(0, |f| f.spikes.len()),
        "final_asymmetry": last.map_or(0.0, |f| f.asymmetry),
        "counts": out.track.counts(),
    });
    fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    emit(&summary)
}

fn reproduce(args: ReproduceArgs) -> Result<()> {
    let ids: Vec<u8> = if args.criteria.is_empty() { (1..=10).collect() } else { args.criteria };
    if let Some(bad) = ids.iter().find(|&&id| !(1..=10).contains(&id)) {
        return Err(CliError::Usage(format!("no criterion {bad}; ids run from 1 to 10")));
    }
    let ctx = Context::new()?;
    let report = acceptance::AcceptanceReport {
        format: acceptance::FORMAT_TAG.into(),
        criteria: ids.iter().map(|&id| acceptance::run_criterion(id, &ctx)).collect(),
    };
    let mut err = std::io::stderr().lock();
    for c in &report.criteria {
        let mark = match c.outcome {
            Outcome::Pass => "PASS",
            Outcome::Inconclusive => "PASS (inconclusive)",
            Outcome::Fail => "FAIL",
        };
        writeln!(err, "{:>2}  {:<26} {mark}", c.id, c.name)?;
    }
    let value = tagged(&report)?;
    match &args.out {
        Some(path) => write_json(path, &value)?,
        None => emit(&value)?,
    }
    let failed = report.criteria.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Criteria(failed));
    }
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SPIKELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SPIKELAB_THREADS = {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Groundstate(a) => groundstate(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Stability(a) => stability(a),
        Command::Nlep(a) => nlep(a),
        Command::Simulate(a) => simulate(a),
        Command::Reproduce(a) => reproduce(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

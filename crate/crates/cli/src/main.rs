//! `refchoice`: experiment design, simulation, CML estimation and WTP reporting.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 estimation did not
//! converge (the fit is still written).

mod manifest;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use manifest::{FileDigest, RunManifest};
use refchoice_core::cml::PairingPolicy;
use refchoice_core::datamodel::{load_dataset, write_dataset, write_tasks};
use refchoice_core::design::{design_tasks, generate_bank, write_bank, DesignSpec};
use refchoice_core::estimator::{maximize_cml, staged_start, FitOptions, FitResult};
use refchoice_core::modelspec::preset_params;
use refchoice_core::simulate::{simulate_dataset, SimConfig};
use refchoice_core::wtp::{discount_rate, wtp_curve, write_curve_csv, Profile, Wtp, WtpAttribute, WtpGrid};
use refchoice_core::{Model, ModelSpec, ParameterVector};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "refchoice", version, about = "Hybrid choice model with reference-dependent utility")]
struct Cli {
    /// Random seed for design and simulation.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "REFCHOICE_THREADS")]
    threads: Option<usize>,
    /// Directory for relative output paths and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a balanced scenario bank and per-respondent task sheets.
    Design(DesignArgs),
    /// Simulate respondents, indicators and choices from a model.
    Simulate(SimulateArgs),
    /// Maximize the composite likelihood and report sandwich errors.
    Estimate(EstimateArgs),
    /// Evaluate a willingness-to-pay curve.
    Wtp(WtpArgs),
    /// Convert a fuel-saving WTP into an annual discount rate.
    DiscountRate(DiscountArgs),
    /// Recheck the digests recorded in a manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct DesignArgs {
    /// Design spec JSON (defaults to the built-in attribute levels).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n_respondents: usize,
    /// Reported ICEV prices are uniform on [price-low, price-high] lacs.
    #[arg(long, default_value_t = 5.0)]
    price_low: f64,
    #[arg(long, default_value_t = 20.0)]
    price_high: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the scenario bank.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Model spec JSON, or a preset name (model1, model2, model3).
    #[arg(long)]
    spec: String,
    /// True parameters; defaults to the preset's values.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    /// Simulation settings JSON (demographics, weekly km, design).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_respondents: PathBuf,
    #[arg(long)]
    out_tasks: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    /// Model spec JSON, or a preset name.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    respondents: PathBuf,
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Start values; defaults to the data-driven neutral start, first fitted
    /// with any free curvatures held at one.
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long, default_value_t = PairingPolicy::Standard)]
    pairing: PairingPolicy,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    /// Skip the sandwich covariance.
    #[arg(long)]
    no_covariance: bool,
}

#[derive(Debug, Args, Serialize)]
struct WtpArgs {
    /// fit.json from `estimate`, or a parameter-vector JSON.
    #[arg(long)]
    fit: PathBuf,
    /// Model spec JSON, or a preset name.
    #[arg(long)]
    spec: String,
    /// fastcharge, range, fuel or price.
    #[arg(long)]
    attribute: WtpAttribute,
    /// Profile JSON, or demographics_1, demographics_2, none.
    #[arg(long, default_value = "none")]
    profile: String,
    /// Grid JSON; defaults to a plot grid for the attribute.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct DiscountArgs {
    /// WTP for the weekly saving, INR.
    #[arg(long)]
    wtp: f64,
    /// Weekly saving, INR.
    #[arg(long)]
    weekly_saving: f64,
    #[arg(long, default_value_t = 15)]
    years: u32,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Invalid(anyhow::Error),
    NotConverged,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

struct Run {
    seed: u64,
    threads: usize,
    out_dir: PathBuf,
    clock: Instant,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    fn input(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest::of(path)?);
        Ok(text)
    }

    fn output_path(&self, path: &Path) -> Result<PathBuf> {
        let p = if path.is_absolute() { path.to_path_buf() } else { self.out_dir.join(path) };
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(p)
    }

    fn record(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    fn finish(self, subcommand: &str, options: &impl Serialize) -> Result<()> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            options: serde_json::to_value(options)?,
            seed: self.seed,
            threads: self.threads,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_s: self.clock.elapsed().as_secs_f64(),
        };
        manifest.write(&self.out_dir.join("manifest.json"))
    }

    /// A preset name or a spec file.
    fn model(&mut self, spec: &str) -> Result<Model> {
        let path = Path::new(spec);
        let spec = if path.exists() {
            ModelSpec::from_json(&self.input(path)?)?
        } else {
            ModelSpec::preset(spec).with_context(|| format!("`{spec}` is neither a file nor a preset"))?
        };
        Ok(Model::compile(spec)?)
    }

    fn params(&mut self, path: &Path) -> Result<ParameterVector> {
        let text = self.input(path)?;
        if let Ok(fit) = serde_json::from_str::<FitResult>(&text) {
            return Ok(fit.params);
        }
        ParameterVector::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn design(run: &mut Run, args: &DesignArgs) -> Result<()> {
    let spec: DesignSpec = match &args.spec {
        Some(p) => serde_json::from_str(&run.input(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => DesignSpec::default(),
    };
    let sheets = design_tasks(&spec, args.n_respondents, args.price_low, args.price_high, run.seed)?;
    let out = run.output_path(&args.out)?;
    write_tasks(sheets.iter().flat_map(|(id, _, tasks)| tasks.iter().map(move |t| (*id, t))), &out)?;
    run.record(&out)?;
    if let Some(bank) = &args.bank {
        let path = run.output_path(bank)?;
        write_bank(&generate_bank(&spec, run.seed)?, &path)?;
        run.record(&path)?;
    }
    log::info!("wrote {} task sheets to {}", sheets.len(), out.display());
    Ok(())
}

fn ensure_distinct(a: &Path, b: &Path) -> Result<()> {
    if a == b {
        bail!("{} given twice", a.display());
    }
    Ok(())
}

fn simulate(run: &mut Run, args: &SimulateArgs) -> Result<()> {
    ensure_distinct(&args.out_respondents, &args.out_tasks)?;
    let model = run.model(&args.spec)?;
    let truth = match &args.params {
        Some(p) => run.params(p)?,
        None => preset_params(model.name()).context("no --params given and the spec is not a preset")?,
    };
    let mut cfg: SimConfig = match &args.config {
        Some(p) => serde_json::from_str(&run.input(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SimConfig::default(),
    };
    cfg.n_respondents = args.n;
    cfg.seed = run.seed;
    let data = simulate_dataset(&model, &truth, &cfg)?;
    let resp = run.output_path(&args.out_respondents)?;
    let tasks = run.output_path(&args.out_tasks)?;
    write_dataset(&data, &resp, &tasks)?;
    run.record(&resp)?;
    run.record(&tasks)?;
    log::info!("simulated {} respondents, {} tasks", data.len(), data.n_tasks());
    Ok(())
}

fn estimate(run: &mut Run, args: &EstimateArgs) -> Result<bool> {
    let model = run.model(&args.spec)?;
    let data = load_dataset(&args.respondents, &args.tasks)?;
    run.inputs.push(FileDigest::of(&args.respondents)?);
    run.inputs.push(FileDigest::of(&args.tasks)?);
    let options = FitOptions {
        max_iterations: args.max_iterations,
        covariance: !args.no_covariance,
        ..FitOptions::default()
    };
    let start = match &args.start {
        Some(p) => run.params(p)?,
        None => staged_start(&model, &data, args.pairing, &options)?,
    };
    log::info!("fitting {} to {} respondents", model.name(), data.len());
    let fit = maximize_cml(&model, &data, &start, args.pairing, &options)?;
    let out = run.output_path(&args.out)?;
    fs::write(&out, serde_json::to_string_pretty(&fit)? + "\n").with_context(|| format!("writing {}", out.display()))?;
    run.record(&out)?;
    log::info!(
        "objective {:.6}, {} iterations, converged: {}",
        fit.objective,
        fit.iterations,
        fit.converged
    );
    Ok(fit.converged)
}

fn profile(run: &mut Run, arg: &str) -> Result<Profile> {
    match arg {
        "none" => Ok(Profile::none()),
        "demographics_1" => Ok(Profile::demographics_1()),
        "demographics_2" => Ok(Profile::demographics_2()),
        path => {
            let text = run.input(Path::new(path))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {path}"))
        }
    }
}

fn wtp(run: &mut Run, args: &WtpArgs) -> Result<()> {
    let model = run.model(&args.spec)?;
    let params = run.params(&args.fit)?;
    let profile = profile(run, &args.profile)?;
    let grid: WtpGrid = match &args.grid {
        Some(p) => serde_json::from_str(&run.input(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => WtpGrid::for_attribute(args.attribute),
    };
    let calc = Wtp::new(&model, &params)?;
    let rows = wtp_curve(&calc, args.attribute, &grid, &profile)?;
    let out = run.output_path(&args.out)?;
    write_curve_csv(&rows, fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?)?;
    run.record(&out)?;
    log::info!("wrote {} WTP rows to {}", rows.len(), out.display());
    Ok(())
}

fn discount(args: &DiscountArgs) -> Result<()> {
    let r = discount_rate(args.wtp, args.weekly_saving, args.years)?;
    println!("{:.1}%", r * 100.0);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let threads = cli.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut run = Run {
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        out_dir: cli.out_dir,
        clock: Instant::now(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    match &cli.command {
        Command::Design(a) => {
            design(&mut run, a)?;
            run.finish("design", a)?;
        }
        Command::Simulate(a) => {
            simulate(&mut run, a)?;
            run.finish("simulate", a)?;
        }
        Command::Estimate(a) => {
            let converged = estimate(&mut run, a)?;
            run.finish("estimate", a)?;
            if !converged {
                return Err(Failure::NotConverged);
            }
        }
        Command::Wtp(a) => {
            wtp(&mut run, a)?;
            run.finish("wtp", a)?;
        }
        Command::DiscountRate(a) => {
            discount(a)?;
            run.finish("discount-rate", a)?;
        }
        Command::Verify(a) => {
            let m = RunManifest::read(&a.manifest)?;
            m.verify()?;
            eprintln!("{}: {} files match", a.manifest.display(), m.inputs.len() + m.outputs.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: estimation did not converge; the fit was written but should not be trusted");
            ExitCode::from(2)
        }
    }
}


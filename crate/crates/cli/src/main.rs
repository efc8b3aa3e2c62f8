//! `detcurve`: curvature constants, determinant functionals and scenario
//! verification from the command line.
//!
//! Exit status is 0 when every check that is not tagged as an expected
//! failure passes, 1 when some check fails and 2 on usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use detcurve::curvature::{estimate_curvature_constant, min_content_at_mass, FamilyMode, FamilySpec};
use detcurve::functionals::{evaluate_t, evaluate_t_tilde, indicator, monte_carlo_t, EvalOptions, FunctionalResult};
use detcurve::lab::{self, ReportFormat, ScenarioConfig, ScenarioReport};
use detcurve::measure::io;
use detcurve::{Ellipsoid, Error, WeightedPointMeasure};

#[derive(Parser)]
#[command(name = "detcurve", version, about = "Determinant functionals and ellipsoid curvature on point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ScaleFlooredSearch,
    DoublingDyadic,
}

#[derive(clap::Args)]
struct FamilyArgs {
    /// Ellipsoid family construction.
    #[arg(long, value_enum, default_value = "scale-floored-search")]
    family: Mode,
    /// Seeded random frames added to the coordinate and PCA frames.
    #[arg(long, default_value_t = 64)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    pca_frames: usize,
    /// Minimal semi-length; defaults to the median nearest-neighbour distance.
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    j_min: Option<i32>,
    #[arg(long)]
    j_max: Option<i32>,
    /// Local-search steps after the grid pass.
    #[arg(long, default_value_t = 20)]
    refine: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FamilyArgs {
    fn spec(&self) -> FamilySpec {
        FamilySpec {
            mode: match self.family {
                Mode::ScaleFlooredSearch => FamilyMode::ScaleFlooredSearch,
                Mode::DoublingDyadic => FamilyMode::DoublingDyadic,
            },
            random_frames: self.frames,
            pca_frames: self.pca_frames,
            seed: self.seed,
            floor: self.floor,
            j_min: self.j_min,
            j_max: self.j_max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Curvature constant of a point cloud with its witness ellipsoid.
    Analyze {
        /// CSV (x1..xd[,weight], header required) or JSON records.
        cloud: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        family: FamilyArgs,
        /// Also report the least k-content found at this mass.
        #[arg(long)]
        min_content: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the determinant functional on indicator functions.
    Functional {
        cloud: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gamma: f64,
        /// JSON array of atom-index lists, one per slot; omitted means f = 1.
        #[arg(long)]
        sets: Option<PathBuf>,
        /// Pin the last vertex at the origin (k slots instead of k + 1).
        #[arg(long)]
        pinned: bool,
        /// Estimate from this many sampled tuples instead of enumerating.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario file or a bundled scenario by name.
    Verify {
        scenario: String,
        /// Write the report here as well as printing the summary.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Record per-check wall-clock time in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Run scenarios (all bundled ones by default) and write one report.
    Report {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
        scenarios: Vec<String>,
    },
    /// List the bundled scenarios.
    List,
}

fn load_cloud(path: &Path) -> Result<WeightedPointMeasure, Error> {
    io::load(path)
}

fn ellipsoid_json(b: &Ellipsoid) -> serde_json::Value {
    let f = b.frame();
    let frame: Vec<Vec<f64>> = (0..f.nrows()).map(|r| (0..f.ncols()).map(|c| f[(r, c)]).collect()).collect();
    json!({ "center": b.center(), "frame": frame, "semi_lengths": b.semi_lengths() })
}

fn num(x: f64) -> serde_json::Value {
    match lab::float::to_text(x) {
        Some(t) => json!(t),
        None => json!(x),
    }
}

fn analyze(
    cloud: &Path,
    k: usize,
    alpha: f64,
    family: &FamilyArgs,
    min_content: Option<f64>,
    as_json: bool,
) -> Result<ExitCode, Error> {
    let mu = load_cloud(cloud)?;
    let fam = family.spec().build(&mu)?;
    let est = estimate_curvature_constant(&mu, k, alpha, &fam, family.refine)?;
    let content = min_content.map(|eps| min_content_at_mass(&mu, k, eps, &fam, family.refine)).transpose()?;
    if as_json {
        let mut out = json!({
            "k": k,
            "alpha": alpha,
            "constant": num(est.constant),
            "family_size": est.family_size,
            "floor": fam.floor(),
            "witness": ellipsoid_json(&est.witness),
        });
        if let (Some(c), Some(eps)) = (&content, min_content) {
            out["min_content"] = json!({ "eps": eps, "delta_hat": num(c.delta_hat), "mass": c.mass, "witness": ellipsoid_json(&c.witness) });
        }
        println!("{}", serde_json::to_string_pretty(&out).map_err(Error::from)?);
    } else {
        println!("atoms          {}", mu.len());
        println!("floor          {:.6e}", fam.floor());
        println!("family size    {}", est.family_size);
        println!("constant       {:.6e}  (k = {k}, alpha = {alpha})", est.constant);
        println!("witness axes   {:?}", est.witness.semi_lengths());
        if let Some(c) = content {
            println!("min content    {:.6e}  (mass {:.4})", c.delta_hat, c.mass);
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn functional(
    cloud: &Path,
    k: usize,
    gamma: f64,
    sets: Option<&Path>,
    pinned: bool,
    samples: Option<usize>,
    seed: u64,
    budget: u64,
    as_json: bool,
) -> Result<ExitCode, Error> {
    let mu = load_cloud(cloud)?;
    let slots = if pinned { k } else { k + 1 };
    let fs: Vec<Vec<f64>> = match sets {
        Some(p) => {
            let lists: Vec<Vec<usize>> = serde_json::from_reader(std::fs::File::open(p)?)?;
            if lists.len() != slots {
                return Err(Error::InvalidArgument(format!("expected {slots} index lists, got {}", lists.len())));
            }
            if let Some(bad) = lists.iter().flatten().find(|&&i| i >= mu.len()) {
                return Err(Error::InvalidArgument(format!("atom index {bad} out of range (N = {})", mu.len())));
            }
            lists.iter().map(|l| indicator(mu.len(), l)).collect()
        }
        None => vec![vec![1.0; mu.len()]; slots],
    };
    let refs: Vec<&[f64]> = fs.iter().map(Vec::as_slice).collect();
    let opts = EvalOptions { tau: None, budget };
    let r: FunctionalResult = match (samples, pinned) {
        (Some(_), true) => return Err(Error::InvalidArgument("sampling supports the unpinned functional only".into())),
        (Some(n), false) => monte_carlo_t(&mu, k, gamma, &refs, n, seed, &opts)?,
        (None, true) => evaluate_t_tilde(&mu, k, gamma, &refs, &opts)?,
        (None, false) => evaluate_t(&mu, k, gamma, &refs, &opts)?,
    };
    if as_json {
        let out = json!({
            "value": num(r.value),
            "tuples_total": r.tuples_total,
            "tuples_excluded": r.tuples_excluded,
            "excluded_mass": num(r.excluded_mass),
            "stderr": r.stderr.map(num),
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        match r.stderr {
            Some(se) => println!("value          {:.9e} +- {:.3e}", r.value, se),
            None => println!("value          {:.9e}", r.value),
        }
        println!("tuples         {} ({} excluded, excluded mass {:.3e})", r.tuples_total, r.tuples_excluded, r.excluded_mass);
    }
    Ok(ExitCode::SUCCESS)
}

fn scenario_config(arg: &str) -> Result<ScenarioConfig, Error> {
    if let Some(cfg) = lab::bundled(arg) {
        return Ok(cfg);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Error::InvalidConfig(format!(
            "{arg:?} is neither a file nor a bundled scenario ({})",
            lab::BUNDLED.join(", ")
        )));
    }
    ScenarioConfig::from_json(&std::fs::read_to_string(path)?)
}

fn print_report(r: &ScenarioReport) {
    println!("scenario {}", r.name);
    for c in &r.checks {
        let status = match (c.passed, c.expected_fail) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "XFAIL",
            (true, true) => "XPASS",
        };
        println!(
            "  {status:<5} {:<36} {:.6e} {} {:.6e}  margin {:.4}",
            c.name,
            c.lhs,
            c.direction.symbol(),
            c.slack * c.rhs,
            c.margin
        );
    }
    let s = &r.summary;
    println!(
        "  {} checks: {} passed, {} failed, {} expected failures, {} unexpected passes",
        s.checks, s.passed, s.failed, s.expected_failures, s.unexpected_passes
    );
}

fn exit_for(reports: &[ScenarioReport]) -> ExitCode {
    if reports.iter().all(|r| r.summary.ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn verify(scenario: &str, out: Option<&Path>, format: Format, timings: bool) -> Result<ExitCode, Error> {
    let mut cfg = scenario_config(scenario)?;
    cfg.timings |= timings;
    let report = lab::run_scenario(&cfg)?;
    print_report(&report);
    if let Some(path) = out {
        lab::emit_report(&report, format.into(), path)?;
    }
    Ok(exit_for(std::slice::from_ref(&report)))
}

fn report(format: Format, out: &Path, scenarios: &[String]) -> Result<ExitCode, Error> {
    let names: Vec<String> = if scenarios.is_empty() {
        lab::BUNDLED.iter().map(|s| s.to_string()).collect()
    } else {
        scenarios.to_vec()
    };
    let mut reports = Vec::with_capacity(names.len());
    for n in &names {
        let r = lab::run_scenario(&scenario_config(n)?)?;
        print_report(&r);
        reports.push(r);
    }
    lab::emit_reports(&reports, format.into(), out)?;
    Ok(exit_for(&reports))
}

/// `DETCURVE_THREADS` caps the worker pool.
fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("DETCURVE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("DETCURVE_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("DETCURVE_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { cloud, k, alpha, family, min_content, json } => analyze(&cloud, k, alpha, &family, min_content, json),
        Command::Functional { cloud, k, gamma, sets, pinned, samples, seed, budget, json } => {
            functional(&cloud, k, gamma, sets.as_deref(), pinned, samples, seed, budget, json)
        }
        Command::Verify { scenario, out, format, timings } => verify(&scenario, out.as_deref(), format, timings),
        Command::Report { format, out, scenarios } => report(format, &out, &scenarios),
        Command::List => {
            for n in lab::BUNDLED {
                println!("{n}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

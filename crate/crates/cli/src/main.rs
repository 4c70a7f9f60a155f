use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lpnls::acceptance::{run_all, AcceptanceOptions};
use lpnls::experiment::{run_evolve, run_globalize, run_propagate, run_split, OutputKind};
use lpnls::report::{read_json, render_summary, write_report_dir, write_timing, RunReport};
use lpnls::{Error, ExperimentConfig};

const OUT_ENV: &str = "LPNLS_OUT_DIR";

#[derive(Parser)]
#[command(name = "lpnls", version, about = "Split-data NLS experiments with L^p initial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in experiment name or path to a TOML config.
    #[arg(long, default_value = "default")]
    config: String,
    /// Output directory (default: $LPNLS_OUT_DIR, else ./lpnls-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data and ensembles.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiply grid points and divide dt by this factor.
    #[arg(long, default_value_t = 1.0)]
    resolution_scale: f64,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Linear-flow norms and the Strichartz ratio of the initial data.
    Propagate(Common),
    /// Decomposition sweep over N with fitted slopes.
    Split(Common),
    /// One NLS solve with persistence curves and the (v, w) split.
    Evolve(Common),
    /// The slab scheme for each N, audited against a direct solve.
    Globalize(Common),
    /// Run the acceptance suite (scale and seed apply; the suite fixes its own data).
    Verify(Common),
    /// Print a summary of a saved report.json (or a directory holding one).
    Report {
        path: PathBuf,
    },
}

/// Exit codes: 0 ok, 1 a check failed, 2 bad config or usage, 3 numerical abort.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BlowUp { .. } | Error::PicardNotConverged { .. } | Error::NonFinite(_)) => 3,
        _ => 2,
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lpnls-out"))
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::resolve(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if common.resolution_scale != 1.0 {
        cfg = cfg.with_resolution_scale(common.resolution_scale)?;
    }
    Ok(cfg)
}

fn save(report: &RunReport, dir: &Path, outputs: &[OutputKind], seconds: f64, quiet: bool) -> Result<()> {
    write_report_dir(
        report,
        dir,
        outputs.contains(&OutputKind::Csv),
        outputs.contains(&OutputKind::JsonReport),
    )?;
    write_timing(dir, &BTreeMap::from([("wall_seconds".to_string(), seconds)]))?;
    if !quiet {
        print!("{}", render_summary(report));
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn run_experiment(common: &Common, name: &str, f: fn(&ExperimentConfig) -> lpnls::Result<RunReport>) -> Result<u8> {
    let cfg = load(common)?;
    let start = Instant::now();
    let report = f(&cfg)?;
    let dir = out_dir(common).join(&cfg.name).join(name);
    save(&report, &dir, &cfg.outputs, start.elapsed().as_secs_f64(), common.quiet)?;
    Ok(0)
}

fn verify(common: &Common) -> Result<u8> {
    // Resolve the config so a typo is still a config error.
    load(common)?;
    let opts = AcceptanceOptions {
        scale: common.resolution_scale,
        seed: common.seed.unwrap_or(0),
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_all(&opts);
    let dir = out_dir(common).join("acceptance");
    let all = [OutputKind::Csv, OutputKind::JsonReport];
    save(&report, &dir, &all, start.elapsed().as_secs_f64(), common.quiet)?;
    if common.quiet {
        for c in report.checks.iter().filter(|c| !c.passed) {
            println!("{}", c.line());
        }
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn show(path: &Path) -> Result<u8> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let report = read_json(&file).with_context(|| format!("reading {}", file.display()))?;
    print!("{}", render_summary(&report));
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate(c) => run_experiment(c, "propagate", run_propagate),
        Command::Split(c) => run_experiment(c, "split", run_split),
        Command::Evolve(c) => run_experiment(c, "evolve", run_evolve),
        Command::Globalize(c) => run_experiment(c, "globalize", run_globalize),
        Command::Verify(c) => verify(c),
        Command::Report { path } => show(path),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

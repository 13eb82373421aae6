use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use oia_core::codebook::{build_codebook, Kind};
use oia_harness::codebooks::cache_file_name;
use oia_harness::config::{Experiment, RunConfig};
use oia_harness::error::{HarnessError, Result};
use oia_harness::experiments;
use oia_harness::props::{run_property_suite, Mutation, PropsOptions};
use oia_harness::record::{write_csv, write_csv_file};

#[derive(Parser)]
#[command(name = "oia", version, about = "Opportunistic interference alignment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum-LIF versus the number of users per cell.
    SumlifVsN(Common),
    /// Sum-LIF versus the number of feedforward bits.
    SumlifVsNf(Common),
    /// Sum rates versus SNR.
    RateVsSnr(Common),
    /// Sum rates versus the number of users per cell.
    RateVsN(Common),
    /// Runs the invariant suite; exits with status 2 if any check fails.
    Props(PropsArgs),
    /// Builds one codebook and writes it in text form.
    MakeCodebook(CodebookArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file applied over the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append per-point mean and standard-error rows.
    #[arg(long)]
    summary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Inject {
    DropNoiseFloor,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Deliberately break one component to confirm the suite catches it.
    #[arg(long, value_enum)]
    inject: Option<Inject>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Grassmannian,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long)]
    n_f: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file, or a directory to receive the cache file name.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_for(experiment: Experiment, c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(experiment, path)?,
        None => RunConfig::defaults(experiment),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = c.trials {
        cfg.trials = trials;
    }
    if let Some(workers) = c.workers {
        cfg.workers = workers;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    cfg.summary |= c.summary;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&PathBuf>, text: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => std::io::stdout().write_all(text).map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn run_experiment(experiment: Experiment, c: &Common) -> Result<()> {
    let cfg = config_for(experiment, c)?;
    info!("{experiment}: {} trials, {} workers, seed {}", cfg.trials, cfg.workers, cfg.seed);
    let records = experiments::run(&cfg)?;
    match &cfg.out {
        Some(path) => write_csv_file(path, &records)?,
        None => write_csv(std::io::stdout().lock(), &records).map_err(|e| HarnessError::io("<stdout>", e))?,
    }
    info!("wrote {} rows", records.len());
    Ok(())
}

fn run_props(a: &PropsArgs) -> Result<()> {
    let mutation = a.inject.map(|Inject::DropNoiseFloor| Mutation::DropNoiseFloor);
    let report = run_property_suite(PropsOptions { seed: a.seed, mutation });
    emit(a.out.as_ref(), report.render().as_bytes())?;
    match report.failures() {
        0 => Ok(()),
        count => Err(HarnessError::PropertyFailure { count }),
    }
}

fn make_codebook(a: &CodebookArgs) -> Result<()> {
    let kind = match a.kind {
        KindArg::Random => Kind::Random,
        KindArg::Grassmannian => Kind::Grassmannian,
    };
    let cb = build_codebook(kind, a.l, a.n_f, a.seed)?;
    let out = a.out.as_ref().map(|p| if p.is_dir() { p.join(cache_file_name(kind, a.l, a.n_f, a.seed)) } else { p.clone() });
    info!("min squared chordal distance {:.6}", cb.min_chordal_sq());
    emit(out.as_ref(), cb.to_text().as_bytes())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SumlifVsN(c) => run_experiment(Experiment::SumlifVsN, &c),
        Command::SumlifVsNf(c) => run_experiment(Experiment::SumlifVsNf, &c),
        Command::RateVsSnr(c) => run_experiment(Experiment::RateVsSnr, &c),
        Command::RateVsN(c) => run_experiment(Experiment::RateVsN, &c),
        Command::Props(a) => run_props(&a),
        Command::MakeCodebook(a) => make_codebook(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

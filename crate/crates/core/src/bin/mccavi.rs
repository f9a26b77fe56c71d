use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mccavi::error::Error;
use mccavi::harness::{self, EngineChoice, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mccavi", version, about = "Run and report MC-CAVI, CAVI, MCMC and BBVI experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report bundle.
    Run {
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<Experiment>,
        #[arg(long, value_parser = parse_engine)]
        engine: Option<EngineChoice>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, conflicts_with = "iters")]
        budget_secs: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        /// MC-CAVI schedule `A,B,C`.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Datasets written by `gen-fixtures`.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// TOML file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the synthetic datasets and the NMR catalog.
    GenFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        /// One seed for all datasets instead of each experiment's default.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute summaries and charts of an existing bundle.
    Report {
        dir: PathBuf,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_engine(s: &str) -> Result<EngineChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io(_) | Error::Csv(_) => 3,
        Error::Config(_) | Error::InvalidParameter(_) | Error::Parse(_) | Error::Length { .. } => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Run {
            experiment,
            engine,
            seed,
            budget_secs,
            iters,
            schedule,
            out,
            fixtures,
            config,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::new(
                    experiment.ok_or_else(|| Error::Config("--experiment or --config is required".into()))?,
                ),
            };
            if let Some(e) = experiment {
                cfg.experiment = e;
            }
            if let Some(e) = engine {
                cfg.engine = e;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            if budget_secs.is_some() {
                cfg.budget_secs = budget_secs;
                cfg.iters = None;
            }
            if iters.is_some() {
                cfg.iters = iters;
                cfg.budget_secs = None;
            }
            if schedule.is_some() {
                cfg.mc_cavi.schedule = schedule;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if fixtures.is_some() {
                cfg.fixtures = fixtures;
            }
            let bundle = harness::run_experiment(&cfg)?;
            print!("{}", bundle.table_text());
            println!("wrote {}", cfg.out.display());
            Ok(!bundle.failed)
        }
        Command::GenFixtures { out, seed } => {
            for p in harness::write_fixtures(&out, seed)? {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
        Command::Report { dir } => {
            let bundle = harness::rerender(&dir)?;
            print!("{}", bundle.table_text());
            Ok(!bundle.failed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

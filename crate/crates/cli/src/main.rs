//! Experiment front-end: suite and dataset generation, training matrices,
//! analyses, and report collation.

mod analyze;
mod config;
mod report;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use xembod::datasets::{gen_expert, gen_mixture, gen_replay, save_dataset, Direction};
use xembod::envs::{save_suite_manifest, SuiteManifest};
use xembod::{Error, Result};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "xembod", version, about = "cross-embodiment offline RL laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Expert,
    Replay,
    Mixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisKind {
    Conflicts,
    Diversity,
    Embodiment,
    Transfer,
    MSweep,
    Budget,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the embodiment suite manifest with expert reference returns.
    GenSuite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the suite manifest.
        #[arg(long, default_value = "suite.json")]
        out: PathBuf,
    },
    /// Generate an offline dataset for every suite robot.
    GenData {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
        /// Early-phase fraction for the mixture variant, in [0, 1].
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        suite_seed: u64,
        /// Output directory for the dataset shards.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the (dataset, method, seed) training matrix from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run one of the built-in analyses from a config file.
    Analyze {
        #[arg(long, value_enum)]
        kind: AnalysisKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collate an experiment directory into a markdown report.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSuite { seed, out } => {
            let manifest = SuiteManifest::generate(seed)?;
            save_suite_manifest(&manifest, &out)?;
            println!("wrote {} ({} robots)", out.display(), manifest.specs.len());
        }
        Command::GenData { variant, direction, x, steps, seed, suite_seed, out } => {
            let suite = SuiteManifest::generate(suite_seed)?;
            let direction: Direction = direction.into();
            let (shards, manifest) = match variant {
                VariantArg::Expert => gen_expert(&suite.specs, direction, steps, seed)?,
                VariantArg::Replay => gen_replay(&suite.specs, direction, steps, seed)?,
                VariantArg::Mixture => {
                    let x = x.ok_or_else(|| {
                        Error::Config("mixture variant requires --x".into())
                    })?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::Config(format!(
                            "mixture fraction {x} outside [0, 1]"
                        )));
                    }
                    gen_mixture(&suite.specs, direction, steps, x, seed)?
                }
            };
            save_dataset(&shards, &manifest, &out)?;
            let total: usize = shards.iter().map(|s| s.len()).sum();
            println!("wrote {} ({} transitions)", out.display(), total);
        }
        Command::Train { config, seed, out, workers } => {
            let cfg = load_config(&config, seed, out)?;
            let rows = run::run_experiment(&cfg, workers)?;
            println!(
                "{} runs complete; results in {}",
                rows.len(),
                cfg.out.join(&cfg.name).join("results.csv").display()
            );
        }
        Command::Analyze { kind, config, out } => {
            let cfg = load_config(&config, None, out)?;
            let label = match kind {
                AnalysisKind::Conflicts => "conflicts",
                AnalysisKind::Diversity => "diversity",
                AnalysisKind::Embodiment => "embodiment",
                AnalysisKind::Transfer => "transfer",
                AnalysisKind::MSweep => "m-sweep",
                AnalysisKind::Budget => "budget",
            };
            let ctx = analyze::AnalysisContext::new(cfg, label)?;
            match kind {
                AnalysisKind::Conflicts => analyze::conflicts(&ctx)?,
                AnalysisKind::Diversity => analyze::diversity(&ctx)?,
                AnalysisKind::Embodiment => analyze::embodiment(&ctx)?,
                AnalysisKind::Transfer => analyze::transfer(&ctx)?,
                AnalysisKind::MSweep => analyze::m_sweep(&ctx)?,
                AnalysisKind::Budget => analyze::budget(&ctx)?,
            }
            println!("analysis written to {}", ctx.out.display());
        }
        Command::Report { config, out } => {
            let cfg = load_config(&config, None, out)?;
            let exp_dir = cfg.out.join(&cfg.name);
            let text = report::report(&exp_dir)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Grouping(_) | Error::Layout(_) | Error::Shape(_) => 2,
        Error::Generation { .. }
        | Error::CorruptDataset(_)
        | Error::InsufficientData(_)
        | Error::Io(_)
        | Error::Json(_) => 3,
        Error::Numerical { .. }
        | Error::DegenerateGradient { .. }
        | Error::Solver { .. }
        | Error::Normalization(_)
        | Error::Graph(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harmlab_cli::{report, run, CliError, ExperimentConfig, EXIT_STAGE};

#[derive(Parser)]
#[command(name = "harmlab", version, about = "Harmonic measure experiments on planar and 3D domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write artifacts plus a manifest.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel stages.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize classification verdicts over finished runs.
    Report {
        manifests: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path).map_err(CliError::Validation)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Validate { config } => {
            load(&config, None)?.plan().map_err(CliError::Validation)?;
            println!("{}: ok", config.display());
            Ok(0)
        }
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Stage(e.to_string()))?;
            }
            let mut cfg = load(&config, seed)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let plan = cfg.plan().map_err(CliError::Validation)?;
            let manifest = run::run(&plan, &cfg.output.dir)?;
            for (stage, w) in manifest.warnings() {
                eprintln!("warning [{stage}]: {w}");
            }
            for s in manifest.stages.iter().filter(|s| s.error.is_some()) {
                eprintln!("stage {} failed: {}", s.name, s.error.as_deref().unwrap_or(""));
            }
            println!("{}", cfg.output.dir.join(run::MANIFEST_FILE).display());
            Ok(if manifest.complete { 0 } else { EXIT_STAGE })
        }
        Command::Report { manifests, csv } => {
            let rep = report(&manifests);
            print!("{}", rep.table());
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            for m in &rep.missing {
                eprintln!("missing: {m}");
            }
            if let Some(path) = csv {
                std::fs::write(&path, rep.csv()).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(if rep.missing.is_empty() { 0 } else { EXIT_STAGE })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            match &e {
                CliError::Validation(errs) => {
                    for f in errs {
                        eprintln!("invalid {f}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use precache_cli::plotdata::{emit_plotdata, Metric};
use precache_cli::sweep::{execute, oracle_comparison, OracleRow};
use precache_cli::{CliError, ExperimentConfig, Result};

/// Overrides `output_dir` from the configuration file.
const OUTPUT_DIR_ENV: &str = "PRECACHE_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "precache", version, about = "Highlight pre-caching experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write its artifacts.
    Run { config: PathBuf },
    /// Aggregate a finished sweep into plot-ready CSV.
    Plotdata {
        output_dir: PathBuf,
        #[arg(long)]
        metric: String,
    },
    /// Check a configuration file and list every problem.
    Validate { config: PathBuf },
    /// Compare strategies with exhaustive search on a small catalog.
    Oracle { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let config = load(&config)?;
            let output = execute(&config)?;
            println!(
                "wrote {} rows to {}",
                output.rows.len(),
                config.output_dir.join("sweep.csv").display()
            );
        }
        Command::Plotdata { output_dir, metric } => {
            let metric: Metric = metric.parse()?;
            let path = emit_plotdata(&output_dir, metric)?;
            println!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            load(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Oracle { config } => {
            let config = load(&config)?;
            let rows = oracle_comparison(&config)?;
            std::fs::create_dir_all(&config.output_dir).map_err(CliError::io(&config.output_dir))?;
            let path = config.output_dir.join("oracle.csv");
            write_oracle_csv(&path, &rows)?;
            for r in &rows {
                println!(
                    "{:>6} t={} seed={} entropy={:.6} optimum={:.6} ratio={:.4}",
                    r.strategy, r.sweep_value, r.seed, r.entropy, r.optimum, r.ratio
                );
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn write_oracle_csv(path: &Path, rows: &[OracleRow]) -> Result<()> {
    let artifact = |e: csv::Error| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(artifact)?;
    for r in rows {
        w.serialize(r).map_err(artifact)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

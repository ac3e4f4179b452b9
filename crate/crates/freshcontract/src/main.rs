use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use freshcontract::experiment::{
    expand_pattern, render_summary, run_experiment_file, summarize,
};
use freshcontract::freshness::{aoi_slot_oracle, average_aoi, TimingModel};
use freshcontract::rerank::{load_records, load_spec, rerank, retrieve_top_k, write_ranked};
use freshcontract::{Error, Result};

/// Freshness-aware data-sharing contract design: experiments, summaries,
/// multi-modal re-ranking, and oracle spot checks.
#[derive(Parser)]
#[command(name = "freshcontract", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) pair of an experiment config.
    Run {
        /// Path to a TOML experiment config.
        config: PathBuf,
    },
    /// Aggregate metrics files into a per-solver comparison table.
    Summarize {
        /// Metrics files or `*` patterns (wildcards in the file name only).
        patterns: Vec<String>,
    },
    /// Retrieve the top-K records for a query, then re-rank them by the
    /// mixed similarity metric and keep the best P.
    Rerank {
        /// Record database, one JSON object per line.
        #[arg(long)]
        db: PathBuf,
        /// Query record, one JSON object.
        #[arg(long)]
        query: PathBuf,
        /// Retrieval depth.
        #[arg(long)]
        k: usize,
        /// Re-ranked output size.
        #[arg(long)]
        p: usize,
        /// Similarity spec (JSON: components + weights).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Spot-check built-in oracles.
    Oracle {
        #[command(subcommand)]
        oracle: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Average age of information of an update cycle, via the closed form
    /// and the slot-enumeration oracle.
    Aoi {
        /// Cycle length in slots.
        #[arg(long)]
        theta: u32,
        /// Slot length in seconds.
        #[arg(long)]
        t: f64,
    },
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let outputs = run_experiment_file(&config)?;
            let mut metrics_paths = Vec::new();
            for output in &outputs {
                println!(
                    "{:>14} seed {:<4} final eval {:>12.4}  -> {}",
                    output.solver.to_string(),
                    output.seed,
                    output.final_eval,
                    output.metrics_path.display()
                );
                metrics_paths.push(output.metrics_path.clone());
            }
            println!();
            print!("{}", render_summary(&summarize(&metrics_paths)?));
            Ok(())
        }
        Command::Summarize { patterns } => {
            if patterns.is_empty() {
                return Err(Error::Config("summarize needs at least one pattern".into()));
            }
            let mut paths = Vec::new();
            for pattern in &patterns {
                paths.extend(expand_pattern(pattern)?);
            }
            print!("{}", render_summary(&summarize(&paths)?));
            Ok(())
        }
        Command::Rerank { db, query, k, p, spec } => {
            let records = load_records(&db)?;
            let queries = load_records(&query)?;
            let spec = load_spec(&spec)?;
            let retrieved = retrieve_top_k(&queries[0], &records, k)?;
            let reranked = rerank(&queries[0], &retrieved, &spec, p)?;
            write_ranked(&mut std::io::stdout().lock(), &reranked)
        }
        Command::Oracle { oracle: OracleCommand::Aoi { theta, t } } => {
            let timing = TimingModel::new(t, 1.0, 0.0)?;
            println!("closed form: {}", average_aoi(&timing, theta)?);
            println!("slot oracle: {}", aoi_slot_oracle(&timing, theta)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::Parse(_) | Error::Domain(_) | Error::Structure(_) => 2,
                Error::Numeric(_) => 3,
                Error::Io(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}

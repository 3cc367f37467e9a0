//! Exit codes: 0 success, 2 bad configuration or arguments, 3 threshold run
//! with no feasible answer (outputs still written), 4 provenance mismatch
//! between files, 5 unreadable or malformed file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cosearch::Exec;
use cosearch_cli::commands::{self, default_benchmark_path};
use cosearch_cli::{Result, RunConfig};

#[derive(Parser)]
#[command(name = "cosearch", version, about = "Joint architecture and latency search over a simulated benchmark")]
struct Cli {
    /// Run single-threaded. Results are identical either way.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the simulated ground-truth tables for a config.
    GenerateBenchmark {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to <output_dir>/benchmark.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the search; writes trace.json and front.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Fully evaluate every architecture; writes oracle.json and oracle.csv.
    BruteForce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare a trace (or oracle table) with an oracle table.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
        /// Defaults to a `report` directory next to the result file.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::GenerateBenchmark { config, out } => {
            let config = RunConfig::load(&config)?;
            let path = out.unwrap_or_else(|| default_benchmark_path(&config));
            let file = commands::generate_benchmark(&config, &path, exec)?;
            println!(
                "wrote {} ({} architectures, {} subgraphs)",
                path.display(),
                file.archs.len(),
                file.keys.len()
            );
        }
        Command::Run { config, benchmark, output_dir } => {
            let config = RunConfig::load(&config)?;
            let benchmark = benchmark.unwrap_or_else(|| default_benchmark_path(&config));
            let out = output_dir.unwrap_or_else(|| config.output_dir.clone());
            let result = commands::run(&config, &benchmark, &out, exec);
            if let Ok(file) = &result {
                let t = &file.trace;
                println!(
                    "{} rounds, {} units, front of {} written to {}",
                    t.rounds.len(),
                    t.ledger_units(),
                    t.final_front.len(),
                    out.display()
                );
                if let Some(answer) = t.threshold.as_ref().and_then(|th| th.answer) {
                    println!("answer: {} ({:.4} accuracy, {:.3} ms)", answer.arch_id, answer.accuracy, answer.latency);
                }
            }
            result?;
        }
        Command::BruteForce { config, benchmark, output_dir } => {
            let config = RunConfig::load(&config)?;
            let benchmark = benchmark.unwrap_or_else(|| default_benchmark_path(&config));
            let out = output_dir.unwrap_or_else(|| config.output_dir.clone());
            let file = commands::brute_force(&config, &benchmark, &out, exec)?;
            println!(
                "{} rows, true front of {}, {} units, written to {}",
                file.table.rows.len(),
                file.table.true_front.len(),
                file.table.ledger_units(&file.unit),
                out.display()
            );
        }
        Command::Report { result, oracle, output_dir } => {
            let out = output_dir.unwrap_or_else(|| {
                result.parent().map_or_else(|| PathBuf::from("report"), |p| p.join("report"))
            });
            let r = commands::report(&result, &oracle, &out)?;
            println!("hypervolume ratio {:.4}", r.hypervolume.ratio);
            for row in &r.rank_table {
                println!("kendall tau {:<20} {:.4}", row.estimator, row.tau);
            }
            if let Some(last) = r.gap_curve.last() {
                println!("final mean gap {:.4} pp", last.mean_gap);
            }
            println!("ledger speedup {:.2}x", r.ledger.speedup);
            println!("written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

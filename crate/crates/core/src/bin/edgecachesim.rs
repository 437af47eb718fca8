use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use edgecache::scenario::{load_scenario, oracle_check, run_scenario, summarize, Figure};

#[derive(Parser)]
#[command(
    name = "edgecachesim",
    version,
    about = "Edge video cache placement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, capacity) cell of a scenario.
    Run {
        scenario: PathBuf,
        /// Output directory; defaults to the scenario's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long, env = "EDGECACHESIM_SEED")]
        seed: Option<u64>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print summary tables for a results CSV.
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        figure: Option<Figure>,
    },
    /// Load and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Compare the DP solver against exhaustive search on random instances.
    OracleCheck { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn execute(command: Command) -> edgecache::Result<ExitCode> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            jobs,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let dir = out.unwrap_or_else(|| s.output_dir.clone());
            let run = run_scenario(&s, jobs)?;
            let (csv, jsonl) = run.write(&dir)?;
            println!("wrote {} rows to {}", run.rows.len(), csv.display());
            println!(
                "wrote {} placements to {}",
                run.placements.len(),
                jsonl.display()
            );
        }
        Command::Summarize { csv, figure } => {
            let summary = summarize(&csv)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for (f, table) in &summary.tables {
                if figure.is_none_or(|want| want == *f) {
                    println!("[{}] {table}", f.name());
                }
            }
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!(
                "{}: ok ({} algorithms, {} capacities, {} days)",
                s.id,
                s.algorithms.len(),
                s.sim.capacities.len(),
                s.sim.days
            );
        }
        Command::OracleCheck { scenario } => {
            let s = load_scenario(&scenario)?;
            let report = oracle_check(&s.oracle, s.sim.seed)?;
            for m in &report.mismatches {
                println!(
                    "instance {}: {} (dp {:.17}, brute force {:.17})",
                    m.instance, m.reason, m.dp_value, m.brute_value
                );
            }
            println!(
                "{} instances, {} mismatches",
                report.instances,
                report.mismatches.len()
            );
            if !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

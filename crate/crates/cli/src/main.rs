//! `qbsim`: regenerate the charger→battery transfer experiments as CSV.
//!
//! Subcommands: `sweep-tau` (final charge vs protocol duration), `trace`
//! (always-on time traces), `cost` (driving-cost integrals), `selftest`
//! (oracle checks). Exit codes: 0 success, 2 config error, 3 numerical
//! contract failure.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, ScenarioKind};

#[derive(Parser)]
#[command(name = "qbsim", version, about = "Charger→battery ergotropy-transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Final battery charge as a function of the protocol duration Ωτ
    SweepTau(RunArgs),
    /// Time traces with the coupling left on to a multiple of τ
    Trace(RunArgs),
    /// Driving-cost integrals Σ_ad, Σ_tqd, Σ_rel across Ωτ
    Cost(RunArgs),
    /// Run the library's oracle checks and report each one
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Steps per interval of length τ (overrides the config)
    #[arg(long)]
    steps: Option<usize>,
    /// Simpson nodes for the cost integrals, odd (overrides the config)
    #[arg(long = "quad-points")]
    quad_points: Option<usize>,
    /// Working space: "sector" or "full" (overrides the config)
    #[arg(long)]
    space: Option<String>,
    /// Worker threads (default: QBSIM_WORKERS, else all cores)
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn thread_pool(workers: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let count = workers
        .or_else(|| {
            std::env::var("QBSIM_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0); // 0 lets rayon pick the core count
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build()?)
}

fn run_scenario(kind: ScenarioKind, args: &RunArgs) -> ExitCode {
    let overrides = Overrides {
        out: args.out.clone(),
        steps: args.steps,
        quad_points: args.quad_points,
        space: args.space.clone(),
    };
    let scenario = match config::load(&args.config, kind, &overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let pool = match thread_pool(args.workers) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot build worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = pool.install(|| match scenario.kind {
        ScenarioKind::SweepTau => runner::run_sweep_tau(&scenario),
        ScenarioKind::Trace => runner::run_trace(&scenario),
        ScenarioKind::Cost => runner::run_cost(&scenario),
    });
    match outcome {
        Ok(done) => {
            println!("wrote {}", done.csv_path.display());
            println!("wrote {}", done.manifest_path.display());
            if done.invalid_rows > 0 {
                eprintln!(
                    "{} run(s) failed numerical contracts; see {}",
                    done.invalid_rows,
                    done.manifest_path.display()
                );
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn run_selftest() -> ExitCode {
    let outcomes = qbsim_core::selftest::run_all();
    let mut failed = 0usize;
    for o in &outcomes {
        println!(
            "{} {} — {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} checks, {} failed", outcomes.len(), failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn main() -> ExitCode {
    // keep the BLAS backend single-threaded: parallelism lives at the sweep
    // level and per-call threading would make timings noisy
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::SweepTau(args) => run_scenario(ScenarioKind::SweepTau, args),
        Command::Trace(args) => run_scenario(ScenarioKind::Trace, args),
        Command::Cost(args) => run_scenario(ScenarioKind::Cost, args),
        Command::Selftest => run_selftest(),
    }
}

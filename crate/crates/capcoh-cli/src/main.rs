//! `capcoh`: run revocation-strategy experiments and report on them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use capcoh::coherence::{self, MatchRoute, TransitionTable};
use capcoh_cli::experiment::{
    exit_code_for, parse_seed_range, parse_strategy_selector, run_experiment,
};
use capcoh_cli::report::{plot_csv, results_from_jsonl, results_to_jsonl};
use capcoh_cli::{config, experiment, report};

#[derive(Parser)]
#[command(
    name = "capcoh",
    version,
    about = "Deterministic simulator for capability revocation strategies and their damage bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run strategies over a scenario config and write per-run results.
    Run {
        /// Scenario config file.
        config: PathBuf,
        /// Strategy to run: eager, lazy, lease, rcc, or all.
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Override the config's seeds with an inclusive range, e.g. 0..9.
        #[arg(long)]
        seeds: Option<String>,
        /// Where to write machine-readable results (default:
        /// <scenario>_results.jsonl).
        #[arg(long)]
        results: Option<PathBuf>,
        /// Also write one trace file per run into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Compare predicted damage bounds against observed damage.
    Bounds {
        /// Scenario config file.
        config: PathBuf,
        /// Also show that the budget strategy's bound ignores velocity.
        #[arg(long)]
        velocity_sweep: bool,
    },
    /// Emit chart data from a results file.
    Plot {
        /// Results file produced by `run`.
        results: PathBuf,
        /// Where to write the CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the authorization protocol against the hardware protocol it
    /// mirrors.
    VerifyEquivalence,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Run { config, strategy, seeds, results, trace_dir } => {
            let mut scenario = config::load_config(&config).map_err(|e| e.to_string())?;
            if let Some(spec) = seeds {
                scenario.seeds = parse_seed_range(&spec)?;
            }
            let strategies = parse_strategy_selector(&strategy)?;
            let experiment = run_experiment(&scenario, &strategies).map_err(|e| e.to_string())?;
            print!("{}", experiment.table);

            let results_path = results
                .unwrap_or_else(|| PathBuf::from(format!("{}_results.jsonl", scenario.name)));
            std::fs::write(&results_path, results_to_jsonl(&experiment.lines))
                .map_err(|e| format!("cannot write {}: {e}", results_path.display()))?;
            println!("results -> {}", results_path.display());

            if let Some(dir) = trace_dir {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
                for run in &experiment.runs {
                    let path = dir.join(format!(
                        "{}_{}_{}.trace.jsonl",
                        run.scenario, run.strategy, run.seed
                    ));
                    std::fs::write(&path, run.trace_jsonl())
                        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                }
                println!("traces -> {}", dir.display());
            }
            Ok(exit_code_for(&experiment.lines))
        }
        Command::Bounds { config, velocity_sweep } => {
            let scenario = config::load_config(&config).map_err(|e| e.to_string())?;
            let table =
                report::compare_bounds(&scenario, velocity_sweep).map_err(|e| e.to_string())?;
            print!("{table}");
            Ok(if table.contains("VIOLATION") { experiment::EXIT_BOUND_VIOLATION } else { 0 })
        }
        Command::Plot { results, out } => {
            let text = std::fs::read_to_string(&results)
                .map_err(|e| format!("cannot read {}: {e}", results.display()))?;
            let lines = results_from_jsonl(&text).map_err(|e| e.to_string())?;
            let csv = plot_csv(&lines);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)
                        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                    println!("plot data -> {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::VerifyEquivalence => {
            let report = coherence::verify_structural_equivalence(
                TransitionTable::canonical(),
                &coherence::HwTable::canonical(),
            );
            for m in &report.matched {
                let (s1, ev, s2) = m.hw;
                let route = match m.route {
                    MatchRoute::Direct => "direct".to_string(),
                    MatchRoute::ViaTransient { transient, completion } => {
                        format!("via {transient:?}, completed by {completion:?}")
                    }
                };
                println!("hw ({s1:?}, {ev:?}) -> {s2:?}  ~  {:?} [{route}]", m.auth_event);
            }
            for (s1, ev, s2) in &report.missing {
                println!("UNMATCHED hw ({s1:?}, {ev:?}) -> {s2:?}");
            }
            let extras: Vec<String> =
                report.authorization_only.iter().map(|e| format!("{e:?}")).collect();
            println!("authorization-only events: {}", extras.join(", "));
            println!(
                "verdict: {}",
                if report.verdict { "equivalent" } else { "NOT equivalent" }
            );
            Ok(if report.verdict { 0 } else { 1 })
        }
    }
}

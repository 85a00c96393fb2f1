//! Result presentation: per-run machine-readable lines, the per-scenario
//! strategy comparison table, predicted-vs-observed bound comparison, and
//! plot data for the log-scale damage chart.

use std::fmt;

use capcoh::metrics::{AggregateMetrics, RunResult};
use capcoh::sim::ScenarioConfig;
use capcoh::strategy::{predicted_bound, StrategyKind};
use capcoh::sim::run_batch;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One run, one line. Field order is the wire format; reruns must produce
/// byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub schema_version: u32,
    pub scenario: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub unauthorized_ops: u64,
    pub staleness_max_ticks: u64,
    pub messages_sent: u64,
    pub revalidation_count: u64,
    pub bound_violations: u64,
    pub cascade_completeness: f64,
    /// Worst per-capability damage bound among this run's views.
    pub predicted_bound: u64,
}

impl ResultLine {
    pub fn from_run(run: &RunResult) -> ResultLine {
        ResultLine {
            schema_version: SCHEMA_VERSION,
            scenario: run.scenario.clone(),
            strategy: run.strategy,
            seed: run.seed,
            unauthorized_ops: run.unauthorized_ops,
            staleness_max_ticks: run.staleness_max_ticks,
            messages_sent: run.messages_sent,
            revalidation_count: run.revalidation_count,
            bound_violations: run.bound_violations,
            cascade_completeness: run.cascade_completeness,
            predicted_bound: run.views.iter().map(|v| v.predicted_bound).max().unwrap_or(0),
        }
    }
}

pub fn results_to_jsonl(lines: &[ResultLine]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(line).expect("result line serializes"));
        out.push('\n');
    }
    out
}

pub fn results_from_jsonl(text: &str) -> Result<Vec<ResultLine>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Strategy columns for one scenario, displayable as a mean ± σ table.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub scenario: String,
    pub columns: Vec<AggregateMetrics>,
}

fn cell(mean: f64, sigma: f64) -> String {
    format!("{mean:.1} ± {sigma:.1}")
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const WIDTH: usize = 18;
        write!(f, "{:24}", format!("[{}]", self.scenario))?;
        for col in &self.columns {
            write!(f, "{:>WIDTH$}", col.strategy.to_string())?;
        }
        writeln!(f)?;
        let rows: &[(&str, fn(&AggregateMetrics) -> String)] = &[
            ("unauthorized ops", |c| cell(c.unauthorized.mean, c.unauthorized.sigma)),
            ("staleness max", |c| cell(c.staleness_max.mean, c.staleness_max.sigma)),
            ("messages sent", |c| cell(c.messages_sent.mean, c.messages_sent.sigma)),
            ("revalidations", |c| cell(c.revalidations.mean, c.revalidations.sigma)),
            ("cascade completeness", |c| {
                cell(c.cascade_completeness.mean, c.cascade_completeness.sigma)
            }),
            ("bound violations", |c| c.bound_violations_total.to_string()),
        ];
        for (label, project) in rows {
            write!(f, "{label:24}")?;
            for col in &self.columns {
                write!(f, "{:>WIDTH$}", project(col))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Predicted-vs-observed comparison for every strategy on one scenario.
///
/// The verdict is per capability: Exact when the observed aggregate mean hits
/// the bound dead on (deterministic scenarios), Within when every
/// capability stayed at or under its own bound, Violation otherwise.
pub fn compare_bounds(config: &ScenarioConfig, velocity_sweep: bool) -> Result<String, capcoh::sim::SimError> {
    let mut out = String::new();
    out.push_str(&format!(
        "{:8}{:>14}{:>16}{:>16}{:>12}\n",
        "strategy", "predicted", "observed mean", "per-cap max", "verdict"
    ));
    for strategy in StrategyKind::ALL {
        let (runs, agg) = run_batch(config, strategy)?;
        let predicted = runs
            .iter()
            .flat_map(|r| r.views.iter().map(|v| v.predicted_bound))
            .max()
            .unwrap_or(0);
        let per_cap_max = runs
            .iter()
            .flat_map(|r| r.views.iter().map(|v| v.post_revocation_executed))
            .max()
            .unwrap_or(0);
        let exact = agg.unauthorized.sigma == 0.0 && agg.unauthorized.mean == predicted as f64;
        let verdict = if exact {
            "Exact"
        } else if agg.bound_violations_total == 0 {
            "Within"
        } else {
            "VIOLATION"
        };
        out.push_str(&format!(
            "{:8}{:>14}{:>16.1}{:>16}{:>12}\n",
            strategy.to_string(),
            predicted,
            agg.unauthorized.mean,
            per_cap_max,
            verdict
        ));
    }
    if velocity_sweep {
        out.push_str("\nbudget bound across velocities:\n");
        let params = config.strategy_params();
        for v in [10u64, 100, 10_000] {
            let bound = predicted_bound(StrategyKind::Rcc, &params, v)
                .expect("sweep needs a budget in the config");
            out.push_str(&format!("  v = {v:>6}: bound = {bound}\n"));
        }
    }
    Ok(out)
}

/// CSV for the damage comparison chart: one row per strategy present in the
/// results, plus the lease/rcc damage ratio when both columns exist.
pub fn plot_csv(lines: &[ResultLine]) -> String {
    let mut out = String::from(
        "strategy,unauthorized_mean,unauthorized_sigma,predicted_bound,lease_rcc_ratio\n",
    );
    let mean_for = |strategy: StrategyKind| -> Option<f64> {
        let sample: Vec<f64> = lines
            .iter()
            .filter(|l| l.strategy == strategy)
            .map(|l| l.unauthorized_ops as f64)
            .collect();
        if sample.is_empty() {
            None
        } else {
            Some(sample.iter().sum::<f64>() / sample.len() as f64)
        }
    };
    let ratio = match (mean_for(StrategyKind::Lease), mean_for(StrategyKind::Rcc)) {
        (Some(lease), Some(rcc)) if rcc > 0.0 => format!("{:.1}", lease / rcc),
        _ => String::new(),
    };
    for strategy in StrategyKind::ALL {
        let sample: Vec<&ResultLine> =
            lines.iter().filter(|l| l.strategy == strategy).collect();
        if sample.is_empty() {
            continue;
        }
        let n = sample.len() as f64;
        let mean = sample.iter().map(|l| l.unauthorized_ops as f64).sum::<f64>() / n;
        let var = sample
            .iter()
            .map(|l| (l.unauthorized_ops as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let bound = sample.iter().map(|l| l.predicted_bound).max().unwrap_or(0);
        out.push_str(&format!(
            "{},{:.1},{:.1},{},{}\n",
            strategy,
            mean,
            var.sqrt(),
            bound,
            ratio
        ));
    }
    out
}

//! Batch orchestration: which strategies to run, which seeds, what to write
//! where, and what the process exit status should say about it.

use capcoh::metrics::RunResult;
use capcoh::sim::{run_batch, ScenarioConfig, SimError};
use capcoh::strategy::StrategyKind;

use crate::report::{ResultLine, ResultTable};

/// "all" or one strategy name.
pub fn parse_strategy_selector(selector: &str) -> Result<Vec<StrategyKind>, String> {
    if selector == "all" {
        return Ok(StrategyKind::ALL.to_vec());
    }
    selector
        .parse::<StrategyKind>()
        .map(|s| vec![s])
        .map_err(|e| format!("{e} (expected eager, lazy, lease, rcc, or all)"))
}

/// Inclusive seed range: "0..9" runs seeds 0 through 9, ten runs.
pub fn parse_seed_range(spec: &str) -> Result<Vec<u64>, String> {
    let Some((lo, hi)) = spec.split_once("..") else {
        return Err(format!("expected <first>..<last>, got '{spec}'"));
    };
    let lo: u64 = lo.trim().parse().map_err(|_| format!("'{lo}' is not a seed"))?;
    let hi: u64 = hi.trim().parse().map_err(|_| format!("'{hi}' is not a seed"))?;
    if hi < lo {
        return Err(format!("empty seed range {lo}..{hi}"));
    }
    Ok((lo..=hi).collect())
}

pub struct Experiment {
    pub table: ResultTable,
    pub runs: Vec<RunResult>,
    pub lines: Vec<ResultLine>,
}

/// Run the selected strategies over the config's seeds.
pub fn run_experiment(
    config: &ScenarioConfig,
    strategies: &[StrategyKind],
) -> Result<Experiment, SimError> {
    let mut columns = Vec::new();
    let mut runs = Vec::new();
    let mut lines = Vec::new();
    for &strategy in strategies {
        let (batch, aggregate) = run_batch(config, strategy)?;
        columns.push(aggregate);
        lines.extend(batch.iter().map(ResultLine::from_run));
        runs.extend(batch);
    }
    Ok(Experiment {
        table: ResultTable { scenario: config.name.clone(), columns },
        runs,
        lines,
    })
}

/// Success, or the distinct failure status that makes a violated damage
/// bound impossible to miss in CI.
pub const EXIT_OK: u8 = 0;
pub const EXIT_BOUND_VIOLATION: u8 = 2;

pub fn exit_code_for(lines: &[ResultLine]) -> u8 {
    if lines.iter().any(|l| l.bound_violations > 0) {
        EXIT_BOUND_VIOLATION
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_accepts_all_and_single_strategies() {
        assert_eq!(parse_strategy_selector("all").unwrap(), StrategyKind::ALL.to_vec());
        assert_eq!(parse_strategy_selector("rcc").unwrap(), vec![StrategyKind::Rcc]);
        assert_eq!(parse_strategy_selector("lease").unwrap(), vec![StrategyKind::Lease]);
        assert!(parse_strategy_selector("optimistic").is_err());
    }

    #[test]
    fn seed_ranges_are_inclusive() {
        assert_eq!(parse_seed_range("0..9").unwrap(), (0..=9).collect::<Vec<u64>>());
        assert_eq!(parse_seed_range("4..4").unwrap(), vec![4]);
        assert!(parse_seed_range("9..0").is_err());
        assert!(parse_seed_range("7").is_err());
    }

    #[test]
    fn experiment_produces_a_line_per_run() {
        let config = ScenarioConfig::crm();
        let exp = run_experiment(&config, &StrategyKind::ALL).unwrap();
        assert_eq!(exp.lines.len(), 4 * config.seeds.len());
        assert_eq!(exp.table.columns.len(), 4);
        assert_eq!(exit_code_for(&exp.lines), EXIT_OK);
    }

    #[test]
    fn a_violated_bound_flips_the_exit_status() {
        let config = ScenarioConfig::crm();
        let exp = run_experiment(&config, &[StrategyKind::Rcc]).unwrap();
        let mut doctored = exp.lines.clone();
        doctored[0].bound_violations = 1;
        assert_eq!(exit_code_for(&exp.lines), EXIT_OK);
        assert_eq!(exit_code_for(&doctored), EXIT_BOUND_VIOLATION);
    }
}

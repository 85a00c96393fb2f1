//! Run traces, damage accounting, and cross-seed aggregation.
//!
//! Every run keeps a full per-tick trace. The headline counters
//! (unauthorized ops, staleness, bound violations) are maintained live by the
//! simulator; [`refold_unauthorized`] recomputes the damage total from the
//! trace alone, so disagreement between the two is a simulator bug, not a
//! measurement choice.

use serde::{Deserialize, Serialize};

use crate::authority::{AgentId, CapId};
use crate::coherence::AuthState;
use crate::strategy::StrategyKind;
use std::collections::BTreeMap;

/// When in a tick a revocation landed in ground truth, relative to that
/// tick's operation phase. Operations on the trigger tick itself count as
/// unauthorized only if the marking came first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevocationPhase {
    PreOps,
    PostOps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationEvent {
    pub cap: CapId,
    pub phase: RevocationPhase,
}

/// One view's activity within one tick, with its state as of tick end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewTick {
    pub agent: AgentId,
    pub cap: CapId,
    pub executed: u64,
    pub blocked: u64,
    pub state: AuthState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub views: Vec<ViewTick>,
    pub revocations: Vec<RevocationEvent>,
    pub messages_in_flight: u64,
}

/// Accumulates tick records during a run.
#[derive(Debug, Default)]
pub struct MetricsCollector {
    trace: Vec<TickRecord>,
}

impl MetricsCollector {
    pub fn new() -> Self {
        MetricsCollector::default()
    }

    pub fn record_tick(&mut self, record: TickRecord) {
        debug_assert_eq!(record.tick as usize, self.trace.len(), "ticks recorded in order");
        self.trace.push(record);
    }

    pub fn into_trace(self) -> Vec<TickRecord> {
        self.trace
    }
}

/// Final accounting for one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub agent: AgentId,
    pub cap: CapId,
    pub revoked_tick: Option<u64>,
    pub invalidated_tick: Option<u64>,
    /// Operations this view executed at or after its revocation tick.
    pub post_revocation_executed: u64,
    /// The strategy's damage bound at this view's worst-case velocity.
    pub predicted_bound: u64,
    pub refresh_ticks: Vec<u64>,
}

/// Everything one (config, strategy, seed) run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub duration_ticks: u64,
    pub unauthorized_ops: u64,
    pub staleness_max_ticks: u64,
    pub messages_sent: u64,
    pub revalidation_count: u64,
    pub bound_violations: u64,
    pub cascade_completeness: f64,
    pub views: Vec<ViewSummary>,
    pub trace: Vec<TickRecord>,
}

impl RunResult {
    /// One JSON line per tick; stable field order, byte-identical across
    /// reruns of the same (config, strategy, seed).
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.trace {
            out.push_str(&serde_json::to_string(record).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

/// Staleness of one view: how long it stayed live past its revocation.
/// A view that never invalidated is charged through the final tick.
pub fn view_staleness(summary: &ViewSummary, duration_ticks: u64) -> Option<u64> {
    let revoked = summary.revoked_tick?;
    let dead = summary.invalidated_tick.unwrap_or(duration_ticks.saturating_sub(1));
    Some(dead.saturating_sub(revoked))
}

/// Fraction of revocation-targeted views whose holders actually invalidated
/// by run end. Vacuously complete when nothing was revoked.
pub fn cascade_completeness(views: &[ViewSummary]) -> f64 {
    let targeted: Vec<_> = views.iter().filter(|v| v.revoked_tick.is_some()).collect();
    if targeted.is_empty() {
        return 1.0;
    }
    let reached = targeted.iter().filter(|v| v.invalidated_tick.is_some()).count();
    reached as f64 / targeted.len() as f64
}

/// Count of views whose post-revocation executions exceeded their bound.
pub fn count_bound_violations(views: &[ViewSummary]) -> u64 {
    views
        .iter()
        .filter(|v| v.revoked_tick.is_some() && v.post_revocation_executed > v.predicted_bound)
        .count() as u64
}

/// Recompute total unauthorized operations from the trace alone.
///
/// For each revoked capability the damage window opens at the revocation
/// tick (or one tick later when the marking landed after that tick's
/// operations) and closes at the first tick whose recorded state is Invalid,
/// inclusive: a view can still execute part of a tick before dying mid-tick.
pub fn refold_unauthorized(result: &RunResult) -> u64 {
    let mut revoked_at: BTreeMap<CapId, (u64, RevocationPhase)> = BTreeMap::new();
    let mut death_tick: BTreeMap<CapId, u64> = BTreeMap::new();
    for record in &result.trace {
        for ev in &record.revocations {
            revoked_at.entry(ev.cap).or_insert((record.tick, ev.phase));
        }
        for view in &record.views {
            if view.state == AuthState::Invalid {
                death_tick.entry(view.cap).or_insert(record.tick);
            }
        }
    }
    let last_tick = result.duration_ticks.saturating_sub(1);
    let mut total = 0u64;
    for (&cap, &(revoked, phase)) in &revoked_at {
        let start = match phase {
            RevocationPhase::PreOps => revoked,
            RevocationPhase::PostOps => revoked + 1,
        };
        let end = death_tick.get(&cap).copied().unwrap_or(last_tick);
        for record in &result.trace {
            if record.tick < start || record.tick > end {
                continue;
            }
            for view in &record.views {
                if view.cap == cap {
                    total += view.executed;
                }
            }
        }
    }
    total
}

/// Mean and population spread of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Stat {
        assert!(!values.is_empty(), "a statistic needs at least one sample");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Stat { mean, sigma: var.sqrt(), min, max }
    }
}

/// Cross-seed summary for one (scenario, strategy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub scenario: String,
    pub strategy: StrategyKind,
    pub runs: usize,
    pub unauthorized: Stat,
    pub staleness_max: Stat,
    pub messages_sent: Stat,
    pub revalidations: Stat,
    pub cascade_completeness: Stat,
    pub bound_violations_total: u64,
}

pub fn aggregate(results: &[RunResult]) -> AggregateMetrics {
    assert!(!results.is_empty(), "cannot aggregate zero runs");
    let first = &results[0];
    debug_assert!(results
        .iter()
        .all(|r| r.scenario == first.scenario && r.strategy == first.strategy));
    let pick = |f: fn(&RunResult) -> f64| -> Vec<f64> { results.iter().map(f).collect() };
    AggregateMetrics {
        scenario: first.scenario.clone(),
        strategy: first.strategy,
        runs: results.len(),
        unauthorized: Stat::from_values(&pick(|r| r.unauthorized_ops as f64)),
        staleness_max: Stat::from_values(&pick(|r| r.staleness_max_ticks as f64)),
        messages_sent: Stat::from_values(&pick(|r| r.messages_sent as f64)),
        revalidations: Stat::from_values(&pick(|r| r.revalidation_count as f64)),
        cascade_completeness: Stat::from_values(&pick(|r| r.cascade_completeness)),
        bound_violations_total: results.iter().map(|r| r.bound_violations).sum(),
    }
}

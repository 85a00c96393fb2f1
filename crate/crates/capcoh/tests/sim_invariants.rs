//! Behavioral invariants of full simulation runs: what each strategy's
//! mechanism guarantees about the trace, plus the cross-seed bands the
//! probabilistic scenario must land in.

use capcoh::coherence::AuthState;
use capcoh::metrics::RunResult;
use capcoh::sim::{run, run_batch, RevocationTrigger, ScenarioConfig};
use capcoh::strategy::StrategyKind;
use capcoh::ActionModel;
use proptest::prelude::*;

fn view_ticks<'a>(r: &'a RunResult, agent_idx: usize) -> impl Iterator<Item = (u64, u64)> + 'a {
    r.trace.iter().map(move |t| (t.tick, t.views[agent_idx].executed))
}

#[test]
fn lease_views_never_execute_past_expiry() {
    let config = ScenarioConfig::banking();
    for &seed in &config.seeds {
        let r = run(&config, StrategyKind::Lease, seed).unwrap();
        for idx in 0..r.views.len() {
            for (tick, executed) in view_ticks(&r, idx) {
                if tick >= config.ttl_ticks {
                    assert_eq!(executed, 0, "seed {seed} view {idx} acted at tick {tick}");
                }
            }
        }
    }
}

#[test]
fn budgeted_views_never_exceed_their_allowance_between_acquires() {
    let config = ScenarioConfig::banking();
    for &seed in &config.seeds {
        let r = run(&config, StrategyKind::Rcc, seed).unwrap();
        for (idx, summary) in r.views.iter().enumerate() {
            let total: u64 = view_ticks(&r, idx).map(|(_, e)| e).sum();
            let windows = summary.refresh_ticks.len() as u64 + 1;
            assert!(
                total <= config.budget_n * windows,
                "seed {seed}: {total} ops across {windows} budget windows"
            );
        }
    }
}

#[test]
fn banking_damage_lands_in_the_expected_bands() {
    let config = ScenarioConfig::banking();
    let (eager_runs, eager) = run_batch(&config, StrategyKind::Eager).unwrap();
    assert!(
        (10.0..=20.0).contains(&eager.unauthorized.mean),
        "eager mean {}",
        eager.unauthorized.mean
    );
    assert_eq!(eager.staleness_max.mean, 10.0);
    assert_eq!(eager.staleness_max.sigma, 0.0);

    let (lease_runs, lease) = run_batch(&config, StrategyKind::Lease).unwrap();
    assert!(
        (24.0..=36.0).contains(&lease.unauthorized.mean),
        "lease mean {}",
        lease.unauthorized.mean
    );
    assert_eq!(lease.staleness_max.mean, 20.0);
    assert_eq!(lease.staleness_max.sigma, 0.0);

    for r in eager_runs.iter().chain(&lease_runs) {
        assert_eq!(r.messages_sent, 3);
        assert_eq!(r.bound_violations, 0);
    }
}

#[test]
fn banking_action_rate_honors_its_probability() {
    // Law of large numbers over the pre-revocation window: three live views,
    // 100 ticks, 10 seeds, p = 0.5.
    let config = ScenarioConfig::banking();
    let mut executed = 0u64;
    let mut samples = 0u64;
    for &seed in &config.seeds {
        let r = run(&config, StrategyKind::Eager, seed).unwrap();
        for record in r.trace.iter().take(100) {
            for view in &record.views {
                executed += view.executed;
                samples += 1;
            }
        }
    }
    let mean = executed as f64 / samples as f64;
    assert!((mean - 0.5).abs() < 0.05, "observed action rate {mean}");
}

#[test]
fn burst_scenario_lands_where_each_mechanism_puts_it() {
    let config = ScenarioConfig::anomaly();
    let (_, eager) = run_batch(&config, StrategyKind::Eager).unwrap();
    assert_eq!(eager.unauthorized.mean, 108.0);
    assert_eq!(eager.unauthorized.sigma, 0.0);
    assert_eq!(eager.staleness_max.mean, 10.0);
    assert_eq!(eager.cascade_completeness.mean, 1.0);

    let (_, lazy) = run_batch(&config, StrategyKind::Lazy).unwrap();
    assert_eq!(lazy.unauthorized.mean, 84.0, "check at 60, denial lands at 61");
    assert_eq!(lazy.cascade_completeness.mean, 1.0);
    assert!(lazy.unauthorized.mean < eager.unauthorized.mean);

    let (lease_runs, lease) = run_batch(&config, StrategyKind::Lease).unwrap();
    assert_eq!(lease.cascade_completeness.mean, 0.0, "a 3000-tick lease outlives the run");
    assert!(lease.unauthorized.mean >= 2850.0 && lease.unauthorized.mean <= 3000.0);
    for r in &lease_runs {
        assert_eq!(r.staleness_max_ticks, 246, "charged through run end");
    }

    let (rcc_runs, rcc) = run_batch(&config, StrategyKind::Rcc).unwrap();
    assert!(rcc.unauthorized.mean < 100.0, "rcc mean {}", rcc.unauthorized.mean);
    assert_eq!(rcc.cascade_completeness.mean, 1.0);
    for r in &rcc_runs {
        for v in &r.views {
            assert!(v.post_revocation_executed <= config.budget_n);
        }
    }
    assert!(
        lease.unauthorized.mean / rcc.unauthorized.mean > 100.0,
        "lease/rcc ratio {}",
        lease.unauthorized.mean / rcc.unauthorized.mean
    );
}

#[test]
fn trust_firing_is_seed_independent_for_a_deterministic_burst() {
    let config = ScenarioConfig::anomaly();
    for &seed in &config.seeds {
        let r = run(&config, StrategyKind::Eager, seed).unwrap();
        let revocation_tick = r
            .trace
            .iter()
            .find(|t| !t.revocations.is_empty())
            .map(|t| t.tick)
            .expect("trust must fire");
        assert_eq!(revocation_tick, 53, "seed {seed}");
    }
}

#[test]
fn capless_agents_only_spectate() {
    // Five agents, depth 1: one view. The other four draw from the RNG but
    // never act, and the trace carries exactly one view per tick.
    let r = run(&ScenarioConfig::anomaly(), StrategyKind::Eager, 0).unwrap();
    assert_eq!(r.views.len(), 1);
    for record in &r.trace {
        assert_eq!(record.views.len(), 1);
    }
}

#[test]
fn chain_views_settle_invalid_after_an_eager_cascade() {
    let r = run(&ScenarioConfig::banking(), StrategyKind::Eager, 0).unwrap();
    let last = r.trace.last().unwrap();
    for view in &last.views {
        assert_eq!(view.state, AuthState::Invalid);
    }
    assert_eq!(r.cascade_completeness, 1.0);
}

fn small_config(
    v: u64,
    trigger: u64,
    latency: u64,
    ttl: u64,
    n: u64,
    interval: u64,
    duration: u64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: "prop".into(),
        agent_count: 1,
        delegation_depth: 1,
        action_model: ActionModel::Deterministic { ops_per_tick: v },
        seeds: vec![0],
        network_latency_ticks: latency,
        revocation_trigger: RevocationTrigger::AtTick(trigger),
        ttl_ticks: ttl,
        budget_n: n,
        check_interval_ticks: interval,
        anomaly_burst: None,
        trust_threshold: 0.0,
        trust_decay: 0.5,
        duration_ticks: duration,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Whatever the parameters, the damage never exceeds the strategy's bound
    // and the trace recount agrees with the live counter.
    #[test]
    fn bounds_hold_and_recounts_agree_on_random_configs(
        v in 1u64..=50,
        trigger in 0u64..=100,
        latency in 0u64..=15,
        ttl in 1u64..=90,
        n in 1u64..=80,
        interval in 1u64..=80,
        duration in 1u64..=80,
    ) {
        let config = small_config(v, trigger, latency, ttl, n, interval, duration);
        for strategy in StrategyKind::ALL {
            let r = run(&config, strategy, 0).unwrap();
            prop_assert_eq!(r.bound_violations, 0);
            prop_assert_eq!(capcoh::metrics::refold_unauthorized(&r), r.unauthorized_ops);
        }
    }
}

//! Deterministic tick-based simulator.
//!
//! One run takes a scenario, a revocation strategy, and a seed, and plays the
//! whole system forward tick by tick. Within a tick the phases are fixed:
//!
//! 1. deliver messages due this tick (stale views die here, before acting);
//! 2. register an explicit revocation trigger, ahead of this tick's
//!    operations;
//! 3. per agent in id order: strategy hooks (lease expiry, periodic check),
//!    then operation attempts, including intra-tick exhaustion acquires;
//! 4. trust scoring over this tick's executed counts, firing revoke-all
//!    after the operations it judged;
//! 5. apply acknowledgements collected during delivery;
//! 6. record metrics.
//!
//! Messages travel with the configured latency; acknowledgements are applied
//! the tick they are produced. Determinism is load-bearing: identical
//! (config, strategy, seed) triples give bit-identical results, and the RNG
//! advances exactly once per agent per tick regardless of model or strategy,
//! so action patterns are comparable across strategies under the same seed.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{determine_action_count, Acknowledgement, ActionModel, AgentView, BurstProfile};
use crate::authority::{
    select_broadcast_mode, AgentId, AuthorityError, BroadcastMode, CapId, GrantMode, Registry,
    ScopeSet, TrustScorer,
};
use crate::metrics::{
    self, AggregateMetrics, MetricsCollector, RevocationEvent, RevocationPhase, RunResult,
    TickRecord, ViewSummary, ViewTick,
};
use crate::strategy::{predicted_bound, StrategyError, StrategyKind, StrategyParams};

/// What sets revocation in motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevocationTrigger {
    /// The root capability is revoked at a fixed tick, before that tick's
    /// operations.
    AtTick(u64),
    /// Nothing is scheduled; the trust scorer decides.
    TrustAuto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub agent_count: u32,
    pub delegation_depth: u32,
    pub action_model: ActionModel,
    pub seeds: Vec<u64>,
    pub network_latency_ticks: u64,
    pub revocation_trigger: RevocationTrigger,
    pub ttl_ticks: u64,
    pub budget_n: u64,
    pub check_interval_ticks: u64,
    pub anomaly_burst: Option<BurstProfile>,
    pub trust_threshold: f64,
    pub trust_decay: f64,
    pub duration_ticks: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |reason: &str| Err(SimError::ConfigInvalid { reason: reason.to_string() });
        if self.duration_ticks == 0 {
            return fail("duration_ticks must be positive");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        if self.agent_count == 0 {
            return fail("agent_count must be positive");
        }
        if self.delegation_depth == 0 {
            return fail("delegation_depth must be positive");
        }
        if let ActionModel::Bernoulli { p } = self.action_model {
            if !(0.0..=1.0).contains(&p) {
                return fail("action probability must lie in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.trust_threshold) {
            return fail("trust_threshold must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.trust_decay) {
            return fail("trust_decay must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn strategy_params(&self) -> StrategyParams {
        StrategyParams::new(self.network_latency_ticks)
            .with_ttl(self.ttl_ticks)
            .with_budget(self.budget_n)
            .with_check_interval(self.check_interval_ticks)
    }

    /// Ten-agent payment chain, compromised at tick 100. Probabilistic
    /// scheduling gives genuine cross-seed variance.
    pub fn banking() -> Self {
        ScenarioConfig {
            name: "banking".into(),
            agent_count: 10,
            delegation_depth: 3,
            action_model: ActionModel::Bernoulli { p: 0.5 },
            seeds: (0..10).collect(),
            network_latency_ticks: 10,
            revocation_trigger: RevocationTrigger::AtTick(100),
            ttl_ticks: 120,
            budget_n: 60,
            check_interval_ticks: 40,
            anomaly_burst: None,
            trust_threshold: 0.8,
            trust_decay: 0.3,
            duration_ticks: 200,
        }
    }

    /// Single bulk-export agent at fixed velocity 100 ops/tick, revoked at
    /// tick 0. Every metric is seed-independent.
    pub fn crm() -> Self {
        ScenarioConfig {
            name: "crm".into(),
            agent_count: 1,
            delegation_depth: 1,
            action_model: ActionModel::Deterministic { ops_per_tick: 100 },
            seeds: (0..10).collect(),
            network_latency_ticks: 5,
            revocation_trigger: RevocationTrigger::AtTick(0),
            ttl_ticks: 60,
            budget_n: 50,
            check_interval_ticks: 23,
            anomaly_burst: None,
            trust_threshold: 0.8,
            trust_decay: 0.3,
            duration_ticks: 120,
        }
    }

    /// Five agents, one of which bursts to 12 ops/tick at tick 50; the trust
    /// scorer decides when to revoke.
    pub fn anomaly() -> Self {
        ScenarioConfig {
            name: "anomaly".into(),
            agent_count: 5,
            delegation_depth: 1,
            action_model: ActionModel::Bernoulli { p: 0.7 },
            seeds: (0..10).collect(),
            network_latency_ticks: 10,
            revocation_trigger: RevocationTrigger::TrustAuto,
            ttl_ticks: 3000,
            budget_n: 100,
            check_interval_ticks: 10,
            anomaly_burst: Some(BurstProfile { ops_per_tick: 12, start_tick: 50 }),
            trust_threshold: 0.4,
            trust_decay: 0.5,
            duration_ticks: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario config: {reason}")]
    ConfigInvalid { reason: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Payload {
    RevocationNotice { cap: CapId },
    AcquireReply { cap: CapId, granted: bool },
}

#[derive(Debug, Clone, Copy)]
struct PendingMessage {
    payload: Payload,
    recipient: AgentId,
    #[allow(dead_code)]
    send_tick: u64,
}

/// Delivers in deliver-tick order, FIFO within a tick.
#[derive(Debug, Default)]
struct MessageQueue {
    by_tick: BTreeMap<u64, Vec<PendingMessage>>,
    in_flight: u64,
}

impl MessageQueue {
    fn push(&mut self, deliver_tick: u64, msg: PendingMessage) {
        self.by_tick.entry(deliver_tick).or_default().push(msg);
        self.in_flight += 1;
    }

    fn drain_due(&mut self, tick: u64) -> Vec<PendingMessage> {
        let due: Vec<u64> = self.by_tick.range(..=tick).map(|(&t, _)| t).collect();
        let mut out = Vec::new();
        for t in due {
            out.extend(self.by_tick.remove(&t).unwrap());
        }
        self.in_flight -= out.len() as u64;
        out
    }
}

/// One simulation in progress.
pub struct World {
    config: ScenarioConfig,
    strategy: StrategyKind,
    params: StrategyParams,
    seed: u64,
    registry: Registry,
    views: Vec<AgentView>,
    post_exec: Vec<u64>,
    scorer: TrustScorer,
    mode: BroadcastMode,
    queue: MessageQueue,
    rng: ChaCha8Rng,
    burst_agent: Option<AgentId>,
    explicit_fired: bool,
    unauthorized_ops: u64,
    messages_sent: u64,
    revalidation_count: u64,
    pub draw_count: u64,
    collector: MetricsCollector,
    pending_acks: Vec<Acknowledgement>,
    tick_revocations: Vec<RevocationEvent>,
}

/// 53-bit uniform sample in [0, 1).
fn uniform_draw(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl World {
    pub fn new(
        config: &ScenarioConfig,
        strategy: StrategyKind,
        seed: u64,
    ) -> Result<World, SimError> {
        config.validate()?;
        let params = config.strategy_params();
        params.validate_for(strategy)?;

        let mut registry = Registry::new();
        for a in 0..config.agent_count {
            registry.register_agent(AgentId(a));
        }

        // Delegation chain: the root holder gets an exclusive grant over the
        // widest scope and each delegation hands the next agent one
        // permission fewer. The chain covers at most the fleet.
        let depth = config.delegation_depth as usize;
        let chain_len = depth.min(config.agent_count as usize);
        let scope_at = |level: usize| -> ScopeSet {
            ScopeSet::new((0..depth - level).map(|i| format!("op{i}")))
        };
        let mut chain_caps = Vec::with_capacity(chain_len);
        let root = registry.grant(AgentId(0), scope_at(0), GrantMode::Exclusive, 0)?;
        chain_caps.push(root);
        for level in 1..chain_len {
            let cap = registry.delegate(
                chain_caps[level - 1],
                AgentId(level as u32),
                scope_at(level),
                0,
            )?;
            chain_caps.push(cap);
        }

        let mut views = Vec::with_capacity(chain_len);
        for (level, &cap) in chain_caps.iter().enumerate() {
            let agent = AgentId(level as u32);
            let believed = registry.record(cap)?.state.governing_stable();
            let mut view = AgentView::new(agent, cap, believed, 0);
            match strategy {
                StrategyKind::Lease => view = view.with_lease(config.ttl_ticks),
                StrategyKind::Rcc => view = view.with_budget(config.budget_n),
                StrategyKind::Eager | StrategyKind::Lazy => {}
            }
            views.push(view);
        }

        let post_exec = vec![0; views.len()];
        Ok(World {
            params,
            strategy,
            seed,
            registry,
            views,
            post_exec,
            scorer: TrustScorer::new(config.trust_threshold, config.trust_decay),
            mode: select_broadcast_mode(config.agent_count as usize),
            queue: MessageQueue::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            burst_agent: config.anomaly_burst.map(|_| AgentId(0)),
            explicit_fired: false,
            unauthorized_ops: 0,
            messages_sent: 0,
            revalidation_count: 0,
            draw_count: 0,
            collector: MetricsCollector::new(),
            pending_acks: Vec::new(),
            tick_revocations: Vec::new(),
            config: config.clone(),
        })
    }

    pub fn run_to_completion(mut self) -> Result<RunResult, SimError> {
        for tick in 0..self.config.duration_ticks {
            self.step(tick)?;
        }
        debug_assert_eq!(
            self.draw_count,
            u64::from(self.config.agent_count) * self.config.duration_ticks,
            "exactly one draw per agent per tick"
        );
        self.finalize()
    }

    fn step(&mut self, tick: u64) -> Result<(), SimError> {
        self.tick_revocations.clear();

        // Phase 1: network delivery. A revocation notice or check denial
        // arriving now kills the view before this tick's operations.
        self.deliver_due(tick);

        // Phase 2: explicit trigger, registered ahead of operations so the
        // trigger tick's own operations already count as unauthorized.
        if let RevocationTrigger::AtTick(at) = self.config.revocation_trigger {
            if tick == at && !self.explicit_fired {
                self.explicit_fired = true;
                let root = self.views.first().map(|v| v.cap);
                if let Some(root) = root {
                    self.revoke_and_broadcast(root, tick, RevocationPhase::PreOps)?;
                }
            }
        }

        // Phase 3: hooks and operation attempts, agents in id order.
        let mut executed_by_agent = vec![0u64; self.config.agent_count as usize];
        let mut tick_activity = vec![(0u64, 0u64); self.views.len()];
        for a in 0..self.config.agent_count as usize {
            let draw = uniform_draw(&mut self.rng);
            self.draw_count += 1;
            let burst = if self.burst_agent == Some(AgentId(a as u32)) {
                self.config.anomaly_burst.as_ref()
            } else {
                None
            };
            let intended = determine_action_count(&self.config.action_model, burst, tick, draw);
            if a >= self.views.len() {
                continue; // no credential to act on
            }
            self.run_hooks(a, tick)?;
            let (executed, blocked) = self.attempt_operations(a, intended, tick)?;
            executed_by_agent[a] = executed;
            tick_activity[a] = (executed, blocked);
        }

        // Phase 4: trust scoring over what actually ran this tick. A firing
        // here lands after the operations it judged.
        for a in 0..self.config.agent_count {
            let agent = AgentId(a);
            let update = self.scorer.update(
                agent,
                executed_by_agent[a as usize],
                self.config.action_model.expected_rate(),
            );
            if update.triggered {
                let held: Vec<CapId> = self
                    .registry
                    .records()
                    .filter(|r| r.holder == agent && !r.is_revoked())
                    .map(|r| r.id)
                    .collect();
                for cap in held {
                    self.revoke_and_broadcast(cap, tick, RevocationPhase::PostOps)?;
                }
            }
        }

        // Phase 5: acknowledgements apply the tick they were produced.
        for ack in std::mem::take(&mut self.pending_acks) {
            self.registry.acknowledge(ack.cap, ack.from)?;
        }
        assert!(self.registry.single_writer_holds(), "single-writer invariant broke");

        // Phase 6: record.
        let views: Vec<ViewTick> = self
            .views
            .iter()
            .enumerate()
            .map(|(i, v)| ViewTick {
                agent: v.agent,
                cap: v.cap,
                executed: tick_activity[i].0,
                blocked: tick_activity[i].1,
                state: v.believed,
            })
            .collect();
        self.collector.record_tick(TickRecord {
            tick,
            views,
            revocations: std::mem::take(&mut self.tick_revocations),
            messages_in_flight: self.queue.in_flight,
        });
        Ok(())
    }

    fn deliver_due(&mut self, tick: u64) {
        for msg in self.queue.drain_due(tick) {
            match msg.payload {
                Payload::RevocationNotice { cap } => {
                    // Snooped copies reach every agent; only the holder's
                    // view reacts.
                    if let Some(view) = self
                        .views
                        .iter_mut()
                        .find(|v| v.agent == msg.recipient && v.cap == cap)
                    {
                        let ack = view.handle_revocation_notice(tick);
                        self.pending_acks.push(ack);
                    }
                }
                Payload::AcquireReply { cap, granted } => {
                    if let Some(view) = self
                        .views
                        .iter_mut()
                        .find(|v| v.agent == msg.recipient && v.cap == cap)
                    {
                        if !granted {
                            view.invalidate(tick);
                        }
                    }
                }
            }
        }
    }

    /// Mark ground truth and account one notice per newly revoked record.
    /// Only the eager strategy puts physical invalidations on the wire; the
    /// others leave holders to find out through their own mechanisms.
    fn revoke_and_broadcast(
        &mut self,
        cap: CapId,
        tick: u64,
        phase: RevocationPhase,
    ) -> Result<(), SimError> {
        let request = match self.registry.revoke(cap, tick) {
            Ok(r) => r,
            // A trust firing can outlive its first strike; nothing new to do.
            Err(AuthorityError::AlreadyRevoked(_)) => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        for &(cap, _) in &request.affected {
            self.tick_revocations.push(RevocationEvent { cap, phase });
        }
        self.messages_sent += request.affected.len() as u64;
        if self.strategy == StrategyKind::Eager {
            let deliver = tick + self.config.network_latency_ticks;
            for &(cap, holder) in &request.affected {
                match self.mode {
                    BroadcastMode::Snooping => {
                        for a in self.registry.agents().collect::<Vec<_>>() {
                            self.queue.push(
                                deliver,
                                PendingMessage {
                                    payload: Payload::RevocationNotice { cap },
                                    recipient: a,
                                    send_tick: tick,
                                },
                            );
                        }
                    }
                    BroadcastMode::Directory => {
                        self.queue.push(
                            deliver,
                            PendingMessage {
                                payload: Payload::RevocationNotice { cap },
                                recipient: holder,
                                send_tick: tick,
                            },
                        );
                    }
                }
            }
            // Zero-latency delivery lands immediately rather than waiting a
            // whole tick for the next delivery phase.
            if self.config.network_latency_ticks == 0 {
                self.deliver_due(tick);
            }
        }
        Ok(())
    }

    fn run_hooks(&mut self, idx: usize, tick: u64) -> Result<(), SimError> {
        let view = &mut self.views[idx];
        if !view.is_live() {
            return Ok(());
        }
        match self.strategy {
            StrategyKind::Lease => {
                if view.lease_expired(tick) {
                    view.invalidate(tick);
                }
            }
            StrategyKind::Lazy => {
                if view.lazy_check_due(tick, self.params.check_interval_ticks.unwrap()) {
                    view.last_check_tick = Some(tick);
                    // Verdict fixed against ground truth now; the reply takes
                    // one revalidation tick to come back.
                    let granted = matches!(
                        self.registry.process_acquire(view.agent, view.cap, tick)?,
                        crate::authority::AcquireResponse::Granted
                    );
                    self.queue.push(
                        tick + self.params.revalidation_ticks,
                        PendingMessage {
                            payload: Payload::AcquireReply { cap: view.cap, granted },
                            recipient: view.agent,
                            send_tick: tick,
                        },
                    );
                }
            }
            StrategyKind::Eager | StrategyKind::Rcc => {}
        }
        Ok(())
    }

    fn attempt_operations(
        &mut self,
        idx: usize,
        intended: u64,
        tick: u64,
    ) -> Result<(u64, u64), SimError> {
        let mut executed = 0u64;
        let mut blocked = 0u64;
        for _ in 0..intended {
            if !self.views[idx].permits_operation() {
                blocked += 1;
                continue;
            }
            let cap = self.views[idx].cap;
            if self.registry.record(cap)?.is_revoked() {
                self.unauthorized_ops += 1;
                self.post_exec[idx] += 1;
            }
            executed += 1;
            // Exhaustion boundary: the spending attempt that lands on zero
            // budget forces an immediate acquire, resolved within the tick.
            if self.views[idx].spend_budget() == Some(0) {
                self.revalidation_count += 1;
                let agent = self.views[idx].agent;
                match self.registry.process_acquire(agent, cap, tick)? {
                    crate::authority::AcquireResponse::Granted => {
                        self.views[idx].refill_budget(self.config.budget_n, tick);
                    }
                    crate::authority::AcquireResponse::Denied { .. } => {
                        self.views[idx].deny_refresh(tick);
                    }
                }
            }
        }
        Ok((executed, blocked))
    }

    /// Worst-case post-revocation velocity for an agent: the burst rate if
    /// the agent bursts, the fixed velocity if deterministic, else one.
    fn bound_velocity(&self, agent: AgentId) -> u64 {
        if self.burst_agent == Some(agent) {
            return self.config.anomaly_burst.unwrap().ops_per_tick;
        }
        match self.config.action_model {
            ActionModel::Deterministic { ops_per_tick } => ops_per_tick,
            ActionModel::Bernoulli { .. } => 1,
        }
    }

    fn finalize(self) -> Result<RunResult, SimError> {
        let mut summaries = Vec::with_capacity(self.views.len());
        for (i, view) in self.views.iter().enumerate() {
            let bound = predicted_bound(self.strategy, &self.params, self.bound_velocity(view.agent))?;
            summaries.push(ViewSummary {
                agent: view.agent,
                cap: view.cap,
                revoked_tick: self.registry.record(view.cap)?.revoked_tick,
                invalidated_tick: view.invalidated_tick,
                post_revocation_executed: self.post_exec[i],
                predicted_bound: bound,
                refresh_ticks: view.refresh_ticks.clone(),
            });
        }
        let staleness_max = summaries
            .iter()
            .filter_map(|s| metrics::view_staleness(s, self.config.duration_ticks))
            .max()
            .unwrap_or(0);
        let cascade_completeness = metrics::cascade_completeness(&summaries);
        let bound_violations = metrics::count_bound_violations(&summaries);
        Ok(RunResult {
            scenario: self.config.name.clone(),
            strategy: self.strategy,
            seed: self.seed,
            duration_ticks: self.config.duration_ticks,
            unauthorized_ops: self.unauthorized_ops,
            staleness_max_ticks: staleness_max,
            messages_sent: self.messages_sent,
            revalidation_count: self.revalidation_count,
            bound_violations,
            cascade_completeness,
            views: summaries,
            trace: self.collector.into_trace(),
        })
    }
}

/// Run one (config, strategy, seed) triple to completion.
pub fn run(
    config: &ScenarioConfig,
    strategy: StrategyKind,
    seed: u64,
) -> Result<RunResult, SimError> {
    World::new(config, strategy, seed)?.run_to_completion()
}

/// Run every configured seed in order and aggregate.
pub fn run_batch(
    config: &ScenarioConfig,
    strategy: StrategyKind,
) -> Result<(Vec<RunResult>, AggregateMetrics), SimError> {
    let mut results = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        results.push(run(config, strategy, seed)?);
    }
    let aggregate = metrics::aggregate(&results);
    Ok((results, aggregate))
}

//! Agent-side credential views.
//!
//! A view is the holder's cached belief about one capability: a stable
//! authorization state plus the local counters its strategy needs (operation
//! budget, lease clock, check timer). Views go stale the instant the
//! authority revokes; everything in this module is about how and when a view
//! notices.

use serde::{Deserialize, Serialize};

use crate::authority::{AgentId, CapId};
use crate::coherence::AuthState;

/// How many operations an agent intends per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionModel {
    /// Fixed velocity: `ops_per_tick` every tick.
    Deterministic { ops_per_tick: u64 },
    /// One op with probability `p`, else none.
    Bernoulli { p: f64 },
}

impl ActionModel {
    /// Expected operations per tick; the trust scorer's baseline.
    pub fn expected_rate(&self) -> f64 {
        match self {
            ActionModel::Deterministic { ops_per_tick } => *ops_per_tick as f64,
            ActionModel::Bernoulli { p } => *p,
        }
    }
}

/// Compromised-agent burst: from `start_tick` on, the affected agent runs at
/// `ops_per_tick` regardless of the scenario's action model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstProfile {
    pub ops_per_tick: u64,
    pub start_tick: u64,
}

/// Intended operation count for one agent at one tick.
///
/// Exactly one RNG draw is consumed per call, whatever the model, so the
/// random stream position depends only on (agent order, tick) and never on
/// which model or strategy is running. `draw` is a uniform sample in [0, 1).
pub fn determine_action_count(model: &ActionModel, burst: Option<&BurstProfile>, tick: u64, draw: f64) -> u64 {
    if let Some(b) = burst {
        if tick >= b.start_tick {
            return b.ops_per_tick;
        }
    }
    match model {
        ActionModel::Deterministic { ops_per_tick } => *ops_per_tick,
        ActionModel::Bernoulli { p } => u64::from(draw < *p),
    }
}

/// Outcome of one attempted operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptOutcome {
    /// View permitted it and ground truth agreed.
    Executed,
    /// View permitted it but the authority had already revoked: the damage
    /// this whole system exists to bound.
    ExecutedUnauthorized,
    /// The local view itself refused (invalid state, spent budget).
    Blocked,
}

/// One holder's cached view of one capability.
#[derive(Debug, Clone)]
pub struct AgentView {
    pub agent: AgentId,
    pub cap: CapId,
    pub believed: AuthState,
    pub issued_tick: u64,
    /// Remaining operation budget, when the strategy meters executions.
    pub budget_remaining: Option<u64>,
    /// First tick at which the lease is dead, when the strategy leases.
    pub lease_expiry_tick: Option<u64>,
    pub last_check_tick: Option<u64>,
    /// First tick at which `believed` became `Invalid`.
    pub invalidated_tick: Option<u64>,
    /// Ticks at which an exhaustion acquire was answered (granted or denied).
    pub refresh_ticks: Vec<u64>,
}

impl AgentView {
    pub fn new(agent: AgentId, cap: CapId, believed: AuthState, issued_tick: u64) -> Self {
        AgentView {
            agent,
            cap,
            believed,
            issued_tick,
            budget_remaining: None,
            lease_expiry_tick: None,
            last_check_tick: None,
            invalidated_tick: None,
            refresh_ticks: Vec::new(),
        }
    }

    pub fn with_budget(mut self, n: u64) -> Self {
        self.budget_remaining = Some(n);
        self
    }

    pub fn with_lease(mut self, ttl_ticks: u64) -> Self {
        self.lease_expiry_tick = Some(self.issued_tick + ttl_ticks);
        self
    }

    pub fn is_live(&self) -> bool {
        self.believed != AuthState::Invalid
    }

    /// Whether the view itself would let an operation through right now.
    pub fn permits_operation(&self) -> bool {
        self.is_live() && self.budget_remaining != Some(0)
    }

    /// Drop the view to Invalid, remembering the first tick it happened.
    /// Idempotent; later calls never move the recorded tick.
    pub fn invalidate(&mut self, tick: u64) {
        if self.believed != AuthState::Invalid {
            self.believed = AuthState::Invalid;
            self.invalidated_tick = Some(tick);
        }
    }

    /// Lease hook: the credential self-expires once its TTL elapses, with no
    /// message in either direction.
    pub fn lease_expired(&self, tick: u64) -> bool {
        self.lease_expiry_tick.is_some_and(|e| tick >= e)
    }

    /// Check-on-use hook: due when a whole number of intervals has elapsed
    /// since issue. The issue tick itself is not a check.
    pub fn lazy_check_due(&self, tick: u64, interval: u64) -> bool {
        debug_assert!(interval > 0);
        tick > self.issued_tick && (tick - self.issued_tick) % interval == 0
    }

    /// Spend one budgeted operation. Returns the remaining budget, or `None`
    /// when the view is unmetered.
    pub fn spend_budget(&mut self) -> Option<u64> {
        match self.budget_remaining.as_mut() {
            Some(b) => {
                debug_assert!(*b > 0, "attempts must stop at zero budget");
                *b -= 1;
                Some(*b)
            }
            None => None,
        }
    }

    /// A granted exhaustion acquire refills the budget.
    pub fn refill_budget(&mut self, n: u64, tick: u64) {
        self.budget_remaining = Some(n);
        self.refresh_ticks.push(tick);
    }

    /// A denied exhaustion acquire kills the view.
    pub fn deny_refresh(&mut self, tick: u64) {
        self.refresh_ticks.push(tick);
        self.invalidate(tick);
    }

    /// A revocation notice arrived: invalidate and acknowledge.
    pub fn handle_revocation_notice(&mut self, tick: u64) -> Acknowledgement {
        self.invalidate(tick);
        Acknowledgement { cap: self.cap, from: self.agent }
    }
}

/// Confirmation sent back to the authority after invalidating on notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Acknowledgement {
    pub cap: CapId,
    pub from: AgentId,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view() -> AgentView {
        AgentView::new(AgentId(0), CapId(0), AuthState::Exclusive, 0)
    }

    #[test]
    fn deterministic_model_ignores_the_draw_but_still_takes_one() {
        let m = ActionModel::Deterministic { ops_per_tick: 100 };
        assert_eq!(determine_action_count(&m, None, 0, 0.99), 100);
        assert_eq!(determine_action_count(&m, None, 7, 0.0), 100);
    }

    #[test]
    fn bernoulli_model_acts_below_p() {
        let m = ActionModel::Bernoulli { p: 0.5 };
        assert_eq!(determine_action_count(&m, None, 0, 0.49), 1);
        assert_eq!(determine_action_count(&m, None, 0, 0.5), 0);
        assert_eq!(determine_action_count(&m, None, 0, 0.99), 0);
    }

    #[test]
    fn burst_overrides_the_model_from_its_start_tick() {
        let m = ActionModel::Bernoulli { p: 0.7 };
        let b = BurstProfile { ops_per_tick: 12, start_tick: 50 };
        assert_eq!(determine_action_count(&m, Some(&b), 49, 0.1), 1);
        assert_eq!(determine_action_count(&m, Some(&b), 50, 0.99), 12);
        assert_eq!(determine_action_count(&m, Some(&b), 299, 0.1), 12);
    }

    #[test]
    fn invalidation_is_idempotent_and_keeps_the_first_tick() {
        let mut v = view();
        v.invalidate(5);
        v.invalidate(9);
        assert_eq!(v.invalidated_tick, Some(5));
        assert!(!v.is_live());
        assert!(!v.permits_operation());
    }

    #[test]
    fn lease_expiry_is_inclusive_of_the_boundary_tick() {
        let v = view().with_lease(60);
        assert!(!v.lease_expired(59));
        assert!(v.lease_expired(60));
        assert!(v.lease_expired(61));
    }

    #[test]
    fn lazy_checks_fall_on_positive_interval_multiples() {
        let v = view();
        assert!(!v.lazy_check_due(0, 23));
        assert!(!v.lazy_check_due(22, 23));
        assert!(v.lazy_check_due(23, 23));
        assert!(!v.lazy_check_due(24, 23));
        assert!(v.lazy_check_due(46, 23));
    }

    #[test]
    fn budget_spend_refill_deny_cycle() {
        let mut v = view().with_budget(2);
        assert_eq!(v.spend_budget(), Some(1));
        assert_eq!(v.spend_budget(), Some(0));
        assert!(!v.permits_operation());
        v.refill_budget(2, 4);
        assert_eq!(v.budget_remaining, Some(2));
        assert!(v.permits_operation());
        v.spend_budget();
        v.spend_budget();
        v.deny_refresh(9);
        assert_eq!(v.invalidated_tick, Some(9));
        assert_eq!(v.refresh_ticks, vec![4, 9]);
    }

    #[test]
    fn notice_handling_invalidates_and_acknowledges() {
        let mut v = view();
        let ack = v.handle_revocation_notice(5);
        assert_eq!(ack, Acknowledgement { cap: CapId(0), from: AgentId(0) });
        assert_eq!(v.invalidated_tick, Some(5));
    }
}

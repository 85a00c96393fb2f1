//! The authority service: ground truth for every capability.
//!
//! The registry owns the capability records and the delegation DAG, applies
//! protocol events through the transition table, and answers acquire
//! requests against ground truth. Revocation marks `revoked_tick` here the
//! moment it happens; how long holders keep acting on stale views after that
//! is the revocation strategy's problem, not the registry's.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coherence::{
    AuthEvent, AuthState, CoherenceError, ProtocolState, TransitionTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CapId(pub u64);

impl fmt::Display for CapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cap{}", self.0)
    }
}

/// Named permissions carried by a capability. Ordered for determinism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScopeSet(BTreeSet<String>);

impl ScopeSet {
    pub fn new<I, T>(items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        ScopeSet(items.into_iter().map(Into::into).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &ScopeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Canonical identity for duplicate-exclusive detection: same scope set,
    /// same capability name.
    pub fn key(&self) -> String {
        self.0.iter().cloned().collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantMode {
    Shared,
    Exclusive,
}

/// One capability as the authority sees it.
#[derive(Debug, Clone)]
pub struct CapabilityRecord {
    pub id: CapId,
    pub holder: AgentId,
    pub scope: ScopeSet,
    pub state: ProtocolState,
    pub parent: Option<CapId>,
    pub issued_tick: u64,
    /// Ground truth. Set once, never cleared.
    pub revoked_tick: Option<u64>,
    /// Agents whose acknowledgement is still outstanding while invalidating.
    pub pending_acks: BTreeSet<AgentId>,
}

impl CapabilityRecord {
    pub fn is_revoked(&self) -> bool {
        self.revoked_tick.is_some()
    }
}

/// Outcome of a revocation call: the root, whether it cascaded, and every
/// record the call newly revoked, in parent-before-child order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationRequest {
    pub root: CapId,
    pub initiated_tick: u64,
    pub cascade: bool,
    pub affected: Vec<(CapId, AgentId)>,
    pub pending_acks: BTreeSet<AgentId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquireResponse {
    /// Credential refreshed; the holder resets its budget or lease.
    Granted,
    /// Ground truth says revoked; the holder must invalidate.
    Denied { revoked_tick: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthorityError {
    #[error("scope set must not be empty")]
    EmptyScope,
    #[error("delegated scope is not contained in the parent scope")]
    ScopeEscalation,
    #[error("cannot delegate from state {state}")]
    InvalidSourceState { state: ProtocolState },
    #[error("{0} is not registered")]
    UnknownCapability(CapId),
    #[error("exclusive grant for '{scope_key}' which is already exclusively held")]
    DuplicateExclusive { scope_key: String },
    #[error("{0} is already revoked")]
    AlreadyRevoked(CapId),
    #[error("{agent} does not hold {cap}")]
    NotHolder { cap: CapId, agent: AgentId },
    #[error("protocol violation: {0}")]
    Protocol(#[from] CoherenceError),
}

/// Capability registry plus delegation DAG.
#[derive(Debug, Default)]
pub struct Registry {
    records: BTreeMap<CapId, CapabilityRecord>,
    children: BTreeMap<CapId, Vec<CapId>>,
    agents: BTreeSet<AgentId>,
    next_id: u64,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register_agent(&mut self, agent: AgentId) {
        self.agents.insert(agent);
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.iter().copied()
    }

    pub fn record(&self, cap: CapId) -> Result<&CapabilityRecord, AuthorityError> {
        self.records.get(&cap).ok_or(AuthorityError::UnknownCapability(cap))
    }

    pub fn records(&self) -> impl Iterator<Item = &CapabilityRecord> {
        self.records.values()
    }

    pub fn direct_delegees(&self, cap: CapId) -> Vec<CapId> {
        self.children.get(&cap).cloned().unwrap_or_default()
    }

    fn table(&self) -> &'static TransitionTable {
        TransitionTable::canonical()
    }

    fn fresh_id(&mut self) -> CapId {
        let id = CapId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Issue a root capability. A shared grant lands in `Shared` and may
    /// coexist with other shared holders of the same scope; an exclusive
    /// grant lands in `Exclusive` and must be the only live exclusive-or-
    /// better record for its scope.
    pub fn grant(
        &mut self,
        holder: AgentId,
        scope: ScopeSet,
        mode: GrantMode,
        tick: u64,
    ) -> Result<CapId, AuthorityError> {
        if scope.is_empty() {
            return Err(AuthorityError::EmptyScope);
        }
        if mode == GrantMode::Exclusive {
            let key = scope.key();
            let clash = self.records.values().any(|r| {
                !r.is_revoked()
                    && r.scope.key() == key
                    && matches!(
                        r.state.governing_stable(),
                        AuthState::Exclusive | AuthState::Modified
                    )
            });
            if clash {
                return Err(AuthorityError::DuplicateExclusive { scope_key: key });
            }
        }
        let event = match mode {
            GrantMode::Shared => AuthEvent::GrantShared,
            GrantMode::Exclusive => AuthEvent::GrantExclusive,
        };
        let state = self.table().apply(AuthState::Invalid.into(), event)?;
        self.register_agent(holder);
        let id = self.fresh_id();
        self.records.insert(
            id,
            CapabilityRecord {
                id,
                holder,
                scope,
                state,
                parent: None,
                issued_tick: tick,
                revoked_tick: None,
                pending_acks: BTreeSet::new(),
            },
        );
        Ok(id)
    }

    /// Delegate an attenuated child capability. The delegator must be in
    /// `Exclusive` or `Modified`; a first delegation promotes `Exclusive` to
    /// `Modified`; the child scope must be contained in the parent scope.
    pub fn delegate(
        &mut self,
        parent: CapId,
        new_holder: AgentId,
        scope: ScopeSet,
        tick: u64,
    ) -> Result<CapId, AuthorityError> {
        if scope.is_empty() {
            return Err(AuthorityError::EmptyScope);
        }
        let parent_rec = self.record(parent)?;
        if parent_rec.is_revoked() {
            return Err(AuthorityError::AlreadyRevoked(parent));
        }
        match parent_rec.state {
            ProtocolState::Stable(AuthState::Exclusive) => {
                let next = self.table().apply(parent_rec.state, AuthEvent::Delegate)?;
                self.records.get_mut(&parent).unwrap().state = next;
            }
            ProtocolState::Stable(AuthState::Modified) => {} // already delegate-capable
            other => return Err(AuthorityError::InvalidSourceState { state: other }),
        }
        let parent_scope = &self.records[&parent].scope;
        if !scope.is_subset(parent_scope) {
            return Err(AuthorityError::ScopeEscalation);
        }
        self.register_agent(new_holder);
        let id = self.fresh_id();
        self.records.insert(
            id,
            CapabilityRecord {
                id,
                holder: new_holder,
                scope,
                state: ProtocolState::Stable(AuthState::Exclusive),
                parent: Some(parent),
                issued_tick: tick,
                revoked_tick: None,
                pending_acks: BTreeSet::new(),
            },
        );
        self.children.entry(parent).or_default().push(id);
        Ok(id)
    }

    /// Revoke a capability, cascading through every descendant when the
    /// target is delegate-capable. Ground truth (`revoked_tick`) is set here
    /// for all affected records; acknowledgements resolve the transients
    /// later. Parent-before-child order in `affected`.
    pub fn revoke(&mut self, cap: CapId, tick: u64) -> Result<RevocationRequest, AuthorityError> {
        let rec = self.record(cap)?;
        if rec.is_revoked() {
            return Err(AuthorityError::AlreadyRevoked(cap));
        }
        let cascade = rec.state == ProtocolState::Stable(AuthState::Modified);
        let mut affected = Vec::new();
        self.revoke_inner(cap, tick, &mut affected)?;
        let pending_acks = self.records[&cap].pending_acks.clone();
        Ok(RevocationRequest { root: cap, initiated_tick: tick, cascade, affected, pending_acks })
    }

    fn revoke_inner(
        &mut self,
        cap: CapId,
        tick: u64,
        affected: &mut Vec<(CapId, AgentId)>,
    ) -> Result<(), AuthorityError> {
        let rec = self.record(cap)?;
        if rec.is_revoked() {
            return Ok(()); // a descendant revoked earlier stays as it is
        }
        let (event, pending) = match rec.state {
            ProtocolState::Stable(AuthState::Modified) => {
                let delegee_holders: BTreeSet<AgentId> = self
                    .direct_delegees(cap)
                    .into_iter()
                    .map(|c| self.records[&c].holder)
                    .collect();
                (AuthEvent::RevokeCascade, delegee_holders)
            }
            ProtocolState::Stable(AuthState::Exclusive) | ProtocolState::Stable(AuthState::Shared) => {
                (AuthEvent::Revoke, BTreeSet::from([rec.holder]))
            }
            other => return Err(AuthorityError::InvalidSourceState { state: other }),
        };
        let next = self.table().apply(rec.state, event)?;
        let holder = rec.holder;
        {
            let r = self.records.get_mut(&cap).unwrap();
            r.state = next;
            r.revoked_tick = Some(tick);
            r.pending_acks = pending;
        }
        affected.push((cap, holder));
        for child in self.direct_delegees(cap) {
            self.revoke_inner(child, tick, affected)?;
        }
        Ok(())
    }

    /// Record an invalidation acknowledgement from `from` for `cap`. Resolves
    /// the record's own transient when the holder acknowledges, and counts
    /// toward the parent's cascade completion when one is waiting.
    pub fn acknowledge(&mut self, cap: CapId, from: AgentId) -> Result<(), AuthorityError> {
        let (own_state, holder, parent) = {
            let rec = self.record(cap)?;
            (rec.state, rec.holder, rec.parent)
        };
        use crate::coherence::TransientState::{Eia, Mic, Sia};
        if holder == from {
            if let ProtocolState::Transient(t @ (Eia | Sia)) = own_state {
                let next = self.table().apply(ProtocolState::Transient(t), AuthEvent::Ack)?;
                let r = self.records.get_mut(&cap).unwrap();
                r.state = next;
                r.pending_acks.remove(&from);
            }
        }
        if let Some(p) = parent {
            let parent_state = self.records.get(&p).map(|r| r.state);
            if parent_state == Some(ProtocolState::Transient(Mic)) {
                let r = self.records.get_mut(&p).unwrap();
                r.pending_acks.remove(&from);
                if r.pending_acks.is_empty() {
                    let next =
                        self.table().apply(ProtocolState::Transient(Mic), AuthEvent::AllAcks)?;
                    self.records.get_mut(&p).unwrap().state = next;
                }
            }
        }
        Ok(())
    }

    /// Answer an acquire (refresh) request against ground truth.
    pub fn process_acquire(
        &self,
        agent: AgentId,
        cap: CapId,
        _tick: u64,
    ) -> Result<AcquireResponse, AuthorityError> {
        let rec = self.record(cap)?;
        if rec.holder != agent {
            return Err(AuthorityError::NotHolder { cap, agent });
        }
        match rec.revoked_tick {
            Some(revoked_tick) => Ok(AcquireResponse::Denied { revoked_tick }),
            None => Ok(AcquireResponse::Granted),
        }
    }

    /// Single-writer check: per scope key, at most one delegate-capable
    /// record among live capabilities.
    pub fn single_writer_holds(&self) -> bool {
        let mut modified_by_key: BTreeMap<String, u32> = BTreeMap::new();
        for rec in self.records.values() {
            if rec.state == ProtocolState::Stable(AuthState::Modified) {
                *modified_by_key.entry(rec.scope.key()).or_insert(0) += 1;
            }
        }
        modified_by_key.values().all(|&n| n <= 1)
    }
}

/// Invalidation fan-out mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BroadcastMode {
    /// Every registered agent observes every invalidation.
    Snooping,
    /// Invalidations are addressed to current holders only.
    Directory,
}

/// Small fleets snoop; large fleets need directory addressing.
pub fn select_broadcast_mode(agent_count: usize) -> BroadcastMode {
    if agent_count <= 25 {
        BroadcastMode::Snooping
    } else {
        BroadcastMode::Directory
    }
}

/// Result of one trust update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustUpdate {
    pub score: f64,
    /// The agent's score sat below the threshold entering this tick; the
    /// caller should revoke everything the agent holds.
    pub triggered: bool,
}

/// Per-agent behavioral trust.
///
/// The threshold test reads the score as it stood at the end of the previous
/// tick, so detection acts on confirmed history rather than the tick still
/// in progress. A single anomalous tick is treated as an outlier and leaves
/// the score untouched; each further consecutive anomalous tick multiplies
/// the score by (1 - decay). Normal ticks recover the score linearly toward
/// full trust, which keeps one-off spikes from flapping an agent across the
/// revocation threshold.
#[derive(Debug, Clone)]
pub struct TrustScorer {
    threshold: f64,
    decay: f64,
    entries: BTreeMap<AgentId, TrustEntry>,
}

#[derive(Debug, Clone, Copy)]
struct TrustEntry {
    score: f64,
    prev_anomalous: bool,
}

const RECOVERY_STEP: f64 = 0.05;

impl TrustScorer {
    pub fn new(threshold: f64, decay: f64) -> Self {
        TrustScorer { threshold, decay, entries: BTreeMap::new() }
    }

    pub fn score(&self, agent: AgentId) -> f64 {
        self.entries.get(&agent).map_or(1.0, |e| e.score)
    }

    /// An observation is anomalous when it exceeds twice the expected rate.
    pub fn is_anomalous(observed_ops: u64, expected_rate: f64) -> bool {
        observed_ops as f64 > 2.0 * expected_rate
    }

    pub fn update(&mut self, agent: AgentId, observed_ops: u64, expected_rate: f64) -> TrustUpdate {
        let entry =
            self.entries.entry(agent).or_insert(TrustEntry { score: 1.0, prev_anomalous: false });
        let anomalous = Self::is_anomalous(observed_ops, expected_rate);
        let triggered = entry.score < self.threshold;
        if anomalous && entry.prev_anomalous {
            entry.score *= 1.0 - self.decay;
        } else if !anomalous {
            entry.score = (entry.score + RECOVERY_STEP).min(1.0);
        }
        entry.prev_anomalous = anomalous;
        TrustUpdate { score: entry.score, triggered }
    }
}

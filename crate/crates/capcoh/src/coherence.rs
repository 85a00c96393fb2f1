//! Authorization coherence protocol: states, events, and the transition table.
//!
//! A capability moves through four stable states that mirror the MESI cache
//! states one-to-one:
//!
//! * `Modified`  - held with delegation rights; sub-capabilities may exist
//! * `Exclusive` - sole valid holder, no delegation performed yet
//! * `Shared`    - one of several holders of a pooled, read-style credential
//! * `Invalid`   - revoked, expired, or exhausted; no operations permitted
//!
//! Revocation is not instantaneous: while an invalidation is in flight the
//! record sits in a transient state (`Eia`, `Sia`, `Mic`) until acknowledged.
//! Grants may also be routed through transients (`Isg`, `Ied`) when grant
//! delivery has nonzero latency; with instantaneous grants the direct rows
//! apply and those two states are off-path placeholders.
//!
//! The module also carries a fixed encoding of the hardware MESI protocol the
//! authorization table is shaped after, and [`verify_structural_equivalence`],
//! which checks by exhaustive enumeration that every hardware transition has a
//! counterpart here (possibly via a transient plus its completion event) and
//! reports which authorization events have no hardware analogue.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable authorization states. Order is the conventional MESI order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthState {
    /// Delegate-capable holder: read, write, and delegate are permitted.
    Modified,
    /// Sole holder: read and write are permitted, no delegation has occurred.
    Exclusive,
    /// Pooled holder: read-only, possibly many concurrent holders.
    Shared,
    /// No authority: the capability is revoked, expired, or never granted.
    Invalid,
}

/// In-flight states between a stable source and its stable target.
///
/// Naming follows "was X, heading to Y, awaiting Z": `Eia` is
/// Exclusive-to-Invalid awaiting Ack, `Mic` is Modified-to-Invalid awaiting
/// Cascade acknowledgements, `Isg`/`Ied` are grant deliveries in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransientState {
    /// Exclusive holder invalidating, single acknowledgement outstanding.
    Eia,
    /// Shared holder invalidating, acknowledgement outstanding.
    Sia,
    /// Delegate-capable holder invalidating; resolves when every direct
    /// delegee has acknowledged.
    Mic,
    /// Shared grant issued, delivery not yet confirmed.
    Isg,
    /// Exclusive grant issued, delivery not yet confirmed.
    Ied,
}

impl TransientState {
    /// Stable state the transient departed from.
    pub fn origin(self) -> AuthState {
        match self {
            TransientState::Eia => AuthState::Exclusive,
            TransientState::Sia => AuthState::Shared,
            TransientState::Mic => AuthState::Modified,
            TransientState::Isg | TransientState::Ied => AuthState::Invalid,
        }
    }

    /// Stable state reached once the awaited event arrives.
    pub fn target(self) -> AuthState {
        match self {
            TransientState::Eia | TransientState::Sia | TransientState::Mic => AuthState::Invalid,
            TransientState::Isg => AuthState::Shared,
            TransientState::Ied => AuthState::Exclusive,
        }
    }

    /// The single event that completes this transient.
    pub fn completion_event(self) -> AuthEvent {
        match self {
            TransientState::Eia | TransientState::Sia => AuthEvent::Ack,
            TransientState::Mic => AuthEvent::AllAcks,
            TransientState::Isg => AuthEvent::GrantShared,
            TransientState::Ied => AuthEvent::GrantExclusive,
        }
    }
}

/// Either a stable or a transient protocol state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolState {
    Stable(AuthState),
    Transient(TransientState),
}

impl ProtocolState {
    pub fn is_stable(self) -> bool {
        matches!(self, ProtocolState::Stable(_))
    }

    /// The stable state governing the holder's permissions: itself when
    /// stable, the origin state while a transition is in flight.
    pub fn governing_stable(self) -> AuthState {
        match self {
            ProtocolState::Stable(s) => s,
            ProtocolState::Transient(t) => t.origin(),
        }
    }
}

impl From<AuthState> for ProtocolState {
    fn from(s: AuthState) -> Self {
        ProtocolState::Stable(s)
    }
}

impl From<TransientState> for ProtocolState {
    fn from(t: TransientState) -> Self {
        ProtocolState::Transient(t)
    }
}

impl fmt::Display for ProtocolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolState::Stable(s) => write!(f, "{s:?}"),
            ProtocolState::Transient(t) => write!(f, "{t:?}"),
        }
    }
}

/// Protocol events. Grants and revocations are externally driven; `Ack` and
/// `AllAcks` complete transients; `Exhaust` and `Expire` are self-invalidation
/// events with no hardware counterpart; `Introspect` is a pure query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthEvent {
    GrantShared,
    GrantExclusive,
    Delegate,
    Revoke,
    RevokeCascade,
    Ack,
    AllAcks,
    Exhaust,
    Expire,
    Introspect,
}

/// Operations a holder may perform, determined solely by the stable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Read,
    Write,
    Delegate,
}

/// Set of permitted operations for one stable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermittedOps {
    pub state: AuthState,
    ops: u8,
}

const OP_BITS: [(OpKind, u8); 3] = [
    (OpKind::Read, 0b001),
    (OpKind::Write, 0b010),
    (OpKind::Delegate, 0b100),
];

fn op_bit(op: OpKind) -> u8 {
    OP_BITS.iter().find(|(o, _)| *o == op).map(|(_, b)| *b).unwrap()
}

impl PermittedOps {
    pub fn contains(&self, op: OpKind) -> bool {
        self.ops & op_bit(op) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.ops == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = OpKind> + '_ {
        OP_BITS.iter().filter(|(_, b)| self.ops & b != 0).map(|(o, _)| *o)
    }
}

impl AuthState {
    /// Permission sets: Invalid grants nothing, Shared reads, Exclusive reads
    /// and writes, Modified additionally delegates.
    pub fn permitted_ops(self) -> PermittedOps {
        let ops = match self {
            AuthState::Invalid => 0b000,
            AuthState::Shared => 0b001,
            AuthState::Exclusive => 0b011,
            AuthState::Modified => 0b111,
        };
        PermittedOps { state: self, ops }
    }
}

/// Permission lookup over the full state space. Transient states are
/// rejected: operations during a transient are governed by the holding
/// agent's last stable state, which the caller must consult instead.
pub fn permitted_ops(state: ProtocolState) -> Result<PermittedOps, CoherenceError> {
    match state {
        ProtocolState::Stable(s) => Ok(s.permitted_ops()),
        ProtocolState::Transient(t) => Err(CoherenceError::TransientPermissionQuery { state: t }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoherenceError {
    #[error("no transition from {from} on {event:?}")]
    InvalidTransition { from: ProtocolState, event: AuthEvent },
    #[error("permissions queried on transient state {state:?}; use the last stable state")]
    TransientPermissionQuery { state: TransientState },
}

/// How grants to an `Invalid` holder are routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantRouting {
    /// Grants take effect immediately: I moves straight to S or E.
    Direct,
    /// Grant delivery has latency: I moves through Isg/Ied until the issued
    /// credential arrives.
    InFlight,
}

/// The authorization transition relation as data: a total function from
/// (state, event) pairs to successors for listed rows, rejection otherwise.
///
/// Keeping the table as data rather than a match lets callers remove rows to
/// probe the equivalence verifier and lets tests walk the transition graph.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    rows: BTreeMap<(ProtocolState, AuthEvent), ProtocolState>,
}

use AuthState::{Exclusive as E, Invalid as I, Modified as M, Shared as S};
use TransientState::{Eia, Ied, Isg, Mic, Sia};

impl TransitionTable {
    /// Build the table under the given grant routing. Panics if a duplicate
    /// (state, event) row would make the relation non-functional.
    pub fn new(routing: GrantRouting) -> Self {
        let mut rows: Vec<((ProtocolState, AuthEvent), ProtocolState)> = vec![
            ((E.into(), AuthEvent::Delegate), M.into()),
            ((E.into(), AuthEvent::Revoke), Eia.into()),
            ((Eia.into(), AuthEvent::Ack), I.into()),
            ((S.into(), AuthEvent::Revoke), Sia.into()),
            ((Sia.into(), AuthEvent::Ack), I.into()),
            ((M.into(), AuthEvent::RevokeCascade), Mic.into()),
            ((Mic.into(), AuthEvent::AllAcks), I.into()),
            ((S.into(), AuthEvent::Exhaust), I.into()),
            ((S.into(), AuthEvent::Expire), I.into()),
            // Completion rows for in-flight grants. Reachable only under
            // InFlight routing, but harmless and well-defined under Direct.
            ((Isg.into(), AuthEvent::GrantShared), S.into()),
            ((Ied.into(), AuthEvent::GrantExclusive), E.into()),
        ];
        match routing {
            GrantRouting::Direct => {
                rows.push(((I.into(), AuthEvent::GrantShared), S.into()));
                rows.push(((I.into(), AuthEvent::GrantExclusive), E.into()));
            }
            GrantRouting::InFlight => {
                rows.push(((I.into(), AuthEvent::GrantShared), Isg.into()));
                rows.push(((I.into(), AuthEvent::GrantExclusive), Ied.into()));
            }
        }
        let mut map = BTreeMap::new();
        for (key, to) in rows {
            let prior = map.insert(key, to);
            assert!(prior.is_none(), "duplicate transition row for {key:?}");
        }
        TransitionTable { rows: map }
    }

    /// The table used everywhere in the simulator: direct grant routing.
    pub fn canonical() -> &'static TransitionTable {
        use std::sync::OnceLock;
        static TABLE: OnceLock<TransitionTable> = OnceLock::new();
        TABLE.get_or_init(|| TransitionTable::new(GrantRouting::Direct))
    }

    /// Apply one event. `Introspect` is a query and never changes state; any
    /// (state, event) pair without a row is a protocol violation.
    pub fn apply(
        &self,
        state: ProtocolState,
        event: AuthEvent,
    ) -> Result<ProtocolState, CoherenceError> {
        if event == AuthEvent::Introspect {
            return Ok(state);
        }
        self.rows
            .get(&(state, event))
            .copied()
            .ok_or(CoherenceError::InvalidTransition { from: state, event })
    }

    /// A copy with one row removed. Diagnostic helper for exercising the
    /// equivalence verifier against a broken table.
    pub fn without_row(&self, from: ProtocolState, event: AuthEvent) -> TransitionTable {
        let mut rows = self.rows.clone();
        rows.remove(&(from, event));
        TransitionTable { rows }
    }

    /// All rows in deterministic order.
    pub fn rows(&self) -> impl Iterator<Item = (ProtocolState, AuthEvent, ProtocolState)> + '_ {
        self.rows.iter().map(|(&(from, ev), &to)| (from, ev, to))
    }
}

/// Convenience wrapper over the canonical table.
pub fn transition(state: ProtocolState, event: AuthEvent) -> Result<ProtocolState, CoherenceError> {
    TransitionTable::canonical().apply(state, event)
}

// ---------------------------------------------------------------------------
// Hardware side
// ---------------------------------------------------------------------------

/// Cache-line states of the hardware protocol this design is mapped from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HwMesiState {
    Modified,
    Exclusive,
    Shared,
    Invalid,
}

/// Bus events of the hardware protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HwMesiEvent {
    /// Read request filling a line for shared access.
    BusRd,
    /// Read-for-ownership filling a line for exclusive access.
    BusRdX,
    /// Observed invalidation: another party claims ownership.
    SnoopInvalidate,
    /// Ownership handoff of a dirty line.
    WriteBack,
}

/// State correspondence: the identity on the four-state lattice.
pub fn phi(hw: HwMesiState) -> AuthState {
    match hw {
        HwMesiState::Modified => AuthState::Modified,
        HwMesiState::Exclusive => AuthState::Exclusive,
        HwMesiState::Shared => AuthState::Shared,
        HwMesiState::Invalid => AuthState::Invalid,
    }
}

/// Event correspondence. `SnoopInvalidate` maps to plain `Revoke`; on a
/// delegate-capable (`Modified`) line the verifier widens it to the cascade
/// refinement, since invalidating a line with children invalidates the
/// children too.
pub fn map_hw_event(hw: HwMesiEvent) -> AuthEvent {
    match hw {
        HwMesiEvent::BusRd => AuthEvent::GrantShared,
        HwMesiEvent::BusRdX => AuthEvent::GrantExclusive,
        HwMesiEvent::SnoopInvalidate => AuthEvent::Revoke,
        HwMesiEvent::WriteBack => AuthEvent::Delegate,
    }
}

/// The hardware transition set, fixed at build time. Every (state, event)
/// pair not listed is invalid in the encoded protocol.
#[derive(Debug, Clone)]
pub struct HwTable {
    rows: Vec<(HwMesiState, HwMesiEvent, HwMesiState)>,
}

impl HwTable {
    pub fn canonical() -> HwTable {
        use HwMesiEvent::*;
        use HwMesiState::*;
        HwTable {
            rows: vec![
                (Invalid, BusRd, Shared),
                (Invalid, BusRdX, Exclusive),
                (Exclusive, WriteBack, Modified),
                (Exclusive, SnoopInvalidate, Invalid),
                (Shared, SnoopInvalidate, Invalid),
                (Modified, SnoopInvalidate, Invalid),
            ],
        }
    }

    pub fn rows(&self) -> &[(HwMesiState, HwMesiEvent, HwMesiState)] {
        &self.rows
    }
}

/// How one hardware transition was matched in the authorization table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchRoute {
    /// A single authorization row covers it.
    Direct,
    /// Covered by entering a transient and applying its completion event.
    ViaTransient { transient: TransientState, completion: AuthEvent },
}

#[derive(Debug, Clone)]
pub struct MatchedTransition {
    pub hw: (HwMesiState, HwMesiEvent, HwMesiState),
    pub auth_event: AuthEvent,
    pub route: MatchRoute,
}

/// Result of the exhaustive structural check.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// True when every hardware transition has an authorization counterpart.
    pub verdict: bool,
    pub matched: Vec<MatchedTransition>,
    /// Hardware transitions with no accepted image.
    pub missing: Vec<(HwMesiState, HwMesiEvent, HwMesiState)>,
    /// Authorization events applicable from stable states that no hardware
    /// event maps onto: the pure-authorization extensions.
    pub authorization_only: Vec<AuthEvent>,
}

/// Candidate authorization events for one hardware event: the mapped event,
/// widened to the cascade refinement for invalidations (which of the two
/// applies depends on whether the holder has delegated).
fn hw_event_candidates(hw: HwMesiEvent) -> Vec<AuthEvent> {
    let mut cands = vec![map_hw_event(hw)];
    if hw == HwMesiEvent::SnoopInvalidate {
        cands.push(AuthEvent::RevokeCascade);
    }
    cands
}

/// Enumerate every valid hardware transition and check that its image under
/// `phi` / `map_hw_event` is accepted by the authorization table, either
/// directly or via a transient state followed by that transient's completion
/// event. The report records the route for each match, lists any misses, and
/// flags the authorization events that exist on no hardware path.
pub fn verify_structural_equivalence(auth: &TransitionTable, hw: &HwTable) -> EquivalenceReport {
    let mut matched = Vec::new();
    let mut missing = Vec::new();

    for &(s1, ev, s2) in hw.rows() {
        let from: ProtocolState = phi(s1).into();
        let want: ProtocolState = phi(s2).into();
        let mut hit = None;
        'search: for cand in hw_event_candidates(ev) {
            match auth.apply(from, cand) {
                Ok(next) if next == want => {
                    hit = Some(MatchedTransition {
                        hw: (s1, ev, s2),
                        auth_event: cand,
                        route: MatchRoute::Direct,
                    });
                    break 'search;
                }
                Ok(ProtocolState::Transient(t)) => {
                    if auth.apply(t.into(), t.completion_event()) == Ok(want) {
                        hit = Some(MatchedTransition {
                            hw: (s1, ev, s2),
                            auth_event: cand,
                            route: MatchRoute::ViaTransient {
                                transient: t,
                                completion: t.completion_event(),
                            },
                        });
                        break 'search;
                    }
                }
                _ => {}
            }
        }
        match hit {
            Some(m) => matched.push(m),
            None => missing.push((s1, ev, s2)),
        }
    }

    // Events reachable from stable states in the authorization table that no
    // hardware event can produce. Completion events belong to transients and
    // are excluded by construction.
    let hw_image: Vec<AuthEvent> = [
        HwMesiEvent::BusRd,
        HwMesiEvent::BusRdX,
        HwMesiEvent::SnoopInvalidate,
        HwMesiEvent::WriteBack,
    ]
    .into_iter()
    .flat_map(hw_event_candidates)
    .collect();
    let mut authorization_only: Vec<AuthEvent> = auth
        .rows()
        .filter(|(from, _, _)| from.is_stable())
        .map(|(_, ev, _)| ev)
        .filter(|ev| !hw_image.contains(ev))
        .collect();
    authorization_only.sort();
    authorization_only.dedup();

    EquivalenceReport { verdict: missing.is_empty(), matched, missing, authorization_only }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(state: impl Into<ProtocolState>, event: AuthEvent) -> Result<ProtocolState, CoherenceError> {
        transition(state.into(), event)
    }

    #[test]
    fn grant_rows_reach_shared_and_exclusive() {
        assert_eq!(t(I, AuthEvent::GrantShared), Ok(S.into()));
        assert_eq!(t(I, AuthEvent::GrantExclusive), Ok(E.into()));
    }

    #[test]
    fn delegation_promotes_exclusive_to_modified() {
        assert_eq!(t(E, AuthEvent::Delegate), Ok(M.into()));
    }

    #[test]
    fn revocation_routes_through_transients() {
        assert_eq!(t(E, AuthEvent::Revoke), Ok(Eia.into()));
        assert_eq!(t(Eia, AuthEvent::Ack), Ok(I.into()));
        assert_eq!(t(S, AuthEvent::Revoke), Ok(Sia.into()));
        assert_eq!(t(Sia, AuthEvent::Ack), Ok(I.into()));
        assert_eq!(t(M, AuthEvent::RevokeCascade), Ok(Mic.into()));
        assert_eq!(t(Mic, AuthEvent::AllAcks), Ok(I.into()));
    }

    #[test]
    fn shared_self_invalidates_on_exhaust_and_expire() {
        assert_eq!(t(S, AuthEvent::Exhaust), Ok(I.into()));
        assert_eq!(t(S, AuthEvent::Expire), Ok(I.into()));
    }

    #[test]
    fn unlisted_pairs_are_rejected() {
        assert!(matches!(
            t(I, AuthEvent::Delegate),
            Err(CoherenceError::InvalidTransition { .. })
        ));
        assert!(t(S, AuthEvent::Delegate).is_err());
        assert!(t(M, AuthEvent::Revoke).is_err());
        assert!(t(E, AuthEvent::Exhaust).is_err());
        assert!(t(I, AuthEvent::Ack).is_err());
    }

    #[test]
    fn introspect_is_identity_everywhere() {
        for state in all_states() {
            assert_eq!(t(state, AuthEvent::Introspect), Ok(state));
        }
    }

    #[test]
    fn every_transient_has_one_completion_to_stable() {
        let table = TransitionTable::canonical();
        for tr in [Eia, Sia, Mic, Isg, Ied] {
            let outgoing: Vec<_> = table
                .rows()
                .filter(|(from, _, _)| *from == ProtocolState::Transient(tr))
                .collect();
            assert_eq!(outgoing.len(), 1, "{tr:?} must have exactly one completion row");
            let (_, ev, to) = outgoing[0];
            assert_eq!(ev, tr.completion_event());
            assert_eq!(to, ProtocolState::Stable(tr.target()));
        }
    }

    #[test]
    fn modified_is_reachable_only_by_delegation_from_exclusive() {
        let table = TransitionTable::canonical();
        let incoming: Vec<_> = table
            .rows()
            .filter(|(_, _, to)| *to == ProtocolState::Stable(M))
            .collect();
        assert_eq!(incoming, vec![(E.into(), AuthEvent::Delegate, M.into())]);
    }

    #[test]
    fn in_flight_routing_threads_grants_through_placeholders() {
        let table = TransitionTable::new(GrantRouting::InFlight);
        assert_eq!(table.apply(I.into(), AuthEvent::GrantShared), Ok(Isg.into()));
        assert_eq!(table.apply(Isg.into(), AuthEvent::GrantShared), Ok(S.into()));
        assert_eq!(table.apply(I.into(), AuthEvent::GrantExclusive), Ok(Ied.into()));
        assert_eq!(table.apply(Ied.into(), AuthEvent::GrantExclusive), Ok(E.into()));
    }

    #[test]
    fn permitted_ops_follow_the_state_lattice() {
        assert!(AuthState::Invalid.permitted_ops().is_empty());
        let shared = AuthState::Shared.permitted_ops();
        assert!(shared.contains(OpKind::Read));
        assert!(!shared.contains(OpKind::Write));
        let excl = AuthState::Exclusive.permitted_ops();
        assert!(excl.contains(OpKind::Read) && excl.contains(OpKind::Write));
        assert!(!excl.contains(OpKind::Delegate));
        let modif = AuthState::Modified.permitted_ops();
        assert!(
            modif.contains(OpKind::Read)
                && modif.contains(OpKind::Write)
                && modif.contains(OpKind::Delegate)
        );
        assert_eq!(modif.iter().count(), 3);
    }

    #[test]
    fn permission_query_rejects_transients() {
        assert!(permitted_ops(E.into()).is_ok());
        assert!(matches!(
            permitted_ops(Eia.into()),
            Err(CoherenceError::TransientPermissionQuery { state: Eia })
        ));
        assert_eq!(ProtocolState::Transient(Eia).governing_stable(), E);
    }

    #[test]
    fn hardware_enumeration_passes_with_transient_routes_recorded() {
        let report =
            verify_structural_equivalence(TransitionTable::canonical(), &HwTable::canonical());
        assert!(report.verdict);
        assert!(report.missing.is_empty());
        assert_eq!(report.matched.len(), HwTable::canonical().rows().len());

        let route_of = |s: HwMesiState, e: HwMesiEvent| {
            report
                .matched
                .iter()
                .find(|m| m.hw.0 == s && m.hw.1 == e)
                .map(|m| (m.auth_event, m.route))
                .unwrap()
        };
        assert_eq!(
            route_of(HwMesiState::Invalid, HwMesiEvent::BusRd),
            (AuthEvent::GrantShared, MatchRoute::Direct)
        );
        assert_eq!(
            route_of(HwMesiState::Exclusive, HwMesiEvent::SnoopInvalidate),
            (
                AuthEvent::Revoke,
                MatchRoute::ViaTransient { transient: Eia, completion: AuthEvent::Ack }
            )
        );
        assert_eq!(
            route_of(HwMesiState::Modified, HwMesiEvent::SnoopInvalidate),
            (
                AuthEvent::RevokeCascade,
                MatchRoute::ViaTransient { transient: Mic, completion: AuthEvent::AllAcks }
            )
        );
    }

    #[test]
    fn exhaust_and_expire_are_flagged_as_authorization_only() {
        let report =
            verify_structural_equivalence(TransitionTable::canonical(), &HwTable::canonical());
        assert_eq!(report.authorization_only, vec![AuthEvent::Exhaust, AuthEvent::Expire]);
    }

    #[test]
    fn corrupted_table_fails_with_one_missing_triple() {
        let broken = TransitionTable::canonical().without_row(I.into(), AuthEvent::GrantShared);
        let report = verify_structural_equivalence(&broken, &HwTable::canonical());
        assert!(!report.verdict);
        assert_eq!(
            report.missing,
            vec![(HwMesiState::Invalid, HwMesiEvent::BusRd, HwMesiState::Shared)]
        );
    }

    fn all_states() -> Vec<ProtocolState> {
        let mut v: Vec<ProtocolState> = [M, E, S, I].into_iter().map(Into::into).collect();
        v.extend([Eia, Sia, Mic, Isg, Ied].into_iter().map(ProtocolState::from));
        v
    }

    fn all_events() -> Vec<AuthEvent> {
        vec![
            AuthEvent::GrantShared,
            AuthEvent::GrantExclusive,
            AuthEvent::Delegate,
            AuthEvent::Revoke,
            AuthEvent::RevokeCascade,
            AuthEvent::Ack,
            AuthEvent::AllAcks,
            AuthEvent::Exhaust,
            AuthEvent::Expire,
            AuthEvent::Introspect,
        ]
    }

    #[test]
    fn transition_is_total_over_the_domain() {
        // Every pair either produces a successor or a structured rejection,
        // and successors agree with the table rows exactly.
        let table = TransitionTable::canonical();
        let mut accepted = 0;
        for state in all_states() {
            for event in all_events() {
                match table.apply(state, event) {
                    Ok(next) => {
                        if event == AuthEvent::Introspect {
                            assert_eq!(next, state);
                        } else {
                            accepted += 1;
                            assert!(table.rows().any(|(f, e, t2)| (f, e, t2) == (state, event, next)));
                        }
                    }
                    Err(CoherenceError::InvalidTransition { from, event: ev }) => {
                        assert_eq!(from, state);
                        assert_eq!(ev, event);
                    }
                    Err(other) => panic!("unexpected error {other:?}"),
                }
            }
        }
        assert_eq!(accepted, table.rows().count());
    }
}

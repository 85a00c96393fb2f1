//! Capability coherence: authorization as a cache coherence problem.
//!
//! Delegated credentials behave like cache lines: every token an agent holds
//! is a cached copy of a permission, and revocation is an invalidation that
//! must propagate. This crate carries that structure end to end:
//!
//! - [`coherence`]: the four-state authorization protocol (M/E/S/I plus
//!   in-flight transients), its transition table, and a structural
//!   equivalence check against the hardware protocol it mirrors.
//! - [`strategy`]: the four revocation strategies and their closed-form
//!   damage bounds.
//! - [`authority`]: the registry of record, delegation DAG, cascade
//!   revocation, and behavioral trust scoring.
//! - [`agent`]: holder-side cached views and per-strategy local hooks.
//! - [`sim`]: the deterministic tick simulator that drives all of the above.
//! - [`metrics`]: per-run traces, damage accounting, and cross-seed
//!   aggregation.

pub mod agent;
pub mod authority;
pub mod coherence;
pub mod metrics;
pub mod sim;
pub mod strategy;

pub use agent::{ActionModel, AgentView, AttemptOutcome, BurstProfile};
pub use authority::{AgentId, BroadcastMode, CapId, Registry, ScopeSet, TrustScorer};
pub use coherence::{AuthEvent, AuthState, ProtocolState, TransitionTable, TransientState};
pub use metrics::{AggregateMetrics, RunResult};
pub use sim::{run, run_batch, RevocationTrigger, ScenarioConfig, World};
pub use strategy::{predicted_bound, rcc_overhead, velocity_vulnerability, StrategyKind, StrategyParams};

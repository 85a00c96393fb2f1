//! Revocation strategies and their damage bounds.
//!
//! Each strategy bounds the number of operations a holder can execute after
//! ground-truth revocation, before its cached view catches up:
//!
//! * eager:  v * network_latency          (push invalidation, wait for acks)
//! * lazy:   v * (revalidation + check_interval)  (periodic check-on-use)
//! * lease:  v * ttl                      (self-expiry, no network traffic)
//! * rcc:    n                            (execution budget; velocity-free)
//!
//! `v` is the holder's operation velocity in ops per tick. The rcc bound is
//! the one bound that does not scale with `v`: a credential dies after at
//! most `n` uses no matter how fast the holder runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Eager,
    Lazy,
    Lease,
    Rcc,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::Eager, StrategyKind::Lazy, StrategyKind::Lease, StrategyKind::Rcc];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Eager => "eager",
            StrategyKind::Lazy => "lazy",
            StrategyKind::Lease => "lease",
            StrategyKind::Rcc => "rcc",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eager" => Ok(StrategyKind::Eager),
            "lazy" => Ok(StrategyKind::Lazy),
            "lease" => Ok(StrategyKind::Lease),
            "rcc" => Ok(StrategyKind::Rcc),
            other => Err(StrategyError::UnknownStrategy { label: other.to_string() }),
        }
    }
}

/// Parameters the bounds draw on. Only the fields a strategy needs must be
/// present; `validate_for` enforces that per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub ttl_ticks: Option<u64>,
    pub budget_n: Option<u64>,
    pub check_interval_ticks: Option<u64>,
    pub network_latency_ticks: u64,
    /// Ticks for a check or exhaustion round-trip to resolve.
    pub revalidation_ticks: u64,
}

impl StrategyParams {
    pub fn new(network_latency_ticks: u64) -> Self {
        StrategyParams {
            ttl_ticks: None,
            budget_n: None,
            check_interval_ticks: None,
            network_latency_ticks,
            revalidation_ticks: 1,
        }
    }

    pub fn with_ttl(mut self, ttl: u64) -> Self {
        self.ttl_ticks = Some(ttl);
        self
    }

    pub fn with_budget(mut self, n: u64) -> Self {
        self.budget_n = Some(n);
        self
    }

    pub fn with_check_interval(mut self, interval: u64) -> Self {
        self.check_interval_ticks = Some(interval);
        self
    }

    /// Check that every parameter `kind` relies on is present and positive.
    pub fn validate_for(&self, kind: StrategyKind) -> Result<(), StrategyError> {
        let missing = |param: &'static str| StrategyError::MissingParam { kind, param };
        match kind {
            StrategyKind::Eager => Ok(()),
            StrategyKind::Lazy => match self.check_interval_ticks {
                Some(i) if i > 0 => Ok(()),
                _ => Err(missing("check_interval_ticks")),
            },
            StrategyKind::Lease => match self.ttl_ticks {
                Some(t) if t > 0 => Ok(()),
                _ => Err(missing("ttl_ticks")),
            },
            StrategyKind::Rcc => match self.budget_n {
                Some(n) if n > 0 => Ok(()),
                _ => Err(missing("budget_n")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("{kind} strategy requires parameter {param}")]
    MissingParam { kind: StrategyKind, param: &'static str },
    #[error("unknown strategy '{label}'")]
    UnknownStrategy { label: String },
    #[error("unknown agent context '{label}'")]
    UnknownContext { label: String },
    #[error("execution budget must be positive")]
    ZeroBudget,
}

/// Worst-case post-revocation operations for one capability under `kind`,
/// at holder velocity `velocity` ops per tick.
pub fn predicted_bound(
    kind: StrategyKind,
    params: &StrategyParams,
    velocity: u64,
) -> Result<u64, StrategyError> {
    params.validate_for(kind)?;
    Ok(match kind {
        StrategyKind::Eager => velocity * params.network_latency_ticks,
        StrategyKind::Lazy => {
            velocity * (params.revalidation_ticks + params.check_interval_ticks.unwrap())
        }
        StrategyKind::Lease => velocity * params.ttl_ticks.unwrap(),
        StrategyKind::Rcc => params.budget_n.unwrap(),
    })
}

/// Damage exposure of a pure-lease deployment: operations executable against
/// a revoked credential before its ttl runs out.
pub fn velocity_vulnerability(velocity: u64, ttl_ticks: u64) -> u64 {
    velocity * ttl_ticks
}

/// Amortized cost of budget-counted credentials: one revalidation round-trip
/// every `n` operations. `n` must be positive.
pub fn rcc_overhead(revalidation_cost: f64, n: u64) -> Result<f64, StrategyError> {
    if n == 0 {
        return Err(StrategyError::ZeroBudget);
    }
    Ok(revalidation_cost / n as f64)
}

/// Workload contexts for heterogeneous deployments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentContext {
    /// Low tolerance for stale authority; pays the broadcast cost.
    Financial,
    /// Bulk batch work; self-expiry is cheap and good enough.
    CrmBulk,
    /// Periodic refresh fits read-heavy reporting loads.
    Analytics,
    /// High request velocity; only a budget bound stays finite.
    HighVelocityApi,
}

impl FromStr for AgentContext {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "financial" => Ok(AgentContext::Financial),
            "crm_bulk" => Ok(AgentContext::CrmBulk),
            "analytics" => Ok(AgentContext::Analytics),
            "high_velocity_api" => Ok(AgentContext::HighVelocityApi),
            other => Err(StrategyError::UnknownContext { label: other.to_string() }),
        }
    }
}

/// Strategy a workload class should run under.
pub fn assign_strategy(context: AgentContext) -> StrategyKind {
    match context {
        AgentContext::Financial => StrategyKind::Eager,
        AgentContext::CrmBulk => StrategyKind::Lease,
        AgentContext::Analytics => StrategyKind::Lazy,
        AgentContext::HighVelocityApi => StrategyKind::Rcc,
    }
}

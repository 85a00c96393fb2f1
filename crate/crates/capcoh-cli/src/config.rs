//! Scenario config files: a flat `key: value` format, one parameter per
//! line, `#` comments. Exactly the thirteen scenario parameters are
//! recognized; anything else is an error, as is a missing required key. The
//! scenario takes its name from the file stem.
//!
//! ```text
//! # CRM bulk export
//! agents: 1
//! action_model: det:100
//! revocation_trigger: 0
//! seeds: [0, 1, 2]
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use capcoh::sim::{RevocationTrigger, ScenarioConfig};
use capcoh::{ActionModel, BurstProfile};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected 'key: value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("missing required key '{key}'")]
    MissingKey { key: String },
}

const KEYS: &[&str] = &[
    "agents",
    "delegation_depth",
    "action_model",
    "seeds",
    "network_latency_ticks",
    "revocation_trigger",
    "ttl_ticks",
    "exec_count_n",
    "lazy_check_interval",
    "anomaly_burst",
    "trust_threshold",
    "trust_decay",
    "duration_ticks",
];

/// The one key a scenario may omit: not every scenario has a burst.
const OPTIONAL: &[&str] = &["anomaly_burst"];

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_config(&text, &name)
}

pub fn parse_config(text: &str, name: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut values: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(ConfigError::Malformed { line: line_no, text: raw.trim().to_string() });
        };
        let key = key.trim();
        let value = value.trim().to_string();
        let Some(&canonical) = KEYS.iter().find(|&&k| k == key) else {
            return Err(ConfigError::UnknownKey { line: line_no, key: key.to_string() });
        };
        if values.insert(canonical, (line_no, value)).is_some() {
            return Err(ConfigError::DuplicateKey { line: line_no, key: key.to_string() });
        }
    }
    for &key in KEYS {
        if !values.contains_key(key) && !OPTIONAL.contains(&key) {
            return Err(ConfigError::MissingKey { key: key.to_string() });
        }
    }

    let field = |key: &str| -> (usize, &str) {
        let (line, v) = &values[key];
        (*line, v.as_str())
    };
    let bad = |line: usize, key: &str, message: String| ConfigError::BadValue {
        line,
        key: key.to_string(),
        message,
    };
    fn int(pair: (usize, &str), key: &str) -> Result<u64, ConfigError> {
        pair.1.parse().map_err(|_| ConfigError::BadValue {
            line: pair.0,
            key: key.to_string(),
            message: format!("expected an integer, got '{}'", pair.1),
        })
    }
    fn float(pair: (usize, &str), key: &str) -> Result<f64, ConfigError> {
        pair.1.parse().map_err(|_| ConfigError::BadValue {
            line: pair.0,
            key: key.to_string(),
            message: format!("expected a number, got '{}'", pair.1),
        })
    }

    let action_model = {
        let (line, v) = field("action_model");
        if let Some(rate) = v.strip_prefix("det:") {
            let ops = rate.trim().parse().map_err(|_| {
                bad(line, "action_model", format!("expected det:<ops per tick>, got '{v}'"))
            })?;
            ActionModel::Deterministic { ops_per_tick: ops }
        } else if let Some(p) = v.strip_prefix("bernoulli:") {
            let p = p.trim().parse().map_err(|_| {
                bad(line, "action_model", format!("expected bernoulli:<probability>, got '{v}'"))
            })?;
            ActionModel::Bernoulli { p }
        } else {
            return Err(bad(
                line,
                "action_model",
                format!("expected det:<rate> or bernoulli:<p>, got '{v}'"),
            ));
        }
    };

    let seeds = {
        let (line, v) = field("seeds");
        let inner = v
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| bad(line, "seeds", format!("expected [s0, s1, ...], got '{v}'")))?;
        let mut seeds = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            seeds.push(part.parse().map_err(|_| {
                bad(line, "seeds", format!("'{part}' is not an integer seed"))
            })?);
        }
        if seeds.is_empty() {
            return Err(bad(line, "seeds", "at least one seed is required".to_string()));
        }
        seeds
    };

    let revocation_trigger = {
        let (line, v) = field("revocation_trigger");
        if v == "auto" {
            RevocationTrigger::TrustAuto
        } else {
            RevocationTrigger::AtTick(v.parse().map_err(|_| {
                bad(line, "revocation_trigger", format!("expected a tick or 'auto', got '{v}'"))
            })?)
        }
    };

    let anomaly_burst = match values.get("anomaly_burst") {
        None => None,
        Some((_, v)) if v == "none" => None,
        Some((line, v)) => {
            let Some((rate, start)) = v.split_once('@') else {
                return Err(bad(
                    *line,
                    "anomaly_burst",
                    format!("expected <ops per tick>@<start tick> or none, got '{v}'"),
                ));
            };
            let ops_per_tick = rate.trim().parse().map_err(|_| {
                bad(*line, "anomaly_burst", format!("'{}' is not an integer rate", rate.trim()))
            })?;
            let start_tick = start.trim().parse().map_err(|_| {
                bad(*line, "anomaly_burst", format!("'{}' is not an integer tick", start.trim()))
            })?;
            Some(BurstProfile { ops_per_tick, start_tick })
        }
    };

    Ok(ScenarioConfig {
        name: name.to_string(),
        agent_count: int(field("agents"), "agents")? as u32,
        delegation_depth: int(field("delegation_depth"), "delegation_depth")? as u32,
        action_model,
        seeds,
        network_latency_ticks: int(field("network_latency_ticks"), "network_latency_ticks")?,
        revocation_trigger,
        ttl_ticks: int(field("ttl_ticks"), "ttl_ticks")?,
        budget_n: int(field("exec_count_n"), "exec_count_n")?,
        check_interval_ticks: int(field("lazy_check_interval"), "lazy_check_interval")?,
        anomaly_burst,
        trust_threshold: float(field("trust_threshold"), "trust_threshold")?,
        trust_decay: float(field("trust_decay"), "trust_decay")?,
        duration_ticks: int(field("duration_ticks"), "duration_ticks")?,
    })
}

/// Emit a config in the canonical file form. `load_config` on the output
/// reproduces the input (given a file named after the scenario).
pub fn write_config(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scenario: {}", config.name);
    let _ = writeln!(out, "agents: {}", config.agent_count);
    let _ = writeln!(out, "delegation_depth: {}", config.delegation_depth);
    let model = match config.action_model {
        ActionModel::Deterministic { ops_per_tick } => format!("det:{ops_per_tick}"),
        ActionModel::Bernoulli { p } => format!("bernoulli:{p}"),
    };
    let _ = writeln!(out, "action_model: {model}");
    let seeds: Vec<String> = config.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds: [{}]", seeds.join(", "));
    let _ = writeln!(out, "network_latency_ticks: {}", config.network_latency_ticks);
    let trigger = match config.revocation_trigger {
        RevocationTrigger::AtTick(t) => t.to_string(),
        RevocationTrigger::TrustAuto => "auto".to_string(),
    };
    let _ = writeln!(out, "revocation_trigger: {trigger}");
    let _ = writeln!(out, "ttl_ticks: {}", config.ttl_ticks);
    let _ = writeln!(out, "exec_count_n: {}", config.budget_n);
    let _ = writeln!(out, "lazy_check_interval: {}", config.check_interval_ticks);
    let burst = match config.anomaly_burst {
        Some(b) => format!("{}@{}", b.ops_per_tick, b.start_tick),
        None => "none".to_string(),
    };
    let _ = writeln!(out, "anomaly_burst: {burst}");
    let _ = writeln!(out, "trust_threshold: {}", config.trust_threshold);
    let _ = writeln!(out, "trust_decay: {}", config.trust_decay);
    let _ = writeln!(out, "duration_ticks: {}", config.duration_ticks);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_bundled_scenario() {
        for config in [ScenarioConfig::banking(), ScenarioConfig::crm(), ScenarioConfig::anomaly()]
        {
            let text = write_config(&config);
            let parsed = parse_config(&text, &config.name).unwrap();
            assert_eq!(parsed, config);
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = write_config(&ScenarioConfig::crm());
        let noisy = format!("# leading comment\n\n{text}\n  # trailing\n");
        assert_eq!(parse_config(&noisy, "crm").unwrap(), ScenarioConfig::crm());
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let text = format!("{}wombat: 7\n", write_config(&ScenarioConfig::crm()));
        match parse_config(&text, "crm") {
            Err(ConfigError::UnknownKey { line, key }) => {
                assert_eq!(key, "wombat");
                assert_eq!(line, 15);
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_keys_are_named() {
        let text: String = write_config(&ScenarioConfig::crm())
            .lines()
            .filter(|l| !l.starts_with("duration_ticks"))
            .map(|l| format!("{l}\n"))
            .collect();
        match parse_config(&text, "crm") {
            Err(ConfigError::MissingKey { key }) => assert_eq!(key, "duration_ticks"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn absent_burst_means_no_burst() {
        let text: String = write_config(&ScenarioConfig::crm())
            .lines()
            .filter(|l| !l.starts_with("anomaly_burst"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(parse_config(&text, "crm").unwrap().anomaly_burst, None);
    }

    #[test]
    fn value_errors_carry_the_offending_key() {
        let text = write_config(&ScenarioConfig::crm()).replace("det:100", "warp:9");
        match parse_config(&text, "crm") {
            Err(ConfigError::BadValue { key, .. }) => assert_eq!(key, "action_model"),
            other => panic!("expected BadValue, got {other:?}"),
        }
        let text = write_config(&ScenarioConfig::anomaly()).replace("12@50", "12:50");
        assert!(matches!(
            parse_config(&text, "anomaly"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = format!("{}agents: 2\n", write_config(&ScenarioConfig::crm()));
        assert!(matches!(
            parse_config(&text, "crm"),
            Err(ConfigError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert!(matches!(
            parse_config("agents 5", "x"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
    }
}

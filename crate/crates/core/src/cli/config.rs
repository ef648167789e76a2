//! Configuration documents: router count, algebra selection, the topology
//! per epoch, participant sets, the initial state and schedule dynamics.
//!
//! The format is one JSON document with unknown keys rejected, so a typo
//! fails loudly instead of silently configuring nothing. Policy names are
//! resolved against the algebra when the topology is built.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, PolicyName, TableAlgebraSpec};
use crate::asyncsim::{NetworkOverEpochs, ScheduleParams};
use crate::protocol::{AdjacencyMatrix, RoutingState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub n: usize,
    pub algebra: AlgebraConfig,
    pub epochs: Vec<EpochConfig>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgebraConfig {
    Shortest {
        cap: u32,
        #[serde(default, skip_serializing_if = "is_zero")]
        min_weight: u32,
    },
    Longest {
        cap: u32,
        #[serde(default, skip_serializing_if = "is_zero")]
        min_weight: u32,
    },
    Widest {
        cap: u32,
    },
    MostReliable {
        cap: u32,
    },
    ShortestPv {
        cap: u32,
    },
    Bgplite,
    Custom {
        table: TableAlgebraSpec,
    },
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochConfig {
    /// Length of the epoch in ticks; the last epoch may omit it and run to
    /// the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<usize>,
    /// Entries `[i, j, policy]`: router `i` applies `policy` to routes
    /// advertised by `j` (the link carries traffic from `j` to `i`).
    pub edges: Vec<(u32, u32, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participants: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(String),
    Grid { grid: Vec<Vec<String>> },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Named("identity".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_activation")]
    pub activation_prob: f64,
    #[serde(default = "default_delay")]
    pub delay_bound: usize,
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default)]
    pub dup_prob: f64,
}

fn default_activation() -> f64 {
    1.0
}

fn default_delay() -> usize {
    1
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            activation_prob: default_activation(),
            delay_bound: default_delay(),
            loss_prob: 0.0,
            dup_prob: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Invalid(String),
}

/// Keys allowed in the algebra object, per kind. The tagged representation
/// cannot reject unknown keys on its own, and a mistyped `cap` must not be
/// silently ignored.
fn check_algebra_keys(value: &serde_json::Value) -> Result<(), ConfigError> {
    let obj = value
        .get("algebra")
        .and_then(|a| a.as_object())
        .ok_or_else(|| ConfigError::Invalid("missing algebra object".into()))?;
    let kind = obj
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| ConfigError::Invalid("algebra needs a kind".into()))?;
    let allowed: &[&str] = match kind {
        "shortest" | "longest" => &["kind", "cap", "min_weight"],
        "widest" | "most-reliable" | "shortest-pv" => &["kind", "cap"],
        "bgplite" => &["kind"],
        "custom" => &["kind", "table"],
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown algebra kind {other:?}"
            )))
        }
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::Invalid(format!(
                "unknown key {key:?} in algebra {kind:?}"
            )));
        }
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<InstanceConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    check_algebra_keys(&value)?;
    let cfg: InstanceConfig = serde_json::from_value(value)?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<InstanceConfig, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn validate_config(cfg: &InstanceConfig) -> Result<(), ConfigError> {
    if cfg.n == 0 {
        return Err(ConfigError::Invalid("need at least one router".into()));
    }
    if cfg.epochs.is_empty() {
        return Err(ConfigError::Invalid("need at least one epoch".into()));
    }
    for (e, epoch) in cfg.epochs.iter().enumerate() {
        if epoch.duration.is_none() && e + 1 != cfg.epochs.len() {
            return Err(ConfigError::Invalid(format!(
                "epoch {e} has no duration but is not last"
            )));
        }
        if let Some(parts) = &epoch.participants {
            if parts.iter().any(|&i| i as usize >= cfg.n) {
                return Err(ConfigError::Invalid(format!(
                    "epoch {e} lists a participant outside [0, {})",
                    cfg.n
                )));
            }
        }
    }
    if let InitialState::Named(name) = &cfg.initial {
        if name != "identity" {
            return Err(ConfigError::Invalid(format!(
                "unknown initial state {name:?}; use \"identity\" or a grid"
            )));
        }
    }
    Ok(())
}

/// Builds the per-epoch adjacency matrices, resolving every policy name.
pub fn build_network<A: Algebra>(
    alg: &A,
    cfg: &InstanceConfig,
) -> Result<NetworkOverEpochs, ConfigError> {
    let mut matrices = Vec::new();
    for (e, epoch) in cfg.epochs.iter().enumerate() {
        let entries: Vec<(u32, u32, PolicyName)> = epoch
            .edges
            .iter()
            .map(|(i, j, p)| (*i, *j, PolicyName::new(p.clone())))
            .collect();
        let m = AdjacencyMatrix::from_entries(alg, cfg.n, &entries)
            .map_err(|err| ConfigError::Invalid(format!("epoch {e}: {err}")))?;
        matrices.push(m);
    }
    Ok(NetworkOverEpochs::new(matrices))
}

pub fn build_initial<A: Algebra>(
    alg: &A,
    cfg: &InstanceConfig,
) -> Result<RoutingState<A::Weight>, ConfigError> {
    match &cfg.initial {
        InitialState::Named(_) => Ok(RoutingState::identity(alg, cfg.n)),
        InitialState::Grid { grid } => {
            if grid.len() != cfg.n || grid.iter().any(|row| row.len() != cfg.n) {
                return Err(ConfigError::Invalid(format!(
                    "initial grid must be {n} x {n}",
                    n = cfg.n
                )));
            }
            RoutingState::parse(alg, grid).map_err(|e| ConfigError::Invalid(e.to_string()))
        }
    }
}

pub fn participants_per_epoch(cfg: &InstanceConfig) -> Vec<BTreeSet<u32>> {
    cfg.epochs
        .iter()
        .map(|e| match &e.participants {
            Some(list) => list.iter().copied().collect(),
            None => (0..cfg.n as u32).collect(),
        })
        .collect()
}

/// Start times of epochs 1.. derived from the durations.
pub fn epoch_starts(cfg: &InstanceConfig) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut t = 0;
    for epoch in &cfg.epochs[..cfg.epochs.len() - 1] {
        t += epoch.duration.unwrap_or(0);
        starts.push(t);
    }
    starts
}

pub fn schedule_params(cfg: &InstanceConfig, seed: u64) -> ScheduleParams {
    ScheduleParams {
        seed,
        activation_prob: cfg.schedule.activation_prob,
        delay_bound: cfg.schedule.delay_bound,
        loss_prob: cfg.schedule.loss_prob,
        dup_prob: cfg.schedule.dup_prob,
        epoch_starts: epoch_starts(cfg),
        participants: participants_per_epoch(cfg),
    }
}

/// A horizon that covers every configured epoch, leaving the requested
/// room after the last boundary.
pub fn horizon_for(cfg: &InstanceConfig, requested: Option<usize>, tail: usize) -> usize {
    let starts = epoch_starts(cfg);
    let baseline = starts.last().copied().unwrap_or(0) + tail;
    match requested {
        Some(h) => h.max(starts.last().copied().unwrap_or(0) + 1),
        None => baseline,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHORTEST: &str = r#"{
        "n": 3,
        "algebra": {"kind": "shortest", "cap": 16},
        "epochs": [
            {"edges": [[1, 0, "add:1"], [2, 1, "add:1"]]}
        ]
    }"#;

    #[test]
    fn parse_and_build() {
        let cfg = parse_config(SHORTEST).unwrap();
        assert_eq!(cfg.n, 3);
        let alg = crate::algebra::Table1Algebra::shortest(16);
        let net = build_network(&alg, &cfg).unwrap();
        assert_eq!(net.epochs(), 1);
        assert_eq!(net.topology(0).unwrap().get(1, 0).as_str(), "add:1");
        let init = build_initial(&alg, &cfg).unwrap();
        assert_eq!(init, RoutingState::identity(&alg, 3));
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let bad_top = SHORTEST.replacen("\"n\": 3,", "\"n\": 3, \"typo\": 1,", 1);
        assert!(parse_config(&bad_top).is_err());

        let bad_alg = SHORTEST.replacen("\"cap\": 16", "\"cap\": 16, \"caps\": 2", 1);
        assert!(matches!(
            parse_config(&bad_alg),
            Err(ConfigError::Invalid(_))
        ));

        let bad_epoch = SHORTEST.replacen("\"edges\"", "\"links\"", 1);
        assert!(parse_config(&bad_epoch).is_err());
    }

    #[test]
    fn bad_policy_names_fail_at_build() {
        let cfg = parse_config(&SHORTEST.replacen("add:1\"]", "add:99\"]", 1)).unwrap();
        let alg = crate::algebra::Table1Algebra::shortest(16);
        assert!(matches!(
            build_network(&alg, &cfg),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = parse_config(SHORTEST).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn grid_initial_state() {
        let cfg = parse_config(
            r#"{
            "n": 2,
            "algebra": {"kind": "shortest", "cap": 4},
            "epochs": [{"edges": []}],
            "initial": {"grid": [["0", "3"], ["inf", "0"]]}
        }"#,
        )
        .unwrap();
        let alg = crate::algebra::Table1Algebra::shortest(4);
        let init = build_initial(&alg, &cfg).unwrap();
        assert_eq!(*init.get(0, 1), crate::algebra::NatInf::Fin(3));
        assert_eq!(*init.get(1, 0), crate::algebra::NatInf::Inf);
    }

    #[test]
    fn epoch_bookkeeping() {
        let cfg = parse_config(
            r#"{
            "n": 2,
            "algebra": {"kind": "shortest", "cap": 4},
            "epochs": [
                {"duration": 10, "edges": [], "participants": [0]},
                {"edges": []}
            ]
        }"#,
        )
        .unwrap();
        assert_eq!(epoch_starts(&cfg), vec![10]);
        let parts = participants_per_epoch(&cfg);
        assert_eq!(parts[0], [0].into());
        assert_eq!(parts[1], [0, 1].into());
    }
}

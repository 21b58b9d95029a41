//! Scenario configuration: a single TOML file with explicit keys.
//!
//! Model parameters never come from positional CLI arguments; the file is
//! the complete, hashable record of a run. The seed is always explicit so
//! no run depends on wall-clock state.
//!
//! ```toml
//! schema_version = 1
//! scenario = "equilibria"        # equilibria | verify_nash | mc_validate
//!                                # | convergence | tax_poa
//! seed = 42
//! out_dir = "out"                # optional; --out overrides
//!
//! [model]
//! rho = 0.05
//! n_agents = 10                  # homogeneous shortcut with [model.agent],
//!                                # or list [[model.agents]] blocks instead
//!
//! [model.agent]
//! gamma = 0.1
//! mu = 0.2
//! nu = 0.1
//! theta = 1.0
//! eta = 0.5
//! q0 = 1.0
//!
//! [controls]                     # scenario-specific numeric controls
//! n_draws = 100
//! n_paths = 10000
//! n_steps = 512
//! ns = [10, 100, 1000]
//! tol = 1e-9
//! ```

use crate::error::CliError;
use geogame_core::{AgentParams, GameParams};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Supported config schema version.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Equilibria,
    VerifyNash,
    McValidate,
    Convergence,
    TaxPoa,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Equilibria => "equilibria",
            ScenarioKind::VerifyNash => "verify_nash",
            ScenarioKind::McValidate => "mc_validate",
            ScenarioKind::Convergence => "convergence",
            ScenarioKind::TaxPoa => "tax_poa",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub gamma: f64,
    pub mu: f64,
    pub nu: f64,
    pub theta: f64,
    pub eta: f64,
    pub q0: f64,
}

impl From<&AgentSection> for AgentParams {
    fn from(a: &AgentSection) -> Self {
        AgentParams {
            gamma: a.gamma,
            mu: a.mu,
            nu: a.nu,
            theta: a.theta,
            eta: a.eta,
            q0: a.q0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub rho: f64,
    /// Homogeneous shortcut: one agent block replicated `n_agents` times.
    #[serde(default)]
    pub n_agents: Option<usize>,
    #[serde(default)]
    pub agent: Option<AgentSection>,
    /// Heterogeneous form: the full agent list.
    #[serde(default)]
    pub agents: Option<Vec<AgentSection>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controls {
    pub n_draws: Option<usize>,
    pub n_paths: Option<usize>,
    pub n_steps: Option<usize>,
    pub t_max: Option<f64>,
    pub tol: Option<f64>,
    pub ns: Option<Vec<usize>>,
    /// Convergence scenario: also run the empirical-measure variant.
    pub empirical: Option<bool>,
    /// Monte Carlo scenario: spill the first validation ensemble to disk.
    pub spill: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default)]
    pub controls: Controls,
}

/// A parsed and semantically validated configuration, with the SHA-256 of
/// the raw file bytes for output stamping.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub params: GameParams,
    pub config_sha256: String,
}

fn build_params(model: &ModelSection) -> Result<GameParams, CliError> {
    let agents: Vec<AgentParams> = match (&model.agents, &model.agent, model.n_agents) {
        (Some(list), None, None) => list.iter().map(AgentParams::from).collect(),
        (None, Some(agent), Some(n)) => {
            if n == 0 {
                return Err(CliError::Invariant("n_agents must be at least 1".into()));
            }
            vec![AgentParams::from(agent); n]
        }
        (None, Some(_), None) => {
            return Err(CliError::Invariant(
                "homogeneous model needs n_agents alongside [model.agent]".into(),
            ))
        }
        (None, None, _) => {
            return Err(CliError::Invariant(
                "model needs either [model.agent] + n_agents or [[model.agents]]".into(),
            ))
        }
        _ => {
            return Err(CliError::Invariant(
                "give either [model.agent] + n_agents or [[model.agents]], not both".into(),
            ))
        }
    };
    GameParams::new(agents, model.rho).map_err(|e| CliError::Invariant(e.to_string()))
}

fn validate_controls(config: &ScenarioConfig) -> Result<(), CliError> {
    let c = &config.controls;
    let need = |field: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(CliError::Invariant(format!(
                "scenario '{}' requires controls.{field}",
                config.scenario.name()
            )))
        }
    };
    match config.scenario {
        ScenarioKind::Equilibria => Ok(()),
        ScenarioKind::VerifyNash => Ok(()),
        ScenarioKind::McValidate => {
            need("n_paths", c.n_paths.is_some())?;
            need("n_steps", c.n_steps.is_some())
        }
        ScenarioKind::Convergence | ScenarioKind::TaxPoa => {
            need("ns", c.ns.as_ref().is_some_and(|ns| ns.len() >= 2))
        }
    }
}

/// Parse and validate a config from raw file bytes.
pub fn parse_config(raw: &[u8]) -> Result<LoadedConfig, CliError> {
    let text =
        std::str::from_utf8(raw).map_err(|_| CliError::Parse("config is not UTF-8".into()))?;
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(CliError::Invariant(format!(
            "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    let params = build_params(&config.model)?;
    validate_controls(&config)?;
    let mut hasher = Sha256::new();
    hasher.update(raw);
    let config_sha256 = hex_string(&hasher.finalize());
    Ok(LoadedConfig {
        config,
        params,
        config_sha256,
    })
}

/// Load a config file from disk.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let raw = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&raw)
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

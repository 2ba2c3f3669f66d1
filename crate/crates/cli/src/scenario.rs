//! Scenario files: JSON with a schema version, terminals, obstacles, relay
//! budget and optional parameter overrides.

use std::path::Path;

use relaynet::geometry::{Disk, Point2};
use relaynet::network::Scenario;
use relaynet::optimizer::OptimizerConfig;
use relaynet::prescan::PrescanConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

/// Optional pre-scan settings; absent fields keep the library defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescanOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cl_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_redundant: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peel_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_units")]
    pub units: String,
    pub terminals: Vec<[f64; 2]>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    pub relay_budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescan: Option<PrescanOverrides>,
}

fn default_units() -> String {
    "km".into()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let f: ScenarioFile =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("scenario: {e}")))?;
        if f.version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "scenario: field `version` is {}, expected {SCHEMA_VERSION}",
                f.version
            )));
        }
        f.scenario()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization: fixed field order, shortest round-trip floats.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// Hex SHA-256 of the canonical form.
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let mut s = Scenario::new(
            self.terminals.iter().map(|&t| Point2::from(t)).collect(),
            self.obstacles
                .iter()
                .map(|o| Disk::new(Point2::new(o.cx, o.cy), o.r))
                .collect(),
            self.relay_budget,
        )
        .map_err(|e| CliError::Validation(format!("scenario: {e}")))?;
        s.units = self.units.clone();
        Ok(s)
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        // The top-level seed wins over any seed inside the overrides.
        OptimizerConfig {
            seed: self.seed,
            ..self.optimizer.clone().unwrap_or_default()
        }
    }

    pub fn prescan_config(&self) -> PrescanConfig {
        let mut c = PrescanConfig {
            optimizer: self.optimizer_config(),
            ..Default::default()
        };
        if let Some(o) = &self.prescan {
            c.max_generations = o.max_generations.unwrap_or(c.max_generations);
            c.cl_threshold = o.cl_threshold.unwrap_or(c.cl_threshold);
            c.keep_redundant = o.keep_redundant.unwrap_or(c.keep_redundant);
            c.max_candidates = o.max_candidates.unwrap_or(c.max_candidates);
            c.peel_depth = o.peel_depth.unwrap_or(c.peel_depth);
        }
        c
    }
}

//! Experiment configuration: one JSON document with a section per component.
//! Every key is optional; missing keys take the defaults of their section and
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::error::{Error, Result};
use crate::mobility::ScenarioConfig;
use crate::predictor::PredictorConfig;
use crate::rl::RlConfig;
use crate::strategy::HybridConfig;
use crate::{ChannelParams, CostWeights, PsoConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub channel: ChannelParams,
    pub weights: CostWeights,
    pub rl: RlConfig,
    pub pso: PsoConfig,
    pub hybrid: HybridConfig,
    pub predictor: PredictorConfig,
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig { field, reason } => Error::InvalidConfig { field: format!("{section}.{field}"), reason },
        other => other,
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate().map_err(|e| in_section("scenario", e))?;
        self.channel.validate().map_err(|e| in_section("channel", e))?;
        self.weights.validate().map_err(|e| in_section("weights", e))?;
        self.rl.validate().map_err(|e| in_section("rl", e))?;
        self.pso.validate().map_err(|e| in_section("pso", e))?;
        self.hybrid.validate().map_err(|e| in_section("hybrid", e))?;
        self.predictor.validate().map_err(|e| in_section("predictor", e))?;
        Ok(())
    }

    /// Parses and validates a configuration document. Blank input yields the
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let text = if text.trim().is_empty() { "{}" } else { text };
        let mut de = serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(&mut de).map_err(classify)?;
        de.end().map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn classify(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let message = inner.to_string();
    match inner.classify() {
        Category::Data => {
            if let Some(rest) = message.strip_prefix("unknown field `") {
                let key = rest.split('`').next().unwrap_or_default();
                let parent = path.rsplit_once('.').map_or("", |(p, _)| p);
                let full = if parent.is_empty() || path == key { key.to_string() } else { format!("{parent}.{key}") };
                return Error::UnknownKey(full);
            }
            Error::InvalidConfig { field: path, reason: strip_position(&message) }
        }
        _ => Error::Parse { line: inner.line(), column: inner.column(), message },
    }
}

/// Drops serde_json's trailing " at line L column C".
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

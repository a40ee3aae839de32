//! JSON simulation config and its resolution into a [`SimulationSpec`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InputBinding, InputSource, SimulationError, SimulationSpec};
use crate::stochastic::DistributionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: String,
    pub horizon: usize,
    pub trials: usize,
    /// Overridden by an explicit seed at resolution time.
    #[serde(default)]
    pub seed: Option<u64>,
    pub bindings: Vec<BindingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingConfig {
    pub variable: String,
    pub source: SourceConfig,
}

/// A binding source: a bare distribution literal or one of the keyed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceConfig {
    Literal(DistributionSpec),
    Keyed(KeyedSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyedSource {
    Deterministic(Vec<f64>),
    /// Values come from a named forecast series.
    Forecast { series: String },
    Stochastic(DistributionSpec),
    Schedule(Vec<DistributionSpec>),
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Series names referenced by `forecast` sources.
    pub fn forecast_series(&self) -> Vec<&str> {
        self.bindings
            .iter()
            .filter_map(|b| match &b.source {
                SourceConfig::Keyed(KeyedSource::Forecast { series }) => Some(series.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Resolves forecast references against `forecasts`. `seed` wins over
    /// the config's own seed; with neither, the seed is 0.
    pub fn resolve(
        &self,
        forecasts: &BTreeMap<String, Vec<f64>>,
        seed: Option<u64>,
    ) -> Result<SimulationSpec, SimulationError> {
        let bindings = self
            .bindings
            .iter()
            .map(|b| {
                let source = match &b.source {
                    SourceConfig::Literal(d) | SourceConfig::Keyed(KeyedSource::Stochastic(d)) => {
                        InputSource::Stochastic(*d)
                    }
                    SourceConfig::Keyed(KeyedSource::Schedule(s)) => InputSource::Schedule(s.clone()),
                    SourceConfig::Keyed(KeyedSource::Deterministic(v)) => InputSource::Deterministic(v.clone()),
                    SourceConfig::Keyed(KeyedSource::Forecast { series }) => {
                        let values = forecasts.get(series).ok_or_else(|| {
                            SimulationError::Invalid(format!(
                                "binding `{}` needs forecast series `{series}`, which was not supplied",
                                b.variable
                            ))
                        })?;
                        InputSource::Deterministic(values.clone())
                    }
                };
                Ok(InputBinding {
                    variable: b.variable.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, SimulationError>>()?;
        Ok(SimulationSpec {
            model: self.model.clone(),
            bindings,
            horizon: self.horizon,
            trials: self.trials,
            seed: seed.or(self.seed).unwrap_or(0),
        })
    }
}

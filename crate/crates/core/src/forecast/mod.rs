//! Deterministic forecasters and model selection.

pub mod bfgs;
pub mod grooms;
pub mod linear;
pub mod metrics;
pub mod pnn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SupervisedDataset;
use linear::LinearModel;
use pnn::PnnModel;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("{rows} rows cannot determine {needed} coefficients")]
    Underdetermined { rows: usize, needed: usize },
    #[error("design matrix has rank {rank} < {columns}")]
    RankDeficient { rank: usize, columns: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed window has {got} values, model expects {expected}")]
    WindowMismatch { expected: usize, got: usize },
    #[error("prediction at step {step} is not finite")]
    NonFinite { step: usize },
    #[error("value {value} at index {index} must be positive")]
    Domain { index: usize, value: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("every candidate failed: {0:?}")]
    Selection(Vec<(String, String)>),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A fitted one-step-ahead model over a fixed-width input window.
pub trait Forecaster {
    fn model_id(&self) -> &str;
    fn input_len(&self) -> usize;
    fn predict(&self, features: &[f64]) -> f64;
    fn training_rmse(&self) -> f64;
}

/// Either fitted model family; this is the JSON export format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FittedModel {
    Linear(LinearModel),
    Pnn(PnnModel),
}

impl FittedModel {
    pub fn to_json(&self) -> Result<String, ForecastError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ForecastError> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Forecaster for FittedModel {
    fn model_id(&self) -> &str {
        match self {
            FittedModel::Linear(m) => m.model_id(),
            FittedModel::Pnn(m) => m.model_id(),
        }
    }

    fn input_len(&self) -> usize {
        match self {
            FittedModel::Linear(m) => m.input_len(),
            FittedModel::Pnn(m) => m.input_len(),
        }
    }

    fn predict(&self, features: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict(features),
            FittedModel::Pnn(m) => m.predict(features),
        }
    }

    fn training_rmse(&self) -> f64 {
        match self {
            FittedModel::Linear(m) => m.training_rmse(),
            FittedModel::Pnn(m) => m.training_rmse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model_id: String,
    pub horizon: usize,
    pub values: Vec<f64>,
    pub training_rmse: f64,
}

/// Recursive multi-step forecast: each prediction is appended to the
/// window that produces the next one.
pub fn predict_horizon<M: Forecaster + ?Sized>(
    model: &M,
    seed_window: &[f64],
    horizon: usize,
) -> Result<ForecastResult, ForecastError> {
    let lag = model.input_len();
    if seed_window.len() != lag {
        return Err(ForecastError::WindowMismatch {
            expected: lag,
            got: seed_window.len(),
        });
    }
    let mut window = seed_window.to_vec();
    let mut values = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let next = model.predict(&window);
        if !next.is_finite() {
            return Err(ForecastError::NonFinite { step });
        }
        values.push(next);
        if lag > 0 {
            window.remove(0);
            window.push(next);
        }
    }
    Ok(ForecastResult {
        model_id: model.model_id().to_owned(),
        horizon,
        values,
        training_rmse: model.training_rmse(),
    })
}

pub(crate) fn rmse_on<M: Forecaster + ?Sized>(model: &M, data: &SupervisedDataset) -> f64 {
    let predicted: Vec<f64> = data.rows.iter().map(|r| model.predict(&r.features)).collect();
    metrics::rmse(&predicted, &data.targets())
}

//! Holdout-driven selection among candidate forecasters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::fit_linear;
use super::metrics::{rmse, rmse_log_median};
use super::pnn::{fit_pnn, PnnConfig};
use super::{FittedModel, ForecastError, Forecaster};
use crate::ingest::SupervisedDataset;

/// Share of the training rows used for coefficients when a candidate needs
/// an internal validation split; the rest steers network growth.
pub const GROWTH_SPLIT: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSpec {
    Linear,
    Pnn(PnnConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub spec: CandidateSpec,
}

impl Candidate {
    pub fn linear() -> Self {
        Self {
            id: "linreg".into(),
            spec: CandidateSpec::Linear,
        }
    }

    pub fn pnn(config: PnnConfig) -> Self {
        Self {
            id: "pnn".into(),
            spec: CandidateSpec::Pnn(config),
        }
    }

    /// Fits the candidate on `train`.
    pub fn fit(&self, train: &SupervisedDataset) -> Result<FittedModel, ForecastError> {
        match &self.spec {
            CandidateSpec::Linear => fit_linear(train).map(FittedModel::Linear),
            CandidateSpec::Pnn(cfg) => {
                let (head, tail) = train.split_chronological(GROWTH_SPLIT);
                fit_pnn(&head, &tail, cfg).map(FittedModel::Pnn)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Log-median RMSE with each one-step prediction as its own trial set.
    #[default]
    LogMedian,
    Rmse,
}

impl SelectionMetric {
    pub fn score(self, predicted: &[f64], actual: &[f64]) -> Result<f64, ForecastError> {
        match self {
            SelectionMetric::LogMedian => {
                let sets: Vec<[f64; 1]> = predicted.iter().map(|&p| [p]).collect();
                rmse_log_median(&sets, actual)
            }
            SelectionMetric::Rmse => Ok(rmse(predicted, actual)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub id: String,
    pub rmse: f64,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub winner: String,
    /// Candidates ordered best first; ties keep the candidate list order.
    pub ranking: Vec<RankEntry>,
    /// Candidates excluded from the ranking, with the reason.
    pub failures: Vec<(String, String)>,
    /// Fitted models of the ranked candidates, in candidate order.
    pub models: Vec<(String, FittedModel)>,
}

impl Selection {
    pub fn winner_model(&self) -> &FittedModel {
        &self
            .models
            .iter()
            .find(|(id, _)| *id == self.winner)
            .expect("winner is always fitted")
            .1
    }
}

/// Orders `(id, score)` pairs ascending by score, keeping input order among
/// exact ties.
pub fn rank_scores(scores: &[(String, f64)]) -> Vec<RankEntry> {
    let mut ranked: Vec<RankEntry> = scores
        .iter()
        .map(|(id, s)| RankEntry {
            id: id.clone(),
            rmse: *s,
        })
        .collect();
    ranked.sort_by(|a, b| a.rmse.total_cmp(&b.rmse));
    ranked
}

/// Fits every candidate on `train`, scores one-step predictions on
/// `holdout` and returns the lowest-error candidate.
pub fn grooms_select(
    candidates: &[Candidate],
    train: &SupervisedDataset,
    holdout: &SupervisedDataset,
    metric: SelectionMetric,
) -> Result<Selection, ForecastError> {
    if candidates.is_empty() {
        return Err(ForecastError::Config("no candidates".into()));
    }
    if holdout.is_empty() {
        return Err(ForecastError::Config("holdout is empty".into()));
    }
    let actual = holdout.targets();
    let results: Vec<Result<(FittedModel, f64), ForecastError>> = candidates
        .par_iter()
        .map(|c| {
            let model = c.fit(train)?;
            let predicted: Vec<f64> = holdout.rows.iter().map(|r| model.predict(&r.features)).collect();
            let score = metric.score(&predicted, &actual)?;
            if score.is_finite() {
                Ok((model, score))
            } else {
                Err(ForecastError::NonFinite { step: 0 })
            }
        })
        .collect();

    let mut scores = Vec::new();
    let mut models = Vec::new();
    let mut failures = Vec::new();
    for (c, r) in candidates.iter().zip(results) {
        match r {
            Ok((model, score)) => {
                scores.push((c.id.clone(), score));
                models.push((c.id.clone(), model));
            }
            Err(e) => {
                log::warn!("candidate {} excluded: {e}", c.id);
                failures.push((c.id.clone(), e.to_string()));
            }
        }
    }
    if scores.is_empty() {
        return Err(ForecastError::Selection(failures));
    }
    let ranking = rank_scores(&scores);
    Ok(Selection {
        winner: ranking[0].id.clone(),
        ranking,
        failures,
        models,
    })
}

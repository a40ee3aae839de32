//! Ordinary least-squares baseline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ForecastError, Forecaster};
use crate::ingest::SupervisedDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub training_rmse: f64,
}

impl LinearModel {
    pub fn predict_one(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .slopes
                .iter()
                .zip(features)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

impl Forecaster for LinearModel {
    fn model_id(&self) -> &str {
        "linreg"
    }

    fn input_len(&self) -> usize {
        self.slopes.len()
    }

    fn predict(&self, features: &[f64]) -> f64 {
        self.predict_one(features)
    }

    fn training_rmse(&self) -> f64 {
        self.training_rmse
    }
}

/// Least-squares solve via SVD, rejecting numerically rank-deficient
/// designs. Used by both the linear model and polynomial neurons.
pub(crate) fn least_squares(
    design: DMatrix<f64>,
    target: &DVector<f64>,
    reject_rank_deficient: bool,
) -> Result<DVector<f64>, ForecastError> {
    let (rows, cols) = design.shape();
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = (rows.max(cols) as f64) * f64::EPSILON * max_sv;
    if reject_rank_deficient {
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if rank < cols || max_sv == 0.0 {
            return Err(ForecastError::RankDeficient { rank, columns: cols });
        }
    }
    svd.solve(target, tol)
        .map_err(|e| ForecastError::Config(format!("least squares failed: {e}")))
}

/// Fits `y = intercept + slopes . x` by ordinary least squares.
pub fn fit_linear(train: &SupervisedDataset) -> Result<LinearModel, ForecastError> {
    let k = train.feature_count();
    let n = train.len();
    if n < k + 1 {
        return Err(ForecastError::Underdetermined {
            rows: n,
            needed: k + 1,
        });
    }
    let design = DMatrix::from_fn(n, k + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            train.rows[i].features[j - 1]
        }
    });
    let y = DVector::from_iterator(n, train.rows.iter().map(|r| r.target));
    let beta = least_squares(design, &y, true)?;
    let mut model = LinearModel {
        intercept: beta[0],
        slopes: beta.iter().skip(1).copied().collect(),
        training_rmse: 0.0,
    };
    model.training_rmse = super::rmse_on(&model, train);
    Ok(model)
}

//! Error metrics for forecasts.

use super::ForecastError;
use crate::stats;

/// Root mean square of `log(median(trial values) / actual)` over time points.
///
/// The metric is unitless and scale-consistent. A deterministic forecast
/// is scored by passing one-element trial sets.
pub fn rmse_log_median<T: AsRef<[f64]>>(trials: &[T], actuals: &[f64]) -> Result<f64, ForecastError> {
    if trials.len() != actuals.len() {
        return Err(ForecastError::Config(format!(
            "{} trial sets for {} actuals",
            trials.len(),
            actuals.len()
        )));
    }
    if actuals.is_empty() {
        return Err(ForecastError::EmptyInput);
    }
    let mut sum = 0.0;
    for (i, (set, &actual)) in trials.iter().zip(actuals).enumerate() {
        let med = stats::median(set.as_ref()).ok_or(ForecastError::EmptyInput)?;
        if !(actual > 0.0) {
            return Err(ForecastError::Domain { index: i, value: actual });
        }
        if !(med > 0.0) {
            return Err(ForecastError::Domain { index: i, value: med });
        }
        let e = (med / actual).ln();
        sum += e * e;
    }
    Ok((sum / actuals.len() as f64).sqrt())
}

/// Plain root mean square error.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(predicted.len(), actual.len());
    let n = predicted.len().max(1) as f64;
    (predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        / n)
        .sqrt()
}

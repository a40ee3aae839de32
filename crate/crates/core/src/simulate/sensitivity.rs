//! Contribution-to-variance sensitivity per (variable, day).

use serde::{Deserialize, Serialize};

use super::{SimulationError, TrialMatrix};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub variable: String,
    pub day: usize,
    /// Spearman correlation of the draws with the trial aggregate.
    pub rank_correlation: f64,
    /// Signed share of `Σ r²`, in percent.
    pub contribution: f64,
    /// The input did not vary across trials.
    pub constant: bool,
}

/// Ranks every stochastic (variable, day) by `sign(r) · r² / Σ r² · 100`,
/// largest magnitude first.
pub fn sensitivity_chart(trials: &TrialMatrix) -> Result<Vec<SensitivityEntry>, SimulationError> {
    if trials.trials() < 2 {
        return Err(SimulationError::TooFewTrials {
            needed: 2,
            have: trials.trials(),
        });
    }
    if !trials.stochastic.iter().any(|&s| s) {
        return Err(SimulationError::NoStochasticInput);
    }
    let mut entries = Vec::new();
    for (var, name) in trials.variables.iter().enumerate() {
        if !trials.stochastic[var] {
            continue;
        }
        for day in 0..trials.horizon {
            let column = trials.input_column(var, day);
            let constant = column.iter().all(|&x| x == column[0]);
            let r = if constant {
                0.0
            } else {
                stats::spearman(&column, &trials.aggregate).unwrap_or(0.0)
            };
            entries.push(SensitivityEntry {
                variable: name.clone(),
                day,
                rank_correlation: r,
                contribution: 0.0,
                constant,
            });
        }
    }
    let total: f64 = entries.iter().map(|e| e.rank_correlation.powi(2)).sum();
    if total > 0.0 {
        for e in &mut entries {
            let r = e.rank_correlation;
            e.contribution = r.signum() * r * r / total * 100.0;
        }
    }
    entries.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
    Ok(entries)
}

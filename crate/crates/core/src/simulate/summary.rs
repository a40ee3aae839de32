//! Outcome summaries: moments, certainty intervals and a histogram.

use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::stats;

/// Bin count cap so a tiny IQR cannot blow up the histogram.
pub const MAX_BINS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertaintyInterval {
    pub level: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    /// Ascending by level.
    pub certainty_intervals: Vec<CertaintyInterval>,
    pub histogram: Histogram,
}

impl OutcomeSummary {
    pub fn interval(&self, level: f64) -> Option<&CertaintyInterval> {
        self.certainty_intervals.iter().find(|c| (c.level - level).abs() < 1e-12)
    }
}

fn check_level(level: f64) -> Result<(), SimulationError> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(SimulationError::InvalidLevel(level))
    }
}

fn central(sorted: &[f64], level: f64) -> (f64, f64) {
    (
        stats::nearest_rank(sorted, (1.0 - level) / 2.0),
        stats::nearest_rank(sorted, (1.0 + level) / 2.0),
    )
}

/// Central nearest-rank interval at `level`, plus the mean of all values.
pub fn certainty_interval(aggregates: &[f64], level: f64) -> Result<(f64, f64, f64), SimulationError> {
    if aggregates.is_empty() {
        return Err(SimulationError::Empty);
    }
    check_level(level)?;
    let mut sorted = aggregates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (low, high) = central(&sorted, level);
    Ok((low, high, stats::mean(aggregates)))
}

/// Summarizes per-trial aggregates at the given certainty levels
/// (duplicates are dropped).
pub fn summarize(aggregates: &[f64], levels: &[f64]) -> Result<OutcomeSummary, SimulationError> {
    if aggregates.is_empty() {
        return Err(SimulationError::Empty);
    }
    let mut levels = levels.to_vec();
    for &l in &levels {
        check_level(l)?;
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut sorted = aggregates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let certainty_intervals = levels
        .iter()
        .map(|&level| {
            let (low, high) = central(&sorted, level);
            CertaintyInterval { level, low, high }
        })
        .collect();
    Ok(OutcomeSummary {
        trials: aggregates.len(),
        mean: stats::mean(aggregates),
        median: stats::median(&sorted).unwrap_or(f64::NAN),
        stdev: stats::sample_stdev(aggregates),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        certainty_intervals,
        histogram: histogram(&sorted),
    })
}

/// Freedman–Diaconis histogram of an ascending slice.
pub fn histogram(sorted: &[f64]) -> Histogram {
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let range = max - min;
    let iqr = stats::nearest_rank(sorted, 0.75) - stats::nearest_rank(sorted, 0.25);
    let fd_width = 2.0 * iqr / (n as f64).cbrt();
    let bins = if range > 0.0 && fd_width > 0.0 && fd_width.is_finite() {
        ((range / fd_width).ceil() as usize).clamp(1, MAX_BINS)
    } else {
        1
    };
    let bin_width = range / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { max } else { min + i as f64 * bin_width })
        .collect();
    let mut counts = vec![0; bins];
    for &x in sorted {
        let i = if bin_width > 0.0 {
            (((x - min) / bin_width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[i] += 1;
    }
    Histogram {
        edges,
        counts,
        bin_width,
    }
}

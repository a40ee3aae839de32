//! Win/lose trend scores over a three-day sliding window, and the labelled
//! dataset they induce for rule learning.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fri::LabeledData;
use crate::ingest::TimeSeries;

/// Days between the two ends of a trend window.
pub const WINDOW: usize = 3;

/// Series used for scoring, each with the column names it may appear under.
pub const SERIES: [(&str, &[&str]); 4] = [
    ("ndic", &["ndic", "new_daily_increase_confirmed"]),
    ("current_confirmed", &["current_confirmed"]),
    ("cured_rate", &["cured_rate"]),
    ("death_rate", &["death_rate"]),
];

#[derive(Debug, Error, PartialEq)]
pub enum InflectionError {
    #[error("trend weights must be finite, non-negative and not all zero")]
    Weights,
    #[error("trend window needs {needed} values, got {got}")]
    Window { needed: usize, got: usize },
    #[error("series `{0}` is missing")]
    MissingSeries(&'static str),
    #[error("series lengths or dates disagree")]
    Misaligned,
    #[error("need at least {needed} days, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for TrendWeights {
    fn default() -> Self {
        Self {
            w1: 0.1,
            w2: 0.15,
            w3: 0.25,
        }
    }
}

impl TrendWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, InflectionError> {
        let w = [w1, w2, w3];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|&x| x == 0.0) {
            return Err(InflectionError::Weights);
        }
        Ok(Self { w1, w2, w3 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendDelta {
    pub value: f64,
    /// The window started at zero, so no relative change exists.
    pub undefined: bool,
}

/// Clipped relative change between the first and last of four values.
pub fn trend_delta(window: &[f64], direction: Direction) -> Result<TrendDelta, InflectionError> {
    if window.len() != WINDOW + 1 {
        return Err(InflectionError::Window {
            needed: WINDOW + 1,
            got: window.len(),
        });
    }
    let (start, end) = (window[0], window[WINDOW]);
    if start == 0.0 {
        return Ok(TrendDelta {
            value: 0.0,
            undefined: true,
        });
    }
    let change = match direction {
        Direction::Up => end - start,
        Direction::Down => start - end,
    };
    Ok(TrendDelta {
        value: (change / start.abs()).clamp(0.0, 1.0),
        undefined: false,
    })
}

/// The four scored series over a common run of days.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBundle {
    pub dates: Vec<NaiveDate>,
    pub ndic: Vec<f64>,
    pub current_confirmed: Vec<f64>,
    pub cured_rate: Vec<f64>,
    pub death_rate: Vec<f64>,
}

impl SeriesBundle {
    /// Picks the scored series out of `series` by name (aliases allowed).
    pub fn from_series(series: &[TimeSeries]) -> Result<Self, InflectionError> {
        let mut found: Vec<&TimeSeries> = Vec::with_capacity(SERIES.len());
        for (key, aliases) in SERIES {
            let s = series
                .iter()
                .find(|s| aliases.contains(&s.name.as_str()))
                .ok_or(InflectionError::MissingSeries(key))?;
            found.push(s);
        }
        if found.iter().any(|s| s.dates != found[0].dates) {
            return Err(InflectionError::Misaligned);
        }
        Ok(Self {
            dates: found[0].dates.clone(),
            ndic: found[0].values.clone(),
            current_confirmed: found[1].values.clone(),
            cured_rate: found[2].values.clone(),
            death_rate: found[3].values.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    fn columns(&self) -> [&[f64]; 4] {
        [&self.ndic, &self.current_confirmed, &self.cured_rate, &self.death_rate]
    }

    fn check(&self) -> Result<(), InflectionError> {
        if self.columns().iter().any(|c| c.len() != self.dates.len()) {
            return Err(InflectionError::Misaligned);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScores {
    pub date: NaiveDate,
    pub win_score: f64,
    pub lose_score: f64,
    /// 1 when the win score is strictly larger.
    pub label: u8,
    /// Some series started the window at zero.
    pub undefined_trend: bool,
}

/// Scores the window ending on day `t`.
pub fn score_window(bundle: &SeriesBundle, t: usize, weights: &TrendWeights) -> Result<WindowScores, InflectionError> {
    bundle.check()?;
    if t < WINDOW || t >= bundle.len() {
        return Err(InflectionError::Window {
            needed: WINDOW + 1,
            got: t.min(bundle.len()),
        });
    }
    let range = t - WINDOW..=t;
    let delta = |v: &[f64], d| trend_delta(&v[range.clone()], d);
    let ndic_down = delta(&bundle.ndic, Direction::Down)?;
    let ndic_up = delta(&bundle.ndic, Direction::Up)?;
    let cc_down = delta(&bundle.current_confirmed, Direction::Down)?;
    let cc_up = delta(&bundle.current_confirmed, Direction::Up)?;
    let cured_up = delta(&bundle.cured_rate, Direction::Up)?;
    let death_up = delta(&bundle.death_rate, Direction::Up)?;

    let win = weights.w1 * ndic_down.value + weights.w2 * cc_down.value + weights.w3 * cured_up.value;
    let lose = weights.w1 * ndic_up.value + weights.w2 * cc_up.value + weights.w3 * death_up.value;
    let undefined = [ndic_up, cc_up, cured_up, death_up].iter().any(|d| d.undefined);
    if undefined {
        log::debug!("window ending {}: a series starts at zero", bundle.dates[t]);
    }
    Ok(WindowScores {
        date: bundle.dates[t],
        win_score: win,
        lose_score: lose,
        label: u8::from(win > lose),
        undefined_trend: undefined,
    })
}

/// Feature names: each scored series followed by its 1..3 day lags.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::new();
    for (key, _) in SERIES {
        names.push(key.to_string());
        for k in 1..=WINDOW {
            names.push(format!("yester{k}days_{key}"));
        }
    }
    names
}

/// One labelled row per complete window (`days - 3` rows) plus the scores.
pub fn label_series(bundle: &SeriesBundle, weights: &TrendWeights) -> Result<(LabeledData, Vec<WindowScores>), InflectionError> {
    bundle.check()?;
    if bundle.len() < WINDOW + 1 {
        return Err(InflectionError::TooShort {
            needed: WINDOW + 1,
            have: bundle.len(),
        });
    }
    let mut rows = Vec::with_capacity(bundle.len() - WINDOW);
    let mut labels = Vec::with_capacity(rows.capacity());
    let mut scores = Vec::with_capacity(rows.capacity());
    for t in WINDOW..bundle.len() {
        let s = score_window(bundle, t, weights)?;
        let mut row = Vec::with_capacity(4 * (WINDOW + 1));
        for col in bundle.columns() {
            for k in 0..=WINDOW {
                row.push(col[t - k]);
            }
        }
        rows.push(row);
        labels.push(s.label.to_string());
        scores.push(s);
    }
    let data = LabeledData {
        feature_names: feature_names(),
        target_name: "win".into(),
        rows,
        labels,
    };
    Ok((data, scores))
}

/// Writes `date,<features...>,win` rows.
pub fn write_labeled_csv<W: Write>(out: W, data: &LabeledData, scores: &[WindowScores]) -> Result<(), InflectionError> {
    let err = |e: csv::Error| InflectionError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(data.feature_names.iter().cloned());
    header.push(data.target_name.clone());
    w.write_record(&header).map_err(err)?;
    for ((row, label), s) in data.rows.iter().zip(&data.labels).zip(scores) {
        let mut rec = vec![s.date.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        rec.push(label.clone());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| InflectionError::Csv(e.to_string()))
}

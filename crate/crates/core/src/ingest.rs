//! Loading daily series from CSV and turning them into supervised datasets.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

/// Series whose values are percentages and must stay in `[0, 100]`.
pub const RATE_SERIES: &[&str] = &["cured_rate", "death_rate"];

/// Default lag window for embedding.
pub const DEFAULT_LAG: usize = 3;

/// Default absolute-correlation threshold for [`correlation_filter`].
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("CSV has no header row")]
    MissingHeader,
    #[error("first column must be `date`, found `{found}`")]
    DateColumn { found: String },
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("line {line}: unparseable date `{value}`")]
    BadDate { line: u64, value: String },
    #[error("line {line}: unparseable value `{value}` in column `{column}`")]
    BadValue {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: date {date} does not follow the previous row")]
    Ordering { line: u64, date: NaiveDate },
    #[error("line {line}: date {date} leaves a gap after the previous day")]
    Gap { line: u64, date: NaiveDate },
    #[error("line {line}: `{series}` = {value} is outside [0, 100]")]
    Range { series: String, line: u64, value: f64 },
    #[error("series `{name}`: {dates} dates but {values} values")]
    LengthMismatch {
        name: String,
        dates: usize,
        values: usize,
    },
    #[error("series of length {len} is too short for lag {lag}")]
    InsufficientData { len: usize, lag: usize },
    #[error("correlation threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no feature survived the correlation filter")]
    EmptySelection,
    #[error("series `{0}` does not share dates with the target")]
    MisalignedSeries(String),
}

/// A named daily series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, enforcing daily spacing and the rate range.
    pub fn new(
        name: impl Into<String>,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                name,
                dates: dates.len(),
                values: values.len(),
            });
        }
        for (i, w) in dates.windows(2).enumerate() {
            check_next_day(w[0], w[1], i as u64 + 3)?;
        }
        if RATE_SERIES.contains(&name.as_str()) {
            for (i, &v) in values.iter().enumerate() {
                if !(0.0..=100.0).contains(&v) {
                    return Err(IngestError::Range {
                        series: name,
                        line: i as u64 + 2,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            name,
            dates,
            values,
        })
    }

    /// Builds a series of consecutive days starting at `start`.
    pub fn daily(
        name: impl Into<String>,
        start: NaiveDate,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        let dates = start.iter_days().take(values.len()).collect();
        Self::new(name, dates, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_next_day(prev: NaiveDate, next: NaiveDate, line: u64) -> Result<(), IngestError> {
    if next <= prev {
        Err(IngestError::Ordering { line, date: next })
    } else if next != prev.succ_opt().unwrap_or(next) {
        Err(IngestError::Gap { line, date: next })
    } else {
        Ok(())
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedDataset {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub rows: Vec<Sample>,
    pub lag: usize,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features[j]).collect()
    }

    /// Builds a dataset from parallel feature rows and targets.
    pub fn from_rows(
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Self {
        assert_eq!(features.len(), targets.len());
        let rows = features
            .into_iter()
            .zip(targets)
            .map(|(features, target)| {
                assert_eq!(features.len(), feature_names.len());
                Sample { features, target }
            })
            .collect();
        Self {
            feature_names,
            target_name: target_name.into(),
            rows,
            lag: 0,
        }
    }

    /// Chronological split: the first `fraction` of rows, then the rest.
    pub fn split_chronological(&self, fraction: f64) -> (Self, Self) {
        let cut = ((self.rows.len() as f64) * fraction).round() as usize;
        let cut = cut.min(self.rows.len());
        let head = Self {
            rows: self.rows[..cut].to_vec(),
            ..self.clone()
        };
        let tail = Self {
            rows: self.rows[cut..].to_vec(),
            ..self.clone()
        };
        (head, tail)
    }

    fn select(&self, keep: &[usize]) -> Self {
        Self {
            feature_names: keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
            target_name: self.target_name.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| Sample {
                    features: keep.iter().map(|&j| r.features[j]).collect(),
                    target: r.target,
                })
                .collect(),
            lag: self.lag,
        }
    }
}

/// Reads a daily CSV file. `schema` lists columns that must be present;
/// every non-date column becomes a [`TimeSeries`].
pub fn load_csv(path: impl AsRef<Path>, schema: &[&str]) -> Result<Vec<TimeSeries>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[&str]) -> Result<Vec<TimeSeries>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(&e, 1))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(IngestError::MissingHeader);
    }
    if headers[0] != "date" {
        return Err(IngestError::DateColumn {
            found: headers[0].clone(),
        });
    }
    for col in schema {
        if !headers.iter().any(|h| h == col) {
            return Err(IngestError::MissingColumn {
                column: (*col).to_owned(),
            });
        }
    }

    let names = &headers[1..];
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(&e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_date = &record[0];
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
            IngestError::BadDate {
                line,
                value: raw_date.to_owned(),
            }
        })?;
        if let Some(&prev) = dates.last() {
            check_next_day(prev, date, line)?;
        }
        dates.push(date);
        for (j, name) in names.iter().enumerate() {
            let raw = &record[j + 1];
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| IngestError::BadValue {
                    line,
                    column: name.clone(),
                    value: raw.to_owned(),
                })?;
            if RATE_SERIES.contains(&name.as_str()) && !(0.0..=100.0).contains(&v) {
                return Err(IngestError::Range {
                    series: name.clone(),
                    line,
                    value: v,
                });
            }
            columns[j].push(v);
        }
    }

    Ok(names
        .iter()
        .zip(columns)
        .map(|(name, values)| TimeSeries {
            name: name.clone(),
            dates: dates.clone(),
            values,
        })
        .collect())
}

fn malformed(e: &csv::Error, fallback_line: u64) -> IngestError {
    let line = e
        .position()
        .map(|p| p.line())
        .unwrap_or(fallback_line);
    IngestError::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Univariate lag embedding: row `t` has features `v[t-lag..t]` (oldest
/// first) and target `v[t]`.
pub fn lag_embed(series: &TimeSeries, lag: usize) -> Result<SupervisedDataset, IngestError> {
    lag_embed_multivariate(series, &[], lag)
}

/// Lag embedding with extra series contributing their own lag windows.
/// Features are ordered target lags first, then each exogenous series.
pub fn lag_embed_multivariate(
    target: &TimeSeries,
    exogenous: &[&TimeSeries],
    lag: usize,
) -> Result<SupervisedDataset, IngestError> {
    let n = target.len();
    if lag == 0 || lag >= n {
        return Err(IngestError::InsufficientData { len: n, lag });
    }
    for s in exogenous {
        if s.dates != target.dates {
            return Err(IngestError::MisalignedSeries(s.name.clone()));
        }
    }
    let sources: Vec<&TimeSeries> = std::iter::once(target).chain(exogenous.iter().copied()).collect();
    let feature_names = sources
        .iter()
        .flat_map(|s| (1..=lag).rev().map(move |k| format!("{}_lag{k}", s.name)))
        .collect();
    let rows = (lag..n)
        .map(|t| Sample {
            features: sources
                .iter()
                .flat_map(|s| s.values[t - lag..t].iter().copied())
                .collect(),
            target: target.values[t],
        })
        .collect();
    Ok(SupervisedDataset {
        feature_names,
        target_name: target.name.clone(),
        rows,
        lag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropReason {
    ZeroVariance,
    BelowThreshold { r: f64, threshold: f64 },
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::ZeroVariance => f.write_str("zero-variance"),
            DropReason::BelowThreshold { r, threshold } => {
                write!(f, "|r|={:.4}<{threshold}", r.abs())
            }
        }
    }
}

/// Features removed by [`correlation_filter`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropReport {
    pub dropped: Vec<(String, DropReason)>,
}

impl fmt::Display for DropReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (feature, reason) in &self.dropped {
            writeln!(f, "DROPPED {feature} {reason}")?;
        }
        Ok(())
    }
}

/// Keeps features whose absolute Pearson correlation with the target is at
/// least `threshold`. Constant features are always dropped.
pub fn correlation_filter(
    dataset: &SupervisedDataset,
    threshold: f64,
) -> Result<(SupervisedDataset, DropReport), IngestError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    if dataset.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let targets = dataset.targets();
    let mut keep = Vec::new();
    let mut report = DropReport::default();
    for (j, name) in dataset.feature_names.iter().enumerate() {
        let col = dataset.column(j);
        let constant = col.iter().all(|&v| v == col[0]);
        match stats::pearson(&col, &targets) {
            _ if constant => report.dropped.push((name.clone(), DropReason::ZeroVariance)),
            None => report.dropped.push((name.clone(), DropReason::ZeroVariance)),
            // exact-one correlations can come back as 0.9999999999999998
            Some(r) if r.abs() + 1e-12 >= threshold => keep.push(j),
            Some(r) => report
                .dropped
                .push((name.clone(), DropReason::BelowThreshold { r, threshold })),
        }
    }
    for (feature, reason) in &report.dropped {
        log::info!("DROPPED {feature} {reason}");
    }
    if keep.is_empty() {
        return Err(IngestError::EmptySelection);
    }
    Ok((dataset.select(&keep), report))
}

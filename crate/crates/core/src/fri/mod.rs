//! Fuzzy rule induction.
//!
//! Crisp interval rules are grown and pruned one class at a time, then
//! each condition is widened into a trapezoid where doing so keeps the
//! rule pure, and every rule gets a certainty factor. Classification
//! sums membership times certainty per class.

pub mod annotate;
pub mod crisp;
pub mod fuzzy;
pub mod membership;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SupervisedDataset;

pub use annotate::{annotate_and_filter, export_json, export_text, majority_vote, AnnotatedRule};
pub use crisp::{induce_crisp_rules, CrispRule, CrispRuleSet, Interval};
pub use fuzzy::{certainty_factor, classify, fuzzify_rule, support, train_fuzzy_model, FuzzyCondition, FuzzyModel, FuzzyRule};
pub use membership::{purity, trapezoid_membership, FuzzySet};

/// Default share of the rows held out for pruning.
pub const DEFAULT_PRUNE_FRACTION: f64 = 1.0 / 3.0;

/// Default certainty-factor cut-off for displayed rules.
pub const DEFAULT_DISPLAY_THRESHOLD: f64 = 0.82;

#[derive(Debug, Error, PartialEq)]
pub enum FriError {
    #[error("no instances")]
    Empty,
    #[error("row {row} has {got} values, expected {expected}")]
    RowWidth { row: usize, got: usize, expected: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("prune fraction {0} is outside [0, 0.5]")]
    PruneFraction(f64),
    #[error("display threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("purity is undefined when both membership sums are zero")]
    UndefinedPurity,
    #[error("condition refers to attribute {index}, data has {width}")]
    Attribute { index: usize, width: usize },
    #[error("rule label `{0}` is not a class of the data")]
    UnknownClass(String),
}

/// Numeric instances with class labels, in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledData {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl LabeledData {
    pub fn new(
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
    ) -> Result<Self, FriError> {
        if rows.len() != labels.len() {
            return Err(FriError::LabelCount {
                labels: labels.len(),
                rows: rows.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != feature_names.len() {
                return Err(FriError::RowWidth {
                    row: i,
                    got: r.len(),
                    expected: feature_names.len(),
                });
            }
        }
        Ok(Self {
            feature_names,
            target_name: target_name.into(),
            rows,
            labels,
        })
    }

    /// Uses the numeric target as the class label (integers print without
    /// a fractional part).
    pub fn from_supervised(ds: &SupervisedDataset) -> Self {
        Self {
            feature_names: ds.feature_names.clone(),
            target_name: ds.target_name.clone(),
            rows: ds.rows.iter().map(|r| r.features.clone()).collect(),
            labels: ds.rows.iter().map(|r| format_label(r.target)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct labels, sorted.
    pub fn classes(&self) -> Vec<String> {
        let mut c = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    /// Share of rows labelled `class`.
    pub fn prior(&self, class: &str) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|l| *l == class).count() as f64 / self.len() as f64
    }
}

fn format_label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

//! Sensitivity annotations, display filtering and rule export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fuzzy::FuzzyRule;
use super::FriError;
use crate::simulate::SensitivityEntry;

/// Boyer–Moore majority vote: the element occurring in more than half of
/// the stream, if any.
pub fn majority_vote<T, I>(stream: I) -> Option<T>
where
    T: PartialEq + Clone,
    I: IntoIterator<Item = T>,
    I::IntoIter: Clone,
{
    let iter = stream.into_iter();
    let mut candidate: Option<T> = None;
    let mut count = 0usize;
    for x in iter.clone() {
        if count == 0 {
            candidate = Some(x);
            count = 1;
        } else if candidate.as_ref() == Some(&x) {
            count += 1;
        } else {
            count -= 1;
        }
    }
    let candidate = candidate?;
    let (mut hits, mut total) = (0usize, 0usize);
    for x in iter {
        total += 1;
        if x == candidate {
            hits += 1;
        }
    }
    (2 * hits > total).then_some(candidate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAnnotation {
    pub attribute: String,
    /// Sensitivity variable chosen for the attribute.
    pub variable: Option<String>,
    /// Sum of the variable's |contribution| over all days, in percent.
    pub contribution: f64,
    /// No sensitivity entry matched the attribute.
    pub unmatched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRule {
    pub rule: FuzzyRule,
    pub annotations: Vec<ConditionAnnotation>,
}

/// Sensitivity variables an attribute may refer to when no explicit
/// mapping is given: the name without any `yester<k>days_` prefix, with
/// `ndic` also standing for the confirmed-case input.
pub fn default_variables(attribute: &str) -> Vec<String> {
    let base = strip_lag_prefix(attribute);
    match base {
        "ndic" => vec!["new_daily_increase_confirmed".into(), "ndic".into()],
        "ndis" => vec!["new_daily_increase_suspected".into(), "ndis".into()],
        other => vec![other.into()],
    }
}

fn strip_lag_prefix(attribute: &str) -> &str {
    if let Some(rest) = attribute.strip_prefix("yester") {
        if let Some(pos) = rest.find("days_") {
            if rest[..pos].chars().all(|c| c.is_ascii_digit()) {
                return &rest[pos + "days_".len()..];
            }
        }
    }
    attribute
}

fn annotate(attribute: &str, sensitivity: &[SensitivityEntry], mapping: &BTreeMap<String, Vec<String>>) -> ConditionAnnotation {
    let candidates = mapping
        .get(attribute)
        .cloned()
        .unwrap_or_else(|| default_variables(attribute));
    let mut totals: Vec<(String, f64)> = Vec::new();
    for var in &candidates {
        let entries: Vec<&SensitivityEntry> = sensitivity.iter().filter(|e| e.variable == *var).collect();
        if !entries.is_empty() {
            totals.push((var.clone(), entries.iter().map(|e| e.contribution.abs()).sum()));
        }
    }
    let chosen = match totals.len() {
        0 => None,
        1 => Some(totals[0].clone()),
        _ => {
            let mut by_day: BTreeMap<usize, (&str, f64)> = BTreeMap::new();
            for e in sensitivity.iter().filter(|e| totals.iter().any(|(v, _)| *v == e.variable)) {
                let slot = by_day.entry(e.day).or_insert((e.variable.as_str(), e.contribution.abs()));
                if e.contribution.abs() > slot.1 {
                    *slot = (e.variable.as_str(), e.contribution.abs());
                }
            }
            let picks: Vec<&str> = by_day.values().map(|(v, _)| *v).collect();
            let winner = majority_vote(picks.iter().copied()).map(str::to_owned).unwrap_or_else(|| {
                totals
                    .iter()
                    .fold(&totals[0], |b, t| if t.1 > b.1 { t } else { b })
                    .0
                    .clone()
            });
            totals.into_iter().find(|(v, _)| *v == winner)
        }
    };
    match chosen {
        Some((variable, contribution)) => ConditionAnnotation {
            attribute: attribute.to_owned(),
            variable: Some(variable),
            contribution,
            unmatched: false,
        },
        None => ConditionAnnotation {
            attribute: attribute.to_owned(),
            variable: None,
            contribution: 0.0,
            unmatched: true,
        },
    }
}

/// Annotates every condition with its attribute's sensitivity and keeps
/// the rules with `CF >= threshold`, highest CF first. Attributes absent
/// from `mapping` use [`default_variables`].
pub fn annotate_and_filter(
    rules: &[FuzzyRule],
    sensitivity: &[SensitivityEntry],
    mapping: &BTreeMap<String, Vec<String>>,
    threshold: f64,
) -> Result<Vec<AnnotatedRule>, FriError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(FriError::Threshold(threshold));
    }
    let mut kept: Vec<AnnotatedRule> = rules
        .iter()
        .filter(|r| r.certainty_factor >= threshold)
        .map(|r| AnnotatedRule {
            annotations: r
                .conditions
                .iter()
                .map(|c| annotate(&c.name, sensitivity, mapping))
                .collect(),
            rule: r.clone(),
        })
        .collect();
    kept.sort_by(|a, b| b.rule.certainty_factor.total_cmp(&a.rule.certainty_factor));
    Ok(kept)
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        return "∞".into();
    }
    if v == f64::NEG_INFINITY {
        return "-∞".into();
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// One line per rule:
/// `RULE 1: (x = '(1.5 .. 3]') & (y = '(-∞ .. 2]') -> win=1 (CF = 0.96)`.
pub fn export_text(rules: &[AnnotatedRule], target_name: &str) -> String {
    let mut out = String::new();
    for (n, r) in rules.iter().enumerate() {
        let conds: Vec<String> = r
            .rule
            .conditions
            .iter()
            .map(|c| {
                let close = if c.set.core_high.is_infinite() { ')' } else { ']' };
                format!(
                    "({} = '({} .. {}{close}')",
                    c.name,
                    number(c.set.core_low),
                    number(c.set.core_high)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "RULE {}: {} -> {}={} (CF = {:.2})",
            n + 1,
            conds.join(" & "),
            target_name,
            r.rule.label,
            r.rule.certainty_factor
        );
    }
    out
}

pub fn export_json(rules: &[AnnotatedRule]) -> Result<String, serde_json::Error> {
    serde_json::to_string_pretty(rules)
}

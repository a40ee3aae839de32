//! Rule fuzzification, certainty factors and support-weighted
//! classification.

use serde::{Deserialize, Serialize};

use super::crisp::{induce_crisp_rules, CrispRule};
use super::membership::{purity, FuzzySet};
use super::{FriError, LabeledData};

/// Purities closer than this count as equal when choosing an extension.
const PURITY_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyCondition {
    pub attribute: usize,
    pub name: String,
    pub set: FuzzySet,
    /// No instance satisfied the other conditions, so the set stayed crisp.
    pub crisp_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub conditions: Vec<FuzzyCondition>,
    pub label: String,
    pub certainty_factor: f64,
}

impl FuzzyRule {
    /// Minimum of the per-condition memberships (1 for an empty rule).
    pub fn membership(&self, row: &[f64]) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.set.membership(row[c.attribute]))
            .fold(1.0, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyModel {
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Sorted class labels with their training shares.
    pub classes: Vec<(String, f64)>,
    pub rules: Vec<FuzzyRule>,
    pub default_label: String,
}

impl FuzzyModel {
    pub fn classify<'a>(&'a self, row: &[f64]) -> &'a str {
        classify(row, self)
    }
}

fn check_attributes(rule: &CrispRule, width: usize) -> Result<(), FriError> {
    match rule.conditions.iter().find(|c| c.attribute >= width) {
        Some(c) => Err(FriError::Attribute {
            index: c.attribute,
            width,
        }),
        None => Ok(()),
    }
}

/// Picks the support endpoint with the best purity on `instances`; ties go
/// to the widest support. `candidates` must run from the core outwards.
fn best_extension(
    data: &LabeledData,
    instances: &[usize],
    attribute: usize,
    label: &str,
    candidates: &[f64],
    make: impl Fn(f64) -> FuzzySet,
) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &c in candidates {
        let set = make(c);
        let (mut pos, mut neg) = (0.0, 0.0);
        for &i in instances {
            let mu = set.membership(data.rows[i][attribute]);
            if data.labels[i] == label {
                pos += mu;
            } else {
                neg += mu;
            }
        }
        let Ok(p) = purity(pos, neg) else { continue };
        if best.is_none_or(|(bp, _)| p >= bp - PURITY_TIE) {
            best = Some((p, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Widens each condition of `rule` into a trapezoid. Conditions are
/// processed in order; each one only looks at instances that every other
/// (possibly already fuzzified) condition admits with nonzero membership.
pub fn fuzzify_rule(rule: &CrispRule, data: &LabeledData) -> Result<FuzzyRule, FriError> {
    check_attributes(rule, data.feature_names.len())?;
    let mut conditions: Vec<FuzzyCondition> = rule
        .conditions
        .iter()
        .map(|c| FuzzyCondition {
            attribute: c.attribute,
            name: c.name.clone(),
            set: FuzzySet::crisp(c.interval.lo, c.interval.hi),
            crisp_fallback: false,
        })
        .collect();

    for i in 0..conditions.len() {
        let instances: Vec<usize> = (0..data.len())
            .filter(|&r| {
                conditions
                    .iter()
                    .enumerate()
                    .all(|(j, c)| j == i || c.set.membership(data.rows[r][c.attribute]) > 0.0)
            })
            .collect();
        if instances.is_empty() {
            conditions[i].crisp_fallback = true;
            continue;
        }
        let a = conditions[i].attribute;
        let core = conditions[i].set;
        let positives = |keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
            let mut v: Vec<f64> = instances
                .iter()
                .filter(|&&r| data.labels[r] == rule.label)
                .map(|&r| data.rows[r][a])
                .filter(|&x| keep(x))
                .collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };

        let mut support_low = core.core_low;
        if core.core_low.is_finite() {
            let mut cands = vec![core.core_low];
            cands.extend(positives(&|x| x < core.core_low).into_iter().rev());
            if let Some(s) = best_extension(data, &instances, a, &rule.label, &cands, |s| FuzzySet {
                support_low: s,
                ..core
            }) {
                support_low = s;
            }
        }
        let mut support_high = core.core_high;
        if core.core_high.is_finite() {
            let mut cands = vec![core.core_high];
            cands.extend(positives(&|x| x > core.core_high));
            if let Some(s) = best_extension(data, &instances, a, &rule.label, &cands, |s| FuzzySet {
                support_low,
                support_high: s,
                ..core
            }) {
                support_high = s;
            }
        }
        conditions[i].set = FuzzySet {
            support_low,
            support_high,
            ..core
        };
    }

    let mut fuzzy = FuzzyRule {
        conditions,
        label: rule.label.clone(),
        certainty_factor: 0.0,
    };
    fuzzy.certainty_factor = certainty_factor(&fuzzy, data)?;
    Ok(fuzzy)
}

/// `(2·share + Σ_class μ) / (2 + Σ_all μ)` where `share` is the rule class's
/// share of the data.
pub fn certainty_factor(rule: &FuzzyRule, train: &LabeledData) -> Result<f64, FriError> {
    if train.is_empty() {
        return Err(FriError::Empty);
    }
    let mut in_class = 0usize;
    let mut class_mass = 0.0;
    let mut total_mass = 0.0;
    for (row, label) in train.rows.iter().zip(&train.labels) {
        let mu = rule.membership(row);
        total_mass += mu;
        if *label == rule.label {
            in_class += 1;
            class_mass += mu;
        }
    }
    let share = in_class as f64 / train.len() as f64;
    Ok(((2.0 * share + class_mass) / (2.0 + total_mass)).clamp(0.0, 1.0))
}

/// Sum of membership times certainty over the rules for `class`.
pub fn support(row: &[f64], model: &FuzzyModel, class: &str) -> f64 {
    model
        .rules
        .iter()
        .filter(|r| r.label == class)
        .map(|r| r.membership(row) * r.certainty_factor)
        .sum()
}

/// Class with the largest support; ties go to the higher prior, then the
/// smaller label. With no support anywhere the default label is returned.
pub fn classify<'a>(row: &[f64], model: &'a FuzzyModel) -> &'a str {
    let mut best: Option<(f64, f64, &str)> = None;
    for (class, prior) in &model.classes {
        let s = support(row, model, class);
        let better = match best {
            None => true,
            Some((bs, bp, _)) => s > bs || (s == bs && *prior > bp),
        };
        if better {
            best = Some((s, *prior, class));
        }
    }
    match best {
        Some((s, _, class)) if s > 0.0 => class,
        _ => &model.default_label,
    }
}

/// Crisp induction followed by fuzzification of every rule.
pub fn train_fuzzy_model(data: &LabeledData, prune_fraction: f64) -> Result<FuzzyModel, FriError> {
    let crisp = induce_crisp_rules(data, prune_fraction)?;
    let rules = crisp
        .rules
        .iter()
        .map(|r| fuzzify_rule(r, data))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FuzzyModel {
        feature_names: data.feature_names.clone(),
        target_name: data.target_name.clone(),
        classes: data.classes().into_iter().map(|c| {
            let p = data.prior(&c);
            (c, p)
        }).collect(),
        rules,
        default_label: crisp.default_label,
    })
}

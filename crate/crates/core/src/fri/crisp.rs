//! Greedy separate-and-conquer induction of interval rules with
//! reduced-error pruning.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{FriError, LabeledData};

/// Half-open interval `(lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: usize,
    pub name: String,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrispRule {
    /// At most one condition per attribute, in the order first added.
    pub conditions: Vec<Condition>,
    pub label: String,
    /// Covered training instances of the rule's class.
    pub positives: usize,
    /// Covered training instances of other classes.
    pub negatives: usize,
}

impl CrispRule {
    pub fn covers(&self, row: &[f64]) -> bool {
        covers(&self.conditions, row)
    }

    /// Laplace-corrected training precision.
    pub fn laplace(&self) -> f64 {
        (self.positives as f64 + 1.0) / ((self.positives + self.negatives) as f64 + 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrispRuleSet {
    pub rules: Vec<CrispRule>,
    pub default_label: String,
}

impl CrispRuleSet {
    /// Label of the firing rule with the highest Laplace precision (first
    /// such rule on ties), else the default.
    pub fn predict(&self, row: &[f64]) -> &str {
        let mut best: Option<&CrispRule> = None;
        for r in self.rules.iter().filter(|r| r.covers(row)) {
            if best.is_none_or(|b| r.laplace() > b.laplace()) {
                best = Some(r);
            }
        }
        best.map_or(self.default_label.as_str(), |r| r.label.as_str())
    }

    pub fn accuracy(&self, data: &LabeledData) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(r, l)| self.predict(r) == l.as_str())
            .count();
        hits as f64 / data.len() as f64
    }
}

fn covers(conditions: &[Condition], row: &[f64]) -> bool {
    conditions.iter().all(|c| c.interval.contains(row[c.attribute]))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    AtMost,
    Above,
}

/// Precision `p / (p + n)` compared exactly by cross-multiplication.
fn cmp_precision(a: (usize, usize), b: (usize, usize)) -> Ordering {
    let lhs = a.0 as u128 * (b.0 + b.1) as u128;
    let rhs = b.0 as u128 * (a.0 + a.1) as u128;
    lhs.cmp(&rhs)
}

struct Candidate {
    counts: (usize, usize),
    gain: f64,
    attribute: usize,
    threshold: f64,
    side: Side,
}

/// Information gain of narrowing a rule from `before` to `after` covered
/// (positive, negative) counts: `p1 · (log2 prec1 − log2 prec0)`.
fn foil_gain(before: (usize, usize), after: (usize, usize)) -> f64 {
    let prec = |(p, n): (usize, usize)| p as f64 / (p + n) as f64;
    after.0 as f64 * (prec(after).log2() - prec(before).log2())
}

/// Gains closer than this count as equal.
const GAIN_TIE: f64 = 1e-9;

impl Candidate {
    /// Higher gain, then more covered positives. Earlier candidates
    /// already win on attribute index, threshold and side.
    fn beats(&self, other: &Candidate) -> bool {
        if self.gain > other.gain + GAIN_TIE {
            true
        } else if self.gain < other.gain - GAIN_TIE {
            false
        } else {
            self.counts.0 > other.counts.0
        }
    }
}

fn count(data: &LabeledData, idx: &[usize], class: &str, conditions: &[Condition]) -> (usize, usize) {
    let mut p = 0;
    let mut n = 0;
    for &i in idx {
        if covers(conditions, &data.rows[i]) {
            if data.labels[i] == class {
                p += 1;
            } else {
                n += 1;
            }
        }
    }
    (p, n)
}

fn add_condition(conditions: &mut Vec<Condition>, data: &LabeledData, attribute: usize, side: Side, threshold: f64) {
    let pos = conditions.iter().position(|c| c.attribute == attribute);
    let slot = match pos {
        Some(i) => &mut conditions[i],
        None => {
            conditions.push(Condition {
                attribute,
                name: data.feature_names[attribute].clone(),
                interval: Interval::ALL,
            });
            conditions.last_mut().expect("just pushed")
        }
    };
    match side {
        Side::AtMost => slot.interval.hi = slot.interval.hi.min(threshold),
        Side::Above => slot.interval.lo = slot.interval.lo.max(threshold),
    }
}

fn grow(data: &LabeledData, idx: &[usize], class: &str) -> Vec<Condition> {
    let width = data.feature_names.len();
    let mut conditions = Vec::new();
    let mut covered: Vec<usize> = idx.to_vec();
    loop {
        let total_p = covered.iter().filter(|&&i| data.labels[i] == class).count();
        let current = (total_p, covered.len() - total_p);
        if current.1 == 0 || current.0 == 0 {
            break;
        }
        let mut best: Option<Candidate> = None;
        for a in 0..width {
            let mut vals: Vec<(f64, bool)> = covered
                .iter()
                .map(|&i| (data.rows[i][a], data.labels[i] == class))
                .collect();
            vals.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut below_p = 0;
            for k in 0..vals.len() {
                below_p += usize::from(vals[k].1);
                let Some(next) = vals.get(k + 1) else { break };
                if next.0 == vals[k].0 {
                    continue;
                }
                let threshold = vals[k].0 + (next.0 - vals[k].0) / 2.0;
                let below = (below_p, k + 1 - below_p);
                let above = (total_p - below_p, vals.len() - (k + 1) - (total_p - below_p));
                for (side, counts) in [(Side::AtMost, below), (Side::Above, above)] {
                    if counts.0 == 0 {
                        continue;
                    }
                    let cand = Candidate {
                        counts,
                        gain: foil_gain(current, counts),
                        attribute: a,
                        threshold,
                        side,
                    };
                    if best.as_ref().is_none_or(|b| cand.beats(b)) {
                        best = Some(cand);
                    }
                }
            }
        }
        let Some(best) = best else { break };
        if cmp_precision(best.counts, current) != Ordering::Greater {
            break;
        }
        add_condition(&mut conditions, data, best.attribute, best.side, best.threshold);
        covered.retain(|&i| covers(&conditions, &data.rows[i]));
    }
    conditions
}

fn rule_accuracy(data: &LabeledData, idx: &[usize], class: &str, conditions: &[Condition]) -> usize {
    idx.iter()
        .filter(|&&i| covers(conditions, &data.rows[i]) == (data.labels[i] == class))
        .count()
}

/// Drops trailing conditions while accuracy on `prune` does not decrease.
fn prune(data: &LabeledData, prune: &[usize], class: &str, mut conditions: Vec<Condition>) -> Vec<Condition> {
    while conditions.len() > 1 {
        let now = rule_accuracy(data, prune, class, &conditions);
        let shorter = &conditions[..conditions.len() - 1];
        if rule_accuracy(data, prune, class, shorter) >= now {
            conditions.pop();
        } else {
            break;
        }
    }
    conditions
}

/// Re-places each finite bound at the best-gain midpoint of the values in
/// `idx`, holding the other bounds fixed. Growing only sees the grow split, so its thresholds
/// can sit anywhere inside a gap of the full data.
fn refine(data: &LabeledData, idx: &[usize], class: &str, mut conditions: Vec<Condition>) -> Vec<Condition> {
    for k in 0..conditions.len() {
        for side in [Side::Above, Side::AtMost] {
            let current = match side {
                Side::Above => conditions[k].interval.lo,
                Side::AtMost => conditions[k].interval.hi,
            };
            if !current.is_finite() {
                continue;
            }
            let a = conditions[k].attribute;
            let mut free = conditions.clone();
            match side {
                Side::Above => free[k].interval.lo = f64::NEG_INFINITY,
                Side::AtMost => free[k].interval.hi = f64::INFINITY,
            }
            let mut vals: Vec<f64> = idx.iter().map(|&i| data.rows[i][a]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let base = count(data, idx, class, &free);
            if base.0 == 0 {
                continue;
            }
            let mut best: Option<Candidate> = None;
            for w in vals.windows(2) {
                let t = w[0] + (w[1] - w[0]) / 2.0;
                let mut trial = free.clone();
                match side {
                    Side::Above => trial[k].interval.lo = t,
                    Side::AtMost => trial[k].interval.hi = t,
                }
                let counts = count(data, idx, class, &trial);
                if counts.0 == 0 {
                    continue;
                }
                let cand = Candidate {
                    counts,
                    gain: foil_gain(base, counts),
                    attribute: a,
                    threshold: t,
                    side,
                };
                if best.as_ref().is_none_or(|b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
            let t = best.map_or(current, |b| b.threshold);
            match side {
                Side::Above => conditions[k].interval.lo = t,
                Side::AtMost => conditions[k].interval.hi = t,
            }
        }
    }
    conditions
}

/// Induces rules for every class. `prune_fraction` of the remaining rows
/// (the most recent ones) is held out for pruning each rule.
pub fn induce_crisp_rules(data: &LabeledData, prune_fraction: f64) -> Result<CrispRuleSet, FriError> {
    if data.is_empty() {
        return Err(FriError::Empty);
    }
    if !(0.0..=0.5).contains(&prune_fraction) {
        return Err(FriError::PruneFraction(prune_fraction));
    }
    let classes = data.classes();
    if classes.len() == 1 {
        return Ok(CrispRuleSet {
            rules: Vec::new(),
            default_label: classes[0].clone(),
        });
    }
    let mut rules = Vec::new();
    for class in &classes {
        let prior = data.prior(class);
        let mut remaining: Vec<usize> = (0..data.len()).collect();
        let max_rules = data.labels.iter().filter(|l| *l == class).count();
        for _ in 0..max_rules {
            let n_prune = (prune_fraction * remaining.len() as f64).floor() as usize;
            let (grow_idx, prune_idx) = remaining.split_at(remaining.len() - n_prune);
            let grow_has_positive = grow_idx.iter().any(|&i| data.labels[i] == *class);
            let conditions = if grow_has_positive && !prune_idx.is_empty() {
                let grown = grow(data, grow_idx, class);
                refine(data, &remaining, class, prune(data, prune_idx, class, grown))
            } else {
                grow(data, &remaining, class)
            };
            if conditions.is_empty() {
                break;
            }
            let (p, n) = count(data, &remaining, class, &conditions);
            if p == 0 || p as f64 / (p + n) as f64 <= prior {
                break;
            }
            let (positives, negatives) = count(data, &(0..data.len()).collect::<Vec<_>>(), class, &conditions);
            log::debug!("rule for {class}: {} conditions, {positives}+/{negatives}-", conditions.len());
            remaining.retain(|&i| data.labels[i] != *class || !covers(&conditions, &data.rows[i]));
            rules.push(CrispRule {
                conditions,
                label: class.clone(),
                positives,
                negatives,
            });
            if !remaining.iter().any(|&i| data.labels[i] == *class) {
                break;
            }
        }
    }
    let default_label = default_label(data, &rules, &classes);
    Ok(CrispRuleSet { rules, default_label })
}

/// Majority class among rows no rule covers (all rows when every row is
/// covered); ties go to the higher prior, then the smaller label.
fn default_label(data: &LabeledData, rules: &[CrispRule], classes: &[String]) -> String {
    let residual: Vec<usize> = (0..data.len())
        .filter(|&i| !rules.iter().any(|r| r.covers(&data.rows[i])))
        .collect();
    let pool: Vec<usize> = if residual.is_empty() {
        (0..data.len()).collect()
    } else {
        residual
    };
    let mut best: Option<(usize, usize, &String)> = None;
    for c in classes {
        let n = pool.iter().filter(|&&i| data.labels[i] == *c).count();
        let total = data.labels.iter().filter(|l| *l == c).count();
        let better = match best {
            None => true,
            Some((bn, bt, _)) => n > bn || (n == bn && total > bt),
        };
        if better {
            best = Some((n, total, c));
        }
    }
    best.expect("at least one class").2.clone()
}

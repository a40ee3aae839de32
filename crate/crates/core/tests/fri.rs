mod common;

use std::collections::BTreeMap;

use cmcm_core::fri::{
    annotate_and_filter, certainty_factor, classify, export_text, fuzzify_rule, induce_crisp_rules,
    majority_vote, purity, support, train_fuzzy_model, trapezoid_membership, CrispRule, FriError,
    FuzzyCondition, FuzzyModel, FuzzyRule, FuzzySet, Interval, LabeledData, DEFAULT_PRUNE_FRACTION,
};
use cmcm_core::fri::crisp::Condition;
use cmcm_core::simulate::SensitivityEntry;
use proptest::prelude::*;
use rand::Rng;

fn labeled(rows: Vec<Vec<f64>>, labels: Vec<&str>) -> LabeledData {
    let width = rows.first().map_or(1, Vec::len);
    LabeledData::new(
        (0..width).map(|j| format!("a{j}")).collect(),
        "class",
        rows,
        labels.into_iter().map(str::to_owned).collect(),
    )
    .unwrap()
}

fn one_attr(xs: &[f64], labels: &[&str]) -> LabeledData {
    labeled(xs.iter().map(|&x| vec![x]).collect(), labels.to_vec())
}

fn condition(set: FuzzySet) -> FuzzyCondition {
    FuzzyCondition { attribute: 0, name: "a0".into(), set, crisp_fallback: false }
}

fn rule(label: &str, set: FuzzySet, cf: f64) -> FuzzyRule {
    FuzzyRule { conditions: vec![condition(set)], label: label.into(), certainty_factor: cf }
}

fn crisp_rule(label: &str, lo: f64, hi: f64) -> CrispRule {
    CrispRule {
        conditions: vec![Condition { attribute: 0, name: "a0".into(), interval: Interval { lo, hi } }],
        label: label.into(),
        positives: 0,
        negatives: 0,
    }
}

fn model(rules: Vec<FuzzyRule>, classes: &[(&str, f64)]) -> FuzzyModel {
    FuzzyModel {
        feature_names: vec!["a0".into()],
        target_name: "class".into(),
        classes: classes.iter().map(|(c, p)| (c.to_string(), *p)).collect(),
        rules,
        default_label: "fallback".into(),
    }
}

#[test]
fn trapezoid_examples() {
    let s = FuzzySet::new(0.0, 2.0, 4.0, 6.0).unwrap();
    assert_eq!(trapezoid_membership(&s, 3.0), 1.0);
    assert_eq!(trapezoid_membership(&s, 7.0), 0.0);
    assert_eq!(trapezoid_membership(&s, 1.0), 0.5);
    assert_eq!(trapezoid_membership(&s, 5.5), 0.25);
    assert!(FuzzySet::new(1.0, 0.0, 2.0, 3.0).is_none());
    let open = FuzzySet::new(f64::NEG_INFINITY, f64::NEG_INFINITY, 2.0, 4.0).unwrap();
    assert_eq!(open.membership(-1e300), 1.0);
    assert_eq!(open.membership(3.0), 0.5);
}

#[test]
fn purity_examples() {
    assert_eq!(purity(3.0, 1.0).unwrap(), 0.75);
    assert_eq!(purity(2.0, 0.0).unwrap(), 1.0);
    // Positives with memberships {1, 0.5}, one negative at 0.5.
    assert_eq!(purity(1.0 + 0.5, 0.5).unwrap(), 0.75);
    assert_eq!(purity(0.0, 0.0), Err(FriError::UndefinedPurity));
}

#[test]
fn certainty_factor_examples() {
    let far = FuzzySet::new(100.0, 101.0, 102.0, 103.0).unwrap();
    let data = one_attr(&[0.0, 1.0, 2.0, 3.0], &["j", "j", "k", "k"]);
    assert_eq!(certainty_factor(&rule("j", far, 0.0), &data).unwrap(), 0.5);

    let all = FuzzySet::new(-10.0, -10.0, 10.0, 10.0).unwrap();
    let pure = one_attr(&[0.0, 1.0, 2.0, 3.0], &["j"; 4]);
    assert_eq!(certainty_factor(&rule("j", all, 0.0), &pure).unwrap(), 1.0);

    // Two class-j instances at membership 1, two others at 0.5.
    let ramp = FuzzySet::new(0.0, 2.0, 4.0, 6.0).unwrap();
    let mixed = one_attr(&[2.0, 3.0, 1.0, 5.0], &["j", "j", "k", "k"]);
    let cf = certainty_factor(&rule("j", ramp, 0.0), &mixed).unwrap();
    assert!((cf - 0.6).abs() < 1e-15);

    let empty = LabeledData::new(vec!["a0".into()], "class", vec![], vec![]).unwrap();
    assert_eq!(certainty_factor(&rule("j", ramp, 0.0), &empty), Err(FriError::Empty));
}

#[test]
fn support_examples() {
    let everywhere = FuzzySet::new(-1e9, -1e9, 1e9, 1e9).unwrap();
    let m = model(vec![rule("win", everywhere, 0.9)], &[("win", 0.5), ("lose", 0.5)]);
    assert!((support(&[0.0], &m, "win") - 0.9).abs() < 1e-15);

    let narrow = FuzzySet::new(0.0, 1.0, 2.0, 3.0).unwrap();
    let m = model(vec![rule("win", narrow, 0.9)], &[("win", 0.5)]);
    assert_eq!(support(&[10.0], &m, "win"), 0.0);
    assert_eq!(classify(&[10.0], &m), "fallback");

    // Memberships 0.5 and 1 at x = 0.5.
    let half = FuzzySet::new(0.0, 1.0, 2.0, 3.0).unwrap();
    let whole = FuzzySet::new(0.0, 0.0, 1.0, 1.0).unwrap();
    let m = model(vec![rule("a", half, 0.8), rule("a", whole, 0.6)], &[("a", 1.0)]);
    assert!((support(&[0.5], &m, "a") - 1.0).abs() < 1e-15);
}

#[test]
fn classify_argmax_and_prior_tie() {
    let everywhere = FuzzySet::new(-1e9, -1e9, 1e9, 1e9).unwrap();
    let m = model(
        vec![rule("win", everywhere, 0.9), rule("lose", everywhere, 0.1)],
        &[("lose", 0.5), ("win", 0.5)],
    );
    assert_eq!(classify(&[0.0], &m), "win");

    // Three instances, A twice: prior(A) = 2/3 > prior(B) = 1/3.
    let data = one_attr(&[0.0, 1.0, 2.0], &["A", "A", "B"]);
    let classes: Vec<(String, f64)> = data.classes().into_iter().map(|c| {
        let p = data.prior(&c);
        (c, p)
    }).collect();
    assert!(classes[0].1 > classes[1].1);
    let tied = FuzzyModel {
        classes,
        ..model(vec![rule("B", everywhere, 0.6), rule("A", everywhere, 0.6)], &[])
    };
    assert_eq!(support(&[0.0], &tied, "A"), support(&[0.0], &tied, "B"));
    assert_eq!(classify(&[0.0], &tied), "A");
    assert_eq!(classify(&[0.0], &tied), classify(&[0.0], &tied));
}

#[test]
fn one_dimensional_threshold_matches_brute_force() {
    let xs: Vec<f64> = (0..20).map(|i| ((i * 7) % 20) as f64).collect();
    let labels: Vec<&str> = xs.iter().map(|&x| if x >= 10.0 { "A" } else { "B" }).collect();
    let data = one_attr(&xs, &labels);

    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let separating: Vec<f64> = sorted
        .windows(2)
        .map(|w| (w[0] + w[1]) / 2.0)
        .filter(|&t| xs.iter().zip(&labels).all(|(&x, &l)| (x > t) == (l == "A")))
        .collect();
    assert_eq!(separating, vec![9.5]);

    let set = induce_crisp_rules(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    assert_eq!(set.accuracy(&data), 1.0);
    let thresholds: Vec<f64> = set
        .rules
        .iter()
        .flat_map(|r| r.conditions.iter())
        .flat_map(|c| [c.interval.lo, c.interval.hi])
        .filter(|t| t.is_finite())
        .collect();
    assert!(!thresholds.is_empty());
    assert!(thresholds.iter().all(|t| separating.contains(t)), "{thresholds:?}");
}

#[test]
fn single_class_gives_default_only() {
    let data = one_attr(&[1.0, 2.0, 3.0], &["x", "x", "x"]);
    let set = induce_crisp_rules(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    assert!(set.rules.is_empty());
    assert_eq!(set.default_label, "x");
}

#[test]
fn invalid_prune_fraction() {
    let data = one_attr(&[1.0, 2.0], &["x", "y"]);
    assert_eq!(induce_crisp_rules(&data, 0.6), Err(FriError::PruneFraction(0.6)));
}

#[test]
fn xor_needs_several_rules() {
    let mut rng = common::rng(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let (cx, cy) = [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)][i % 4];
        rows.push(vec![cx + rng.random_range(-0.2..0.2), cy + rng.random_range(-0.2..0.2)]);
        labels.push(if i % 4 < 2 { "same" } else { "diff" });
    }
    let data = labeled(rows, labels);

    // No single box catches all of one class and none of the other.
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
    for a in 0..2 {
        let mut v: Vec<f64> = data.rows.iter().map(|r| r[a]).collect();
        v.sort_by(f64::total_cmp);
        cuts[a] = v.windows(2).map(|w| (w[0] + w[1]) / 2.0).step_by(6).collect();
        cuts[a].insert(0, f64::NEG_INFINITY);
        cuts[a].push(f64::INFINITY);
    }
    for class in ["same", "diff"] {
        for &x0 in &cuts[0] {
            for &x1 in cuts[0].iter().filter(|&&x| x > x0) {
                for &y0 in &cuts[1] {
                    for &y1 in cuts[1].iter().filter(|&&y| y > y0) {
                        let inside = |r: &Vec<f64>| r[0] > x0 && r[0] <= x1 && r[1] > y0 && r[1] <= y1;
                        let perfect = data.rows.iter().zip(&data.labels).all(|(r, l)| inside(r) == (l == class));
                        assert!(!perfect);
                    }
                }
            }
        }
    }

    let set = induce_crisp_rules(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    assert!(set.rules.len() >= 2);
    assert_eq!(set.accuracy(&data), 1.0);
}

#[test]
fn separable_box_is_learned_exactly() {
    let mut rng = common::rng(77);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let labels: Vec<&str> = rows.iter().map(|r| if r[0] > 0.4 && r[1] <= 0.7 { "in" } else { "out" }).collect();
    let data = labeled(rows, labels);
    for f in [0.0, DEFAULT_PRUNE_FRACTION] {
        let set = induce_crisp_rules(&data, f).unwrap();
        assert_eq!(set.accuracy(&data), 1.0, "prune fraction {f}");
    }

    // Brute force: the pure box (a0 > lo, a1 <= hi) covering the most
    // positives, over every midpoint pair of the full data.
    let midpoints = |a: usize| {
        let mut v: Vec<f64> = data.rows.iter().map(|r| r[a]).collect();
        v.sort_by(f64::total_cmp);
        v.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect::<Vec<_>>()
    };
    let mut best = 0usize;
    let mut optimal: Vec<(f64, f64)> = Vec::new();
    for &lo in &midpoints(0) {
        for &hi in &midpoints(1) {
            let covered: Vec<&str> = data
                .rows
                .iter()
                .zip(&data.labels)
                .filter(|(r, _)| r[0] > lo && r[1] <= hi)
                .map(|(_, l)| l.as_str())
                .collect();
            if !covered.iter().all(|&l| l == "in") || covered.len() < best {
                continue;
            }
            if covered.len() > best {
                best = covered.len();
                optimal.clear();
            }
            optimal.push((lo, hi));
        }
    }
    let set = induce_crisp_rules(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    let box_rule = set.rules.iter().find(|r| r.label == "in").expect("a rule for the box");
    let bound = |a: usize| box_rule.conditions.iter().find(|c| c.attribute == a).unwrap().interval;
    assert_eq!(box_rule.conditions.len(), 2);
    assert_eq!((box_rule.positives, box_rule.negatives), (best, 0));
    assert!(optimal.contains(&(bound(0).lo, bound(1).hi)), "{:?} not in {optimal:?}", (bound(0).lo, bound(1).hi));
    let model = train_fuzzy_model(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    let hits = data.rows.iter().zip(&data.labels).filter(|(r, l)| classify(r, &model) == l.as_str()).count();
    assert!(hits >= 190, "fuzzy accuracy {hits}/200");
}

#[test]
fn fuzzification_extends_over_pure_positives() {
    // Positives at 1..=4 beyond the core (5, 10]; no negative to the left.
    let xs = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
    let labels = ["p", "p", "p", "p", "p", "p", "p", "n", "n"];
    let data = one_attr(&xs, &labels);
    let fuzzy = fuzzify_rule(&crisp_rule("p", 5.0, 10.0), &data).unwrap();
    let set = fuzzy.conditions[0].set;
    assert_eq!((set.core_low, set.core_high), (5.0, 10.0));
    assert_eq!(set.support_low, 1.0);
    // Any right extension admits the negative at 12 with nonzero weight.
    assert_eq!(set.support_high, 10.0);
}

#[test]
fn symmetric_positives_extend_both_sides_equally() {
    let d = 1.5;
    let xs = [4.0 - d, 4.0, 5.0, 6.0, 6.0 + d, 4.0 - d - 1.0, 6.0 + d + 1.0];
    let labels = ["p", "p", "p", "p", "p", "n", "n"];
    let data = one_attr(&xs, &labels);
    let set = fuzzify_rule(&crisp_rule("p", 4.0, 6.0), &data).unwrap().conditions[0].set;
    assert_eq!(set.core_low - set.support_low, d);
    assert_eq!(set.support_high - set.core_high, d);
}

#[test]
fn fuzzy_rules_agree_with_crisp_inside_cores() {
    let mut rng = common::rng(3);
    let rows: Vec<Vec<f64>> = (0..150).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
    let labels: Vec<&str> = rows.iter().map(|r| if r[0] + 0.3 * r[1] > 5.0 { "hi" } else { "lo" }).collect();
    let data = labeled(rows, labels);
    let crisp = induce_crisp_rules(&data, DEFAULT_PRUNE_FRACTION).unwrap();
    for r in &crisp.rules {
        let f = fuzzify_rule(r, &data).unwrap();
        for row in &data.rows {
            if r.covers(row) {
                assert_eq!(f.membership(row), 1.0);
            }
        }
    }
}

#[test]
fn majority_vote_examples() {
    assert_eq!(majority_vote([1, 1, 2, 1]), Some(1));
    assert_eq!(majority_vote([1, 2]), None);
    assert_eq!(majority_vote(Vec::<u8>::new()), None);

    let mut rng = common::rng(60);
    let stream: Vec<u32> = (0..100_000)
        .map(|_| if rng.random_bool(0.6) { 7 } else { rng.random_range(0..50) })
        .collect();
    let mut counts = BTreeMap::new();
    for &x in &stream {
        *counts.entry(x).or_insert(0usize) += 1;
    }
    let (&top, &n) = counts.iter().max_by_key(|(_, &n)| n).unwrap();
    assert!(2 * n > stream.len());
    assert_eq!(majority_vote(stream.iter().copied()), Some(top));
}

fn cf_rules(cfs: &[f64]) -> Vec<FuzzyRule> {
    let s = FuzzySet::new(0.0, 1.0, 2.0, 3.0).unwrap();
    cfs.iter().map(|&cf| FuzzyRule {
        conditions: vec![FuzzyCondition { attribute: 0, name: "yester1days_ndic".into(), set: s, crisp_fallback: false }],
        label: "1".into(),
        certainty_factor: cf,
    }).collect()
}

#[test]
fn display_threshold_filters_and_sorts() {
    let rules = cf_rules(&[0.53, 0.92, 0.8, 0.96, 0.53, 0.85]);
    let none = BTreeMap::new();
    let kept = annotate_and_filter(&rules, &[], &none, 0.82).unwrap();
    let cfs: Vec<f64> = kept.iter().map(|r| r.rule.certainty_factor).collect();
    assert_eq!(cfs, vec![0.96, 0.92, 0.85]);
    assert_eq!(annotate_and_filter(&rules, &[], &none, 0.0).unwrap().len(), 6);
    assert!(annotate_and_filter(&rules, &[], &none, 1.0).unwrap().is_empty());
    assert_eq!(annotate_and_filter(&rules, &[], &none, 1.2), Err(FriError::Threshold(1.2)));
}

#[test]
fn annotations_sum_contributions_per_attribute() {
    let entry = |v: &str, day, c| SensitivityEntry {
        variable: v.into(),
        day,
        rank_correlation: 0.0,
        contribution: c,
        constant: false,
    };
    let sens = vec![
        entry("new_daily_increase_confirmed", 0, 30.0),
        entry("new_daily_increase_confirmed", 1, -20.0),
        entry("ppi_per_day", 0, 50.0),
    ];
    let rules = cf_rules(&[0.9]);
    let kept = annotate_and_filter(&rules, &sens, &BTreeMap::new(), 0.5).unwrap();
    let a = &kept[0].annotations[0];
    assert_eq!(a.variable.as_deref(), Some("new_daily_increase_confirmed"));
    assert_eq!(a.contribution, 50.0);
    assert!(!a.unmatched);

    let mut mapping = BTreeMap::new();
    mapping.insert("yester1days_ndic".to_string(), vec!["unknown".to_string()]);
    let kept = annotate_and_filter(&rules, &sens, &mapping, 0.5).unwrap();
    assert!(kept[0].annotations[0].unmatched);

    let text = export_text(&kept, "win");
    assert!(text.starts_with("RULE 1: (yester1days_ndic = "));
    assert!(text.trim_end().ends_with("-> win=1 (CF = 0.90)"));
}

fn fuzzy_set() -> impl Strategy<Value = FuzzySet> {
    (-100.0f64..100.0, 0.0f64..50.0, 0.0f64..50.0, 0.0f64..50.0).prop_map(|(a, b, c, d)| {
        FuzzySet::new(a, a + b, a + b + c, a + b + c + d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn trapezoid_shape(set in fuzzy_set(), x in -200.0f64..300.0, y in -200.0f64..300.0) {
        let m = trapezoid_membership(&set, x);
        prop_assert!((0.0..=1.0).contains(&m));
        if x >= set.core_low && x <= set.core_high {
            prop_assert_eq!(m, 1.0);
        }
        if x <= set.support_low || x >= set.support_high {
            prop_assert!(m == 0.0 || (x >= set.core_low && x <= set.core_high));
        }
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        if hi <= set.core_low {
            prop_assert!(trapezoid_membership(&set, lo) <= trapezoid_membership(&set, hi));
        }
        if lo >= set.core_high {
            prop_assert!(trapezoid_membership(&set, lo) >= trapezoid_membership(&set, hi));
        }
    }

    #[test]
    fn widening_never_lowers_membership(set in fuzzy_set(), dl in 0.0f64..20.0, dh in 0.0f64..20.0, x in -200.0f64..300.0) {
        let wide = FuzzySet::new(set.support_low - dl, set.core_low, set.core_high, set.support_high + dh).unwrap();
        prop_assert!(trapezoid_membership(&wide, x) >= trapezoid_membership(&set, x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn certainty_factor_in_unit_interval(
        set in fuzzy_set(),
        points in prop::collection::vec((-200.0f64..300.0, any::<bool>()), 1..40),
    ) {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let labels: Vec<&str> = points.iter().map(|p| if p.1 { "j" } else { "k" }).collect();
        let data = one_attr(&xs, &labels);
        let cf = certainty_factor(&rule("j", set, 0.0), &data).unwrap();
        prop_assert!((0.0..=1.0).contains(&cf));
    }
}

mod common;

use cmcm_core::costmodel::{self, DayCostInputs};
use cmcm_core::simulate::{
    certainty_interval, sensitivity_chart, summarize, FnModel, InputBinding, InputSpec,
    ModelRegistry, SimulationError, SimulationSpec, Simulator,
};
use cmcm_core::stats::nearest_rank;
use cmcm_core::stochastic::{Distribution, DistributionSpec};
use proptest::prelude::*;
use rand::Rng;

fn registry() -> ModelRegistry {
    let mut r = ModelRegistry::with_builtins();
    r.register("identity", FnModel::new(vec![InputSpec::new("x", false)], |v: &[f64]| Ok(v[0])));
    r.register(
        "five_a_plus_b",
        FnModel::new(
            vec![InputSpec::new("a", false), InputSpec::new("b", false)],
            |v: &[f64]| Ok(5.0 * v[0] + v[1]),
        ),
    );
    r.register(
        "five_a_plus_b_plus_c",
        FnModel::new(
            vec![InputSpec::new("a", false), InputSpec::new("b", false), InputSpec::new("c", false)],
            |v: &[f64]| Ok(5.0 * v[0] + v[1] + v[2]),
        ),
    );
    r.register(
        "a_only",
        FnModel::new(
            vec![InputSpec::new("a", false), InputSpec::new("bystander", false)],
            |v: &[f64]| Ok(v[0]),
        ),
    );
    r.register(
        "brittle",
        FnModel::new(vec![InputSpec::new("u", false)], |v: &[f64]| {
            if v[0] > 0.9995 {
                Err("input too large".into())
            } else {
                Ok(v[0])
            }
        }),
    );
    r.register(
        "fragile",
        FnModel::new(vec![InputSpec::new("u", false)], |v: &[f64]| {
            if v[0] > 0.99 {
                Err("input too large".into())
            } else {
                Ok(v[0])
            }
        }),
    );
    r
}

fn uniform01() -> Distribution {
    Distribution::uniform(0.0, 1.0).unwrap()
}

fn spec(model: &str, bindings: Vec<InputBinding>, horizon: usize, trials: usize) -> SimulationSpec {
    SimulationSpec { model: model.into(), bindings, horizon, trials, seed: 42 }
}

fn covid_spec(trials: usize, seed: u64) -> (SimulationSpec, f64) {
    let horizon = 14;
    let ndic: Vec<f64> = (0..horizon).map(|d| 300.0 + 10.0 * d as f64).collect();
    let ndis: Vec<f64> = (0..horizon).map(|d| 2000.0 - 50.0 * d as f64).collect();
    let (cured, death) = (6.0, 2.2);
    let ppi = DistributionSpec::GrowthNormal { initial: 1000.0, daily_rate: 0.01, stdev: 9.0 };
    let ppq = Distribution::normal(150.0, 12.0).unwrap();
    let dfr = Distribution::uniform(11.0, 26.0).unwrap();
    let did = Distribution::normal(35.9, 6.37).unwrap();
    let bindings = vec![
        InputBinding::deterministic("new_daily_increase_confirmed", ndic.clone()),
        InputBinding::deterministic("new_daily_increase_suspected", ndis.clone()),
        InputBinding::deterministic("cured_rate", vec![cured; horizon]),
        InputBinding::deterministic("death_rate", vec![death; horizon]),
        InputBinding::stochastic("ppi_per_day", ppi),
        InputBinding::stochastic("ppq_per_day", ppq),
        InputBinding::stochastic("days_for_recovery", dfr),
        InputBinding::stochastic("days_till_death", did),
    ];
    // Independent inputs: the expected daily cost is the cost of the
    // expected inputs.
    let expected: f64 = (0..horizon)
        .map(|d| {
            let mean_inputs = DayCostInputs {
                ndic: ndic[d],
                ndis: ndis[d],
                cured_rate: cured,
                death_rate: death,
                ppi_per_day: ppi.resolve(d).unwrap().mean(),
                ppq_per_day: ppq.mean(),
                days_for_recovery: dfr.mean(),
                days_till_death: did.mean(),
            };
            costmodel::total_daily_cost(&mean_inputs).unwrap().total_daily_cost
        })
        .sum();
    (
        SimulationSpec { model: costmodel::MODEL_NAME.into(), bindings, horizon, trials, seed },
        expected,
    )
}

#[test]
fn nearest_rank_examples() {
    let v: Vec<f64> = (1..=100).map(f64::from).collect();
    assert_eq!(certainty_interval(&v, 0.5).unwrap().0, 25.0);
    assert_eq!(certainty_interval(&v, 0.5).unwrap().1, 75.0);
    assert_eq!(certainty_interval(&v, 1.0).unwrap(), (1.0, 100.0, 50.5));
    assert_eq!(certainty_interval(&[3.5], 0.8).unwrap(), (3.5, 3.5, 3.5));
    assert!(matches!(certainty_interval(&[], 0.5), Err(SimulationError::Empty)));
    assert!(matches!(certainty_interval(&v, 0.0), Err(SimulationError::InvalidLevel(_))));
    assert!(matches!(certainty_interval(&v, 1.5), Err(SimulationError::InvalidLevel(_))));
}

#[test]
fn deterministic_run_is_degenerate() {
    let s = spec("identity", vec![InputBinding::stochastic("x", Distribution::point(7.0).unwrap())], 3, 50);
    let out = Simulator::new(registry()).run(&s).unwrap();
    assert!(out.matrix.aggregate.iter().all(|&a| a == 21.0));
    assert_eq!(out.summary.stdev, 0.0);
    for ci in &out.summary.certainty_intervals {
        assert_eq!((ci.low, ci.high), (21.0, 21.0));
    }
}

#[test]
fn identity_mean_within_clt_bound() {
    let d = Distribution::normal(74e6, 5e6).unwrap();
    let out = Simulator::new(registry())
        .run(&spec("identity", vec![InputBinding::stochastic("x", d)], 1, 10_000))
        .unwrap();
    assert!((out.summary.mean - 74e6).abs() < 3.0 * 5e6 / 100.0);
}

#[test]
fn cost_model_mean_matches_expectation() {
    let (s, expected) = covid_spec(10_000, 42);
    let out = Simulator::new(registry()).run(&s).unwrap();
    assert_eq!(out.aborted, 0);
    let rel = (out.summary.mean - expected).abs() / expected;
    assert!(rel < 0.01, "mean {} vs {expected} ({rel})", out.summary.mean);
}

#[test]
fn bit_identical_across_thread_counts() {
    let (s, _) = covid_spec(2_000, 7);
    let runs: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&n| Simulator::new(registry()).threads(Some(n)).run(&s).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.matrix, runs[0].matrix);
        assert_eq!(r.summary, runs[0].summary);
    }
    let default_pool = Simulator::new(registry()).run(&s).unwrap();
    assert_eq!(default_pool.matrix, runs[0].matrix);
}

#[test]
fn aggregate_is_exact_daily_sum() {
    let (s, _) = covid_spec(500, 3);
    let out = Simulator::new(registry()).run(&s).unwrap();
    for (row, agg) in out.matrix.outcomes.iter().zip(&out.matrix.aggregate) {
        assert_eq!(row.iter().sum::<f64>(), *agg);
    }
    for ci in &out.summary.certainty_intervals {
        assert!(ci.low <= out.summary.median && out.summary.median <= ci.high);
    }
}

#[test]
fn larger_slope_dominates_sensitivity() {
    let s = spec(
        "five_a_plus_b",
        vec![InputBinding::stochastic("a", uniform01()), InputBinding::stochastic("b", uniform01())],
        1,
        10_000,
    );
    let out = Simulator::new(registry()).run(&s).unwrap();
    let chart = sensitivity_chart(&out.matrix).unwrap();
    let share = |name: &str| chart.iter().find(|e| e.variable == name).unwrap().contribution;
    assert!(share("a") > share("b") && share("b") > 0.0);
    let total: f64 = chart.iter().map(|e| e.contribution.abs()).sum();
    assert!((total - 100.0).abs() < 1e-9);

    // Spearman oracle on the recorded draws: rank both columns by hand.
    let rank = |xs: &[f64]| {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        let mut r = vec![0.0; xs.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let agg = rank(&out.matrix.aggregate);
    let n = agg.len() as f64;
    let rho = |col: Vec<f64>| {
        let rc = rank(&col);
        let d2: f64 = rc.iter().zip(&agg).map(|(a, b)| (a - b).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    };
    let ra = rho(out.matrix.input_column(0, 0));
    let rb = rho(out.matrix.input_column(1, 0));
    let oracle_a = ra * ra / (ra * ra + rb * rb) * 100.0;
    assert!((share("a") - oracle_a).abs() < 1e-6);
}

#[test]
fn single_input_takes_everything() {
    let s = spec("identity", vec![InputBinding::stochastic("x", uniform01())], 1, 1_000);
    let out = Simulator::new(registry()).run(&s).unwrap();
    let chart = sensitivity_chart(&out.matrix).unwrap();
    assert_eq!(chart.len(), 1);
    assert!((chart[0].contribution - 100.0).abs() < 1e-9);
}

#[test]
fn bystander_noise_is_negligible() {
    let s = spec(
        "a_only",
        vec![
            InputBinding::stochastic("a", uniform01()),
            InputBinding::stochastic("bystander", Distribution::normal(0.0, 1.0).unwrap()),
        ],
        1,
        10_000,
    );
    let out = Simulator::new(registry()).run(&s).unwrap();
    let chart = sensitivity_chart(&out.matrix).unwrap();
    let by = chart.iter().find(|e| e.variable == "bystander").unwrap();
    assert!(by.contribution.abs() < 2.0, "{by:?}");
}

#[test]
fn point_mass_input_changes_nothing() {
    let two = Simulator::new(registry())
        .run(&spec(
            "five_a_plus_b",
            vec![InputBinding::stochastic("a", uniform01()), InputBinding::stochastic("b", uniform01())],
            2,
            2_000,
        ))
        .unwrap();
    let three = Simulator::new(registry())
        .run(&spec(
            "five_a_plus_b_plus_c",
            vec![
                InputBinding::stochastic("c", Distribution::point(0.0).unwrap()),
                InputBinding::stochastic("b", uniform01()),
                InputBinding::stochastic("a", uniform01()),
            ],
            2,
            2_000,
        ))
        .unwrap();
    assert_eq!(two.matrix.aggregate, three.matrix.aggregate);
    assert_eq!(two.summary, three.summary);

    let c2 = sensitivity_chart(&two.matrix).unwrap();
    let c3 = sensitivity_chart(&three.matrix).unwrap();
    for e in &c2 {
        let same = c3.iter().find(|f| f.variable == e.variable && f.day == e.day).unwrap();
        assert_eq!(same.contribution, e.contribution);
    }
    assert!(c3.iter().filter(|e| e.variable == "c").all(|e| e.constant && e.contribution == 0.0));
}

#[test]
fn sensitivity_preconditions() {
    let one = Simulator::new(registry())
        .run(&spec("identity", vec![InputBinding::stochastic("x", uniform01())], 1, 1))
        .unwrap();
    assert!(matches!(sensitivity_chart(&one.matrix), Err(SimulationError::TooFewTrials { .. })));
    let fixed = Simulator::new(registry())
        .run(&spec("identity", vec![InputBinding::deterministic("x", vec![1.0])], 1, 10))
        .unwrap();
    assert!(matches!(sensitivity_chart(&fixed.matrix), Err(SimulationError::NoStochasticInput)));
}

#[test]
fn failure_budget() {
    let u = || vec![InputBinding::stochastic("u", uniform01())];
    let ok = Simulator::new(registry()).run(&spec("brittle", u(), 1, 10_000)).unwrap();
    assert!(ok.aborted > 0 && ok.aborted <= 10);
    assert_eq!(ok.matrix.trials() + ok.aborted, 10_000);
    assert!(matches!(
        Simulator::new(registry()).run(&spec("fragile", u(), 1, 10_000)),
        Err(SimulationError::TrialBudgetExceeded { .. })
    ));
}

#[test]
fn binding_errors() {
    let sim = Simulator::new(registry());
    let x = || InputBinding::stochastic("x", uniform01());
    assert!(matches!(sim.run(&spec("nope", vec![x()], 1, 1)), Err(SimulationError::UnknownModel(_))));
    assert!(matches!(sim.run(&spec("identity", vec![], 1, 1)), Err(SimulationError::Unbound(_))));
    assert!(matches!(
        sim.run(&spec("identity", vec![x(), x()], 1, 1)),
        Err(SimulationError::DuplicateBinding(_))
    ));
    assert!(matches!(
        sim.run(&spec("identity", vec![x(), InputBinding::stochastic("y", uniform01())], 1, 1)),
        Err(SimulationError::UnknownVariable(_))
    ));
    assert!(matches!(
        sim.run(&spec("identity", vec![InputBinding::deterministic("x", vec![1.0])], 2, 1)),
        Err(SimulationError::ShortBinding { len: 1, horizon: 2, .. })
    ));
    assert!(matches!(sim.run(&spec("identity", vec![x()], 1, 0)), Err(SimulationError::Invalid(_))));
}

#[test]
fn nearest_rank_against_sort_and_index() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let n = rng.random_range(1..300);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        for p in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99] {
            let mut rank = 1;
            while (rank as f64) < p * n as f64 - 1e-9 {
                rank += 1;
            }
            assert_eq!(nearest_rank(&sorted, p), sorted[rank - 1]);
        }
    }
}

proptest! {
    #[test]
    fn intervals_nest(
        values in prop::collection::vec(-1e9f64..1e9, 1..500),
        a in 0.01f64..1.0,
        b in 0.01f64..1.0,
    ) {
        let (lo_level, hi_level) = if a <= b { (a, b) } else { (b, a) };
        let s = summarize(&values, &[lo_level, hi_level]).unwrap();
        let inner = s.interval(lo_level).unwrap();
        let outer = s.interval(hi_level).unwrap();
        prop_assert!(outer.low <= inner.low && inner.high <= outer.high);
        prop_assert!(inner.low <= s.median && s.median <= inner.high);
        prop_assert_eq!(s.histogram.counts.iter().sum::<usize>(), values.len());
    }
}

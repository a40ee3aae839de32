//! Fixed workloads shared by the benches under `benches/`.

use cmcm_core::costmodel::INPUTS;
use cmcm_core::fri::LabeledData;
use cmcm_core::simulate::{InputBinding, SimulationSpec};
use cmcm_core::stochastic::Distribution;
use cmcm_core::SupervisedDataset;

/// Lag-3 embedding of a noiseless logistic curve, `n` rows.
pub fn logistic_dataset(n: usize) -> SupervisedDataset {
    let mut v = vec![20.0_f64];
    for _ in 0..n + 2 {
        let y = *v.last().unwrap();
        v.push(y + 0.3 * y * (1.0 - y / 1000.0));
    }
    let features = (0..n).map(|t| v[t..t + 3].to_vec()).collect();
    let targets = (0..n).map(|t| v[t + 3]).collect();
    SupervisedDataset::from_rows(vec!["l3".into(), "l2".into(), "l1".into()], "y", features, targets)
}

/// Built-in cost model over `horizon` days with every input stochastic.
pub fn cost_simulation(trials: usize, horizon: usize) -> SimulationSpec {
    let dists = [
        Distribution::normal(1500.0, 150.0),
        Distribution::normal(3000.0, 300.0),
        Distribution::uniform(20.0, 40.0),
        Distribution::uniform(1.5, 3.0),
        Distribution::normal(1000.0, 9.0),
        Distribution::normal(80.0, 8.0),
        Distribution::uniform(11.0, 26.0),
        Distribution::normal(35.9, 6.37),
    ];
    let bindings = INPUTS
        .iter()
        .zip(dists)
        .map(|(name, d)| InputBinding::stochastic(*name, d.expect("valid parameters")))
        .collect();
    SimulationSpec {
        model: cmcm_core::costmodel::MODEL_NAME.into(),
        bindings,
        horizon,
        trials,
        seed: 42,
    }
}

/// Two-class data separable on the first of `width` attributes, with
/// labels interleaved so the learner has to find the threshold.
pub fn separable_rules_data(n: usize, width: usize) -> LabeledData {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..width).map(|j| ((i * 37 + j * 11) % n) as f64).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| if r[0] > n as f64 / 2.0 { "1".to_string() } else { "0".to_string() })
        .collect();
    let names = (0..width).map(|j| format!("x{j}")).collect();
    LabeledData::new(names, "class", rows, labels).expect("rows match names")
}

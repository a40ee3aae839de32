//! Self-organizing polynomial network (GMDH style).
//!
//! Every neuron is a bivariate quadratic
//! `y = c0 + c1 a + c2 b + c3 ab + c4 a^2 + c5 b^2` over two input signals.
//! A layer is formed from all pairs of the previous layer's survivors (the
//! raw features for the first layer); coefficients come from least squares
//! on the training rows, then a BFGS pass on the squared error. The best
//! `survivor_count` neurons by validation RMSE feed the next layer, and
//! growth stops at the first layer that does not lower the best validation
//! error.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::bfgs::{bfgs_minimize, BfgsConfig, FnObjective};
use super::linear::least_squares;
use super::{ForecastError, Forecaster};
use crate::ingest::SupervisedDataset;

/// Coefficients per neuron.
pub const NEURON_TERMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Feature(usize),
    Neuron { layer: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub inputs: [Signal; 2],
    pub coefficients: [f64; NEURON_TERMS],
    pub validation_rmse: f64,
}

impl Neuron {
    fn eval(&self, a: f64, b: f64) -> f64 {
        let c = &self.coefficients;
        c[0] + c[1] * a + c[2] * b + c[3] * a * b + c[4] * a * a + c[5] * b * b
    }
}

fn terms(a: f64, b: f64) -> [f64; NEURON_TERMS] {
    [1.0, a, b, a * b, a * a, b * b]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnnConfig {
    pub max_layers: usize,
    /// Cap on candidate neurons formed per layer.
    pub neurons_per_layer: usize,
    pub survivor_count: usize,
    /// Refine least-squares coefficients with BFGS.
    pub refine: bool,
    pub bfgs: BfgsConfig,
}

impl Default for PnnConfig {
    fn default() -> Self {
        Self {
            max_layers: 4,
            neurons_per_layer: 64,
            survivor_count: 4,
            refine: true,
            bfgs: BfgsConfig {
                max_iter: 50,
                ..BfgsConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnnModel {
    pub feature_names: Vec<String>,
    /// Surviving neurons per layer, best first.
    pub layers: Vec<Vec<Neuron>>,
    pub output: Signal,
    /// Best validation RMSE of each accepted layer.
    pub validation_error_trace: Vec<f64>,
    pub training_rmse: f64,
}

impl PnnModel {
    pub fn predict_one(&self, features: &[f64]) -> f64 {
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let row = layer
                .iter()
                .map(|n| {
                    let a = resolve(n.inputs[0], features, &outputs);
                    let b = resolve(n.inputs[1], features, &outputs);
                    n.eval(a, b)
                })
                .collect();
            outputs.push(row);
        }
        resolve(self.output, features, &outputs)
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

fn resolve(signal: Signal, features: &[f64], outputs: &[Vec<f64>]) -> f64 {
    match signal {
        Signal::Feature(j) => features[j],
        Signal::Neuron { layer, index } => outputs[layer][index],
    }
}

impl Forecaster for PnnModel {
    fn model_id(&self) -> &str {
        "pnn"
    }

    fn input_len(&self) -> usize {
        self.feature_names.len()
    }

    fn predict(&self, features: &[f64]) -> f64 {
        self.predict_one(features)
    }

    fn training_rmse(&self) -> f64 {
        self.training_rmse
    }
}

struct Candidate {
    neuron: Neuron,
    train_out: Vec<f64>,
    val_out: Vec<f64>,
}

/// Grows a polynomial network on `train`, using `validation` to decide
/// which neurons survive and when to stop adding layers.
pub fn fit_pnn(
    train: &SupervisedDataset,
    validation: &SupervisedDataset,
    config: &PnnConfig,
) -> Result<PnnModel, ForecastError> {
    if validation.is_empty() {
        return Err(ForecastError::Config("validation set is empty".into()));
    }
    if train.feature_names != validation.feature_names {
        return Err(ForecastError::Config(
            "train and validation features differ".into(),
        ));
    }
    if train.len() < NEURON_TERMS {
        return Err(ForecastError::Underdetermined {
            rows: train.len(),
            needed: NEURON_TERMS,
        });
    }
    if train.feature_count() == 0 {
        return Err(ForecastError::Config("dataset has no features".into()));
    }
    if config.max_layers == 0 || config.survivor_count == 0 || config.neurons_per_layer == 0 {
        return Err(ForecastError::Config(
            "max_layers, neurons_per_layer and survivor_count must be positive".into(),
        ));
    }

    let y_train = train.targets();
    let y_val = validation.targets();

    // Current pool: signal id plus its values on train and validation rows.
    let mut pool: Vec<(Signal, Vec<f64>, Vec<f64>)> = (0..train.feature_count())
        .map(|j| (Signal::Feature(j), train.column(j), validation.column(j)))
        .collect();

    let mut layers: Vec<Vec<Neuron>> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();

    for layer_idx in 0..config.max_layers {
        let mut candidates = Vec::new();
        'pairs: for a in 0..pool.len() {
            for b in a..pool.len() {
                if candidates.len() >= config.neurons_per_layer {
                    break 'pairs;
                }
                let cand = fit_neuron(
                    [pool[a].0, pool[b].0],
                    (&pool[a].1, &pool[b].1),
                    (&pool[a].2, &pool[b].2),
                    &y_train,
                    &y_val,
                    config,
                )?;
                candidates.push(cand);
            }
        }
        // Stable sort keeps enumeration order among equal errors.
        candidates.sort_by(|x, y| x.neuron.validation_rmse.total_cmp(&y.neuron.validation_rmse));
        let best = candidates[0].neuron.validation_rmse;
        if let Some(&prev) = trace.last() {
            if !(best < prev) {
                break;
            }
        }
        candidates.truncate(config.survivor_count);
        pool = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    Signal::Neuron {
                        layer: layer_idx,
                        index: i,
                    },
                    c.train_out.clone(),
                    c.val_out.clone(),
                )
            })
            .collect();
        layers.push(candidates.into_iter().map(|c| c.neuron).collect());
        trace.push(best);
    }

    let mut model = PnnModel {
        feature_names: train.feature_names.clone(),
        output: Signal::Neuron {
            layer: layers.len() - 1,
            index: 0,
        },
        layers,
        validation_error_trace: trace,
        training_rmse: 0.0,
    };
    model.training_rmse = super::rmse_on(&model, train);
    Ok(model)
}

fn fit_neuron(
    inputs: [Signal; 2],
    train: (&[f64], &[f64]),
    val: (&[f64], &[f64]),
    y_train: &[f64],
    y_val: &[f64],
    config: &PnnConfig,
) -> Result<Candidate, ForecastError> {
    let n = y_train.len();
    let rows: Vec<[f64; NEURON_TERMS]> = (0..n).map(|i| terms(train.0[i], train.1[i])).collect();
    let design = DMatrix::from_fn(n, NEURON_TERMS, |i, j| rows[i][j]);
    let target = DVector::from_column_slice(y_train);
    let mut params: Vec<f64> = least_squares(design, &target, false)?.as_slice().to_vec();

    if config.refine {
        let mse = |c: &[f64]| -> f64 {
            rows.iter()
                .zip(y_train)
                .map(|(t, y)| {
                    let r = dot(t, c) - y;
                    r * r
                })
                .sum::<f64>()
                / n as f64
        };
        let grad = |c: &[f64]| -> Vec<f64> {
            let mut g = vec![0.0; c.len()];
            for (t, y) in rows.iter().zip(y_train) {
                let r = dot(t, c) - y;
                for (gk, tk) in g.iter_mut().zip(t) {
                    *gk += 2.0 * r * tk / n as f64;
                }
            }
            g
        };
        let objective = FnObjective::with_gradient(mse, grad);
        let start = mse(&params);
        let refined = match bfgs_minimize(&objective, &params, &config.bfgs) {
            Ok(out) => Some(out),
            Err(e) => e.best().cloned(),
        };
        if let Some(out) = refined {
            if out.value <= start && out.params.iter().all(|v| v.is_finite()) {
                params = out.params;
            }
        }
    }

    let mut coefficients = [0.0; NEURON_TERMS];
    coefficients.copy_from_slice(&params);
    let mut neuron = Neuron {
        inputs,
        coefficients,
        validation_rmse: 0.0,
    };
    let train_out: Vec<f64> = (0..n).map(|i| neuron.eval(train.0[i], train.1[i])).collect();
    let val_out: Vec<f64> = (0..y_val.len()).map(|i| neuron.eval(val.0[i], val.1[i])).collect();
    let mse = val_out
        .iter()
        .zip(y_val)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / y_val.len() as f64;
    neuron.validation_rmse = if mse.is_finite() { mse.sqrt() } else { f64::INFINITY };
    Ok(Candidate {
        neuron,
        train_out,
        val_out,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_dataset(f: impl Fn(f64, f64) -> f64, values: &[f64]) -> SupervisedDataset {
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for &a in values {
            for &b in values {
                rows.push(vec![a, b]);
                ys.push(f(a, b));
            }
        }
        SupervisedDataset::from_rows(vec!["x1".into(), "x2".into()], "y", rows, ys)
    }

    #[test]
    fn target_equal_to_feature_is_exact() {
        let train = grid_dataset(|a, _| a, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let val = grid_dataset(|a, _| a, &[0.5, 1.5, 2.5]);
        let m = fit_pnn(&train, &val, &PnnConfig::default()).unwrap();
        assert!(m.training_rmse < 1e-9, "{}", m.training_rmse);
    }

    #[test]
    fn trace_non_increasing_and_feed_forward() {
        let train = grid_dataset(|a, b| (a * b).sin() + a, &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5]);
        let val = grid_dataset(|a, b| (a * b).sin() + a, &[0.25, 1.25, 2.25]);
        let m = fit_pnn(&train, &val, &PnnConfig::default()).unwrap();
        assert!(m.validation_error_trace.windows(2).all(|w| w[1] <= w[0]));
        for (l, layer) in m.layers.iter().enumerate() {
            for n in layer {
                for s in n.inputs {
                    if let Signal::Neuron { layer, .. } = s {
                        assert!(layer < l);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_small_or_mismatched_inputs() {
        let small = grid_dataset(|a, _| a, &[0.0, 1.0]);
        let val = grid_dataset(|a, _| a, &[0.5]);
        assert!(matches!(
            fit_pnn(&small, &val, &PnnConfig::default()),
            Err(ForecastError::Underdetermined { rows: 4, needed: 6 })
        ));
        let train = grid_dataset(|a, _| a, &[0.0, 1.0, 2.0]);
        let empty = SupervisedDataset { rows: vec![], ..val.clone() };
        assert!(matches!(
            fit_pnn(&train, &empty, &PnnConfig::default()),
            Err(ForecastError::Config(_))
        ));
    }
}

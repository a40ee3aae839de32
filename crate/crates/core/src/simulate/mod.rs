//! Composite Monte Carlo engine.
//!
//! A [`SimulationSpec`] binds every input of a registered [`Model`] either
//! to a deterministic per-day series (typically a forecast) or to a
//! distribution. Each trial evaluates the model once per horizon day and
//! sums the daily outcomes into the trial aggregate. Trials are pure
//! functions of `(spec, trial index)`, so any thread count produces the
//! same [`TrialMatrix`].

pub mod config;
pub mod sensitivity;
pub mod summary;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::{self, DayCostInputs};
use crate::stochastic::{self, Distribution, DistributionSpec, RngStream, StochasticError};

pub use sensitivity::{sensitivity_chart, SensitivityEntry};
pub use summary::{certainty_interval, summarize, CertaintyInterval, Histogram, OutcomeSummary};

/// Certainty levels always reported.
pub const DEFAULT_LEVELS: [f64; 3] = [0.50, 0.80, 0.98];

/// Largest share of trials allowed to abort before the run fails.
pub const TRIAL_FAILURE_BUDGET: f64 = 0.001;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("model `{0}` is not registered")]
    UnknownModel(String),
    #[error("model input `{0}` has no binding")]
    Unbound(String),
    #[error("variable `{0}` is bound more than once")]
    DuplicateBinding(String),
    #[error("binding `{0}` does not name an input of the model")]
    UnknownVariable(String),
    #[error("binding `{variable}` covers {len} days, horizon is {horizon}")]
    ShortBinding {
        variable: String,
        len: usize,
        horizon: usize,
    },
    #[error("binding `{variable}`: {source}")]
    Distribution {
        variable: String,
        #[source]
        source: StochasticError,
    },
    #[error("invalid simulation: {0}")]
    Invalid(String),
    #[error("{aborted} of {trials} trials aborted, above the {budget} budget; first error: {first}")]
    TrialBudgetExceeded {
        aborted: usize,
        trials: usize,
        budget: f64,
        first: String,
    },
    #[error("need at least {needed} trials, have {have}")]
    TooFewTrials { needed: usize, have: usize },
    #[error("no stochastic input to analyse")]
    NoStochasticInput,
    #[error("empty input")]
    Empty,
    #[error("certainty level {0} is outside (0, 1]")]
    InvalidLevel(f64),
}

/// Declares a model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub name: String,
    /// Negative values are clamped to zero (and counted).
    pub non_negative: bool,
}

impl InputSpec {
    pub fn new(name: impl Into<String>, non_negative: bool) -> Self {
        Self {
            name: name.into(),
            non_negative,
        }
    }
}

/// A model evaluated once per trial and day.
pub trait Model: Send + Sync {
    fn inputs(&self) -> &[InputSpec];
    fn evaluate(&self, inputs: &[f64]) -> Result<f64, String>;
}

/// The built-in direct cost model.
pub struct CovidDirectCost {
    inputs: Vec<InputSpec>,
}

impl Default for CovidDirectCost {
    fn default() -> Self {
        Self {
            inputs: costmodel::INPUTS.iter().map(|n| InputSpec::new(*n, true)).collect(),
        }
    }
}

impl Model for CovidDirectCost {
    fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }

    fn evaluate(&self, inputs: &[f64]) -> Result<f64, String> {
        costmodel::total_daily_cost(&DayCostInputs::from_slice(inputs))
            .map(|b| b.total_daily_cost)
            .map_err(|e| e.to_string())
    }
}

/// Wraps a closure as a [`Model`].
pub struct FnModel<F> {
    inputs: Vec<InputSpec>,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> Result<f64, String> + Send + Sync,
{
    pub fn new(inputs: Vec<InputSpec>, f: F) -> Self {
        Self { inputs, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> Result<f64, String> + Send + Sync,
{
    fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }

    fn evaluate(&self, inputs: &[f64]) -> Result<f64, String> {
        (self.f)(inputs)
    }
}

#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, Arc<dyn Model>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding `covid_direct_cost`.
    pub fn with_builtins() -> Self {
        let mut r = Self::default();
        r.register(costmodel::MODEL_NAME, CovidDirectCost::default());
        r
    }

    pub fn register(&mut self, name: impl Into<String>, model: impl Model + 'static) {
        self.models.insert(name.into(), Arc::new(model));
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Model>> {
        self.models.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    /// One value per horizon day.
    Deterministic(Vec<f64>),
    /// The same literal every day (growth normals still vary by day).
    Stochastic(DistributionSpec),
    /// One literal per horizon day.
    Schedule(Vec<DistributionSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputBinding {
    pub variable: String,
    pub source: InputSource,
}

impl InputBinding {
    pub fn deterministic(variable: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            variable: variable.into(),
            source: InputSource::Deterministic(values),
        }
    }

    pub fn stochastic(variable: impl Into<String>, dist: impl Into<DistributionSpec>) -> Self {
        Self {
            variable: variable.into(),
            source: InputSource::Stochastic(dist.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub model: String,
    pub bindings: Vec<InputBinding>,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
}

/// A binding resolved for one day.
#[derive(Debug, Clone, Copy, PartialEq)]
enum DayInput {
    Fixed(f64),
    Draw(Distribution),
}

/// All sampled and fixed inputs of every completed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMatrix {
    /// Model input names, in model order.
    pub variables: Vec<String>,
    /// Whether each variable is bound to a distribution.
    pub stochastic: Vec<bool>,
    pub horizon: usize,
    /// Original trial index of each row (aborted trials are absent).
    pub trial_ids: Vec<u32>,
    /// `outcomes[row][day]`.
    pub outcomes: Vec<Vec<f64>>,
    /// `input_draws[row][day * variables.len() + var]`.
    pub input_draws: Vec<Vec<f64>>,
    /// Per-row sum of the daily outcomes.
    pub aggregate: Vec<f64>,
}

impl TrialMatrix {
    pub fn trials(&self) -> usize {
        self.aggregate.len()
    }

    pub fn draw(&self, row: usize, var: usize, day: usize) -> f64 {
        self.input_draws[row][day * self.variables.len() + var]
    }

    /// Values of one `(variable, day)` input across all rows.
    pub fn input_column(&self, var: usize, day: usize) -> Vec<f64> {
        (0..self.trials()).map(|r| self.draw(r, var, day)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub matrix: TrialMatrix,
    pub summary: OutcomeSummary,
    pub aborted: usize,
    /// Negative values clamped to zero on non-negative inputs.
    pub clamped: usize,
}

/// Runs `spec` with the built-in models on the global thread pool.
pub fn run_simulation(spec: &SimulationSpec) -> Result<SimulationOutput, SimulationError> {
    Simulator::new(ModelRegistry::with_builtins()).run(spec)
}

pub struct Simulator {
    registry: ModelRegistry,
    threads: Option<usize>,
    levels: Vec<f64>,
}

impl Simulator {
    pub fn new(registry: ModelRegistry) -> Self {
        Self {
            registry,
            threads: None,
            levels: DEFAULT_LEVELS.to_vec(),
        }
    }

    /// Worker threads for trial evaluation; `None` uses rayon's default.
    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Extra certainty levels reported next to the defaults.
    pub fn extra_levels(mut self, levels: &[f64]) -> Self {
        self.levels.extend_from_slice(levels);
        self
    }

    pub fn run(&self, spec: &SimulationSpec) -> Result<SimulationOutput, SimulationError> {
        let model = self
            .registry
            .get(&spec.model)
            .ok_or_else(|| SimulationError::UnknownModel(spec.model.clone()))?;
        if spec.trials == 0 {
            return Err(SimulationError::Invalid("trials must be at least 1".into()));
        }
        if spec.horizon == 0 {
            return Err(SimulationError::Invalid("horizon must be at least 1".into()));
        }
        if spec.trials > u32::MAX as usize || spec.horizon > u32::MAX as usize {
            return Err(SimulationError::Invalid("trials or horizon too large".into()));
        }
        for &l in &self.levels {
            if !(l > 0.0 && l <= 1.0) {
                return Err(SimulationError::InvalidLevel(l));
            }
        }
        let plan = Plan::build(model.as_ref(), spec)?;

        let eval = |t: usize| plan.run_trial(model.as_ref(), spec.seed, t as u32);
        let results: Vec<Result<TrialRecord, String>> = match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| SimulationError::Invalid(format!("thread pool: {e}")))?;
                pool.install(|| (0..spec.trials).into_par_iter().map(eval).collect())
            }
            None => (0..spec.trials).into_par_iter().map(eval).collect(),
        };

        let nvars = plan.variables.len();
        let mut matrix = TrialMatrix {
            variables: plan.variables.clone(),
            stochastic: plan.stochastic.clone(),
            horizon: spec.horizon,
            trial_ids: Vec::with_capacity(spec.trials),
            outcomes: Vec::with_capacity(spec.trials),
            input_draws: Vec::with_capacity(spec.trials),
            aggregate: Vec::with_capacity(spec.trials),
        };
        let mut aborted = 0;
        let mut clamped = 0;
        let mut first_error = None;
        for (t, r) in results.into_iter().enumerate() {
            match r {
                Ok(rec) => {
                    debug_assert_eq!(rec.draws.len(), nvars * spec.horizon);
                    clamped += rec.clamped;
                    matrix.trial_ids.push(t as u32);
                    matrix.aggregate.push(rec.outcomes.iter().sum());
                    matrix.outcomes.push(rec.outcomes);
                    matrix.input_draws.push(rec.draws);
                }
                Err(e) => {
                    aborted += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
        if aborted as f64 > TRIAL_FAILURE_BUDGET * spec.trials as f64 {
            return Err(SimulationError::TrialBudgetExceeded {
                aborted,
                trials: spec.trials,
                budget: TRIAL_FAILURE_BUDGET,
                first: first_error.unwrap_or_default(),
            });
        }
        if aborted > 0 {
            log::warn!("{aborted} trials aborted");
        }
        if clamped > 0 {
            log::warn!("{clamped} negative inputs clamped to zero");
        }
        let summary = summarize(&matrix.aggregate, &self.levels)?;
        Ok(SimulationOutput {
            matrix,
            summary,
            aborted,
            clamped,
        })
    }
}

struct TrialRecord {
    outcomes: Vec<f64>,
    draws: Vec<f64>,
    clamped: usize,
}

/// Bindings resolved per model input and day.
struct Plan {
    variables: Vec<String>,
    stochastic: Vec<bool>,
    non_negative: Vec<bool>,
    keys: Vec<u64>,
    /// `days[d][v]`
    days: Vec<Vec<DayInput>>,
}

impl Plan {
    fn build(model: &dyn Model, spec: &SimulationSpec) -> Result<Self, SimulationError> {
        let inputs = model.inputs();
        let mut by_name: BTreeMap<&str, &InputBinding> = BTreeMap::new();
        for b in &spec.bindings {
            if !inputs.iter().any(|i| i.name == b.variable) {
                return Err(SimulationError::UnknownVariable(b.variable.clone()));
            }
            if by_name.insert(b.variable.as_str(), b).is_some() {
                return Err(SimulationError::DuplicateBinding(b.variable.clone()));
            }
        }
        let mut days = vec![Vec::with_capacity(inputs.len()); spec.horizon];
        let mut stochastic = Vec::with_capacity(inputs.len());
        for input in inputs {
            let binding = by_name
                .get(input.name.as_str())
                .ok_or_else(|| SimulationError::Unbound(input.name.clone()))?;
            let short = |len: usize| SimulationError::ShortBinding {
                variable: input.name.clone(),
                len,
                horizon: spec.horizon,
            };
            let dist_err = |source| SimulationError::Distribution {
                variable: input.name.clone(),
                source,
            };
            match &binding.source {
                InputSource::Deterministic(values) => {
                    if values.len() < spec.horizon {
                        return Err(short(values.len()));
                    }
                    if let Some(bad) = values.iter().take(spec.horizon).find(|v| !v.is_finite()) {
                        return Err(SimulationError::Invalid(format!(
                            "binding `{}` has non-finite value {bad}",
                            input.name
                        )));
                    }
                    for (d, day) in days.iter_mut().enumerate() {
                        day.push(DayInput::Fixed(values[d]));
                    }
                    stochastic.push(false);
                }
                InputSource::Stochastic(literal) => {
                    for (d, day) in days.iter_mut().enumerate() {
                        day.push(DayInput::Draw(literal.resolve(d).map_err(dist_err)?));
                    }
                    stochastic.push(true);
                }
                InputSource::Schedule(literals) => {
                    if literals.len() < spec.horizon {
                        return Err(short(literals.len()));
                    }
                    for (d, day) in days.iter_mut().enumerate() {
                        day.push(DayInput::Draw(literals[d].resolve(d).map_err(dist_err)?));
                    }
                    stochastic.push(true);
                }
            }
        }
        Ok(Self {
            variables: inputs.iter().map(|i| i.name.clone()).collect(),
            stochastic,
            non_negative: inputs.iter().map(|i| i.non_negative).collect(),
            keys: inputs.iter().map(|i| stochastic::variable_key(&i.name)).collect(),
            days,
        })
    }

    fn run_trial(&self, model: &dyn Model, seed: u64, trial: u32) -> Result<TrialRecord, String> {
        let nvars = self.variables.len();
        let mut outcomes = Vec::with_capacity(self.days.len());
        let mut draws = Vec::with_capacity(self.days.len() * nvars);
        let mut clamped = 0;
        for (d, day) in self.days.iter().enumerate() {
            let start = draws.len();
            for (v, input) in day.iter().enumerate() {
                let mut x = match input {
                    DayInput::Fixed(x) => *x,
                    DayInput::Draw(dist) => {
                        stochastic::sample(dist, &RngStream::new(seed, trial, self.keys[v], d as u32))
                    }
                };
                if self.non_negative[v] && x < 0.0 {
                    x = 0.0;
                    clamped += 1;
                }
                draws.push(x);
            }
            let y = model.evaluate(&draws[start..])?;
            if !y.is_finite() {
                return Err(format!("day {d}: non-finite outcome"));
            }
            outcomes.push(y);
        }
        Ok(TrialRecord {
            outcomes,
            draws,
            clamped,
        })
    }
}

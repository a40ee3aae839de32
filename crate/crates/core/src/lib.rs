//! Composite Monte Carlo decision support.
//!
//! The pipeline fuses deterministic forecasts (a BFGS-refined polynomial
//! network or a linear baseline, chosen by holdout error) with parametric
//! stochastic inputs, simulates the daily direct cost of quarantine and
//! isolation over a horizon, ranks input sensitivity and induces fuzzy
//! decision rules over a win/lose labelling of the epidemic trend.
//!
//! Modules map onto the stages:
//!
//! - [`ingest`]: CSV loading, lag embedding, correlation filtering.
//! - [`forecast`]: BFGS, polynomial network, linear model, model selection.
//! - [`stochastic`]: distributions and counter-based random streams.
//! - [`costmodel`]: the built-in daily cost model.
//! - [`simulate`]: the trial engine, certainty intervals, sensitivity chart.
//! - [`fri`]: crisp rule induction, fuzzification, certainty factors.
//! - [`inflection`]: win/lose scoring over a sliding window.

pub mod costmodel;
pub mod forecast;
pub mod fri;
pub mod inflection;
pub mod ingest;
pub mod simulate;
pub mod stats;
pub mod stochastic;

pub use costmodel::{DayCostBreakdown, DayCostInputs};
pub use forecast::{
    bfgs::{bfgs_minimize, inv_hessian_update, BfgsConfig, BfgsOutcome, Objective},
    grooms::{grooms_select, CandidateSpec, Selection},
    linear::{fit_linear, LinearModel},
    metrics::rmse_log_median,
    pnn::{fit_pnn, PnnConfig, PnnModel},
    predict_horizon, ForecastResult, Forecaster,
};
pub use fri::{CrispRule, FuzzyModel, FuzzyRule, FuzzySet, LabeledData};
pub use ingest::{SupervisedDataset, TimeSeries};
pub use simulate::{
    certainty_interval, run_simulation, sensitivity_chart, InputBinding, OutcomeSummary,
    SimulationSpec, TrialMatrix,
};
pub use stochastic::{Distribution, RngStream};

use std::path::PathBuf;

use clap::ValueEnum;
use cmcm_core::forecast::grooms::{grooms_select, Candidate, SelectionMetric};
use cmcm_core::forecast::pnn::PnnConfig;
use cmcm_core::forecast::{predict_horizon, FittedModel, ForecastError};
use cmcm_core::ingest::{lag_embed, read_csv, TimeSeries, DEFAULT_LAG};

use super::num;
use crate::error::CliError;
use crate::manifest::{csv_bytes, Run};
use crate::{Globals, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    /// Rank every candidate on the holdout and keep the best.
    Grooms,
    Pnn,
    Linreg,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Daily CSV with a `date` column.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = ModelChoice::Grooms)]
    pub model: ModelChoice,

    /// Days to forecast past the last observation.
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(u32).range(1..))]
    pub horizon: u32,

    #[arg(long, default_value_t = DEFAULT_LAG, value_parser = super::positive)]
    pub lag: usize,

    /// Trailing rows scored for model selection [default: a fifth of the rows].
    #[arg(long)]
    pub holdout: Option<usize>,

    /// Series to forecast [default: every non-date column].
    #[arg(long, value_delimiter = ',')]
    pub series: Vec<String>,
}

struct SeriesOutcome {
    name: String,
    values: Vec<f64>,
    model: FittedModel,
    ranking: Vec<RankRow>,
}

struct RankRow {
    model: String,
    metric: SelectionMetric,
    score: Option<f64>,
    status: String,
}

fn candidates(choice: ModelChoice) -> Vec<Candidate> {
    match choice {
        ModelChoice::Grooms => vec![Candidate::pnn(PnnConfig::default()), Candidate::linear()],
        ModelChoice::Pnn => vec![Candidate::pnn(PnnConfig::default())],
        ModelChoice::Linreg => vec![Candidate::linear()],
    }
}

fn metric_name(m: SelectionMetric) -> &'static str {
    match m {
        SelectionMetric::LogMedian => "log_median_rmse",
        SelectionMetric::Rmse => "rmse",
    }
}

fn forecast_series(series: &TimeSeries, args: &Args) -> Result<SeriesOutcome, CliError> {
    let data = lag_embed(series, args.lag)?;
    let holdout = args.holdout.unwrap_or_else(|| (data.len() / 5).max(1));
    if holdout == 0 || holdout >= data.len() {
        return Err(CliError::Config(format!(
            "--holdout {holdout} must leave training rows for series `{}` ({} rows)",
            series.name,
            data.len()
        )));
    }
    let (train, test) = data.split_chronological((data.len() - holdout) as f64 / data.len() as f64);
    // The log-median metric needs strictly positive actuals.
    let metric = if test.targets().iter().all(|&v| v > 0.0) {
        SelectionMetric::LogMedian
    } else {
        log::warn!("series `{}` has non-positive holdout values; ranking by plain RMSE", series.name);
        SelectionMetric::Rmse
    };
    let selection = grooms_select(&candidates(args.model), &train, &test, metric)
        .map_err(|e| CliError::Fit(format!("series `{}`: {e}", series.name)))?;

    let window = &series.values[series.len() - args.lag..];
    let mut ranking: Vec<RankRow> = Vec::new();
    let mut chosen: Option<(FittedModel, Vec<f64>)> = None;
    for entry in &selection.ranking {
        let candidate = candidates(args.model)
            .into_iter()
            .find(|c| c.id == entry.id)
            .expect("ranked ids come from the candidate list");
        let status = if chosen.is_some() {
            "ranked".to_string()
        } else {
            match refit_and_forecast(&candidate, &data, window, args.horizon as usize) {
                Ok((model, values)) => {
                    chosen = Some((model, values));
                    "winner".to_string()
                }
                Err(e) => {
                    log::warn!("series `{}`: {} forecast failed: {e}", series.name, entry.id);
                    format!("forecast failed: {e}")
                }
            }
        };
        ranking.push(RankRow {
            model: entry.id.clone(),
            metric,
            score: Some(entry.rmse),
            status,
        });
    }
    for (id, reason) in &selection.failures {
        ranking.push(RankRow {
            model: id.clone(),
            metric,
            score: None,
            status: format!("failed: {reason}"),
        });
    }
    let (model, values) = chosen.ok_or_else(|| {
        CliError::Fit(format!("series `{}`: no candidate produced a finite forecast", series.name))
    })?;
    Ok(SeriesOutcome {
        name: series.name.clone(),
        values,
        model,
        ranking,
    })
}

fn refit_and_forecast(
    candidate: &Candidate,
    data: &cmcm_core::SupervisedDataset,
    window: &[f64],
    horizon: usize,
) -> Result<(FittedModel, Vec<f64>), ForecastError> {
    let model = candidate.fit(data)?;
    let result = predict_horizon(&model, window, horizon)?;
    Ok((model, result.values))
}

pub fn run(globals: &Globals, args: Args) -> Result<(), CliError> {
    let mut run = Run::new("forecast", &globals.out_dir, globals.seed.unwrap_or(DEFAULT_SEED))?;
    let bytes = run.read_input(&args.input)?;
    let required: Vec<&str> = args.series.iter().map(String::as_str).collect();
    let all = read_csv(bytes.as_slice(), &required)?;
    let selected: Vec<&TimeSeries> = if args.series.is_empty() {
        all.iter().collect()
    } else {
        args.series
            .iter()
            .map(|name| all.iter().find(|s| s.name == *name).expect("schema check guarantees presence"))
            .collect()
    };
    let last = *selected[0]
        .dates
        .last()
        .ok_or_else(|| CliError::Data("input has no rows".into()))?;

    let mut outcomes = Vec::with_capacity(selected.len());
    for s in &selected {
        outcomes.push(forecast_series(s, &args)?);
    }

    let horizon = args.horizon as usize;
    let dates: Vec<String> = last.iter_days().skip(1).take(horizon).map(|d| d.to_string()).collect();
    let mut header = vec!["day", "date"];
    header.extend(outcomes.iter().map(|o| o.name.as_str()));
    let rows = (0..horizon).map(|d| {
        let mut row = vec![(d + 1).to_string(), dates[d].clone()];
        row.extend(outcomes.iter().map(|o| num(o.values[d])));
        row
    });
    run.write("forecast.csv", &csv_bytes(&header, rows)?)?;

    let mut rank_rows = Vec::new();
    for o in &outcomes {
        let rows = (0..horizon).map(|d| vec![(d + 1).to_string(), dates[d].clone(), num(o.values[d])]);
        run.write(&format!("forecasts/{}.csv", o.name), &csv_bytes(&["day", "date", "value"], rows)?)?;
        let json = o.model.to_json().map_err(|e| CliError::Fit(e.to_string()))?;
        run.write(&format!("models/{}.json", o.name), format!("{json}\n").as_bytes())?;
        for (i, r) in o.ranking.iter().enumerate() {
            rank_rows.push(vec![
                o.name.clone(),
                (i + 1).to_string(),
                r.model.clone(),
                metric_name(r.metric).to_string(),
                r.score.map(num).unwrap_or_default(),
                r.status.clone(),
            ]);
        }
    }
    run.write(
        "ranking.csv",
        &csv_bytes(&["series", "rank", "model", "metric", "score", "status"], &rank_rows)?,
    )?;

    say!("{:<32} {:>4}  {:<8} {:>16}  status", "series", "rank", "model", "score");
    for r in &rank_rows {
        let mark = if r[5] == "winner" { "*" } else { " " };
        say!("{:<32} {:>4}{mark} {:<8} {:>16}  {}", r[0], r[1], r[2], r[4], r[5]);
    }

    run.finish(serde_json::json!({
        "model": args.model,
        "horizon": args.horizon,
        "lag": args.lag,
        "holdout": args.holdout,
        "series": args.series,
    }))?;
    Ok(())
}

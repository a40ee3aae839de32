use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cmcm_core::simulate::config::SimulationConfig;
use cmcm_core::simulate::{
    sensitivity_chart, ModelRegistry, OutcomeSummary, SensitivityEntry, SimulationError, Simulator,
};
use serde::{Deserialize, Serialize};

use super::{num, pretty};
use crate::error::CliError;
use crate::manifest::{csv_bytes, Run, RunManifest};
use crate::{Globals, DEFAULT_SEED};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Simulation config JSON (model, horizon, trials, input bindings).
    #[arg(long)]
    pub config: PathBuf,

    /// Forecast CSV for `forecast` bindings [default: <out-dir>/forecast.csv].
    #[arg(long)]
    pub forecasts: Option<PathBuf>,

    /// Override the config's trial count.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Certainty levels reported in addition to 0.5, 0.8 and 0.98.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,

    /// Worker threads for the trial loop [default: all cores]. Results do
    /// not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// `report.json`, also read back by `rules` and `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub manifest: String,
    pub model: String,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub aborted: usize,
    pub clamped: usize,
    pub summary: OutcomeSummary,
    /// Mean outcome per day across trials.
    pub daily_mean: Vec<f64>,
    pub sensitivity: Vec<SensitivityEntry>,
}

fn map_sim_error(e: SimulationError) -> CliError {
    match e {
        SimulationError::TrialBudgetExceeded { .. } => CliError::Budget(e.to_string()),
        SimulationError::TooFewTrials { .. } | SimulationError::NoStochasticInput | SimulationError::Empty => {
            CliError::Data(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

pub fn read_forecast_csv(bytes: &[u8], path: &Path) -> Result<BTreeMap<String, Vec<f64>>, CliError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let columns: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h != "day" && *h != "date")
        .collect();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        for &(j, name) in &columns {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Data(format!("{}: line {}: column `{name}`: `{cell}` is not a number", path.display(), line + 2))
            })?;
            out.entry(name.to_owned()).or_default().push(v);
        }
    }
    Ok(out)
}

pub fn run(globals: &Globals, args: Args) -> Result<(), CliError> {
    let config_text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = SimulationConfig::from_json(&config_text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if config.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if let Some(0) = args.threads {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let seed = globals.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let mut run = Run::new("simulate", &globals.out_dir, seed)?;
    run.read_input(&args.config)?;

    let forecasts = if config.forecast_series().is_empty() {
        BTreeMap::new()
    } else {
        let path = args.forecasts.clone().unwrap_or_else(|| globals.out_dir.join("forecast.csv"));
        if !path.exists() {
            return Err(CliError::Data(format!(
                "forecast file {} is missing; run `forecast` first or pass --forecasts",
                path.display()
            )));
        }
        let bytes = run.read_input(&path)?;
        read_forecast_csv(&bytes, &path)?
    };
    let spec = config.resolve(&forecasts, Some(seed)).map_err(map_sim_error)?;
    let output = Simulator::new(ModelRegistry::with_builtins())
        .threads(args.threads)
        .extra_levels(&args.levels)
        .run(&spec)
        .map_err(map_sim_error)?;
    if output.clamped > 0 {
        log::warn!("{} input values were negative and clamped to 0", output.clamped);
    }

    let matrix = &output.matrix;
    let sensitivity = if matrix.trials() < 2 {
        log::warn!("sensitivity chart skipped: it needs at least 2 trials");
        Vec::new()
    } else {
        match sensitivity_chart(matrix) {
            Ok(s) => s,
            Err(SimulationError::NoStochasticInput) => {
                log::warn!("sensitivity chart skipped: no stochastic input");
                Vec::new()
            }
            Err(e) => return Err(map_sim_error(e)),
        }
    };

    let daily_mean: Vec<f64> = (0..matrix.horizon)
        .map(|d| matrix.outcomes.iter().map(|o| o[d]).sum::<f64>() / matrix.trials() as f64)
        .collect();
    let report = SimulationReport {
        manifest: RunManifest::file_name("simulate"),
        model: spec.model.clone(),
        horizon: spec.horizon,
        trials: matrix.trials(),
        seed,
        aborted: output.aborted,
        clamped: output.clamped,
        summary: output.summary.clone(),
        daily_mean,
        sensitivity: sensitivity.clone(),
    };
    run.write("report.json", pretty(&report)?.as_bytes())?;

    let mut header = vec!["trial", "day", "outcome"];
    header.extend(matrix.variables.iter().map(String::as_str));
    let nvars = matrix.variables.len();
    let rows = (0..matrix.trials()).flat_map(|r| {
        (0..matrix.horizon).map(move |d| {
            let mut row = Vec::with_capacity(3 + nvars);
            row.push(matrix.trial_ids[r].to_string());
            row.push((d + 1).to_string());
            row.push(num(matrix.outcomes[r][d]));
            row.extend((0..nvars).map(|v| num(matrix.draw(r, v, d))));
            row
        })
    });
    run.write("trials.csv", &csv_bytes(&header, rows)?)?;

    let h = &output.summary.histogram;
    let rows = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![num(h.edges[i]), num(h.edges[i + 1]), c.to_string()]);
    run.write("histogram.csv", &csv_bytes(&["bin_low", "bin_high", "count"], rows)?)?;

    let rows = sensitivity.iter().enumerate().map(|(i, e)| {
        vec![
            (i + 1).to_string(),
            e.variable.clone(),
            (e.day + 1).to_string(),
            num(e.contribution),
            num(e.rank_correlation),
            e.constant.to_string(),
        ]
    });
    run.write(
        "sensitivity.csv",
        &csv_bytes(&["rank", "variable", "day", "contribution", "rank_correlation", "constant"], rows)?,
    )?;

    let s = &output.summary;
    say!("trials {}  mean {:.2}  median {:.2}  stdev {:.2}", s.trials, s.mean, s.median, s.stdev);
    for ci in &s.certainty_intervals {
        say!("certainty {:>5.1}%  [{:.2}, {:.2}]", ci.level * 100.0, ci.low, ci.high);
    }

    run.finish(serde_json::json!({
        "trials": config.trials,
        "levels": args.levels,
        "seed": seed,
    }))?;
    Ok(())
}

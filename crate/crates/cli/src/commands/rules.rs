use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cmcm_core::fri::{
    annotate_and_filter, export_text, train_fuzzy_model, AnnotatedRule, FriError, FuzzyModel, LabeledData,
    DEFAULT_DISPLAY_THRESHOLD, DEFAULT_PRUNE_FRACTION,
};
use cmcm_core::inflection::{label_series, write_labeled_csv, SeriesBundle, TrendWeights, WindowScores};
use cmcm_core::ingest::read_csv;
use cmcm_core::simulate::SensitivityEntry;
use serde::Serialize;

use super::{num, pretty};
use super::simulate::SimulationReport;
use crate::error::CliError;
use crate::manifest::{csv_bytes, Run, RunManifest};
use crate::{Globals, DEFAULT_SEED};

#[derive(Debug, clap::Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "labeled"]))]
pub struct Args {
    /// Raw daily CSV; windows are scored and labelled win/lose first.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Already labelled CSV: `date`, feature columns, class column last.
    #[arg(long)]
    pub labeled: Option<PathBuf>,

    /// Only rules with a certainty factor at or above this are listed.
    #[arg(long, default_value_t = DEFAULT_DISPLAY_THRESHOLD)]
    pub threshold: f64,

    /// Share of rows held back for pruning.
    #[arg(long, default_value_t = DEFAULT_PRUNE_FRACTION)]
    pub prune_fraction: f64,

    /// Trend weights `w1,w2,w3`: new confirmed cases, current confirmed, rates.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub weights: Option<Vec<f64>>,

    /// Simulation report supplying sensitivity annotations
    /// [default: <out-dir>/report.json when present].
    #[arg(long)]
    pub sensitivity: Option<PathBuf>,

    /// JSON object mapping rule attributes to sensitivity variable names.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
}

#[derive(Serialize)]
struct RulesDocument<'a> {
    manifest: String,
    threshold: f64,
    target: &'a str,
    default_label: &'a str,
    classes: &'a [(String, f64)],
    total_rules: usize,
    rules: &'a [AnnotatedRule],
}

fn map_fri_error(e: FriError) -> CliError {
    match e {
        FriError::PruneFraction(_) | FriError::Threshold(_) => CliError::Config(e.to_string()),
        FriError::Empty | FriError::RowWidth { .. } | FriError::LabelCount { .. } => CliError::Data(e.to_string()),
        other => CliError::Fit(other.to_string()),
    }
}

fn read_labeled(bytes: &[u8], path: &Path) -> Result<LabeledData, CliError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    if headers.len() < 3 || &headers[0] != "date" {
        return Err(CliError::Data(format!(
            "{}: expected `date`, at least one feature and a class column",
            path.display()
        )));
    }
    let n = headers.len();
    let feature_names: Vec<String> = headers.iter().skip(1).take(n - 2).map(str::to_owned).collect();
    let target = headers[n - 1].to_owned();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let mut row = Vec::with_capacity(n - 2);
        for j in 1..n - 1 {
            let cell = &record[j];
            row.push(cell.trim().parse::<f64>().map_err(|_| {
                CliError::Data(format!("{}: line {}: column `{}`: `{cell}` is not a number", path.display(), i + 2, &headers[j]))
            })?);
        }
        rows.push(row);
        labels.push(record[n - 1].trim().to_owned());
    }
    LabeledData::new(feature_names, target, rows, labels).map_err(map_fri_error)
}

pub fn run(globals: &Globals, args: Args) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Config(format!("--threshold {} is outside [0, 1]", args.threshold)));
    }
    let weights = match &args.weights {
        Some(w) => TrendWeights::new(w[0], w[1], w[2]).map_err(|e| CliError::Config(format!("--weights: {e}")))?,
        None => TrendWeights::default(),
    };
    let mut run = Run::new("rules", &globals.out_dir, globals.seed.unwrap_or(DEFAULT_SEED))?;

    let (data, scores): (LabeledData, Option<Vec<WindowScores>>) = match (&args.input, &args.labeled) {
        (Some(path), _) => {
            let bytes = run.read_input(path)?;
            let series = read_csv(bytes.as_slice(), &[])?;
            let bundle = SeriesBundle::from_series(&series).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let (data, scores) = label_series(&bundle, &weights).map_err(|e| CliError::Data(e.to_string()))?;
            (data, Some(scores))
        }
        (None, Some(path)) => {
            let bytes = run.read_input(path)?;
            (read_labeled(&bytes, path)?, None)
        }
        (None, None) => unreachable!("clap requires one source"),
    };

    let sensitivity = load_sensitivity(&mut run, globals, args.sensitivity.as_deref())?;
    let mapping: BTreeMap<String, Vec<String>> = match &args.mapping {
        Some(path) => {
            let text = run.read_input_string(path)?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };

    let model: FuzzyModel = train_fuzzy_model(&data, args.prune_fraction).map_err(map_fri_error)?;
    let kept = annotate_and_filter(&model.rules, &sensitivity, &mapping, args.threshold).map_err(map_fri_error)?;
    if kept.is_empty() {
        log::warn!(
            "no rule reaches CF {} ({} rules induced); the listing is empty",
            args.threshold,
            model.rules.len()
        );
    }

    if let Some(scores) = &scores {
        let mut buf = Vec::new();
        write_labeled_csv(&mut buf, &data, scores).map_err(|e| CliError::Data(e.to_string()))?;
        run.write("labeled.csv", &buf)?;
        let rows = scores.iter().map(|s| {
            vec![
                s.date.to_string(),
                num(s.win_score),
                num(s.lose_score),
                s.label.to_string(),
                s.undefined_trend.to_string(),
            ]
        });
        run.write(
            "scores.csv",
            &csv_bytes(&["date", "win_score", "lose_score", "label", "undefined_trend"], rows)?,
        )?;
    }

    let text = export_text(&kept, &data.target_name);
    run.write("rules.txt", text.as_bytes())?;
    let doc = RulesDocument {
        manifest: RunManifest::file_name("rules"),
        threshold: args.threshold,
        target: &data.target_name,
        default_label: &model.default_label,
        classes: &model.classes,
        total_rules: model.rules.len(),
        rules: &kept,
    };
    run.write("rules.json", pretty(&doc)?.as_bytes())?;
    if !text.is_empty() {
        say!("{}", text.trim_end());
    }

    run.finish(serde_json::json!({
        "threshold": args.threshold,
        "prune_fraction": args.prune_fraction,
        "weights": [weights.w1, weights.w2, weights.w3],
        "labeled_input": args.labeled.is_some(),
    }))?;
    Ok(())
}

fn load_sensitivity(run: &mut Run, globals: &Globals, explicit: Option<&Path>) -> Result<Vec<SensitivityEntry>, CliError> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let p = globals.out_dir.join("report.json");
            if !p.exists() {
                log::info!("no simulation report found; rules are not annotated");
                return Ok(Vec::new());
            }
            p
        }
    };
    let text = run.read_input_string(&path)?;
    let report: SimulationReport =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(report.sensitivity)
}

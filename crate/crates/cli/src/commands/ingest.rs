use std::path::PathBuf;

use cmcm_core::ingest::{
    correlation_filter, lag_embed, lag_embed_multivariate, read_csv, SupervisedDataset, TimeSeries,
    DEFAULT_CORRELATION_THRESHOLD, DEFAULT_LAG,
};
use serde::Serialize;

use super::{num, pretty};
use crate::error::CliError;
use crate::manifest::{csv_bytes, Run};
use crate::{Globals, DEFAULT_SEED};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Daily CSV with a `date` column.
    #[arg(long)]
    pub input: PathBuf,

    /// Columns that must be present; all other non-date columns load too.
    #[arg(long, value_delimiter = ',')]
    pub require: Vec<String>,

    #[arg(long, default_value_t = DEFAULT_LAG, value_parser = super::positive)]
    pub lag: usize,

    /// Minimum absolute Pearson correlation for a feature to be kept.
    #[arg(long, default_value_t = DEFAULT_CORRELATION_THRESHOLD)]
    pub threshold: f64,

    /// Embed this series against the lags of every other series instead of
    /// embedding each series on its own.
    #[arg(long)]
    pub multivariate: Option<String>,
}

#[derive(Serialize)]
struct SeriesSummary<'a> {
    name: &'a str,
    days: usize,
    first: String,
    last: String,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct DatasetSummary {
    target: String,
    file: String,
    rows: usize,
    kept: Vec<String>,
    dropped: Vec<(String, String)>,
}

pub fn run(globals: &Globals, args: Args) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Config(format!("--threshold {} is outside [0, 1]", args.threshold)));
    }
    let mut run = Run::new("ingest", &globals.out_dir, globals.seed.unwrap_or(DEFAULT_SEED))?;
    let bytes = run.read_input(&args.input)?;
    let required: Vec<&str> = args.require.iter().map(String::as_str).collect();
    let series = read_csv(bytes.as_slice(), &required)?;

    let mut datasets: Vec<SupervisedDataset> = Vec::new();
    match &args.multivariate {
        Some(target) => {
            let t = find(&series, target)?;
            let others: Vec<&TimeSeries> = series.iter().filter(|s| s.name != *target).collect();
            datasets.push(lag_embed_multivariate(t, &others, args.lag)?);
        }
        None => {
            for s in &series {
                datasets.push(lag_embed(s, args.lag)?);
            }
        }
    }

    let mut summaries = Vec::new();
    for ds in &datasets {
        let (filtered, report) = correlation_filter(ds, args.threshold)?;
        eprint!("{report}");
        let file = format!("datasets/{}.csv", ds.target_name);
        let mut header: Vec<&str> = filtered.feature_names.iter().map(String::as_str).collect();
        header.push(&filtered.target_name);
        let rows = filtered.rows.iter().map(|r| {
            r.features
                .iter()
                .chain(std::iter::once(&r.target))
                .map(|&v| num(v))
                .collect::<Vec<_>>()
        });
        run.write(&file, &csv_bytes(&header, rows)?)?;
        summaries.push(DatasetSummary {
            target: ds.target_name.clone(),
            file,
            rows: filtered.len(),
            kept: filtered.feature_names.clone(),
            dropped: report.dropped.iter().map(|(f, r)| (f.clone(), r.to_string())).collect(),
        });
    }

    let series_summary: Vec<SeriesSummary> = series
        .iter()
        .map(|s| SeriesSummary {
            name: &s.name,
            days: s.len(),
            first: s.dates.first().map(|d| d.to_string()).unwrap_or_default(),
            last: s.dates.last().map(|d| d.to_string()).unwrap_or_default(),
            min: s.values.iter().copied().fold(f64::INFINITY, f64::min),
            max: s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    let doc = serde_json::json!({
        "manifest": crate::manifest::RunManifest::file_name("ingest"),
        "lag": args.lag,
        "threshold": args.threshold,
        "series": series_summary,
        "datasets": summaries,
    });
    run.write("ingest.json", pretty(&doc)?.as_bytes())?;
    for s in &series_summary {
        say!("{:<32} {:>4} days  {} .. {}", s.name, s.days, s.first, s.last);
    }
    run.finish(serde_json::json!({
        "require": args.require,
        "lag": args.lag,
        "threshold": args.threshold,
        "multivariate": args.multivariate,
    }))?;
    Ok(())
}

fn find<'a>(series: &'a [TimeSeries], name: &str) -> Result<&'a TimeSeries, CliError> {
    series
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::Data(format!("column `{name}` not found in input")))
}

use std::fmt::Write as _;
use std::path::Path;

use super::simulate::SimulationReport;
use crate::error::CliError;
use crate::manifest::{Run, RunManifest};
use crate::{Globals, DEFAULT_SEED};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output file name inside the output directory.
    #[arg(long, default_value = "report.md")]
    pub output: String,
}

/// Stage outputs the report is built from.
const REQUIRED: [&str; 8] = [
    "forecast.csv",
    "ranking.csv",
    "report.json",
    "trials.csv",
    "histogram.csv",
    "sensitivity.csv",
    "rules.txt",
    "scores.csv",
];

const MANIFESTS: [&str; 4] = ["ingest", "forecast", "simulate", "rules"];

fn read_table(bytes: &[u8], name: &str) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let err = |e: csv::Error| CliError::Data(format!("{name}: {e}"));
    let header = reader.headers().map_err(err)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for r in reader.records() {
        rows.push(r.map_err(err)?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

fn markdown_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn read(run: &mut Run, dir: &Path, name: &str) -> Result<Vec<u8>, CliError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(CliError::Data(format!("missing stage output `{name}` in {}", dir.display())));
    }
    run.read_input(&path)
}

pub fn run(globals: &Globals, args: Args) -> Result<(), CliError> {
    let dir = globals.out_dir.clone();
    for name in REQUIRED {
        if !dir.join(name).exists() {
            return Err(CliError::Data(format!("missing stage output `{name}` in {}", dir.display())));
        }
    }
    let mut run = Run::new("report", &dir, globals.seed.unwrap_or(DEFAULT_SEED))?;
    let mut md = String::from("# Pipeline report\n\n");

    let (header, rows) = read_table(&read(&mut run, &dir, "ranking.csv")?, "ranking.csv")?;
    md.push_str("## Forecasts\n\nModel ranking per series (lower score is better):\n\n");
    markdown_table(&mut md, &header, &rows);
    let (header, rows) = read_table(&read(&mut run, &dir, "forecast.csv")?, "forecast.csv")?;
    md.push_str("Recursive forecasts:\n\n");
    markdown_table(&mut md, &header, &rows);

    let sim_bytes = read(&mut run, &dir, "report.json")?;
    let sim: SimulationReport =
        serde_json::from_slice(&sim_bytes).map_err(|e| CliError::Data(format!("report.json: {e}")))?;
    let trials = read(&mut run, &dir, "trials.csv")?;
    let trial_rows = trials.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    let s = &sim.summary;
    let _ = write!(
        md,
        "## Simulation\n\nModel `{}`, {} trials over {} days, seed {}. \
         {} trials aborted, {} negative inputs clamped. `trials.csv` holds {} trial-day rows.\n\n",
        sim.model, sim.trials, sim.horizon, sim.seed, sim.aborted, sim.clamped, trial_rows
    );
    let _ = writeln!(md, "| statistic | value |\n|---|---|");
    for (k, v) in [("mean", s.mean), ("median", s.median), ("stdev", s.stdev), ("min", s.min), ("max", s.max)] {
        let _ = writeln!(md, "| {k} | {v} |");
    }
    md.push_str("\nCertainty intervals of the horizon total:\n\n| level | low | high |\n|---|---|---|\n");
    for ci in &s.certainty_intervals {
        let _ = writeln!(md, "| {} | {} | {} |", ci.level, ci.low, ci.high);
    }
    let (header, rows) = read_table(&read(&mut run, &dir, "histogram.csv")?, "histogram.csv")?;
    let _ = writeln!(md, "\nHistogram: {} bins of width {} (`histogram.csv`, columns {}).\n", rows.len(), s.histogram.bin_width, header.join(", "));

    let (_, rows) = read_table(&read(&mut run, &dir, "sensitivity.csv")?, "sensitivity.csv")?;
    md.push_str("## Sensitivity chart data\n\n");
    if rows.is_empty() {
        md.push_str("No sensitivity data (fewer than two trials or no stochastic input).\n\n");
    } else {
        let pairs: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r[0].clone(), format!("{} day {}", r[1], r[2]), r[3].clone()])
            .collect();
        markdown_table(&mut md, &["rank".into(), "input".into(), "contribution %".into()], &pairs);
    }

    let rules = String::from_utf8_lossy(&read(&mut run, &dir, "rules.txt")?).into_owned();
    md.push_str("## Rules\n\n");
    if rules.trim().is_empty() {
        md.push_str("No rule reached the display threshold.\n\n");
    } else {
        let _ = write!(md, "```text\n{rules}```\n\n");
    }

    let (header, rows) = read_table(&read(&mut run, &dir, "scores.csv")?, "scores.csv")?;
    md.push_str("## Inflection curve data\n\n");
    markdown_table(&mut md, &header, &rows);

    md.push_str("## Manifests\n\n");
    for cmd in MANIFESTS {
        let name = RunManifest::file_name(cmd);
        let path = dir.join(&name);
        if path.exists() {
            let bytes = run.read_input(&path)?;
            let m: RunManifest =
                serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
            let _ = writeln!(md, "- `{name}`: seed {}, config digest `{}`", m.seed, m.config_digest);
        }
    }

    run.write(&args.output, md.as_bytes())?;
    say!("wrote {}", args.output);
    run.finish(serde_json::json!({ "output": args.output }))?;
    Ok(())
}

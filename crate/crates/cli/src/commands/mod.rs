pub mod forecast;
pub mod ingest;
pub mod report;
pub mod rules;
pub mod simulate;

/// Shortest round-trip decimal, as used in every CSV artifact.
pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn pretty<T: serde::Serialize>(value: &T) -> Result<String, crate::error::CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::error::CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Value parser for counts that must be at least 1.
pub fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

//! Deterministic file output: fixed-precision CSV and the JSON result
//! record with a byte-exact configuration echo.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Write rows with a fixed `{:.12e}` float format; output bytes depend only
/// on the numbers.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut buf = String::with_capacity(rows.len() * 64);
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                buf.push(',');
            }
            first = false;
            buf.push_str(&format!("{v:.12e}"));
        }
        buf.push('\n');
    }
    std::fs::write(path, buf)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Run record: scenario id, byte-exact parameter echo, named metrics, the
/// trajectory CSV path if any, and the wall time.
pub fn write_metrics(
    path: &Path,
    scenario: &str,
    config_echo: &str,
    metrics: &BTreeMap<String, Value>,
    trajectory_csv: Option<&Path>,
    wall_time_s: f64,
) -> Result<(), CliError> {
    let record = serde_json::json!({
        "scenario": scenario,
        "config_echo": config_echo,
        "metrics": metrics,
        "trajectory_csv": trajectory_csv.map(|p| p.display().to_string()),
        "wall_time_s": wall_time_s,
    });
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let text = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Io(format!("cannot serialize metrics: {e}")))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

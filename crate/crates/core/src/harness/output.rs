//! CSV and JSON result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::harness::runner::AggregateResult;

pub const CSV_HEADER: &str = "step,mean_cum_regret,stderr,n_runs,config_fingerprint";

/// CSV text: one row per checkpoint, floats with six decimals, empty
/// `stderr` for single-run experiments.
pub fn render_csv(result: &AggregateResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        let stderr = row.stderr.map(|s| format!("{s:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{}",
            row.step, row.mean, stderr, result.n_runs, result.fingerprint
        );
    }
    out
}

pub fn summary_json(result: &AggregateResult) -> serde_json::Value {
    let last = result.final_summary();
    json!({
        "config": result.config,
        "config_ini": result.config.to_ini_string(),
        "config_fingerprint": result.fingerprint,
        "final": {
            "step": last.step,
            "mean_cum_regret": last.mean,
            "stderr": last.stderr,
            "n_runs": result.n_runs,
            "per_run": result.final_regrets,
        },
    })
}

/// The sibling `.json` path next to a CSV file.
pub fn json_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV to `path` and the config plus final summary to the
/// sibling `.json` file.
pub fn write_results(result: &AggregateResult, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, render_csv(result)).map_err(|e| Error::io(path, e))?;
    let json_file = json_path(path);
    let text = serde_json::to_string_pretty(&summary_json(result)).expect("serializable summary");
    fs::write(&json_file, text + "\n").map_err(|e| Error::io(&json_file, e))?;
    Ok(())
}

//! CSV and JSON emission. All numeric formatting goes through the shortest
//! round-trip representation so identical data produces identical bytes.

use std::fs;
use std::path::Path;

use dare_core::SolveReport;

/// Residual-history CSV: one row per outer iteration with the mandatory
/// header `k,residual,delta_norm,elapsed_ms`. Timings are written as 0 unless
/// enabled, keeping default outputs byte-reproducible.
pub fn write_residual_csv(path: &Path, report: &SolveReport, timings: bool) -> anyhow::Result<()> {
    let mut out = String::from("k,residual,delta_norm,elapsed_ms\n");
    for k in 0..report.iterations {
        let elapsed = if timings {
            report.elapsed_ms_history.get(k).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            report.residual_history[k],
            report.delta_history[k],
            elapsed
        ));
    }
    fs::write(path, out)
        .map_err(|e| anyhow::anyhow!("cannot write csv {}: {e}", path.display()))?;
    Ok(())
}

/// Pretty-printed JSON document with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, doc: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    fs::write(path, text + "\n")
        .map_err(|e| anyhow::anyhow!("cannot write json {}: {e}", path.display()))?;
    Ok(())
}

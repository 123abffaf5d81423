//! CSV and JSON result writers. Formatting is fully deterministic:
//! rerunning the same scenario with the same seed reproduces output files
//! byte for byte.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::MsePrediction;
use crate::lab::{AlphaSweepRow, BandwidthRow, HeatmapCell, MseReport, SqueezingSweepRow};

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Row type with a fixed CSV column order. A dotted column name indexes
/// into a nested object of the serialized row.
pub trait TabularRow: Serialize {
    const COLUMNS: &'static [&'static str];
}

impl TabularRow for SqueezingSweepRow {
    const COLUMNS: &'static [&'static str] = &[
        "squeezing_db",
        "antisqueezing_db",
        "mse_mc_mean",
        "mse_mc_stderr",
        "mse_pred",
        "mse_csl",
        "mse_first_order",
        "mse_pure",
    ];
}

impl TabularRow for AlphaSweepRow {
    const COLUMNS: &'static [&'static str] = &[
        "alpha_sq",
        "mse_mc_squeezed_mean",
        "mse_mc_squeezed_stderr",
        "mse_mc_coherent_mean",
        "mse_mc_coherent_stderr",
        "mse_csl",
        "mse_coherent_pred",
        "mse_squeezed_pred",
        "mse_pure_optimal",
        "squeezing_flux",
        "n_eff",
    ];
}

impl TabularRow for HeatmapCell {
    const COLUMNS: &'static [&'static str] =
        &["squeezing_db", "antisqueezing_db", "mse_pred", "forbidden"];
}

impl TabularRow for BandwidthRow {
    const COLUMNS: &'static [&'static str] = &[
        "alpha_sq",
        "mse_broadband",
        "mse_finite_bw",
        "rel_gap",
        "delta_omega_eff",
        "squeezing_flux",
        "n_eff",
        "flux_share",
    ];
}

impl TabularRow for MsePrediction {
    const COLUMNS: &'static [&'static str] =
        &["sigma_f_sq", "sigma_s_sq", "gamma", "r_bar", "epsilon"];
}

impl TabularRow for MseReport {
    const COLUMNS: &'static [&'static str] = &[
        "sigma_f_sq_mean",
        "sigma_f_sq_stderr",
        "sigma_s_sq_mean",
        "sigma_s_sq_stderr",
        "trials",
        "predicted.sigma_f_sq",
        "predicted.sigma_s_sq",
        "predicted.gamma",
        "predicted.r_bar",
        "predicted.epsilon",
        "csl_sigma_s_sq",
        "improvement_vs_csl",
    ];
}

fn lookup<'v>(row: &'v serde_json::Value, column: &str) -> Result<&'v serde_json::Value> {
    let mut v = row;
    for part in column.split('.') {
        v = v
            .get(part)
            .ok_or_else(|| Error::Numeric(format!("row is missing column '{column}'")))?;
    }
    Ok(v)
}

fn render_cell(v: &serde_json::Value) -> Result<String> {
    match v {
        // non-finite floats serialize to null; the only such value here is NaN
        serde_json::Value::Null => Ok("NaN".into()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        serde_json::Value::Number(n) => Ok(if let Some(u) = n.as_u64() {
            u.to_string()
        } else {
            // f64 Display is the shortest representation that round-trips
            n.as_f64().expect("number").to_string()
        }),
        other => Err(Error::Numeric(format!(
            "unsupported CSV cell value: {other}"
        ))),
    }
}

/// Render rows as CSV with a header line. Refuses empty result sets.
pub fn to_csv<R: TabularRow>(rows: &[R]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Parameter(
            "refusing to emit an empty result set".into(),
        ));
    }
    let mut out = String::new();
    out.push_str(&R::COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let v = serde_json::to_value(row).map_err(|e| Error::Numeric(e.to_string()))?;
        let cells: Result<Vec<String>> = R::COLUMNS
            .iter()
            .map(|c| render_cell(lookup(&v, c)?))
            .collect();
        out.push_str(&cells?.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Run provenance attached to JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub seed: u64,
    pub version: &'static str,
    pub scenario: serde_json::Value,
}

impl Meta {
    pub fn new<S: Serialize>(seed: u64, scenario: &S) -> Result<Self> {
        Ok(Self {
            seed,
            version: env!("CARGO_PKG_VERSION"),
            scenario: serde_json::to_value(scenario).map_err(|e| Error::Numeric(e.to_string()))?,
        })
    }
}

/// Render rows as a JSON document `{"meta": ..., "rows": [...]}`.
/// Non-finite values appear as null. Refuses empty result sets.
pub fn to_json<R: Serialize>(meta: &Meta, rows: &[R]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Parameter(
            "refusing to emit an empty result set".into(),
        ));
    }
    let doc = serde_json::json!({ "meta": meta, "rows": rows });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Write rendered output, mapping filesystem failures to [`Error::Io`].
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! File formats: trace CSVs (full-precision scientific notation), factor
//! pair JSON, and output-directory resolution.

use crate::error::CliError;
use lrmr::{FactorPair, Matrix, TraceRow};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("LRMR_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// `0` stays `0`; other values use the shortest `1e-4`-style form.
pub fn format_mu(mu: f64) -> String {
    if mu == 0.0 {
        "0".to_string()
    } else {
        format!("{mu:e}")
    }
}

/// Fixed CSV schema:
/// `iter,g_val,fit_error,opt_error,balance_error,grad_norm[,consensus_error]`,
/// numbers in full-precision scientific notation, one row per recorded
/// iteration.
pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let with_consensus = rows.iter().any(|r| r.consensus_error.is_some());
    let mut out = String::new();
    out.push_str("iter,g_val,fit_error,opt_error,balance_error,grad_norm");
    if with_consensus {
        out.push_str(",consensus_error");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            row.iter, row.g_val, row.fit_error, row.opt_error, row.balance_error, row.grad_norm
        ));
        if with_consensus {
            out.push_str(&format!(",{:.17e}", row.consensus_error.unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// On-disk form of a factor pair (row-major nested arrays).
#[derive(Debug, Serialize, Deserialize)]
pub struct FactorPairFile {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl FactorPairFile {
    pub fn from_pair(w: &FactorPair) -> Self {
        let dump = |m: &Matrix| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        Self { u: dump(w.u()), v: dump(w.v()) }
    }

    pub fn into_pair(self) -> Result<FactorPair, CliError> {
        let build = |rows: Vec<Vec<f64>>, name: &str| -> Result<Matrix, CliError> {
            if rows.is_empty() || rows[0].is_empty() {
                return Err(CliError::flags(format!("{name} matrix is empty")));
            }
            let ncols = rows[0].len();
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(CliError::flags(format!("{name} matrix rows have uneven lengths")));
            }
            Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        };
        let u = build(self.u, "u")?;
        let v = build(self.v, "v")?;
        FactorPair::new(u, v).map_err(|e| CliError::flags(e.to_string()))
    }
}

pub fn save_pair(path: &Path, w: &FactorPair) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&FactorPairFile::from_pair(w))
        .map_err(|e| CliError::io(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_pair(path: &Path) -> Result<FactorPair, CliError> {
    let text = fs::read_to_string(path)?;
    let file: FactorPairFile =
        serde_json::from_str(&text).map_err(|e| CliError::flags(format!("bad point file: {e}")))?;
    file.into_pair()
}

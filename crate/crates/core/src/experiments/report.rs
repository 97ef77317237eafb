use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoresetError, Result};

/// Labelled grid of per-cell medians together with the trial values behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub trials: Vec<Vec<Vec<f64>>>,
    pub config_digest: String,
    /// How per-trial seeds were derived from the master seed.
    #[serde(default)]
    pub seed_scheme: String,
    /// The effective configuration the table was produced from.
    pub config: serde_json::Value,
    /// One line per trial whose solver stopped before converging.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<String>,
}

impl DataTable {
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row][col]
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.rows.iter().position(|r| r == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = CoresetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(CoresetError::invalid(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// Median of an odd-length list; the mean of the middle pair otherwise.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Six significant digits, trailing zeros kept: `0.5 → 0.500000`,
/// `0 → 0.00000`, `1e-7 → 1.00000e-07`.
pub fn format_significant(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.00000".to_owned();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        format!("{v:.*}", (5 - exp) as usize)
    }
}

/// Hex SHA-256 of the canonical JSON serialization.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn emit_report(table: &DataTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("tables serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let header = std::iter::once("label".to_owned()).chain(table.cols.iter().cloned());
            w.write_record(header).expect("in-memory write");
            for (label, row) in table.rows.iter().zip(&table.cells) {
                let record = std::iter::once(label.clone())
                    .chain(row.iter().map(|v| format_significant(*v)));
                w.write_record(record).expect("in-memory write");
            }
            let mut out =
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
            if out.ends_with('\n') {
                out.pop();
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cell(v: f64) -> DataTable {
        DataTable {
            rows: vec!["row".into()],
            cols: vec!["col".into()],
            cells: vec![vec![v]],
            trials: vec![vec![vec![v]]],
            config_digest: config_digest(&1u8),
            seed_scheme: String::new(),
            config: serde_json::json!({ "k": 1 }),
            flagged: Vec::new(),
        }
    }

    #[test]
    fn csv_single_cell() {
        assert_eq!(
            emit_report(&one_cell(0.5), ReportFormat::Csv),
            "label,col\nrow,0.500000"
        );
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0), "0.00000");
        assert_eq!(format_significant(0.013), "0.0130000");
        assert_eq!(format_significant(385.99), "385.990");
        assert_eq!(format_significant(15.0), "15.0000");
        assert_eq!(format_significant(1e-7), "1.00000e-07");
        assert_eq!(format_significant(2.5e6), "2.50000e+06");
        assert_eq!(format_significant(999999.7), "1.00000e+06");
        assert_eq!(format_significant(-0.25), "-0.250000");
    }

    #[test]
    fn json_round_trip() {
        let t = one_cell(0.1 + 0.2);
        let back: DataTable = serde_json::from_str(&emit_report(&t, ReportFormat::Json)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[0.5, 0.1, 0.3, 0.2, 0.4]), 0.3);
        assert_eq!(median(&[2.0]), 2.0);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(config_digest(&[1, 2, 3]), config_digest(&[1, 2, 3]));
        assert_ne!(config_digest(&[1, 2, 3]), config_digest(&[1, 2, 4]));
        assert_eq!(config_digest(&[1]).len(), 64);
    }
}

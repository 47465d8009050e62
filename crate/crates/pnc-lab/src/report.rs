//! Result rows, CSV emission and golden-file verification.
//!
//! The CSV schema is fixed: `experiment,label,snr_db,rate,error_rate,
//! halfwidth,seed`. Numeric cells use 12 significant digits in scientific
//! notation with a `.` decimal separator regardless of locale; absent
//! optional values are empty cells. NaN and infinities are forbidden.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "experiment,label,snr_db,rate,error_rate,halfwidth,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub label: String,
    pub snr_db: f64,
    pub rate: f64,
    pub error_rate: Option<f64>,
    pub halfwidth: Option<f64>,
    pub seed: u64,
}

#[derive(Debug)]
pub enum ReportError {
    /// A row contains NaN or an infinity.
    NonFinite { row: usize, column: &'static str },
    Io(std::io::Error),
    /// The two files do not share the schema (header, row count, or
    /// identifying columns).
    SchemaMismatch(String),
    Parse { line: usize, reason: String },
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::NonFinite { row, column } => {
                write!(f, "row {}: column `{}` is not finite", row, column)
            }
            ReportError::Io(e) => write!(f, "{}", e),
            ReportError::SchemaMismatch(what) => write!(f, "schema mismatch: {}", what),
            ReportError::Parse { line, reason } => write!(f, "line {}: {}", line, reason),
        }
    }
}

impl std::error::Error for ReportError {}

impl From<std::io::Error> for ReportError {
    fn from(e: std::io::Error) -> Self {
        ReportError::Io(e)
    }
}

/// 12 significant digits, scientific, locale-independent.
pub fn format_number(x: f64) -> String {
    format!("{:.11e}", x)
}

fn format_cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Renders rows to CSV text. Labels must not contain commas.
pub fn to_csv(rows: &[ResultRow]) -> Result<String, ReportError> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        for (value, column) in [
            (Some(row.snr_db), "snr_db"),
            (Some(row.rate), "rate"),
            (row.error_rate, "error_rate"),
            (row.halfwidth, "halfwidth"),
        ] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(ReportError::NonFinite { row: i, column });
                }
            }
        }
        debug_assert!(!row.label.contains(','), "labels must stay comma-free");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.experiment,
            row.label,
            format_number(row.snr_db),
            format_number(row.rate),
            format_cell(row.error_rate),
            format_cell(row.halfwidth),
            row.seed,
        ));
    }
    Ok(out)
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<(), ReportError> {
    let text = to_csv(rows)?;
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct ParsedRow {
    experiment: String,
    label: String,
    snr_db: f64,
    rate: f64,
    error_rate: Option<f64>,
    halfwidth: Option<f64>,
    seed: String,
}

fn parse_csv(text: &str) -> Result<Vec<ParsedRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(ReportError::SchemaMismatch(format!(
                "unexpected header `{}`",
                header
            )))
        }
        None => return Err(ReportError::SchemaMismatch("empty file".into())),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(ReportError::Parse {
                line: idx + 1,
                reason: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let number = |s: &str, what: &str| -> Result<f64, ReportError> {
            s.parse().map_err(|_| ReportError::Parse {
                line: idx + 1,
                reason: format!("bad {} `{}`", what, s),
            })
        };
        let optional = |s: &str, what: &str| -> Result<Option<f64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                number(s, what).map(Some)
            }
        };
        rows.push(ParsedRow {
            experiment: fields[0].to_string(),
            label: fields[1].to_string(),
            snr_db: number(fields[2], "snr_db")?,
            rate: number(fields[3], "rate")?,
            error_rate: optional(fields[4], "error_rate")?,
            halfwidth: optional(fields[5], "halfwidth")?,
            seed: fields[6].to_string(),
        });
    }
    Ok(rows)
}

/// Compares two result files. Analytic cells (no half-width) must agree
/// within `tolerance`; Monte Carlo cells must agree within the sum of the
/// reported half-widths (never tighter than `tolerance`). Identifying
/// columns must match exactly; a header or shape difference is an error
/// rather than a `false`.
pub fn verify(golden: &Path, fresh: &Path, tolerance: f64) -> Result<bool, ReportError> {
    let golden_rows = parse_csv(&fs::read_to_string(golden)?)?;
    let fresh_rows = parse_csv(&fs::read_to_string(fresh)?)?;
    if golden_rows.len() != fresh_rows.len() {
        return Err(ReportError::SchemaMismatch(format!(
            "row count {} vs {}",
            golden_rows.len(),
            fresh_rows.len()
        )));
    }
    for (i, (g, f)) in golden_rows.iter().zip(&fresh_rows).enumerate() {
        if g.experiment != f.experiment || g.label != f.label || g.seed != f.seed {
            return Err(ReportError::SchemaMismatch(format!(
                "row {}: identity columns differ ({}/{}/{} vs {}/{}/{})",
                i, g.experiment, g.label, g.seed, f.experiment, f.label, f.seed
            )));
        }
        if (g.snr_db - f.snr_db).abs() > tolerance {
            return Ok(false);
        }
        let monte_carlo = g.halfwidth.is_some() && f.halfwidth.is_some();
        let budget = if monte_carlo {
            (g.halfwidth.unwrap() + f.halfwidth.unwrap()).max(tolerance)
        } else {
            tolerance
        };
        if (g.rate - f.rate).abs() > budget {
            return Ok(false);
        }
        match (g.error_rate, f.error_rate) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if (a - b).abs() > budget {
                    return Ok(false);
                }
            }
            _ => {
                return Err(ReportError::SchemaMismatch(format!(
                    "row {}: error_rate present on one side only",
                    i
                )))
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                experiment: "twoway_curves".into(),
                label: "upper".into(),
                snr_db: 0.0,
                rate: 0.5,
                error_rate: None,
                halfwidth: None,
                seed: 7,
            },
            ResultRow {
                experiment: "twoway_sim".into(),
                label: "lattice".into(),
                snr_db: 10.0,
                rate: 0.29,
                error_rate: Some(0.012),
                halfwidth: Some(0.002),
                seed: 7,
            },
        ]
    }

    #[test]
    fn csv_layout_is_stable() {
        let text = to_csv(&sample_rows()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "twoway_curves,upper,0.00000000000e0,5.00000000000e-1,,,7"
        );
        assert_eq!(
            lines.next().unwrap(),
            "twoway_sim,lattice,1.00000000000e1,2.90000000000e-1,1.20000000000e-2,2.00000000000e-3,7"
        );
    }

    #[test]
    fn nan_is_rejected() {
        let mut rows = sample_rows();
        rows[0].rate = f64::NAN;
        assert!(matches!(
            to_csv(&rows),
            Err(ReportError::NonFinite { row: 0, column: "rate" })
        ));
    }

    #[test]
    fn verify_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv(&a, &sample_rows()).unwrap();
        write_csv(&b, &sample_rows()).unwrap();
        assert!(verify(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn verify_detects_analytic_drift() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv(&a, &sample_rows()).unwrap();
        let mut rows = sample_rows();
        rows[0].rate += 1e-3;
        write_csv(&b, &rows).unwrap();
        assert!(!verify(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn verify_allows_mc_within_halfwidths() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv(&a, &sample_rows()).unwrap();
        let mut rows = sample_rows();
        rows[1].error_rate = Some(0.013); // inside 0.002 + 0.002
        write_csv(&b, &rows).unwrap();
        assert!(verify(&a, &b, 1e-9).unwrap());
        rows[1].error_rate = Some(0.017); // outside
        write_csv(&b, &rows).unwrap();
        assert!(!verify(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn verify_rejects_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv(&a, &sample_rows()).unwrap();
        write_csv(&b, &sample_rows()[..1]).unwrap();
        assert!(matches!(
            verify(&a, &b, 1e-9),
            Err(ReportError::SchemaMismatch(_))
        ));
    }
}

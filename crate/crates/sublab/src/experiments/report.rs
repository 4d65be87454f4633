use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::fit::ScalingFit;

/// One parameter value of a verification sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReportRow {
    pub parameter: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(parameter: f64, lhs: f64, rhs: f64, pass: bool) -> Self {
        let ratio = if rhs != 0.0 { lhs / rhs } else { f64::INFINITY };
        Self { parameter, lhs, rhs, ratio, pass }
    }
}

/// Per-statement verification result: parameter rows, an optional scaling
/// fit, and a global pass flag. Serialization has a stable key order, so
/// identical runs produce byte-identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub statement: String,
    pub rows: Vec<ReportRow>,
    pub fit: Option<ScalingFit>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(statement: impl Into<String>) -> Self {
        Self { statement: statement.into(), rows: Vec::new(), fit: None, pass: true, notes: Vec::new() }
    }

    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Global pass recomputed from the rows.
    pub fn finalize(&mut self) {
        self.pass = self.pass && self.rows.iter().all(|r| r.pass);
    }

    pub fn first_failing_row(&self) -> Option<(usize, &ReportRow)> {
        self.rows.iter().enumerate().find(|(_, r)| !r.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("bad report JSON: {e}")))
    }

    /// CSV with a header row, `.` decimals (Rust float formatting), and LF
    /// line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,lhs,rhs,ratio,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.parameter, r.lhs, r.rhs, r.ratio, r.pass
            ));
        }
        out
    }

    pub fn rows_from_csv(s: &str) -> Result<Vec<ReportRow>> {
        let mut lines = s.lines();
        match lines.next() {
            Some("parameter,lhs,rhs,ratio,pass") => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "bad CSV header: {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::InvalidParameter(format!(
                    "CSV row {}: expected 5 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| {
                    Error::InvalidParameter(format!("CSV row {}: bad number '{s}'", i + 2))
                })
            };
            rows.push(ReportRow {
                parameter: num(fields[0])?,
                lhs: num(fields[1])?,
                rhs: num(fields[2])?,
                ratio: num(fields[3])?,
                pass: fields[4] == "true",
            });
        }
        Ok(rows)
    }
}

/// Marks rows whose ratio strays beyond `factor` from the median ratio;
/// used to express "bounded by a single constant across the grid".
pub fn apply_ratio_band(rows: &mut [ReportRow], factor: f64) {
    let mut ratios: Vec<f64> =
        rows.iter().map(|r| r.ratio).filter(|r| r.is_finite() && *r > 0.0).collect();
    if ratios.is_empty() {
        return;
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    for r in rows.iter_mut() {
        r.pass = r.pass && r.ratio > 0.0 && r.ratio <= median * factor && r.ratio >= median / factor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> VerificationReport {
        let mut rep = VerificationReport::new("demo");
        rep.rows.push(ReportRow::new(0.1, 1.0, 2.0, true));
        rep.rows.push(ReportRow::new(0.2, 3.5, 3.5, true));
        rep.fit = Some(ScalingFit {
            exponent: 0.5,
            log_intercept: 0.0,
            r_squared: 0.999,
            n_points: 2,
        });
        rep.finalize();
        rep
    }

    #[test]
    fn json_round_trip() {
        let rep = sample_report();
        let back = VerificationReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back.statement, "demo");
        assert_eq!(back.rows.len(), 2);
        assert!(back.pass);
    }

    #[test]
    fn csv_round_trip() {
        let rep = sample_report();
        let rows = VerificationReport::rows_from_csv(&rep.to_csv()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].parameter, 0.1);
        assert_eq!(rows[1].ratio, 1.0);
    }

    #[test]
    fn ratio_band_marks_outliers() {
        let mut rows = vec![
            ReportRow::new(1.0, 1.0, 1.0, true),
            ReportRow::new(2.0, 1.1, 1.0, true),
            ReportRow::new(3.0, 50.0, 1.0, true),
        ];
        apply_ratio_band(&mut rows, 10.0);
        assert!(rows[0].pass && rows[1].pass);
        assert!(!rows[2].pass);
    }
}

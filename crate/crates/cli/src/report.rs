use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One check. Quantitative records pass iff `|computed - expected| <= tolerance`;
/// informational records carry neither and always pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub criterion: Option<u32>,
    pub anchor: String,
    pub computed: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// Non-blocking failures are reported but do not change the exit code.
    pub blocking: bool,
    pub detail: Option<String>,
}

impl Record {
    pub fn check(name: impl Into<String>, anchor: &str, computed: f64, expected: f64, tolerance: f64) -> Self {
        let mut r = Record {
            name: name.into(),
            criterion: None,
            anchor: anchor.to_string(),
            computed,
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: false,
            blocking: true,
            detail: None,
        };
        r.evaluate();
        r
    }

    /// A value reported without a pass/fail judgement.
    pub fn info(name: impl Into<String>, anchor: &str, computed: f64) -> Self {
        Record {
            name: name.into(),
            criterion: None,
            anchor: anchor.to_string(),
            computed,
            expected: None,
            tolerance: None,
            pass: true,
            blocking: false,
            detail: None,
        }
    }

    pub fn criterion(mut self, n: u32) -> Self {
        self.criterion = Some(n);
        self
    }

    pub fn non_blocking(mut self) -> Self {
        self.blocking = false;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn is_exact(&self) -> bool {
        self.tolerance == Some(0.0)
    }

    fn evaluate(&mut self) {
        if let (Some(e), Some(t)) = (self.expected, self.tolerance) {
            // NaN compares false, so a NaN value fails.
            self.pass = (self.computed - e).abs() <= t;
        }
    }

    /// Replace the tolerance of a non-exact quantitative record.
    pub fn override_tolerance(&mut self, tol: f64) {
        if self.tolerance.is_some() && !self.is_exact() {
            self.tolerance = Some(tol);
            self.evaluate();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub blocking_failures: usize,
    pub non_blocking_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub summary: Summary,
    /// Only filled on request, so default reports are byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(config: RunConfig, records: Vec<Record>) -> Self {
        let failed: Vec<&Record> = records.iter().filter(|r| !r.pass).collect();
        let blocking = failed.iter().filter(|r| r.blocking).count();
        let summary = Summary {
            total: records.len(),
            passed: records.len() - failed.len(),
            failed: failed.len(),
            blocking_failures: blocking,
            non_blocking_failures: failed.len() - blocking,
        };
        Report {
            schema: SCHEMA_VERSION,
            config,
            records,
            summary,
            wall_time_s: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.blocking_failures == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Output(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Flat projection of the records, one row each.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let status = match (r.pass, r.blocking, r.expected) {
                (_, _, None) => "INFO",
                (true, _, _) => "PASS",
                (false, true, _) => "FAIL",
                (false, false, _) => "KNOWN",
            };
            out.push_str(&format!("{status:<5} {}  computed={:.12e}", r.name, r.computed));
            if let (Some(e), Some(t)) = (r.expected, r.tolerance) {
                out.push_str(&format!(" expected={e} tol={t:e}"));
            }
            out.push_str(&format!("  [{}]", r.anchor));
            if let Some(d) = &r.detail {
                out.push_str(&format!("  ({d})"));
            }
            out.push('\n');
        }
        let s = &self.summary;
        out.push_str(&format!(
            "{} checks: {} passed, {} failed ({} blocking, {} non-blocking)\n",
            s.total, s.passed, s.failed, s.blocking_failures, s.non_blocking_failures
        ));
        if let Some(t) = self.wall_time_s {
            out.push_str(&format!("wall time {t:.2} s\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn pass_rule_and_nan() {
        assert!(Record::check("a", "", 1.0 + 1e-9, 1.0, 1e-8).pass);
        assert!(!Record::check("a", "", 1.0 + 1e-7, 1.0, 1e-8).pass);
        assert!(!Record::check("a", "", f64::NAN, 1.0, 1e3).pass);
        assert!(Record::check("a", "", 0.0, 0.0, 0.0).pass);
    }

    #[test]
    fn tolerance_override_skips_exact_and_info_records() {
        let mut exact = Record::check("e", "", 0.0, 0.0, 0.0);
        exact.override_tolerance(1.0);
        assert_eq!(exact.tolerance, Some(0.0));
        let mut fd = Record::check("f", "", 1e-8, 0.0, 1e-4);
        fd.override_tolerance(1e-12);
        assert!(!fd.pass);
        let mut info = Record::info("i", "", 3.0);
        info.override_tolerance(1e-12);
        assert!(info.pass && info.tolerance.is_none());
    }

    #[test]
    fn summary_counts_blocking_separately() {
        let records = vec![
            Record::check("a", "", 0.0, 0.0, 0.0),
            Record::check("b", "", 1.0, 0.0, 0.0),
            Record::check("c", "", 1.0, 0.0, 0.0).non_blocking(),
        ];
        let r = Report::new(RunConfig::new(Command::Coeffs), records);
        assert_eq!((r.summary.passed, r.summary.blocking_failures, r.summary.non_blocking_failures), (1, 1, 1));
        assert_eq!(r.exit_code(), 1);
        assert!(r.to_json().unwrap().contains("\"schema\": 1"));
    }
}

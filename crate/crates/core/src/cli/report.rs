use std::fmt::Write as _;

use serde::Serialize;

use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

/// One numerical check: `residual relation tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// The statement the check exercises, in words.
    pub anchor: String,
    pub residual: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, anchor: &str, residual: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => residual <= tolerance,
            Relation::AtLeast => residual >= tolerance,
            Relation::Above => residual > tolerance,
        };
        Self { name: name.to_string(), anchor: anchor.to_string(), residual, relation, tolerance, pass }
    }

    pub fn at_most(name: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        Self::new(name, anchor, residual, Relation::AtMost, tolerance)
    }

    pub fn at_least(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::new(name, anchor, value, Relation::AtLeast, bound)
    }

    pub fn above(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::new(name, anchor, value, Relation::Above, bound)
    }

    /// A yes/no condition, reported as residual 0 or 1 against tolerance 0.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self::at_most(name, anchor, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        };
        format!(
            "{} {} [{}] {} {rel} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.anchor,
            fmt_f64(self.residual),
            fmt_f64(self.tolerance)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Text summary with one line per check, and the same results as a JSON value.
pub fn emit_report(results: &[CheckResult]) -> (String, Report) {
    let mut text = String::new();
    for r in results {
        writeln!(text, "{}", r.line()).expect("writing to a String");
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    (text, Report { passed: results.len() - failed, failed, checks: results.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_and_counts() {
        let checks = [
            CheckResult::at_most("oracle-equivalence", "counting integral = lattice count integral", 0.05, 0.02),
            CheckResult::above("positivity", "Im f > 0", 0.3, 0.0),
        ];
        let (text, report) = emit_report(&checks);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("FAIL oracle-equivalence [counting integral = lattice count integral]"));
        assert!(lines[1].starts_with("PASS positivity"));
        assert_eq!((report.passed, report.failed), (1, 1));
        assert!(!report.all_pass());
    }

    #[test]
    fn empty_report() {
        let (text, report) = emit_report(&[]);
        assert!(text.is_empty() && report.all_pass());
    }

    #[test]
    fn strictness() {
        assert!(!CheckResult::above("p", "", 0.0, 0.0).pass);
        assert!(CheckResult::at_least("p", "", 0.0, 0.0).pass);
        assert!(!CheckResult::at_most("p", "", f64::NAN, 1.0).pass);
        assert!(!CheckResult::holds("p", "", false).pass);
    }
}

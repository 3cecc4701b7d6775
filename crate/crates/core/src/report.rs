//! Structured verification reports: one JSON record per check, line oriented.
//!
//! The serialized form is deterministic for a fixed seed and tolerance set;
//! wall time is tracked for display but never serialized.

use std::time::Duration;

/// One verification check: a named residual against its tolerance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CheckRecord {
    pub example: String,
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(example: &str, check: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            example: example.to_string(),
            check: check.to_string(),
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }

    /// A boolean check recorded as residual 0 or 1 against tolerance 1/2.
    pub fn flag(example: &str, check: &str, ok: bool) -> Self {
        CheckRecord {
            example: example.to_string(),
            check: check.to_string(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass: ok,
        }
    }
}

/// A full verification run of one example.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub example: String,
    pub checks: Vec<CheckRecord>,
    /// Wall time of the run; excluded from serialization so that reports are
    /// byte-identical across reruns with the same seed.
    pub wall: Duration,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// Line-oriented JSON: one check per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("check serializes"));
            out.push('\n');
        }
        out
    }

    /// Human-oriented summary, one pass/fail line per check.
    pub fn to_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {} :: {} (residual {:.3e}, tolerance {:.3e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.example,
                c.check,
                c.residual,
                c.tolerance
            ));
        }
        out.push_str(&format!(
            "{}: {} checks, {} in {:.2?}\n",
            self.example,
            self.checks.len(),
            if self.pass() { "all passed" } else { "FAILURES" },
            self.wall
        ));
        out
    }
}

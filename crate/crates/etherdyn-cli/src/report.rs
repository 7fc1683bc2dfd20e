//! Machine-readable run reports: one JSON document plus a flat CSV, both
//! byte-stable for a fixed config and seed (wall times are only included on
//! request).

use crate::config::RunConfig;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// How a record's residual relates to its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// Pass when `residual <= threshold` (defect-style checks).
    AtMost,
    /// Pass when `residual >= threshold` (slope- and margin-style checks).
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub eq_tag: String,
    pub inputs: String,
    pub residual: f64,
    pub threshold: f64,
    pub sense: Sense,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl CheckRecord {
    pub fn at_most(
        check_id: impl Into<String>,
        eq_tag: impl Into<String>,
        inputs: impl Into<String>,
        residual: f64,
        threshold: f64,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            eq_tag: eq_tag.into(),
            inputs: inputs.into(),
            residual,
            threshold,
            sense: Sense::AtMost,
            pass: residual.is_finite() && residual <= threshold,
            wall_ms: None,
        }
    }

    pub fn at_least(
        check_id: impl Into<String>,
        eq_tag: impl Into<String>,
        inputs: impl Into<String>,
        residual: f64,
        threshold: f64,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            eq_tag: eq_tag.into(),
            inputs: inputs.into(),
            residual,
            threshold,
            sense: Sense::AtLeast,
            pass: residual.is_finite() && residual >= threshold,
            wall_ms: None,
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failed(
        check_id: impl Into<String>,
        eq_tag: impl Into<String>,
        error: impl std::fmt::Display,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            eq_tag: eq_tag.into(),
            inputs: format!("error: {error}"),
            residual: f64::NAN,
            threshold: 0.0,
            sense: Sense::AtMost,
            pass: false,
            wall_ms: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, mut checks: Vec<CheckRecord>) -> Self {
        if !config.timings {
            for c in &mut checks {
                c.wall_ms = None;
            }
        }
        let passed = checks.iter().filter(|c| c.pass).count();
        let failed = checks.len() - passed;
        Self {
            command: command.to_string(),
            config: config.clone(),
            passed,
            failed,
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,eq_tag,residual,threshold,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:e},{:e},{}\n",
                c.check_id, c.eq_tag, c.residual, c.threshold, c.pass
            ));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }

    /// Console summary; worst offenders first among failures.
    pub fn print_summary(&self, w: &mut impl Write) -> std::io::Result<()> {
        for c in &self.checks {
            let status = if c.pass { "pass" } else { "FAIL" };
            let rel = match c.sense {
                Sense::AtMost => "<=",
                Sense::AtLeast => ">=",
            };
            writeln!(
                w,
                "[{status}] {:<42} {:>12.4e} {rel} {:.1e}  ({})",
                c.check_id, c.residual, c.threshold, c.eq_tag
            )?;
        }
        writeln!(w, "{} passed, {} failed", self.passed, self.failed)?;
        if self.failed > 0 {
            let mut worst: Vec<&CheckRecord> = self.checks.iter().filter(|c| !c.pass).collect();
            worst.sort_by(|a, b| {
                let ra = a.residual / a.threshold.abs().max(1e-300);
                let rb = b.residual / b.threshold.abs().max(1e-300);
                rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
            });
            writeln!(w, "worst offenders:")?;
            for c in worst.iter().take(5) {
                writeln!(
                    w,
                    "  {} residual {:.4e} vs threshold {:.1e} ({})",
                    c.check_id, c.residual, c.threshold, c.inputs
                )?;
            }
        }
        Ok(())
    }
}

/// Stable 64-bit FNV-1a hash used to derive per-check RNG seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

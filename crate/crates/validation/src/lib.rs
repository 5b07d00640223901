//! Reporting helpers for the acceptance suite.

use std::io::Write;

/// Symmetric tolerance band around a target value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub target: f64,
    pub tolerance: f64,
}

impl Band {
    pub const fn new(target: f64, tolerance: f64) -> Self {
        Self { target, tolerance }
    }

    pub fn contains(&self, value: f64) -> bool {
        // slack for decimal edges such as 2.0 − 1.7
        (value - self.target).abs() <= self.tolerance * (1.0 + 1e-12)
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ± {}", self.target, self.tolerance)
    }
}

/// Writes `ACCEPTANCE <id> PASS|FAIL <name>: <detail>` straight to stderr so
/// the line shows up in the default test output, then returns `pass`.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("ACCEPTANCE {id} {verdict} {name}: {detail}\n");
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(line.as_bytes());
    let _ = err.flush();
    pass
}

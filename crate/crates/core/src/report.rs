//! Versioned JSON run reports.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    pub checks_passed: u64,
    pub checks_failed: u64,
    pub seed: u64,
}

impl RunReport {
    pub fn new(command: &str, inputs: Value, seed: u64) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            inputs,
            outputs: Value::Null,
            checks_passed: 0,
            checks_failed: 0,
            seed,
        }
    }

    pub fn check(&mut self, cond: bool) -> bool {
        if cond {
            self.checks_passed += 1;
        } else {
            self.checks_failed += 1;
        }
        cond
    }
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
pub fn to_canonical_json(r: &RunReport) -> String {
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(r).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
    s.push('\n');
    s
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(r: &RunReport, path: Option<&Path>) -> std::io::Result<()> {
    let text = to_canonical_json(r);
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

//! Machine-readable verification reports shared by every checker.
//!
//! A [`Report`] carries a deterministic *stable* section (configuration,
//! counts, checks) and a wall-time field that lives outside it, so two runs
//! with the same inputs produce byte-identical stable JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of a single check. Ordered so that the maximum over a report is
/// its overall verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
        }
    }
}

/// One named check with an optional witness (present on failure) and
/// free-form supporting data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Value::is_null", default)]
    pub data: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        Check { name: name.into(), status, witness: None, data: Value::Null }
    }

    pub fn pass(name: impl Into<String>) -> Self {
        Self::new(name, Status::Pass)
    }

    /// Pass when `ok`, otherwise fail with the given witness.
    pub fn from_bool(name: impl Into<String>, ok: bool, witness: impl FnOnce() -> Value) -> Self {
        let mut c = Self::new(name, if ok { Status::Pass } else { Status::Fail });
        if !ok {
            c.witness = Some(witness());
        }
        c
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = data;
        self
    }
}

/// A labelled count row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub label: String,
    pub count: u64,
}

/// The deterministic part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stable {
    pub command: String,
    pub toolkit_version: String,
    pub config: Value,
    pub counts: Vec<CountRow>,
    pub checks: Vec<Check>,
    pub status: Status,
}

/// A full report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub stable: Stable,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: Value, counts: Vec<CountRow>, checks: Vec<Check>) -> Self {
        let status = overall(&checks);
        Report {
            stable: Stable {
                command: command.into(),
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                counts,
                checks,
                status,
            },
            wall_time_ms: None,
        }
    }

    pub fn status(&self) -> Status {
        self.stable.status
    }

    /// Pretty JSON of the whole report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Pretty JSON of the stable section only.
    pub fn stable_json(&self) -> String {
        serde_json::to_string_pretty(&self.stable).expect("report serializes")
    }

    /// CSV with one row per count followed by one row per check.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,name,value\n");
        for c in &self.stable.counts {
            let _ = writeln!(s, "count,{},{}", csv_field(&c.label), c.count);
        }
        for c in &self.stable.checks {
            let _ = writeln!(s, "check,{},{}", csv_field(&c.name), c.status.as_str());
        }
        let _ = writeln!(s, "status,overall,{}", self.stable.status.as_str());
        s
    }

    /// Markdown summary.
    pub fn to_markdown(&self) -> String {
        let st = &self.stable;
        let mut s = format!("# {}\n\nOverall: **{}**\n\n", st.command, st.status.as_str());
        let _ = writeln!(s, "```json\n{}\n```\n", serde_json::to_string_pretty(&st.config).unwrap_or_default());
        if !st.counts.is_empty() {
            s.push_str("| label | count |\n|---|---|\n");
            for c in &st.counts {
                let _ = writeln!(s, "| {} | {} |", c.label, c.count);
            }
            s.push('\n');
        }
        s.push_str("| check | status |\n|---|---|\n");
        for c in &st.checks {
            let _ = writeln!(s, "| {} | {} |", c.name, c.status.as_str());
        }
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(s, "\nWall time: {ms} ms");
        }
        s
    }
}

/// The worst status among `checks` (`Pass` for an empty list).
pub fn overall(checks: &[Check]) -> Status {
    checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_is_worst_status() {
        let checks = vec![Check::pass("a"), Check::new("b", Status::Inconclusive)];
        assert_eq!(overall(&checks), Status::Inconclusive);
        let checks = vec![Check::new("c", Status::Fail), Check::new("b", Status::Inconclusive)];
        assert_eq!(overall(&checks), Status::Fail);
        assert_eq!(overall(&[]), Status::Pass);
    }

    #[test]
    fn wall_time_is_outside_stable_section() {
        let mut r = Report::new("x", Value::Null, vec![], vec![Check::pass("a")]);
        let before = r.stable_json();
        r.wall_time_ms = Some(12);
        assert_eq!(before, r.stable_json());
        assert!(r.to_json().contains("wall_time_ms"));
    }
}

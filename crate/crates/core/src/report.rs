//! Machine-readable check reports.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
}

/// Run-level metadata stamped on every report by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub truncation: usize,
    pub rng: String,
}

/// Outcome of a single check. A `fail` or `unknown` status always carries a
/// reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub data: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Report {
    pub fn pass(check: impl Into<String>) -> Self {
        Self::new(check, Status::Pass, None)
    }

    pub fn fail(check: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::new(check, Status::Fail, Some(reason.into()))
    }

    pub fn unknown(check: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::new(check, Status::Unknown, Some(reason.into()))
    }

    /// Pass when `ok`, otherwise fail with `reason`.
    pub fn verdict(check: impl Into<String>, ok: bool, reason: impl Into<String>) -> Self {
        if ok {
            Self::pass(check)
        } else {
            Self::fail(check, reason)
        }
    }

    fn new(check: impl Into<String>, status: Status, reason: Option<String>) -> Self {
        Report {
            check: check.into(),
            status,
            reason,
            data: Map::new(),
            provenance: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.data.insert(key.to_string(), v);
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.data.get(key)
    }
}

/// Canonical JSON: sorted object keys, shortest round-trip floats.
pub fn emit_json(reports: &[Report]) -> String {
    if reports.is_empty() {
        return "[]".to_string();
    }
    // Round-tripping through `Value` sorts struct fields as well as map keys.
    let value = serde_json::to_value(reports).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

/// Human-readable one-line-per-report table.
pub fn emit_table(reports: &[Report]) -> String {
    let width = reports
        .iter()
        .map(|r| r.check.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!("{:<width$}  status   reason\n", "check");
    for r in reports {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Unknown => "unknown",
        };
        out.push_str(&format!(
            "{:<width$}  {:<7}  {}\n",
            r.check,
            status,
            r.reason.as_deref().unwrap_or("")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_brackets() {
        assert_eq!(emit_json(&[]), "[]");
    }

    #[test]
    fn keys_are_sorted() {
        let r = Report::pass("x").with("zeta", 1).with("alpha", 2.5);
        let s = emit_json(&[r]);
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.find("\"check\"").unwrap() < s.find("\"data\"").unwrap());
    }

    #[test]
    fn failing_reports_carry_reason() {
        let r = Report::verdict("c", false, "because");
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.reason.as_deref(), Some("because"));
    }
}

//! Suite reports: one record per check, canonical JSON with sorted keys.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Outcome of one check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// First 16 hex digits of the SHA-256 of a canonical rendering.
pub fn digest(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))[..16].to_string()
}

/// One check record.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub lhs_digest: Option<String>,
    pub rhs_digest: Option<String>,
    pub region: Option<BTreeMap<String, i32>>,
    pub runtime_ms: Option<u64>,
    pub detail: String,
    /// Floating values with error estimates (quadrature only).
    pub values: Option<Value>,
}

impl CheckRecord {
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        status: Status,
        detail: impl Into<String>,
    ) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            status,
            lhs_digest: None,
            rhs_digest: None,
            region: None,
            runtime_ms: None,
            detail: detail.into(),
            values: None,
        }
    }

    pub fn with_digests(mut self, lhs: &str, rhs: &str) -> Self {
        self.lhs_digest = Some(digest(lhs));
        self.rhs_digest = Some(digest(rhs));
        self
    }

    pub fn with_region(mut self, region: BTreeMap<String, i32>) -> Self {
        self.region = Some(region);
        self
    }

    pub fn with_values(mut self, values: Value) -> Self {
        self.values = Some(values);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "anchor": self.anchor,
            "status": self.status,
            "lhs_digest": self.lhs_digest,
            "rhs_digest": self.rhs_digest,
            "region": self.region,
            "detail": self.detail,
        });
        if let Some(ms) = self.runtime_ms {
            v["runtime_ms"] = json!(ms);
        }
        if let Some(vals) = &self.values {
            v["values"] = vals.clone();
        }
        v
    }
}

/// A suite run: configuration echo, checks in canonical order, overall status.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    /// Pass iff every check passes; otherwise the worst status present.
    pub fn status(&self) -> Status {
        self.checks
            .iter()
            .map(|c| c.status)
            .max()
            .unwrap_or(Status::Pass)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckRecord::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "config": self.config,
            "checks": self.checks.iter().map(CheckRecord::to_json).collect::<Vec<_>>(),
            "status": self.status(),
        })
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report values serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_status_is_the_worst() {
        let mut r = SuiteReport {
            suite: "x".into(),
            config: json!({}),
            checks: vec![],
        };
        assert_eq!(r.status(), Status::Pass);
        r.checks
            .push(CheckRecord::new("a", "anchor", Status::Pass, ""));
        r.checks
            .push(CheckRecord::new("b", "anchor", Status::Inconclusive, ""));
        assert_eq!(r.status(), Status::Inconclusive);
        r.checks
            .push(CheckRecord::new("c", "anchor", Status::Fail, ""));
        assert_eq!(r.status(), Status::Fail);
        assert!(!r.passed());
    }

    #[test]
    fn keys_are_sorted_and_timings_optional() {
        let c = CheckRecord::new("a", "anchor", Status::Pass, "d").with_digests("1", "1");
        let s = serde_json::to_string(&c.to_json()).unwrap();
        assert!(s.find("\"anchor\"").unwrap() < s.find("\"status\"").unwrap());
        assert!(!s.contains("runtime_ms"));
        assert_eq!(c.lhs_digest, c.rhs_digest);
        assert_eq!(digest("").len(), 16);
    }
}

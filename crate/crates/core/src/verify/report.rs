//! Verification reports and their JSON/CSV serialization.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::sim::MCEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lhs {
    Estimate(MCEstimate),
    Value(f64),
}

impl Lhs {
    pub fn value(&self) -> f64 {
        match self {
            Lhs::Estimate(e) => e.mean,
            Lhs::Value(v) => *v,
        }
    }

    pub fn std_err(&self) -> Option<f64> {
        match self {
            Lhs::Estimate(e) => Some(e.std_err),
            Lhs::Value(_) => None,
        }
    }
}

/// Outcome of checking `lhs <= rhs + margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim_id: String,
    pub lhs: Lhs,
    pub rhs: f64,
    pub margin: f64,
    pub margin_rule: String,
    pub passed: bool,
    pub metadata: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn inequality(
        claim_id: impl Into<String>,
        lhs: Lhs,
        rhs: f64,
        margin: f64,
        margin_rule: impl Into<String>,
    ) -> Self {
        let passed = lhs.value() <= rhs + margin;
        VerificationReport {
            claim_id: claim_id.into(),
            lhs,
            rhs,
            margin,
            margin_rule: margin_rule.into(),
            passed,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), v);
        self
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "claim_id",
    "lhs",
    "lhs_std_err",
    "rhs",
    "margin",
    "margin_rule",
    "passed",
    "metadata",
];

/// One CSV row per report; metadata is embedded as a JSON string.
pub fn write_reports_csv<W: Write>(out: W, reports: &[VerificationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.claim_id.clone(),
            format!("{:e}", r.lhs.value()),
            r.lhs.std_err().map(|s| format!("{s:e}")).unwrap_or_default(),
            format!("{:e}", r.rhs),
            format!("{:e}", r.margin),
            r.margin_rule.clone(),
            r.passed.to_string(),
            serde_json::to_string(&r.metadata)?,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule_and_round_trip() {
        let est = MCEstimate::from_count(30, 1000, 5);
        let r = VerificationReport::inequality("demo", Lhs::Estimate(est), 0.02, 0.01, "4 se")
            .with("n", 11);
        assert!(r.passed);
        let json = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let fail = VerificationReport::inequality("demo", Lhs::Value(1.0), 0.5, 0.1, "fixed");
        assert!(!fail.passed);
    }

    #[test]
    fn csv_quotes_metadata() {
        let r = VerificationReport::inequality("a,b", Lhs::Value(0.0), 1.0, 0.0, "none").with("grid", [1, 2]);
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("claim_id,lhs,"));
        assert!(text.contains("\"a,b\""));
        assert!(text.contains("\"{\"\"grid\"\":[1,2]}\""));
    }
}

//! Batch report files: JSON-lines verdicts, a CSV summary and a run
//! manifest. Report bodies carry no timestamps so reruns compare
//! byte-for-byte; run times live only in the manifest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::detector::{RugKind, Verdict};
use crate::eval::Prediction;
use crate::model::DetectorParams;

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const UNDECIDED: &str = "undecided";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report line {line}: {reason}")]
    Line { line: usize, reason: String },
}

pub fn prediction_json(p: &Prediction) -> Value {
    match p {
        Prediction::Decided(v) => serde_json::to_value(v).expect("verdicts serialize"),
        Prediction::Undecided { mint, error } => json!({"mint": mint, "outcome": UNDECIDED, "error": error}),
    }
}

/// One JSON object per line, in the given order.
pub fn write_jsonl(entries: &[Prediction]) -> String {
    let mut out = String::new();
    for p in entries {
        out.push_str(&prediction_json(p).to_string());
        out.push('\n');
    }
    out
}

pub fn read_jsonl(text: &str) -> Result<Vec<Prediction>, ReportError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| ReportError::Line { line: i + 1, reason };
        let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if v["outcome"] == UNDECIDED {
            out.push(Prediction::Undecided {
                mint: v["mint"].as_str().ok_or_else(|| err("missing mint".into()))?.to_string(),
                error: v["error"].as_str().unwrap_or_default().to_string(),
            });
        } else {
            out.push(Prediction::Decided(
                serde_json::from_value::<Verdict>(v).map_err(|e| err(e.to_string()))?,
            ));
        }
    }
    Ok(out)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub const SUMMARY_HEADER: &str = "mint,outcome,kind,rate_24h,decline_fraction,liq_profit";

pub fn summary_row(p: &Prediction) -> String {
    match p {
        Prediction::Decided(v) => format!(
            "{},{},{},{},{},{}",
            v.mint,
            v.outcome.label(),
            v.outcome.kind().map(|k| k.as_str()).unwrap_or_default(),
            num(v.measured("rate_24h")),
            num(v.measured("decline_fraction")),
            num(v.measured("liq_profit")),
        ),
        Prediction::Undecided { mint, .. } => format!("{mint},{UNDECIDED},,,,"),
    }
}

pub fn summary_csv(entries: &[Prediction]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for p in entries {
        out.push_str(&summary_row(p));
        out.push('\n');
    }
    out
}

/// Outcome counts keyed by `active_token`, `not_rug_pull`, each rug kind and
/// `undecided`. Every key is present.
pub fn outcome_counts(entries: &[Prediction]) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = ["active_token", "not_rug_pull", UNDECIDED]
        .into_iter()
        .map(|k| (k.to_string(), 0))
        .chain(RugKind::ALL.iter().map(|k| (k.as_str().to_string(), 0)))
        .collect();
    for p in entries {
        let key = match p {
            Prediction::Decided(v) => match v.outcome.kind() {
                Some(k) => k.as_str().to_string(),
                None => v.outcome.label().to_string(),
            },
            Prediction::Undecided { .. } => UNDECIDED.to_string(),
        };
        *counts.entry(key).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub source: String,
    pub params: DetectorParams,
    pub total: usize,
    pub rug_pulls: usize,
    pub counts: BTreeMap<String, usize>,
    /// RFC 3339, UTC.
    pub started_at: String,
    pub finished_at: String,
}

impl Manifest {
    pub fn new(source: &str, params: DetectorParams, entries: &[Prediction], started_at: String, finished_at: String) -> Self {
        let counts = outcome_counts(entries);
        let rug_pulls = RugKind::ALL.iter().map(|k| counts[k.as_str()]).sum();
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            source: source.to_string(),
            params,
            total: entries.len(),
            rug_pulls,
            counts,
            started_at,
            finished_at,
        }
    }
}

//! Classification metrics against labeled datasets and the tau_down sweep.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{classify, DetectError, RugKind, Verdict};
use crate::model::{Address, DetectorParams, TokenRecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prediction for labeled mint {0}")]
    MissingPrediction(Address),
    #[error("no token record for labeled mint {0}")]
    MissingRecord(Address),
    #[error("duplicate labeled mint {0}")]
    DuplicateMint(Address),
    #[error("labels line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    RugPull(Option<RugKind>),
    Legitimate,
}

impl Label {
    pub fn is_rug_pull(&self) -> bool {
        matches!(self, Label::RugPull(_))
    }
}

/// Ground truth, unique by mint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    entries: BTreeMap<Address, Label>,
}

impl LabeledDataset {
    pub fn new(entries: impl IntoIterator<Item = (Address, Label)>) -> Result<Self, EvalError> {
        let mut map = BTreeMap::new();
        for (mint, label) in entries {
            if map.insert(mint.clone(), label).is_some() {
                return Err(EvalError::DuplicateMint(mint));
            }
        }
        Ok(LabeledDataset { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, mint: &str) -> Option<Label> {
        self.entries.get(mint).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Label)> {
        self.entries.iter()
    }

    pub fn mints(&self) -> impl Iterator<Item = &Address> {
        self.entries.keys()
    }

    /// CSV `mint,label[,kind]`. Labels: `rug_pull` (or `rug`, `1`) and
    /// `legitimate` (or `legit`, `0`). A header row is optional.
    pub fn parse_csv(text: &str) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = row.position().map_or(i + 1, |p| p.line() as usize);
            let mint = row.get(0).unwrap_or_default();
            let label = row.get(1).unwrap_or_default().to_lowercase();
            if i == 0 && mint.eq_ignore_ascii_case("mint") {
                continue;
            }
            if mint.is_empty() {
                return Err(EvalError::Format { line, reason: "empty mint".into() });
            }
            let kind = match row.get(2).filter(|k| !k.is_empty()) {
                Some(k) => Some(k.parse::<RugKind>().map_err(|e| EvalError::Format {
                    line,
                    reason: e.to_string(),
                })?),
                None => None,
            };
            let label = match label.as_str() {
                "rug_pull" | "rugpull" | "rug" | "1" => Label::RugPull(kind),
                "legitimate" | "legit" | "0" => Label::Legitimate,
                other => {
                    return Err(EvalError::Format {
                        line,
                        reason: format!("unknown label {other:?}"),
                    })
                }
            };
            entries.push((mint.to_string(), label));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mint,label,kind\n");
        for (mint, label) in &self.entries {
            match label {
                Label::RugPull(kind) => out.push_str(&format!(
                    "{mint},rug_pull,{}\n",
                    kind.map(|k| k.as_str()).unwrap_or_default()
                )),
                Label::Legitimate => out.push_str(&format!("{mint},legitimate,\n")),
            }
        }
        out
    }
}

/// One detector result: a verdict, or an explicit marker that the token
/// could not be decided (data error).
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Decided(Verdict),
    Undecided { mint: Address, error: String },
}

impl Prediction {
    pub fn mint(&self) -> &str {
        match self {
            Prediction::Decided(v) => &v.mint,
            Prediction::Undecided { mint, .. } => mint,
        }
    }
}

impl From<Verdict> for Prediction {
    fn from(v: Verdict) -> Self {
        Prediction::Decided(v)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub undecided: usize,
}

impl Confusion {
    pub fn decided(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn total(&self) -> usize {
        self.decided() + self.undecided
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub applicability: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    /// Share of true positives with a kind label whose predicted kind matches.
    /// `None` when no true positive carries a kind label.
    pub kind_accuracy: Option<f64>,
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Metrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            applicability: ratio(c.decided(), c.total()),
            precision,
            recall,
            f1,
            confusion: c,
            kind_accuracy: None,
        }
    }
}

/// Binary metrics over every labeled mint. Predictions for unlabeled mints
/// are ignored.
pub fn compute_metrics(predictions: &[Prediction], labels: &LabeledDataset) -> Result<Metrics, EvalError> {
    let by_mint: BTreeMap<&str, &Prediction> = predictions.iter().map(|p| (p.mint(), p)).collect();
    let mut c = Confusion::default();
    let (mut kind_total, mut kind_hits) = (0usize, 0usize);
    for (mint, label) in labels.iter() {
        let pred = by_mint
            .get(mint.as_str())
            .ok_or_else(|| EvalError::MissingPrediction(mint.clone()))?;
        let verdict = match pred {
            Prediction::Decided(v) => v,
            Prediction::Undecided { .. } => {
                c.undecided += 1;
                continue;
            }
        };
        match (label, verdict.outcome.is_rug_pull()) {
            (Label::RugPull(kind), true) => {
                c.tp += 1;
                if let Some(k) = kind {
                    kind_total += 1;
                    kind_hits += usize::from(verdict.outcome.kind() == Some(*k));
                }
            }
            (Label::RugPull(_), false) => c.fn_ += 1,
            (Label::Legitimate, true) => c.fp += 1,
            (Label::Legitimate, false) => c.tn += 1,
        }
    }
    let mut m = Metrics::from_confusion(c);
    if kind_total > 0 {
        m.kind_accuracy = Some(kind_hits as f64 / kind_total as f64);
    }
    Ok(m)
}

/// Runs the detector on every labeled mint. Detection errors become
/// undecided predictions.
pub fn predict(records: &BTreeMap<Address, TokenRecord>, labels: &LabeledDataset, params: &DetectorParams) -> Result<Vec<Prediction>, EvalError> {
    labels
        .mints()
        .map(|mint| {
            let record = records.get(mint).ok_or_else(|| EvalError::MissingRecord(mint.clone()))?;
            Ok(match classify(record, params) {
                Ok(v) => Prediction::Decided(v),
                Err(e @ DetectError::Params(_)) => return Err(e.into()),
                Err(e) => Prediction::Undecided {
                    mint: mint.clone(),
                    error: e.to_string(),
                },
            })
        })
        .collect()
}

pub const SWEEP_POINTS: usize = 51;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau_down: f64,
    pub metrics: Metrics,
    /// Mints classified as rug pulls at this threshold.
    pub flagged: BTreeSet<Address>,
}

/// Re-runs detection for tau_down = 0.50, 0.51, ..., 1.00 with every other
/// parameter fixed.
pub fn sweep_tau_down(
    records: &BTreeMap<Address, TokenRecord>,
    labels: &LabeledDataset,
    base: &DetectorParams,
) -> Result<Vec<SweepPoint>, EvalError> {
    (0..SWEEP_POINTS)
        .into_par_iter()
        .map(|i| {
            let tau = (50 + i) as f64 / 100.0;
            let params = DetectorParams {
                tau_down: tau,
                ..*base
            };
            let preds = predict(records, labels, &params)?;
            let metrics = compute_metrics(&preds, labels)?;
            let flagged = preds
                .iter()
                .filter_map(|p| match p {
                    Prediction::Decided(v) if v.outcome.is_rug_pull() => Some(v.mint.clone()),
                    _ => None,
                })
                .collect();
            Ok(SweepPoint {
                tau_down: tau,
                metrics,
                flagged,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("tau,precision,recall,f1,applicability\n");
    for p in points {
        let m = &p.metrics;
        out.push_str(&format!(
            "{:.2},{:.4},{:.4},{:.4},{:.4}\n",
            p.tau_down, m.precision, m.recall, m.f1, m.applicability
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn confusion(tp: usize, fp: usize, tn: usize, fn_: usize) -> Confusion {
        Confusion {
            tp,
            fp,
            tn,
            fn_,
            undecided: 0,
        }
    }

    #[test]
    fn hand_built_confusion() {
        let m = Metrics::from_confusion(confusion(3, 1, 0, 2));
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_denominators() {
        let m = Metrics::from_confusion(confusion(0, 0, 4, 0));
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.applicability, 1.0);
        let m = Metrics::from_confusion(Confusion::default());
        assert_eq!(m.applicability, 0.0);
    }

    #[test]
    fn undecided_counts_against_applicability_only() {
        let mut c = confusion(2, 0, 1, 0);
        c.undecided = 1;
        let m = Metrics::from_confusion(c);
        assert_eq!(m.applicability, 0.75);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
    }

    #[test]
    fn labels_csv() {
        let d = LabeledDataset::parse_csv("mint,label,kind\nA,rug_pull,freeze_abuse\nB,legitimate\nC,rug\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.get("A"), Some(Label::RugPull(Some(RugKind::FreezeAbuse))));
        assert_eq!(d.get("B"), Some(Label::Legitimate));
        assert_eq!(d.get("C"), Some(Label::RugPull(None)));
        assert_eq!(LabeledDataset::parse_csv(&d.to_csv()).unwrap(), d);
        assert!(matches!(
            LabeledDataset::parse_csv("A,rug\nA,legit\n"),
            Err(EvalError::DuplicateMint(_))
        ));
        assert!(LabeledDataset::parse_csv("A,maybe\n").is_err());
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let d = LabeledDataset::parse_csv("A,rug\n").unwrap();
        assert!(matches!(compute_metrics(&[], &d), Err(EvalError::MissingPrediction(_))));
        let preds = vec![Prediction::Undecided {
            mint: "A".into(),
            error: "x".into(),
        }];
        let m = compute_metrics(&preds, &d).unwrap();
        assert_eq!(m.confusion.undecided, 1);
        assert_eq!(m.applicability, 0.0);
    }
}

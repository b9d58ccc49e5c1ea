//! Two-phase rug pull classification.
//!
//! Phase one screens out tokens that are still actively traded. Candidates
//! that survive are matched against three fraud patterns in fixed priority:
//! freeze authority abuse, then liquidity manipulation, then pump-and-dump.

pub mod activity;
pub mod holders;
pub mod rules;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed::Fixed;
use crate::model::{Address, DetectorParams, ModelError, QuoteAsset, Signature, TokenRecord, Timestamp};

pub use activity::{prefilter, tx_rate, Prefilter, PREFILTER_SIGNATURE_LIMIT};
pub use holders::{
    build_holder_series, decline_fraction, detect_pump_and_dump, detection_window, primary_pool,
    HolderSample, HolderSeries,
};
pub use rules::{
    creator_addresses, detect_freeze_abuse, detect_liquidity_manipulation, liq_profit,
    liquidity_flows, LiqProfit, FREEZE_INSTRUCTION, FROZEN_LOG_MARKER, RULE_FREEZE,
    RULE_LIQUIDITY, RULE_PUMP_DUMP,
};

pub const RULE_PREFILTER: &str = "preliminary_filter";
pub const RULE_NONE: &str = "none";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("invalid window [{start}, {end})")]
    InvalidWindow { start: Timestamp, end: Timestamp },
    #[error("{address} provided liquidity in several quote assets: {breakdown:?}")]
    MixedQuoteAssets {
        address: Address,
        breakdown: BTreeMap<QuoteAsset, Fixed>,
    },
    #[error("transfer {signature} moves {amount} from {address} holding only {balance}")]
    NegativeBalance {
        signature: Signature,
        address: Address,
        balance: u128,
        amount: u128,
    },
    #[error("holder series is empty")]
    EmptySeries,
    #[error("no holders at window start")]
    ZeroHolders,
    #[error(transparent)]
    Params(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RugKind {
    FreezeAbuse,
    LiquidityManipulation,
    PumpAndDump,
}

impl RugKind {
    pub const ALL: [RugKind; 3] = [
        RugKind::FreezeAbuse,
        RugKind::LiquidityManipulation,
        RugKind::PumpAndDump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RugKind::FreezeAbuse => "freeze_abuse",
            RugKind::LiquidityManipulation => "liquidity_manipulation",
            RugKind::PumpAndDump => "pump_and_dump",
        }
    }
}

impl fmt::Display for RugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RugKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "freeze_abuse" | "freeze_authority_abuse" => Ok(RugKind::FreezeAbuse),
            "liquidity_manipulation" | "liquidity_withdrawal" => {
                Ok(RugKind::LiquidityManipulation)
            }
            "pump_and_dump" => Ok(RugKind::PumpAndDump),
            other => Err(format!("unknown rug pull kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    ActiveToken,
    NotRugPull,
    RugPull(RugKind),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ActiveToken => "active_token",
            Outcome::NotRugPull => "not_rug_pull",
            Outcome::RugPull(_) => "rug_pull",
        }
    }

    pub fn kind(&self) -> Option<RugKind> {
        match self {
            Outcome::RugPull(k) => Some(*k),
            _ => None,
        }
    }

    pub fn is_rug_pull(&self) -> bool {
        matches!(self, Outcome::RugPull(_))
    }

    pub fn from_parts(outcome: &str, kind: Option<RugKind>) -> Result<Self, String> {
        match (outcome, kind) {
            ("active_token", _) => Ok(Outcome::ActiveToken),
            ("not_rug_pull", _) => Ok(Outcome::NotRugPull),
            ("rug_pull", Some(k)) => Ok(Outcome::RugPull(k)),
            ("rug_pull", None) => Err("rug_pull outcome without kind".into()),
            (other, _) => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Audit trail behind a verdict.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub matched_rule: String,
    pub trigger_signatures: Vec<Signature>,
    pub trigger_interval: Option<(Timestamp, Timestamp)>,
    pub measured_values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new(rule: &str) -> Self {
        Evidence {
            matched_rule: rule.to_string(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VerdictRepr", into = "VerdictRepr")]
pub struct Verdict {
    pub mint: Address,
    pub outcome: Outcome,
    pub evidence: Evidence,
    pub params_used: DetectorParams,
}

impl Verdict {
    pub fn measured(&self, key: &str) -> Option<f64> {
        self.evidence.measured_values.get(key).copied()
    }
}

/// Flat wire form: `{mint, outcome, kind?, evidence, params}`.
#[derive(Serialize, Deserialize)]
struct VerdictRepr {
    mint: Address,
    outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<RugKind>,
    evidence: Evidence,
    params: DetectorParams,
}

impl From<Verdict> for VerdictRepr {
    fn from(v: Verdict) -> Self {
        VerdictRepr {
            mint: v.mint,
            outcome: v.outcome.label().to_string(),
            kind: v.outcome.kind(),
            evidence: v.evidence,
            params: v.params_used,
        }
    }
}

impl TryFrom<VerdictRepr> for Verdict {
    type Error = String;

    fn try_from(r: VerdictRepr) -> Result<Self, Self::Error> {
        Ok(Verdict {
            outcome: Outcome::from_parts(&r.outcome, r.kind)?,
            mint: r.mint,
            evidence: r.evidence,
            params_used: r.params,
        })
    }
}

/// Largest per-asset net liquidity profit among the creator addresses, as a
/// float for reporting.
fn best_creator_profit(record: &TokenRecord) -> Option<f64> {
    creator_addresses(record)
        .iter()
        .flat_map(|a| liquidity_flows(record, a).into_values())
        .max()
        .map(Fixed::to_f64)
}

/// Full classification of one token.
pub fn classify(record: &TokenRecord, params: &DetectorParams) -> Result<Verdict, DetectError> {
    params.validate()?;
    let screen = prefilter(record, params);
    let verdict = |outcome, evidence| Verdict {
        mint: record.mint.clone(),
        outcome,
        evidence,
        params_used: *params,
    };
    if !screen.is_candidate() {
        let mut ev = Evidence::new(RULE_PREFILTER);
        ev.measured_values.insert("rate_24h".into(), screen.rate());
        return Ok(verdict(Outcome::ActiveToken, ev));
    }

    let series = build_holder_series(record)?;
    let window = detection_window(&series, record.creation_time, params);
    let pump = match detect_pump_and_dump(&window, params) {
        Ok(ev) => ev,
        Err(DetectError::ZeroHolders | DetectError::EmptySeries) => None,
        Err(e) => return Err(e),
    };

    let (outcome, mut ev) = if let Some(ev) = detect_freeze_abuse(record) {
        (Outcome::RugPull(RugKind::FreezeAbuse), ev)
    } else if let Some(ev) = detect_liquidity_manipulation(record, params) {
        (Outcome::RugPull(RugKind::LiquidityManipulation), ev)
    } else if let Some(mut ev) = pump {
        if let Some((t, end)) = ev.trigger_interval {
            ev.trigger_signatures = record
                .transfers
                .iter()
                .filter(|x| x.timestamp >= t && x.timestamp <= end)
                .map(|x| x.signature.clone())
                .collect();
            ev.trigger_signatures.dedup();
        }
        (Outcome::RugPull(RugKind::PumpAndDump), ev)
    } else {
        (Outcome::NotRugPull, Evidence::new(RULE_NONE))
    };

    let m = &mut ev.measured_values;
    m.insert("rate_24h".into(), screen.rate());
    if let (Some(s), Some(e)) = (window.samples.first(), window.samples.last()) {
        if s.holders > 0 {
            m.entry("decline_fraction".into())
                .or_insert(decline_fraction(s.holders, e.holders));
        }
    }
    if let Some(p) = best_creator_profit(record) {
        m.entry("liq_profit".into()).or_insert(p);
    }
    Ok(verdict(outcome, ev))
}

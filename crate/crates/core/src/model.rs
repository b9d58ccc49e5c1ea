//! On-chain domain types shared by every analysis.
//!
//! Amount conventions:
//! - raw token amounts are integers in base units (no decimals applied);
//! - quote-asset amounts are [`Fixed`] decimals with nine fractional digits;
//! - [`DefiActivity::quote_amount`] and [`DefiActivity::base_amount`] are
//!   actor-centric: inflow to the actor is positive, outflow negative. An
//!   `AddLiquidity` therefore carries `quote_amount <= 0` and a
//!   `RemoveLiquidity` carries `quote_amount >= 0`.
//!
//! A [`TransferEvent`] whose `from` is the token's own mint address is an
//! issuance (tokens minted out of nothing); one whose `to` is the mint address
//! is a burn.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fixed::Fixed;

pub type Address = String;
pub type Signature = String;
/// Unix seconds, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_HOUR: i64 = 3_600;
pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("event {what} at {timestamp} precedes creation time {creation_time}")]
    BeforeCreation {
        what: &'static str,
        timestamp: Timestamp,
        creation_time: Timestamp,
    },
    #[error("duplicate transaction signature {0}")]
    DuplicateSignature(Signature),
    #[error("invalid token meta: {0}")]
    InvalidMeta(String),
    #[error("invalid instruction in {signature}: {reason}")]
    InvalidInstruction { signature: Signature, reason: String },
    #[error("invalid transfer {signature}: {reason}")]
    InvalidTransfer { signature: Signature, reason: String },
    #[error("invalid defi activity {signature}: {reason}")]
    InvalidActivity { signature: Signature, reason: String },
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
}

/// Serde adapter that writes integers as decimal strings.
pub(crate) mod int_string {
    use super::*;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Website,
    Social,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub kind: LinkKind,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub name: String,
    pub symbol: String,
    pub freeze_authority: Option<Address>,
    pub mint_authority: Option<Address>,
    pub creator: Address,
    pub decimals: u8,
    #[serde(default)]
    pub links: Vec<Link>,
}

impl TokenMeta {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.symbol.trim().is_empty() {
            return Err(ModelError::InvalidMeta("empty symbol".into()));
        }
        if self.decimals > 18 {
            return Err(ModelError::InvalidMeta(format!(
                "decimals {} exceeds 18",
                self.decimals
            )));
        }
        if self.creator.is_empty() {
            return Err(ModelError::InvalidMeta("empty creator".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub program: String,
    pub name: String,
    #[serde(default)]
    pub accounts: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceDelta {
    pub owner: Address,
    pub mint: Address,
    #[serde(with = "int_string")]
    pub delta: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub signature: Signature,
    pub timestamp: Timestamp,
    pub instructions: Vec<InstructionRecord>,
    pub log_lines: Vec<String>,
    #[serde(default)]
    pub token_balance_deltas: Vec<BalanceDelta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefiKind {
    AddLiquidity,
    RemoveLiquidity,
    Swap,
}

/// Pricing-side asset of a pool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuoteAsset {
    Sol,
    Usdc,
    Usdt,
    Other(String),
}

impl QuoteAsset {
    pub fn as_str(&self) -> &str {
        match self {
            QuoteAsset::Sol => "SOL",
            QuoteAsset::Usdc => "USDC",
            QuoteAsset::Usdt => "USDT",
            QuoteAsset::Other(s) => s,
        }
    }
}

impl fmt::Display for QuoteAsset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuoteAsset {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "SOL" | "WSOL" => QuoteAsset::Sol,
            "USDC" => QuoteAsset::Usdc,
            "USDT" => QuoteAsset::Usdt,
            _ => QuoteAsset::Other(s.trim().to_string()),
        })
    }
}

impl Serialize for QuoteAsset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for QuoteAsset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap_or(QuoteAsset::Other(s)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefiActivity {
    pub signature: Signature,
    pub kind: DefiKind,
    pub actor: Address,
    pub timestamp: Timestamp,
    #[serde(with = "int_string")]
    pub base_amount: i128,
    pub quote_asset: QuoteAsset,
    pub quote_amount: Fixed,
    pub pool: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub signature: Signature,
    pub from: Address,
    pub to: Address,
    #[serde(with = "int_string")]
    pub amount: u128,
    pub timestamp: Timestamp,
}

/// Full observable history of one mint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub mint: Address,
    pub creation_time: Timestamp,
    pub meta: TokenMeta,
    pub transactions: Vec<TransactionRecord>,
    pub defi_activities: Vec<DefiActivity>,
    pub transfers: Vec<TransferEvent>,
}

impl TokenRecord {
    /// Sorts every event list by timestamp (stable) and checks the record's
    /// invariants.
    pub fn new(
        mint: impl Into<Address>,
        meta: TokenMeta,
        creation_time: Timestamp,
        mut transactions: Vec<TransactionRecord>,
        mut defi_activities: Vec<DefiActivity>,
        mut transfers: Vec<TransferEvent>,
    ) -> Result<Self, ModelError> {
        transactions.sort_by_key(|t| t.timestamp);
        defi_activities.sort_by_key(|a| a.timestamp);
        transfers.sort_by_key(|t| t.timestamp);
        let record = TokenRecord {
            mint: mint.into(),
            creation_time,
            meta,
            transactions,
            defi_activities,
            transfers,
        };
        record.validate()?;
        Ok(record)
    }

    /// Re-establishes ordering on a record built field by field (e.g. by
    /// deserialization) and validates it.
    pub fn normalized(self) -> Result<Self, ModelError> {
        let TokenRecord {
            mint,
            creation_time,
            meta,
            transactions,
            defi_activities,
            transfers,
        } = self;
        TokenRecord::new(mint, meta, creation_time, transactions, defi_activities, transfers)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.meta.validate()?;
        let before = |what, timestamp| ModelError::BeforeCreation {
            what,
            timestamp,
            creation_time: self.creation_time,
        };
        let mut seen = HashSet::with_capacity(self.transactions.len());
        for tx in &self.transactions {
            if tx.timestamp < self.creation_time {
                return Err(before("transaction", tx.timestamp));
            }
            if !seen.insert(tx.signature.as_str()) {
                return Err(ModelError::DuplicateSignature(tx.signature.clone()));
            }
            if let Some(ix) = tx.instructions.iter().find(|ix| ix.name.trim().is_empty()) {
                return Err(ModelError::InvalidInstruction {
                    signature: tx.signature.clone(),
                    reason: format!("empty instruction name (program {})", ix.program),
                });
            }
        }
        for a in &self.defi_activities {
            if a.timestamp < self.creation_time {
                return Err(before("defi activity", a.timestamp));
            }
            let bad_sign = match a.kind {
                DefiKind::AddLiquidity => a.quote_amount.is_positive(),
                DefiKind::RemoveLiquidity => a.quote_amount.is_negative(),
                DefiKind::Swap => false,
            };
            if bad_sign {
                return Err(ModelError::InvalidActivity {
                    signature: a.signature.clone(),
                    reason: format!("{:?} with quote_amount {}", a.kind, a.quote_amount),
                });
            }
        }
        for t in &self.transfers {
            if t.timestamp < self.creation_time {
                return Err(before("transfer", t.timestamp));
            }
            if t.amount == 0 {
                return Err(ModelError::InvalidTransfer {
                    signature: t.signature.clone(),
                    reason: "zero amount".into(),
                });
            }
            if t.from == t.to {
                return Err(ModelError::InvalidTransfer {
                    signature: t.signature.clone(),
                    reason: "self transfer".into(),
                });
            }
        }
        Ok(())
    }

    /// Timestamp of the newest event of any kind, or creation time.
    pub fn last_event_time(&self) -> Timestamp {
        let tx = self.transactions.last().map(|t| t.timestamp);
        let defi = self.defi_activities.last().map(|a| a.timestamp);
        let tr = self.transfers.last().map(|t| t.timestamp);
        [tx, defi, tr]
            .into_iter()
            .flatten()
            .max()
            .unwrap_or(self.creation_time)
            .max(self.creation_time)
    }

    /// Whether `sig` names any transaction, activity or transfer here.
    pub fn knows_signature(&self, sig: &str) -> bool {
        self.transactions.iter().any(|t| t.signature == sig)
            || self.defi_activities.iter().any(|a| a.signature == sig)
            || self.transfers.iter().any(|t| t.signature == sig)
    }
}

/// Thresholds and windows for the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Transactions per hour below which a token counts as inactive.
    pub tau_active: f64,
    /// Minimum relative holder decline for the pump-and-dump rule.
    pub tau_down: f64,
    pub detection_window_hours: f64,
    pub post_remove_window_hours: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            tau_active: 5.0,
            tau_down: 0.73,
            detection_window_hours: 24.0,
            post_remove_window_hours: 24.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::InvalidParams(m));
        if !(self.tau_active.is_finite() && self.tau_active > 0.0) {
            return fail(format!("tau_active must be > 0, got {}", self.tau_active));
        }
        if !(self.tau_down > 0.0 && self.tau_down <= 1.0) {
            return fail(format!("tau_down must be in (0, 1], got {}", self.tau_down));
        }
        for (name, v) in [
            ("detection_window_hours", self.detection_window_hours),
            ("post_remove_window_hours", self.post_remove_window_hours),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be > 0, got {v}"));
            }
        }
        Ok(())
    }

    pub fn detection_window_secs(&self) -> i64 {
        hours_to_secs(self.detection_window_hours)
    }

    pub fn post_remove_window_secs(&self) -> i64 {
        hours_to_secs(self.post_remove_window_hours)
    }
}

pub(crate) fn hours_to_secs(h: f64) -> i64 {
    (h * SECONDS_PER_HOUR as f64).round() as i64
}

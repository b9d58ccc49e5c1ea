use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::model::{DetectorParams, TokenRecord, TransactionRecord, Timestamp, SECONDS_PER_HOUR};

/// Number of most recent signatures the activity filter looks at.
pub const PREFILTER_SIGNATURE_LIMIT: usize = 1_000;

/// Transactions per hour with timestamps in `[t0, t1)`.
pub fn tx_rate(
    transactions: &[TransactionRecord],
    t0: Timestamp,
    t1: Timestamp,
) -> Result<f64, DetectError> {
    if t1 <= t0 {
        return Err(DetectError::InvalidWindow { start: t0, end: t1 });
    }
    let n = transactions
        .iter()
        .filter(|t| t.timestamp >= t0 && t.timestamp < t1)
        .count();
    Ok(n as f64 / ((t1 - t0) as f64 / SECONDS_PER_HOUR as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Prefilter {
    ActiveToken { rate_24h: f64 },
    Candidate { rate_24h: f64 },
}

impl Prefilter {
    pub fn rate(&self) -> f64 {
        match *self {
            Prefilter::ActiveToken { rate_24h } | Prefilter::Candidate { rate_24h } => rate_24h,
        }
    }

    pub fn is_candidate(&self) -> bool {
        matches!(self, Prefilter::Candidate { .. })
    }
}

/// Activity screen over the latest [`PREFILTER_SIGNATURE_LIMIT`]
/// transactions. The window is the 24 hours ending at (and including) the
/// newest transaction.
pub fn prefilter(record: &TokenRecord, params: &DetectorParams) -> Prefilter {
    let txs = &record.transactions;
    let Some(newest) = txs.last() else {
        return Prefilter::Candidate { rate_24h: 0.0 };
    };
    let recent = &txs[txs.len().saturating_sub(PREFILTER_SIGNATURE_LIMIT)..];
    let t1 = newest.timestamp + 1;
    let t0 = t1 - 24 * SECONDS_PER_HOUR;
    let rate = tx_rate(recent, t0, t1).expect("fixed 24h window");
    if rate < params.tau_active {
        Prefilter::Candidate { rate_24h: rate }
    } else {
        Prefilter::ActiveToken { rate_24h: rate }
    }
}

//! Per-token behavioral statistics and dataset summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{build_holder_series, primary_pool, DetectError, Verdict};
use crate::model::{DefiKind, TokenRecord, SECONDS_PER_DAY, SECONDS_PER_HOUR};
use crate::stats::Describe;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("holder replay failed: {0}")]
    Replay(#[from] DetectError),
    #[error("dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub lifespan_days: f64,
    pub holders: u64,
    /// Percent growth of the pool's quote balance from the first deposit to
    /// its peak.
    pub liq_growth_ratio: f64,
    pub defi_txs: u64,
    /// Percent of DeFi activities within 24 h of creation.
    pub day1_defi_ratio: f64,
    pub tx_rate_hr: f64,
    /// Set when the token never had a liquidity deposit; `liq_growth_ratio`
    /// is then reported as 0.
    pub no_liquidity: bool,
}

pub const COLUMNS: [&str; 6] = [
    "lifespan_days",
    "holders",
    "liq_growth_ratio",
    "defi_txs",
    "day1_defi_ratio",
    "tx_rate_hr",
];

impl BehaviorStats {
    pub fn columns(&self) -> [f64; 6] {
        [
            self.lifespan_days,
            self.holders as f64,
            self.liq_growth_ratio,
            self.defi_txs as f64,
            self.day1_defi_ratio,
            self.tx_rate_hr,
        ]
    }
}

/// Peak-vs-initial growth of the primary pool's quote balance, in percent.
/// `None` when there is no liquidity deposit.
fn liquidity_growth(record: &TokenRecord) -> Option<f64> {
    let pool = primary_pool(record)?;
    let mut acts = record.defi_activities.iter().filter(|a| a.pool == pool);
    let first = acts.by_ref().find(|a| a.kind == DefiKind::AddLiquidity)?;
    let initial = first.quote_amount.abs();
    if initial.is_zero() {
        return None;
    }
    let mut balance = initial;
    let mut peak = initial;
    for a in acts.filter(|a| a.quote_asset == first.quote_asset) {
        match a.kind {
            DefiKind::AddLiquidity => balance += a.quote_amount.abs(),
            // actor-centric amounts: what the actor gains, the pool loses
            DefiKind::RemoveLiquidity | DefiKind::Swap => balance -= a.quote_amount,
        }
        peak = peak.max(balance);
    }
    Some((peak - initial).to_f64() / initial.to_f64() * 100.0)
}

pub fn token_behavior_stats(record: &TokenRecord) -> Result<BehaviorStats, FeatureError> {
    let series = build_holder_series(record)?;
    let lifespan_secs = record.last_event_time() - record.creation_time;
    let growth = liquidity_growth(record);
    let defi_txs = record.defi_activities.len() as u64;
    let day1 = record
        .defi_activities
        .iter()
        .filter(|a| a.timestamp < record.creation_time + SECONDS_PER_DAY)
        .count();
    let day1_defi_ratio = if defi_txs == 0 {
        0.0
    } else {
        day1 as f64 / defi_txs as f64 * 100.0
    };
    // a token whose whole life fits in one second is rated over one second
    let hours = lifespan_secs.max(1) as f64 / SECONDS_PER_HOUR as f64;
    Ok(BehaviorStats {
        lifespan_days: lifespan_secs as f64 / SECONDS_PER_DAY as f64,
        holders: series.samples.last().map_or(0, |s| s.holders),
        liq_growth_ratio: growth.unwrap_or(0.0).max(0.0),
        defi_txs,
        day1_defi_ratio,
        tx_rate_hr: record.transactions.len() as f64 / hours,
        no_liquidity: growth.is_none(),
    })
}

/// `{mean, p25, median, p75}` (plus min/max) for each of the six columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub count: usize,
    pub columns: Vec<(String, Describe)>,
}

pub fn dataset_summary(stats: &[BehaviorStats]) -> Result<DatasetSummary, FeatureError> {
    if stats.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let columns = COLUMNS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<f64> = stats.iter().map(|s| s.columns()[i]).collect();
            (name.to_string(), Describe::of(&values).expect("non-empty"))
        })
        .collect();
    Ok(DatasetSummary {
        count: stats.len(),
        columns,
    })
}

type Stat = fn(&Describe) -> f64;

/// CSV with one row per (statistic, type) pair, six value columns.
pub fn summary_csv(groups: &[(&str, &DatasetSummary)]) -> String {
    let mut out = format!("statistic,type,{}\n", COLUMNS.join(","));
    let pick: [(&str, Stat); 4] = [
        ("mean", |d| d.mean),
        ("p25", |d| d.p25),
        ("median", |d| d.median),
        ("p75", |d| d.p75),
    ];
    for (stat, f) in pick {
        for (label, summary) in groups {
            let vals: Vec<String> = summary
                .columns
                .iter()
                .map(|(_, d)| format!("{:.4}", f(d)))
                .collect();
            out.push_str(&format!("{stat},{label},{}\n", vals.join(",")));
        }
    }
    out
}

/// Days from creation to the first piece of fraud evidence. `None` unless the
/// verdict is a rug pull with a trigger interval.
pub fn fraud_lifecycle_days(record: &TokenRecord, verdict: &Verdict) -> Option<f64> {
    verdict.outcome.kind()?;
    let (t, _) = verdict.evidence.trigger_interval?;
    Some((t - record.creation_time).max(0) as f64 / SECONDS_PER_DAY as f64)
}

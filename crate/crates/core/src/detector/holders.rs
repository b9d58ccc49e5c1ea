use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::rules::RULE_PUMP_DUMP;
use super::{DetectError, Evidence};
use crate::fixed::Fixed;
use crate::model::{Address, DefiKind, DetectorParams, TokenRecord, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolderSample {
    pub timestamp: Timestamp,
    pub holders: u64,
    pub pool_balance: u128,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolderSeries {
    pub samples: Vec<HolderSample>,
}

impl HolderSeries {
    pub fn new(samples: Vec<HolderSample>) -> Self {
        HolderSeries { samples }
    }

    /// Samples with `from <= timestamp <= to`.
    pub fn window(&self, from: Timestamp, to: Timestamp) -> HolderSeries {
        HolderSeries {
            samples: self
                .samples
                .iter()
                .filter(|s| s.timestamp >= from && s.timestamp <= to)
                .copied()
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
}

/// Pool whose token balance stands in for the liquidity pool balance:
/// the pool with the largest cumulative quote deposit, earliest first add on
/// ties. Falls back to the first pool seen in any activity.
pub fn primary_pool(record: &TokenRecord) -> Option<Address> {
    let mut deposits: BTreeMap<&str, (Fixed, usize)> = BTreeMap::new();
    for (i, a) in record.defi_activities.iter().enumerate() {
        if a.kind == DefiKind::AddLiquidity {
            let e = deposits.entry(a.pool.as_str()).or_insert((Fixed::ZERO, i));
            e.0 += a.quote_amount.abs();
        }
    }
    deposits
        .into_iter()
        .max_by(|(_, (va, ia)), (_, (vb, ib))| va.cmp(vb).then(ib.cmp(ia)))
        .map(|(p, _)| p.to_string())
        .or_else(|| record.defi_activities.first().map(|a| a.pool.clone()))
}

/// Replays transfers to produce holder counts and the primary pool's token
/// balance over time.
///
/// The first sample sits at `creation_time` and reflects every transfer
/// stamped at that second. After that, one sample per later timestamp whose
/// state (holders, pool balance) differs from the previous sample. Transfers
/// from the mint address are issuance; transfers to it are burns.
pub fn build_holder_series(record: &TokenRecord) -> Result<HolderSeries, DetectError> {
    let pool = primary_pool(record);
    let mint = record.mint.as_str();
    let mut balances: HashMap<&str, u128> = HashMap::new();
    let mut holders: u64 = 0;
    let mut samples: Vec<HolderSample> = Vec::new();

    let transfers = &record.transfers;
    let mut i = 0;
    let mut ts = record.creation_time;
    loop {
        while let Some(t) = transfers.get(i).filter(|t| t.timestamp <= ts) {
            if t.from != mint {
                let bal = balances.entry(t.from.as_str()).or_insert(0);
                if *bal < t.amount {
                    return Err(DetectError::NegativeBalance {
                        signature: t.signature.clone(),
                        address: t.from.clone(),
                        balance: *bal,
                        amount: t.amount,
                    });
                }
                *bal -= t.amount;
                if *bal == 0 {
                    holders -= 1;
                }
            }
            if t.to != mint {
                let bal = balances.entry(t.to.as_str()).or_insert(0);
                if *bal == 0 {
                    holders += 1;
                }
                *bal += t.amount;
            }
            i += 1;
        }
        let pool_balance = pool
            .as_deref()
            .and_then(|p| balances.get(p).copied())
            .unwrap_or(0);
        let changed = samples
            .last()
            .is_none_or(|p| p.holders != holders || p.pool_balance != pool_balance);
        if changed {
            samples.push(HolderSample {
                timestamp: ts,
                holders,
                pool_balance,
            });
        }
        match transfers.get(i) {
            Some(t) => ts = t.timestamp,
            None => break,
        }
    }
    Ok(HolderSeries { samples })
}

/// Pump-and-dump test over a series already cut to the detection window:
/// `start` is its first sample and `end` its last.
///
/// Flags when some suffix `[t, end]` stays strictly below the start in both
/// holders and pool balance, and the holder decline from start to end is at
/// least `tau_down`. The evidence carries the earliest such `t`.
pub fn detect_pump_and_dump(
    series: &HolderSeries,
    params: &DetectorParams,
) -> Result<Option<Evidence>, DetectError> {
    let (start, end) = match (series.samples.first(), series.samples.last()) {
        (Some(s), Some(e)) => (*s, *e),
        _ => return Err(DetectError::EmptySeries),
    };
    if start.holders == 0 {
        return Err(DetectError::ZeroHolders);
    }
    let below = |x: &HolderSample| x.holders < start.holders && x.pool_balance < start.pool_balance;
    let suffix = series.samples.iter().rev().take_while(|x| below(x)).count();
    if suffix == 0 {
        return Ok(None);
    }
    let decline = decline_fraction(start.holders, end.holders);
    if decline < params.tau_down {
        return Ok(None);
    }
    let t = series.samples[series.samples.len() - suffix];
    let mut ev = Evidence::new(RULE_PUMP_DUMP);
    ev.trigger_interval = Some((t.timestamp, end.timestamp));
    let m = &mut ev.measured_values;
    m.insert("decline_fraction".into(), decline);
    m.insert("holders_start".into(), start.holders as f64);
    m.insert("holders_end".into(), end.holders as f64);
    m.insert("pool_balance_start".into(), start.pool_balance as f64);
    m.insert("pool_balance_end".into(), end.pool_balance as f64);
    Ok(Some(ev))
}

pub fn decline_fraction(start: u64, end: u64) -> f64 {
    (start as f64 - end as f64) / start as f64
}

/// Series restricted to the detection window after creation.
pub fn detection_window(
    series: &HolderSeries,
    creation_time: Timestamp,
    params: &DetectorParams,
) -> HolderSeries {
    series.window(creation_time, creation_time + params.detection_window_secs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn series(points: &[(u64, u128)]) -> HolderSeries {
        HolderSeries::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(holders, pool_balance))| HolderSample {
                    timestamp: i as i64 * 60,
                    holders,
                    pool_balance,
                })
                .collect(),
        )
    }

    fn transfer(sig: &str, from: &str, to: &str, amount: u128, ts: i64) -> TransferEvent {
        TransferEvent {
            signature: sig.into(),
            from: from.into(),
            to: to.into(),
            amount,
            timestamp: ts,
        }
    }

    fn record(transfers: Vec<TransferEvent>) -> TokenRecord {
        let meta = TokenMeta {
            name: "T".into(),
            symbol: "T".into(),
            freeze_authority: None,
            mint_authority: None,
            creator: "A".into(),
            decimals: 0,
            links: vec![],
        };
        TokenRecord::new("MINT", meta, 0, vec![], vec![], transfers).unwrap()
    }

    fn holders(s: &HolderSeries) -> Vec<u64> {
        s.samples.iter().map(|x| x.holders).collect()
    }

    #[test]
    fn mint_then_split() {
        let r = record(vec![
            transfer("m", "MINT", "A", 100, 0),
            transfer("t", "A", "B", 40, 10),
        ]);
        assert_eq!(holders(&build_holder_series(&r).unwrap()), vec![1, 2]);
    }

    #[test]
    fn round_trip_returns_to_one_holder() {
        let r = record(vec![
            transfer("m", "MINT", "A", 100, 0),
            transfer("t1", "A", "B", 40, 10),
            transfer("t2", "B", "A", 40, 20),
        ]);
        assert_eq!(holders(&build_holder_series(&r).unwrap()), vec![1, 2, 1]);
    }

    #[test]
    fn initial_sample_at_creation_even_without_events() {
        let r = record(vec![transfer("m", "MINT", "A", 100, 30)]);
        let s = build_holder_series(&r).unwrap();
        assert_eq!(s.samples[0], HolderSample { timestamp: 0, holders: 0, pool_balance: 0 });
        assert_eq!(s.samples[1].timestamp, 30);

        let empty = build_holder_series(&record(vec![])).unwrap();
        assert_eq!(empty.len(), 1);
    }

    #[test]
    fn burns_and_overdraft() {
        let r = record(vec![
            transfer("m", "MINT", "A", 100, 0),
            transfer("b", "A", "MINT", 100, 5),
        ]);
        assert_eq!(holders(&build_holder_series(&r).unwrap()), vec![1, 0]);

        let r = record(vec![
            transfer("m", "MINT", "A", 10, 0),
            transfer("x", "A", "B", 11, 5),
        ]);
        match build_holder_series(&r) {
            Err(DetectError::NegativeBalance { signature, .. }) => assert_eq!(signature, "x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crash_flagged_at_first_sample_below_start() {
        let s = series(&[(100, 1_000), (90, 900), (50, 800), (20, 700)]);
        let ev = detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .unwrap();
        assert_eq!(ev.trigger_interval, Some((60, 180)));
        assert!((ev.measured_values["decline_fraction"] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mild_decline_not_flagged() {
        let s = series(&[(100, 1_000), (90, 900), (80, 800), (60, 700)]);
        assert!(detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn rebound_pushes_trigger_later() {
        let s = series(&[(100, 1_000), (90, 900), (120, 800), (20, 700)]);
        let ev = detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .unwrap();
        assert_eq!(ev.trigger_interval, Some((180, 180)));

        // balance rebound above start at the end kills the suffix
        let s = series(&[(100, 1_000), (20, 900), (10, 1_100)]);
        assert!(detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn zero_start_holders_not_applicable() {
        let s = series(&[(0, 0), (5, 10)]);
        assert!(matches!(
            detect_pump_and_dump(&s, &DetectorParams::default()),
            Err(DetectError::ZeroHolders)
        ));
        assert!(matches!(
            detect_pump_and_dump(&HolderSeries::default(), &DetectorParams::default()),
            Err(DetectError::EmptySeries)
        ));
    }

    #[test]
    fn exact_threshold_is_inclusive() {
        let s = series(&[(100, 1_000), (27, 900)]);
        assert!(detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .is_some());
        let s = series(&[(100, 1_000), (28, 900)]);
        assert!(detect_pump_and_dump(&s, &DetectorParams::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn primary_pool_prefers_largest_deposit() {
        let add = |sig: &str, pool: &str, q: &str, ts| DefiActivity {
            signature: sig.into(),
            kind: DefiKind::AddLiquidity,
            actor: "A".into(),
            timestamp: ts,
            base_amount: -1,
            quote_asset: QuoteAsset::Sol,
            quote_amount: q.parse().unwrap(),
            pool: pool.into(),
        };
        let meta = record(vec![]).meta;
        let r = TokenRecord::new(
            "MINT",
            meta.clone(),
            0,
            vec![],
            vec![add("1", "P1", "-5", 1), add("2", "P2", "-9", 2), add("3", "P1", "-3", 3)],
            vec![],
        )
        .unwrap();
        assert_eq!(primary_pool(&r).as_deref(), Some("P2"));
        let r = TokenRecord::new(
            "MINT",
            meta,
            0,
            vec![],
            vec![add("1", "P1", "-5", 1), add("2", "P2", "-5", 2)],
            vec![],
        )
        .unwrap();
        assert_eq!(primary_pool(&r).as_deref(), Some("P1"));
    }
}

use std::collections::{BTreeMap, BTreeSet};

use super::{DetectError, Evidence};
use crate::fixed::Fixed;
use crate::model::{Address, DefiKind, DetectorParams, QuoteAsset, TokenRecord};

pub const FREEZE_INSTRUCTION: &str = "FreezeAccount";
pub const FROZEN_LOG_MARKER: &str = "Account is frozen";

pub const RULE_FREEZE: &str = "freeze_authority_abuse";
pub const RULE_LIQUIDITY: &str = "liquidity_manipulation";
pub const RULE_PUMP_DUMP: &str = "pump_and_dump";

/// Freeze authority retained and at least one transaction that both runs
/// `FreezeAccount` and logs the frozen account.
pub fn detect_freeze_abuse(record: &TokenRecord) -> Option<Evidence> {
    let authority = record.meta.freeze_authority.as_deref()?;
    let hits: Vec<_> = record
        .transactions
        .iter()
        .filter(|tx| {
            tx.instructions.iter().any(|ix| ix.name == FREEZE_INSTRUCTION)
                && tx.log_lines.iter().any(|l| l.contains(FROZEN_LOG_MARKER))
        })
        .collect();
    let (first, last) = (hits.first()?, hits.last()?);
    let mut ev = Evidence::new(RULE_FREEZE);
    ev.trigger_signatures = hits.iter().map(|t| t.signature.clone()).collect();
    ev.trigger_interval = Some((first.timestamp, last.timestamp));
    ev.measured_values
        .insert("freeze_events".into(), hits.len() as f64);
    ev.notes.insert("freeze_authority".into(), authority.to_string());
    Some(ev)
}

/// The mint creator plus whoever made the earliest liquidity deposit.
pub fn creator_addresses(record: &TokenRecord) -> BTreeSet<Address> {
    let mut out = BTreeSet::new();
    out.insert(record.meta.creator.clone());
    if let Some(first_add) = record
        .defi_activities
        .iter()
        .find(|a| a.kind == DefiKind::AddLiquidity)
    {
        out.insert(first_add.actor.clone());
    }
    out
}

/// Net quote flow from liquidity operations of one address, per asset.
/// Deposits count negative and withdrawals positive; swaps are ignored.
pub fn liquidity_flows(record: &TokenRecord, address: &str) -> BTreeMap<QuoteAsset, Fixed> {
    let mut out: BTreeMap<QuoteAsset, Fixed> = BTreeMap::new();
    for a in &record.defi_activities {
        if a.actor != address {
            continue;
        }
        let signed = match a.kind {
            DefiKind::AddLiquidity => -a.quote_amount.abs(),
            DefiKind::RemoveLiquidity => a.quote_amount,
            DefiKind::Swap => continue,
        };
        *out.entry(a.quote_asset.clone()).or_default() += signed;
    }
    out
}

/// Net liquidity profit of an address in a single quote asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiqProfit {
    /// `None` when the address never touched liquidity.
    pub asset: Option<QuoteAsset>,
    pub net: Fixed,
}

/// Withdrawals minus deposits for `address`. Fails with
/// [`DetectError::MixedQuoteAssets`] (carrying the per-asset breakdown) when
/// the address provided liquidity in more than one quote asset.
pub fn liq_profit(record: &TokenRecord, address: &str) -> Result<LiqProfit, DetectError> {
    let flows = liquidity_flows(record, address);
    match flows.len() {
        0 => Ok(LiqProfit {
            asset: None,
            net: Fixed::ZERO,
        }),
        1 => {
            let (asset, net) = flows.into_iter().next().unwrap();
            Ok(LiqProfit {
                asset: Some(asset),
                net,
            })
        }
        _ => Err(DetectError::MixedQuoteAssets {
            address: address.to_string(),
            breakdown: flows,
        }),
    }
}

/// Some creator address withdrew liquidity at a profit and the token went
/// quiet (rate below `tau_active`) in the window after its last withdrawal.
pub fn detect_liquidity_manipulation(
    record: &TokenRecord,
    params: &DetectorParams,
) -> Option<Evidence> {
    for addr in creator_addresses(record) {
        let flows = liquidity_flows(record, &addr);
        let Some((asset, profit)) = flows
            .iter()
            .filter(|(_, v)| v.is_positive())
            .max_by_key(|(_, v)| **v)
        else {
            continue;
        };
        let removals: Vec<_> = record
            .defi_activities
            .iter()
            .filter(|a| a.actor == addr && a.kind == DefiKind::RemoveLiquidity)
            .collect();
        let Some(last) = removals.last() else {
            continue;
        };
        let t0 = last.timestamp + 1;
        let t1 = t0 + params.post_remove_window_secs();
        let rate = super::tx_rate(&record.transactions, t0, t1)
            .expect("post-remove window is validated positive");
        if rate >= params.tau_active {
            continue;
        }
        let mut ev = Evidence::new(RULE_LIQUIDITY);
        ev.trigger_signatures = removals.iter().map(|a| a.signature.clone()).collect();
        ev.trigger_interval = Some((removals[0].timestamp, last.timestamp));
        ev.measured_values
            .insert("liq_profit".into(), profit.to_f64());
        ev.measured_values
            .insert("rate_after_remove".into(), rate);
        ev.notes.insert("profit_address".into(), addr.clone());
        ev.notes.insert("profit_asset".into(), asset.to_string());
        return Some(ev);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn meta(freeze: Option<&str>) -> TokenMeta {
        TokenMeta {
            name: "T".into(),
            symbol: "T".into(),
            freeze_authority: freeze.map(Into::into),
            mint_authority: None,
            creator: "X".into(),
            decimals: 6,
            links: vec![],
        }
    }

    fn tx(sig: &str, ts: i64, ix: &[&str], logs: &[&str]) -> TransactionRecord {
        TransactionRecord {
            signature: sig.into(),
            timestamp: ts,
            instructions: ix
                .iter()
                .map(|n| InstructionRecord {
                    program: "Tokenkeg".into(),
                    name: n.to_string(),
                    accounts: vec![],
                })
                .collect(),
            log_lines: logs.iter().map(|s| s.to_string()).collect(),
            token_balance_deltas: vec![],
        }
    }

    fn liq(sig: &str, kind: DefiKind, actor: &str, ts: i64, quote: &str) -> DefiActivity {
        DefiActivity {
            signature: sig.into(),
            kind,
            actor: actor.into(),
            timestamp: ts,
            base_amount: 0,
            quote_asset: QuoteAsset::Sol,
            quote_amount: quote.parse().unwrap(),
            pool: "POOL".into(),
        }
    }

    const FROZEN_LOG: &str = "Program log: Error: Account is frozen";

    #[test]
    fn freeze_rule_needs_all_three_conditions() {
        let full = vec![
            tx("a", 10, &["Transfer"], &[]),
            tx("f", 20, &["FreezeAccount"], &[FROZEN_LOG]),
        ];
        let r = TokenRecord::new("M", meta(Some("X")), 0, full.clone(), vec![], vec![]).unwrap();
        let ev = detect_freeze_abuse(&r).unwrap();
        assert_eq!(ev.trigger_signatures, vec!["f".to_string()]);

        let r = TokenRecord::new("M", meta(None), 0, full, vec![], vec![]).unwrap();
        assert!(detect_freeze_abuse(&r).is_none());

        let no_ix = vec![tx("f", 20, &["Transfer"], &[FROZEN_LOG])];
        let r = TokenRecord::new("M", meta(Some("X")), 0, no_ix, vec![], vec![]).unwrap();
        assert!(detect_freeze_abuse(&r).is_none());

        let no_log = vec![tx("f", 20, &["FreezeAccount"], &["Program log: ok"])];
        let r = TokenRecord::new("M", meta(Some("X")), 0, no_log, vec![], vec![]).unwrap();
        assert!(detect_freeze_abuse(&r).is_none());
    }

    #[test]
    fn freeze_log_match_is_case_sensitive() {
        let txs = vec![tx("f", 20, &["FreezeAccount"], &["account is frozen"])];
        let r = TokenRecord::new("M", meta(Some("X")), 0, txs, vec![], vec![]).unwrap();
        assert!(detect_freeze_abuse(&r).is_none());
    }

    #[test]
    fn creator_set() {
        let r = TokenRecord::new(
            "M",
            meta(None),
            0,
            vec![],
            vec![
                liq("1", DefiKind::AddLiquidity, "Y", 5, "-10"),
                liq("2", DefiKind::AddLiquidity, "Z", 6, "-10"),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(
            creator_addresses(&r),
            BTreeSet::from(["X".to_string(), "Y".to_string()])
        );

        let r = TokenRecord::new("M", meta(None), 0, vec![], vec![], vec![]).unwrap();
        assert_eq!(creator_addresses(&r), BTreeSet::from(["X".to_string()]));

        let r = TokenRecord::new(
            "M",
            meta(None),
            0,
            vec![],
            vec![liq("1", DefiKind::AddLiquidity, "X", 5, "-10")],
            vec![],
        )
        .unwrap();
        assert_eq!(creator_addresses(&r), BTreeSet::from(["X".to_string()]));
    }

    #[test]
    fn liq_profit_arithmetic() {
        let acts = vec![
            liq("1", DefiKind::AddLiquidity, "X", 5, "-10"),
            liq("2", DefiKind::RemoveLiquidity, "X", 50, "25"),
        ];
        let r = TokenRecord::new("M", meta(None), 0, vec![], acts, vec![]).unwrap();
        let p = liq_profit(&r, "X").unwrap();
        assert_eq!(p.net, Fixed::from_int(15));
        assert_eq!(p.asset, Some(QuoteAsset::Sol));

        let acts = vec![liq("1", DefiKind::AddLiquidity, "X", 5, "-10")];
        let r = TokenRecord::new("M", meta(None), 0, vec![], acts, vec![]).unwrap();
        assert_eq!(liq_profit(&r, "X").unwrap().net, Fixed::from_int(-10));

        let r = TokenRecord::new("M", meta(None), 0, vec![], vec![], vec![]).unwrap();
        assert_eq!(
            liq_profit(&r, "X").unwrap(),
            LiqProfit {
                asset: None,
                net: Fixed::ZERO
            }
        );
    }

    #[test]
    fn liq_profit_mixed_assets() {
        let mut usdc = liq("2", DefiKind::RemoveLiquidity, "X", 50, "25");
        usdc.quote_asset = QuoteAsset::Usdc;
        let acts = vec![liq("1", DefiKind::AddLiquidity, "X", 5, "-10"), usdc];
        let r = TokenRecord::new("M", meta(None), 0, vec![], acts, vec![]).unwrap();
        match liq_profit(&r, "X") {
            Err(DetectError::MixedQuoteAssets { breakdown, .. }) => {
                assert_eq!(breakdown[&QuoteAsset::Sol], Fixed::from_int(-10));
                assert_eq!(breakdown[&QuoteAsset::Usdc], Fixed::from_int(25));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn lm_record(after: Vec<TransactionRecord>, remover: &str) -> TokenRecord {
        let acts = vec![
            liq("add", DefiKind::AddLiquidity, "X", 100, "-10"),
            liq("rm", DefiKind::RemoveLiquidity, remover, 3_600, "25"),
        ];
        let mut txs = vec![tx("add", 100, &["AddLiquidity"], &[]), tx("rm", 3_600, &["RemoveLiquidity"], &[])];
        txs.extend(after);
        TokenRecord::new("M", meta(None), 0, txs, acts, vec![]).unwrap()
    }

    #[test]
    fn liquidity_manipulation_flags_quiet_profitable_exit() {
        let r = lm_record(vec![], "X");
        let ev = detect_liquidity_manipulation(&r, &DetectorParams::default()).unwrap();
        assert_eq!(ev.trigger_signatures, vec!["rm".to_string()]);
        assert_eq!(ev.measured_values["liq_profit"], 15.0);
        assert_eq!(ev.measured_values["rate_after_remove"], 0.0);
    }

    #[test]
    fn liquidity_manipulation_ignores_active_aftermath() {
        // 300 tx/hr for a full day after the removal
        let after: Vec<_> = (0..7_200)
            .map(|i| tx(&format!("t{i}"), 3_601 + i * 12, &["Swap"], &[]))
            .collect();
        let r = lm_record(after, "X");
        assert!(detect_liquidity_manipulation(&r, &DetectorParams::default()).is_none());
    }

    #[test]
    fn liquidity_manipulation_scoped_to_creators() {
        // whale W is neither creator nor first liquidity provider
        let mut r = lm_record(vec![], "W");
        r.defi_activities
            .push(liq("wadd", DefiKind::AddLiquidity, "W", 200, "-1"));
        let r = r.normalized().unwrap();
        assert!(detect_liquidity_manipulation(&r, &DetectorParams::default()).is_none());
    }
}

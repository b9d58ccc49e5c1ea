//! Attacker cash-out tracing and loss aggregation.
//!
//! Only liquidity deposits and withdrawals by creator addresses are traced.
//! Swaps and any flow that cannot be tied to a creator-side liquidity
//! operation are left out, so totals are lower bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::creator_addresses;
use crate::fixed::{Fixed, ParseFixedError};
use crate::model::{Address, DefiKind, QuoteAsset, Signature, TokenRecord};

#[derive(Debug, Error)]
pub enum ProfitError {
    #[error("no USD price for asset {0}")]
    MissingPrice(QuoteAsset),
    #[error("price table line {line}: {reason}")]
    PriceTable { line: usize, reason: String },
    #[error("invalid price: {0}")]
    Price(#[from] ParseFixedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitEvent {
    pub signature: Signature,
    /// Signed quote flow to the address.
    pub amount: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitRecord {
    pub address: Address,
    pub mint: Address,
    pub asset: QuoteAsset,
    pub net_profit: Fixed,
    pub events: Vec<ProfitEvent>,
}

/// One record per (creator address, quote asset) with liquidity activity.
pub fn trace_profits(record: &TokenRecord) -> Vec<ProfitRecord> {
    let mut out = Vec::new();
    for addr in creator_addresses(record) {
        let mut per_asset: BTreeMap<QuoteAsset, Vec<ProfitEvent>> = BTreeMap::new();
        for a in record.defi_activities.iter().filter(|a| a.actor == addr) {
            let amount = match a.kind {
                DefiKind::AddLiquidity => -a.quote_amount.abs(),
                DefiKind::RemoveLiquidity => a.quote_amount,
                DefiKind::Swap => continue,
            };
            per_asset
                .entry(a.quote_asset.clone())
                .or_default()
                .push(ProfitEvent {
                    signature: a.signature.clone(),
                    amount,
                });
        }
        for (asset, events) in per_asset {
            out.push(ProfitRecord {
                address: addr.clone(),
                mint: record.mint.clone(),
                asset,
                net_profit: events.iter().map(|e| e.amount).sum(),
                events,
            });
        }
    }
    out
}

/// Static `asset -> USD` prices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceTable(pub BTreeMap<QuoteAsset, Fixed>);

impl PriceTable {
    pub fn get(&self, asset: &QuoteAsset) -> Result<Fixed, ProfitError> {
        self.0
            .get(asset)
            .copied()
            .ok_or_else(|| ProfitError::MissingPrice(asset.clone()))
    }

    pub fn insert(&mut self, asset: QuoteAsset, usd: Fixed) {
        self.0.insert(asset, usd);
    }

    /// Parses `asset,usd_price` lines. Blank lines, `#` comments and an
    /// `asset,usd_price` header are skipped.
    pub fn parse(text: &str) -> Result<Self, ProfitError> {
        let mut table = PriceTable::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("asset,usd_price") {
                continue;
            }
            let (asset, price) = line.split_once(',').ok_or_else(|| ProfitError::PriceTable {
                line: i + 1,
                reason: "expected `asset,usd_price`".into(),
            })?;
            let price: Fixed = price.trim().parse()?;
            if price.is_negative() {
                return Err(ProfitError::PriceTable {
                    line: i + 1,
                    reason: "negative price".into(),
                });
            }
            table.insert(asset.parse().unwrap(), price);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ProfitError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetLoss {
    pub asset: QuoteAsset,
    pub profitable_address_count: usize,
    pub min: Fixed,
    pub max: Fixed,
    pub mean: Fixed,
    pub median: Fixed,
    pub total: Fixed,
    pub total_usd: Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossSummary {
    pub per_asset: Vec<AssetLoss>,
    /// Distinct addresses profitable in at least one asset.
    pub profitable_address_count: usize,
    pub total_usd: Fixed,
}

impl LossSummary {
    pub fn asset(&self, asset: &QuoteAsset) -> Option<&AssetLoss> {
        self.per_asset.iter().find(|a| &a.asset == asset)
    }
}

fn median_fixed(sorted: &[Fixed]) -> Fixed {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]).div_int(2)
    }
}

/// Per-asset statistics over addresses whose net profit (summed across
/// tokens) is positive. Assets are never netted against each other.
pub fn aggregate_losses(
    records: &[ProfitRecord],
    prices: &PriceTable,
) -> Result<LossSummary, ProfitError> {
    let mut by_asset: BTreeMap<&QuoteAsset, BTreeMap<&str, Fixed>> = BTreeMap::new();
    for r in records {
        *by_asset
            .entry(&r.asset)
            .or_default()
            .entry(r.address.as_str())
            .or_default() += r.net_profit;
    }
    let mut summary = LossSummary::default();
    let mut profitable: BTreeSet<&str> = BTreeSet::new();
    for (asset, nets) in by_asset {
        let price = prices.get(asset)?;
        let mut positive: Vec<(&str, Fixed)> =
            nets.into_iter().filter(|(_, v)| v.is_positive()).collect();
        if positive.is_empty() {
            continue;
        }
        profitable.extend(positive.iter().map(|(a, _)| *a));
        positive.sort_by_key(|(_, v)| *v);
        let values: Vec<Fixed> = positive.iter().map(|(_, v)| *v).collect();
        let total: Fixed = values.iter().sum();
        let total_usd = total * price;
        summary.total_usd += total_usd;
        summary.per_asset.push(AssetLoss {
            asset: asset.clone(),
            profitable_address_count: values.len(),
            min: values[0],
            max: values[values.len() - 1],
            mean: total.div_int(values.len() as i128),
            median: median_fixed(&values),
            total,
            total_usd,
        });
    }
    summary.profitable_address_count = profitable.len();
    Ok(summary)
}

/// Loss report in CSV, one row per asset plus a total row.
pub fn loss_csv(summary: &LossSummary) -> String {
    let mut out = String::from("asset,profitable_addresses,min,max,mean,median,total,total_usd\n");
    for a in &summary.per_asset {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.asset, a.profitable_address_count, a.min, a.max, a.mean, a.median, a.total, a.total_usd
        ));
    }
    out.push_str(&format!(
        "TOTAL,{},,,,,,{}\n",
        summary.profitable_address_count, summary.total_usd
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn meta() -> TokenMeta {
        TokenMeta {
            name: "T".into(),
            symbol: "T".into(),
            freeze_authority: None,
            mint_authority: None,
            creator: "C".into(),
            decimals: 6,
            links: vec![],
        }
    }

    fn act(sig: &str, kind: DefiKind, actor: &str, asset: QuoteAsset, quote: &str) -> DefiActivity {
        DefiActivity {
            signature: sig.into(),
            kind,
            actor: actor.into(),
            timestamp: 10,
            base_amount: 0,
            quote_asset: asset,
            quote_amount: quote.parse().unwrap(),
            pool: "P".into(),
        }
    }

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn prices() -> PriceTable {
        PriceTable::parse("asset,usd_price\nSOL,150\nUSDC,1\nUSDT,1\n").unwrap()
    }

    #[test]
    fn add_then_larger_remove() {
        let acts = vec![
            act("a", DefiKind::AddLiquidity, "C", QuoteAsset::Sol, "-10"),
            act("s", DefiKind::Swap, "C", QuoteAsset::Sol, "40"),
            act("r", DefiKind::RemoveLiquidity, "C", QuoteAsset::Sol, "25"),
        ];
        let r = TokenRecord::new("M", meta(), 0, vec![], acts, vec![]).unwrap();
        let p = trace_profits(&r);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].net_profit, fx("15"));
        assert_eq!(p[0].events.len(), 2);
        assert_eq!(p[0].net_profit, p[0].events.iter().map(|e| e.amount).sum());
    }

    #[test]
    fn deposit_only_is_not_profitable() {
        let acts = vec![act("a", DefiKind::AddLiquidity, "C", QuoteAsset::Usdc, "-10")];
        let r = TokenRecord::new("M", meta(), 0, vec![], acts, vec![]).unwrap();
        let p = trace_profits(&r);
        assert_eq!(p[0].net_profit, fx("-10"));
        let s = aggregate_losses(&p, &prices()).unwrap();
        assert_eq!(s.profitable_address_count, 0);
        assert!(s.per_asset.is_empty());
        assert_eq!(s.total_usd, Fixed::ZERO);
    }

    #[test]
    fn no_creator_activity() {
        let acts = vec![act("a", DefiKind::RemoveLiquidity, "W", QuoteAsset::Sol, "5")];
        let r = TokenRecord::new("M", meta(), 0, vec![], acts, vec![]).unwrap();
        assert!(trace_profits(&r).is_empty());
    }

    fn rec(addr: &str, mint: &str, asset: QuoteAsset, net: &str) -> ProfitRecord {
        ProfitRecord {
            address: addr.into(),
            mint: mint.into(),
            asset,
            net_profit: fx(net),
            events: vec![ProfitEvent {
                signature: format!("{addr}{mint}"),
                amount: fx(net),
            }],
        }
    }

    #[test]
    fn usd_total() {
        let rs = vec![
            rec("A", "M1", QuoteAsset::Sol, "15"),
            rec("B", "M2", QuoteAsset::Usdc, "100"),
        ];
        let s = aggregate_losses(&rs, &prices()).unwrap();
        assert_eq!(s.total_usd, fx("2350"));
        assert_eq!(s.profitable_address_count, 2);
    }

    #[test]
    fn per_asset_stats() {
        let rs = vec![
            rec("A", "M1", QuoteAsset::Sol, "1"),
            rec("B", "M2", QuoteAsset::Sol, "2"),
            rec("C", "M3", QuoteAsset::Sol, "4"),
            rec("D", "M4", QuoteAsset::Sol, "10"),
            rec("E", "M5", QuoteAsset::Sol, "-3"),
            // A loses on a second token: nets to 0.5
            rec("A", "M6", QuoteAsset::Sol, "-0.5"),
        ];
        let s = aggregate_losses(&rs, &prices()).unwrap();
        let sol = s.asset(&QuoteAsset::Sol).unwrap();
        assert_eq!(sol.profitable_address_count, 4);
        assert_eq!(sol.min, fx("0.5"));
        assert_eq!(sol.max, fx("10"));
        assert_eq!(sol.total, fx("16.5"));
        assert_eq!(sol.mean, fx("4.125"));
        assert_eq!(sol.median, fx("3"));
        assert_eq!(sol.total_usd, fx("2475"));
    }

    #[test]
    fn missing_price() {
        let rs = vec![rec("A", "M1", QuoteAsset::Other("BONK".into()), "1")];
        assert!(matches!(
            aggregate_losses(&rs, &prices()),
            Err(ProfitError::MissingPrice(_))
        ));
    }

    #[test]
    fn price_table_format() {
        let t = PriceTable::parse("# prices\nSOL, 150.25\n\nusdt,1\n").unwrap();
        assert_eq!(t.get(&QuoteAsset::Sol).unwrap(), fx("150.25"));
        assert_eq!(t.get(&QuoteAsset::Usdt).unwrap(), fx("1"));
        assert!(PriceTable::parse("SOL 150").is_err());
        assert!(PriceTable::parse("SOL,-1").is_err());
    }

    #[test]
    fn csv_has_total_row() {
        let rs = vec![rec("A", "M1", QuoteAsset::Sol, "15")];
        let csv = loss_csv(&aggregate_losses(&rs, &prices()).unwrap());
        assert!(csv.contains("SOL,1,15.000000000"));
        assert!(csv.ends_with("TOTAL,1,,,,,,2250.000000000\n"));
    }
}

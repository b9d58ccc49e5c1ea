use std::sync::Arc;

use serde_json::Value;

use super::http::HttpClient;
use super::rpc::RpcBackend;
use super::{Backend, IngestError, RateLimiter, Result, RetryPolicy, SignatureInfo};
use crate::fixed::Fixed;
use crate::model::{
    DefiActivity, DefiKind, Link, LinkKind, QuoteAsset, Timestamp, TokenMeta, TokenRecord, TransactionRecord,
    TransferEvent,
};

const WSOL_MINT: &str = "So11111111111111111111111111111111111111112";
const USDC_MINT: &str = "EPjFWdd5AufqSSqeM2qN1xzybapC8G4wEGGkZwyTDt1v";
const USDT_MINT: &str = "Es9vMFrzaCERmJfrF4H2FYD4KCoNkY11McCe8BenwNYB";

/// Endpoint paths relative to the explorer base URL. Each is called with
/// `address=<mint>`; list endpoints also get `page` and `page_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorerPaths {
    pub meta: String,
    pub defi_activities: String,
    pub transfers: String,
    pub page_size: usize,
}

impl Default for ExplorerPaths {
    fn default() -> Self {
        ExplorerPaths {
            meta: "/token/meta".into(),
            defi_activities: "/token/defi/activities".into(),
            transfers: "/token/transfer".into(),
            page_size: 100,
        }
    }
}

/// Block explorer REST API for token metadata, DeFi activities and
/// transfers, with raw transactions from JSON-RPC. Response shapes are
/// handled by the `parse_*` adapters below.
pub struct ExplorerBackend {
    base: String,
    api_key: Option<String>,
    paths: ExplorerPaths,
    http: HttpClient,
    rpc: RpcBackend,
}

impl ExplorerBackend {
    pub fn new(
        base: &str,
        api_key: Option<String>,
        paths: ExplorerPaths,
        rpc: RpcBackend,
        limiter: Arc<RateLimiter>,
        retry: RetryPolicy,
    ) -> Result<Self> {
        Ok(ExplorerBackend {
            base: base.trim_end_matches('/').to_string(),
            api_key,
            paths,
            http: HttpClient::new(limiter, retry)?,
            rpc,
        })
    }

    fn get(&self, path: &str, query: &str) -> Result<Value> {
        let url = format!("{}{}?{}", self.base, path, query);
        let headers: Vec<(&str, &str)> = self.api_key.iter().map(|k| ("token", k.as_str())).collect();
        let resp = self.http.get(&url, &headers)?;
        if resp.status == 404 {
            return Ok(Value::Null);
        }
        if resp.status >= 400 {
            return Err(IngestError::parse(format!("HTTP {} from {url}", resp.status), resp.body));
        }
        let v = resp.json()?;
        if v["success"] == Value::Bool(false) {
            return Err(IngestError::parse(format!("explorer error from {url}"), resp.body));
        }
        Ok(v.get("data").cloned().unwrap_or(Value::Null))
    }

    fn pages(&self, path: &str, mint: &str) -> Result<Vec<Value>> {
        let mut out = Vec::new();
        for page in 1.. {
            let data = self.get(path, &format!("address={mint}&page={page}&page_size={}", self.paths.page_size))?;
            let items = data.as_array().cloned().unwrap_or_default();
            let n = items.len();
            out.extend(items);
            if n < self.paths.page_size {
                break;
            }
        }
        Ok(out)
    }
}

impl Backend for ExplorerBackend {
    fn fetch_signatures(&self, address: &str, limit: usize) -> Result<Vec<SignatureInfo>> {
        self.rpc.fetch_signatures(address, limit)
    }

    fn fetch_transaction(&self, signature: &str) -> Result<TransactionRecord> {
        self.rpc.fetch_transaction(signature)
    }

    fn fetch_token_bundle(&self, mint: &str) -> Result<TokenRecord> {
        let meta = self.get(&self.paths.meta, &format!("address={mint}"));
        let defi = self.pages(&self.paths.defi_activities, mint);
        let transfers = self.pages(&self.paths.transfers, mint);
        let history = self.rpc.history(mint);

        let results: [(&str, Option<&IngestError>); 4] = [
            ("meta", meta.as_ref().err()),
            ("defi_activities", defi.as_ref().err()),
            ("transfers", transfers.as_ref().err()),
            ("transactions", history.as_ref().err()),
        ];
        let missing: Vec<String> = results
            .iter()
            .filter(|(_, e)| e.is_some())
            .map(|(n, _)| n.to_string())
            .collect();
        if missing.len() == results.len() {
            // nothing reachable: report the first failure as is
            return Err(meta.expect_err("meta failed"));
        }
        if !missing.is_empty() {
            return Err(IngestError::PartialData {
                mint: mint.to_string(),
                missing,
            });
        }
        let meta = meta?;
        if meta.is_null() {
            return Err(IngestError::UnknownAddress(mint.to_string()));
        }
        let (transactions, payer) = history?;
        let (meta, created) = parse_meta(&meta, payer.as_deref())?;
        let defi: Vec<DefiActivity> = defi?.iter().filter_map(|v| parse_defi(v, mint)).collect();
        let transfers: Vec<TransferEvent> = transfers?.iter().filter_map(|v| parse_transfer(v, mint)).collect();
        let earliest = transactions
            .iter()
            .map(|t| t.timestamp)
            .chain(defi.iter().map(|a| a.timestamp))
            .chain(transfers.iter().map(|t| t.timestamp))
            .chain(created)
            .min()
            .ok_or_else(|| IngestError::UnknownAddress(mint.to_string()))?;
        Ok(TokenRecord::new(mint, meta, earliest, transactions, defi, transfers)?)
    }

    fn describe(&self) -> String {
        format!("explorer:{}", self.base)
    }
}

fn str_field<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| v[*k].as_str()).filter(|s| !s.is_empty())
}

/// Integer from a JSON number or numeric string.
fn int_field(v: &Value) -> Option<i128> {
    match v {
        Value::Number(n) => n.as_i64().map(i128::from).or_else(|| n.as_u64().map(i128::from)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub(crate) fn quote_asset_for(mint: &str) -> QuoteAsset {
    match mint {
        WSOL_MINT => QuoteAsset::Sol,
        USDC_MINT => QuoteAsset::Usdc,
        USDT_MINT => QuoteAsset::Usdt,
        other => QuoteAsset::Other(other.to_string()),
    }
}

/// Token metadata and, when reported, the creation time.
pub(crate) fn parse_meta(v: &Value, fallback_creator: Option<&str>) -> Result<(TokenMeta, Option<Timestamp>)> {
    let bad = |m: &str| IngestError::parse(m, v.to_string());
    let decimals = v["decimals"].as_u64().ok_or_else(|| bad("meta lacks decimals"))?;
    let creator = str_field(v, &["creator", "create_tx_signer", "first_mint_tx_signer"])
        .or(fallback_creator)
        .ok_or_else(|| bad("meta lacks creator"))?;
    let mut links = Vec::new();
    for (key, kind) in [
        ("website", LinkKind::Website),
        ("twitter", LinkKind::Social),
        ("telegram", LinkKind::Social),
    ] {
        if let Some(url) = str_field(v, &[key]).or_else(|| str_field(&v["metadata"], &[key])) {
            links.push(Link {
                kind,
                url: url.to_string(),
            });
        }
    }
    let meta = TokenMeta {
        name: str_field(v, &["name"]).unwrap_or_default().to_string(),
        symbol: str_field(v, &["symbol"]).unwrap_or(super::rpc::UNKNOWN_SYMBOL).to_string(),
        freeze_authority: str_field(v, &["freeze_authority"]).map(str::to_string),
        mint_authority: str_field(v, &["mint_authority"]).map(str::to_string),
        creator: creator.to_string(),
        decimals: decimals as u8,
        links,
    };
    let created = v["created_time"].as_i64().or_else(|| v["first_mint_time"].as_i64());
    Ok((meta, created))
}

/// One DeFi activity row. Rows that are not liquidity or swap events, or
/// that do not involve `mint`, yield `None`.
pub(crate) fn parse_defi(v: &Value, mint: &str) -> Option<DefiActivity> {
    let ty = v["activity_type"].as_str()?.to_ascii_uppercase();
    let kind = if ty.contains("ADD_LIQ") {
        DefiKind::AddLiquidity
    } else if ty.contains("REMOVE_LIQ") {
        DefiKind::RemoveLiquidity
    } else if ty.contains("SWAP") {
        DefiKind::Swap
    } else {
        return None;
    };
    let r = &v["routers"];
    let side = |i: u8| {
        let token = r[format!("token{i}")].as_str()?;
        let amount = int_field(&r[format!("amount{i}")])?;
        let decimals = r[format!("token{i}_decimals")].as_u64().unwrap_or(0) as u32;
        Some((token, amount, decimals))
    };
    let (t1, t2) = (side(1)?, side(2)?);
    // for swaps token1 is what the actor pays
    let (base, quote, base_is_input) = if t1.0 == mint {
        (t1, t2, true)
    } else if t2.0 == mint {
        (t2, t1, false)
    } else {
        return None;
    };
    let (base_sign, quote_sign) = match kind {
        DefiKind::AddLiquidity => (-1, -1),
        DefiKind::RemoveLiquidity => (1, 1),
        DefiKind::Swap if base_is_input => (-1, 1),
        DefiKind::Swap => (1, -1),
    };
    let pool = str_field(v, &["pool_address", "pool_id", "pool"])
        .or_else(|| v["sources"].as_array()?.first()?.as_str())
        .or_else(|| str_field(v, &["platform"]))
        .unwrap_or("unknown_pool");
    Some(DefiActivity {
        signature: str_field(v, &["trans_id", "signature"])?.to_string(),
        kind,
        actor: str_field(v, &["from_address", "owner"])?.to_string(),
        timestamp: v["block_time"].as_i64()?,
        base_amount: base_sign * base.1.abs(),
        quote_asset: quote_asset_for(quote.0),
        quote_amount: Fixed::from_units(quote_sign * quote.1.abs(), quote.2),
        pool: pool.to_string(),
    })
}

/// One transfer row. Mint and burn rows are expressed with the mint address
/// as counterparty.
pub(crate) fn parse_transfer(v: &Value, mint: &str) -> Option<TransferEvent> {
    if str_field(v, &["token_address"]).is_some_and(|t| t != mint) {
        return None;
    }
    let ty = v["activity_type"].as_str().unwrap_or("").to_ascii_uppercase();
    let from = if ty.contains("MINT") {
        mint
    } else {
        str_field(v, &["from_address"])?
    };
    let to = if ty.contains("BURN") { mint } else { str_field(v, &["to_address"])? };
    let amount = int_field(&v["amount"]).filter(|&a| a > 0)? as u128;
    if from == to {
        return None;
    }
    Some(TransferEvent {
        signature: str_field(v, &["trans_id", "signature"])?.to_string(),
        from: from.to_string(),
        to: to.to_string(),
        amount,
        timestamp: v["block_time"].as_i64()?,
    })
}

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::http::HttpClient;
use super::{Backend, IngestError, RateLimiter, Result, RetryPolicy, SignatureInfo, SIGNATURE_PAGE_SIZE};
use crate::model::{
    Address, BalanceDelta, InstructionRecord, TokenMeta, TokenRecord, TransactionRecord, TransferEvent,
};

/// Symbol used when only on-chain mint data is available.
pub const UNKNOWN_SYMBOL: &str = "UNKNOWN";

/// Solana JSON-RPC (`getSignaturesForAddress`, `getTransaction`,
/// `getAccountInfo`).
///
/// Without an explorer the token's name and symbol are unknown and pool
/// activity cannot be attributed, so bundles built here carry placeholder
/// names and no DeFi activities.
pub struct RpcBackend {
    endpoint: String,
    http: HttpClient,
}

/// Parsed transaction plus the fee payer, which the record does not keep.
pub(crate) struct ParsedTx {
    pub record: TransactionRecord,
    pub fee_payer: Option<Address>,
}

impl RpcBackend {
    pub fn new(endpoint: &str, limiter: Arc<RateLimiter>, retry: RetryPolicy) -> Result<Self> {
        Ok(RpcBackend {
            endpoint: endpoint.to_string(),
            http: HttpClient::new(limiter, retry)?,
        })
    }

    fn call(&self, method: &str, params: Value) -> Result<Value> {
        let body = json!({"jsonrpc": "2.0", "id": 1, "method": method, "params": params});
        let resp = self.http.post_json(&self.endpoint, &body)?;
        let v = resp.json()?;
        if let Some(err) = v.get("error") {
            return Err(IngestError::parse(format!("{method} failed: {err}"), &resp.body));
        }
        v.get("result")
            .cloned()
            .ok_or_else(|| IngestError::parse(format!("{method}: no result"), &resp.body))
    }

    fn signature_page(&self, address: &str, limit: usize, before: Option<&str>) -> Result<Vec<SignatureInfo>> {
        let mut opts = json!({"limit": limit});
        if let Some(b) = before {
            opts["before"] = json!(b);
        }
        let result = self.call("getSignaturesForAddress", json!([address, opts]))?;
        let items = result
            .as_array()
            .ok_or_else(|| IngestError::parse("signature list is not an array", result.to_string()))?;
        items
            .iter()
            .map(|it| {
                let signature = it["signature"].as_str();
                let timestamp = it["blockTime"].as_i64();
                match (signature, timestamp) {
                    (Some(s), Some(t)) => Ok(SignatureInfo {
                        signature: s.to_string(),
                        timestamp: t,
                    }),
                    _ => Err(IngestError::parse("signature entry lacks signature or blockTime", it.to_string())),
                }
            })
            .collect()
    }

    /// Pages backwards until `limit` signatures are collected or the history
    /// ends.
    fn signatures(&self, address: &str, limit: Option<usize>) -> Result<Vec<SignatureInfo>> {
        let mut out: Vec<SignatureInfo> = Vec::new();
        loop {
            let want = limit.map_or(SIGNATURE_PAGE_SIZE, |l| (l - out.len()).min(SIGNATURE_PAGE_SIZE));
            if want == 0 {
                break;
            }
            let page = self.signature_page(address, want, out.last().map(|s| s.signature.as_str()))?;
            let n = page.len();
            out.extend(page);
            if n < want {
                break;
            }
        }
        Ok(out)
    }

    pub(crate) fn transaction(&self, signature: &str) -> Result<ParsedTx> {
        let result = self.call(
            "getTransaction",
            json!([signature, {"encoding": "jsonParsed", "maxSupportedTransactionVersion": 0}]),
        )?;
        if result.is_null() {
            return Err(IngestError::NotFound(signature.to_string()));
        }
        parse_transaction(signature, &result)
    }

    /// Decimals and authorities of a mint account.
    pub(crate) fn mint_info(&self, mint: &str) -> Result<(u8, Option<Address>, Option<Address>)> {
        let result = self.call("getAccountInfo", json!([mint, {"encoding": "jsonParsed"}]))?;
        let value = &result["value"];
        if value.is_null() {
            return Err(IngestError::UnknownAddress(mint.to_string()));
        }
        let info = &value["data"]["parsed"]["info"];
        let decimals = info["decimals"]
            .as_u64()
            .ok_or_else(|| IngestError::parse("mint account lacks decimals", value.to_string()))?;
        let opt = |k: &str| info[k].as_str().map(str::to_string);
        Ok((decimals as u8, opt("freezeAuthority"), opt("mintAuthority")))
    }

    /// Every transaction touching `mint`, oldest first, with the fee payer
    /// of the oldest one.
    pub(crate) fn history(&self, mint: &str) -> Result<(Vec<TransactionRecord>, Option<Address>)> {
        let sigs = self.signatures(mint, None)?;
        let mut txs = Vec::with_capacity(sigs.len());
        let mut first_payer = None;
        for s in sigs.iter().rev() {
            let tx = self.transaction(&s.signature)?;
            if first_payer.is_none() {
                first_payer = tx.fee_payer;
            }
            txs.push(tx.record);
        }
        Ok((txs, first_payer))
    }
}

impl Backend for RpcBackend {
    fn fetch_signatures(&self, address: &str, limit: usize) -> Result<Vec<SignatureInfo>> {
        self.signatures(address, Some(limit))
    }

    fn fetch_transaction(&self, signature: &str) -> Result<TransactionRecord> {
        self.transaction(signature).map(|t| t.record)
    }

    fn fetch_token_bundle(&self, mint: &str) -> Result<TokenRecord> {
        let (decimals, freeze_authority, mint_authority) = self.mint_info(mint)?;
        let (transactions, payer) = self.history(mint)?;
        let creation_time = transactions
            .first()
            .map(|t| t.timestamp)
            .ok_or_else(|| IngestError::UnknownAddress(mint.to_string()))?;
        let transfers = transactions.iter().flat_map(|t| transfers_from_deltas(mint, t)).collect();
        let meta = TokenMeta {
            name: String::new(),
            symbol: UNKNOWN_SYMBOL.into(),
            freeze_authority,
            mint_authority: mint_authority.clone(),
            creator: payer.or(mint_authority).unwrap_or_else(|| mint.to_string()),
            decimals,
            links: vec![],
        };
        Ok(TokenRecord::new(mint, meta, creation_time, transactions, vec![], transfers)?)
    }

    fn describe(&self) -> String {
        format!("rpc:{}", self.endpoint)
    }
}

/// `freezeAccount` to `FreezeAccount`.
fn pascal_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn parse_instruction(ix: &Value, keys: &[String]) -> InstructionRecord {
    let program = ix["program"]
        .as_str()
        .or_else(|| ix["programId"].as_str())
        .unwrap_or("unknown")
        .to_string();
    let parsed = &ix["parsed"];
    let name = match parsed["type"].as_str() {
        Some(t) => pascal_case(t),
        None => "Unparsed".to_string(),
    };
    let mut accounts: Vec<Address> = match ix["accounts"].as_array() {
        Some(a) => a
            .iter()
            .filter_map(|k| match k {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => n.as_u64().and_then(|i| keys.get(i as usize).cloned()),
                _ => None,
            })
            .collect(),
        None => Vec::new(),
    };
    if let Some(info) = parsed["info"].as_object() {
        for v in info.values() {
            if let Some(s) = v.as_str().filter(|s| super::validate_mint(s).is_ok()) {
                accounts.push(s.to_string());
            }
        }
    }
    InstructionRecord { program, name, accounts }
}

/// Converts a `getTransaction` (jsonParsed) result.
pub(crate) fn parse_transaction(signature: &str, v: &Value) -> Result<ParsedTx> {
    let raw = || v.to_string();
    let timestamp = v["blockTime"]
        .as_i64()
        .ok_or_else(|| IngestError::parse("missing blockTime", raw()))?;
    let meta = &v["meta"];
    let log_lines = meta["logMessages"]
        .as_array()
        .ok_or_else(|| IngestError::parse("missing meta.logMessages", raw()))?
        .iter()
        .filter_map(|l| l.as_str().map(str::to_string))
        .collect();
    let message = &v["transaction"]["message"];
    let keys: Vec<String> = message["accountKeys"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|k| k.as_str().or_else(|| k["pubkey"].as_str()).map(str::to_string))
        .collect();
    let outer = message["instructions"]
        .as_array()
        .ok_or_else(|| IngestError::parse("missing message.instructions", raw()))?;
    let inner = meta["innerInstructions"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|group| group["instructions"].as_array().into_iter().flatten());
    let instructions = outer.iter().chain(inner).map(|ix| parse_instruction(ix, &keys)).collect();

    let mut balances: BTreeMap<(Address, Address), i128> = BTreeMap::new();
    for (side, sign) in [("preTokenBalances", -1i128), ("postTokenBalances", 1)] {
        for b in meta[side].as_array().into_iter().flatten() {
            let owner = b["owner"]
                .as_str()
                .map(str::to_string)
                .or_else(|| b["accountIndex"].as_u64().and_then(|i| keys.get(i as usize).cloned()));
            let (Some(owner), Some(mint)) = (owner, b["mint"].as_str()) else {
                return Err(IngestError::parse(format!("malformed {side} entry"), raw()));
            };
            let amount: i128 = b["uiTokenAmount"]["amount"]
                .as_str()
                .and_then(|a| a.parse().ok())
                .ok_or_else(|| IngestError::parse(format!("malformed {side} amount"), raw()))?;
            *balances.entry((owner, mint.to_string())).or_insert(0) += sign * amount;
        }
    }
    let token_balance_deltas = balances
        .into_iter()
        .filter(|(_, d)| *d != 0)
        .map(|((owner, mint), delta)| BalanceDelta { owner, mint, delta })
        .collect();

    Ok(ParsedTx {
        record: TransactionRecord {
            signature: signature.to_string(),
            timestamp,
            instructions,
            log_lines,
            token_balance_deltas,
        },
        fee_payer: keys.first().cloned(),
    })
}

/// Pairs senders and receivers of `mint` within one transaction in address
/// order. Net supply growth is issued from the mint
/// address and net shrinkage is burned to it.
pub(crate) fn transfers_from_deltas(mint: &str, tx: &TransactionRecord) -> Vec<TransferEvent> {
    let deltas: Vec<&BalanceDelta> = tx.token_balance_deltas.iter().filter(|d| d.mint == mint).collect();
    let net: i128 = deltas.iter().map(|d| d.delta).sum();
    let mut senders: Vec<(Address, u128)> = Vec::new();
    let mut receivers: Vec<(Address, u128)> = Vec::new();
    if net > 0 {
        senders.push((mint.to_string(), net as u128));
    } else if net < 0 {
        receivers.push((mint.to_string(), net.unsigned_abs()));
    }
    for d in deltas {
        if d.delta < 0 {
            senders.push((d.owner.clone(), d.delta.unsigned_abs()));
        } else {
            receivers.push((d.owner.clone(), d.delta as u128));
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < senders.len() && j < receivers.len() {
        let amount = senders[i].1.min(receivers[j].1);
        if amount > 0 && senders[i].0 != receivers[j].0 {
            out.push(TransferEvent {
                signature: tx.signature.clone(),
                from: senders[i].0.clone(),
                to: receivers[j].0.clone(),
                amount,
                timestamp: tx.timestamp,
            });
        }
        senders[i].1 -= amount;
        receivers[j].1 -= amount;
        if senders[i].1 == 0 {
            i += 1;
        }
        if receivers[j].1 == 0 {
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payload() -> Value {
        json!({
            "blockTime": 1700000000,
            "transaction": {"message": {
                "accountKeys": [{"pubkey": "Payer111111111111111111111111111111111111"}],
                "instructions": [
                    {"program": "spl-token", "programId": "Tokenkeg", "parsed": {"type": "freezeAccount", "info": {}}},
                    {"programId": "Other", "accounts": [], "data": "x"}
                ]
            }},
            "meta": {
                "logMessages": ["Program log: Instruction: FreezeAccount", "Program log: Error: Account is frozen"],
                "preTokenBalances": [
                    {"accountIndex": 1, "mint": "M", "owner": "A", "uiTokenAmount": {"amount": "100"}}
                ],
                "postTokenBalances": [
                    {"accountIndex": 1, "mint": "M", "owner": "A", "uiTokenAmount": {"amount": "40"}},
                    {"accountIndex": 2, "mint": "M", "owner": "B", "uiTokenAmount": {"amount": "60"}}
                ]
            }
        })
    }

    #[test]
    fn parses_json_parsed_transaction() {
        let tx = parse_transaction("S", &payload()).unwrap();
        assert_eq!(tx.record.instructions.len(), 2);
        assert_eq!(tx.record.instructions[0].name, "FreezeAccount");
        assert_eq!(tx.record.instructions[1].name, "Unparsed");
        assert_eq!(tx.record.log_lines.len(), 2);
        assert_eq!(tx.fee_payer.as_deref(), Some("Payer111111111111111111111111111111111111"));
        let d = &tx.record.token_balance_deltas;
        assert_eq!((d[0].owner.as_str(), d[0].delta), ("A", -60));
        assert_eq!((d[1].owner.as_str(), d[1].delta), ("B", 60));
        let t = transfers_from_deltas("M", &tx.record);
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].from.as_str(), t[0].to.as_str(), t[0].amount), ("A", "B", 60));
    }

    #[test]
    fn missing_logs_is_parse_error() {
        let mut p = payload();
        p["meta"].as_object_mut().unwrap().remove("logMessages");
        match parse_transaction("S", &p) {
            Err(IngestError::ParseError { raw, .. }) => assert!(raw.contains("blockTime")),
            other => panic!("expected parse error, got {:?}", other.map(|t| t.record)),
        }
    }

    #[test]
    fn supply_changes_become_mint_and_burn() {
        let tx = TransactionRecord {
            signature: "S".into(),
            timestamp: 5,
            instructions: vec![],
            log_lines: vec![],
            token_balance_deltas: vec![BalanceDelta {
                owner: "A".into(),
                mint: "M".into(),
                delta: 10,
            }],
        };
        let t = transfers_from_deltas("M", &tx);
        assert_eq!((t[0].from.as_str(), t[0].to.as_str(), t[0].amount), ("M", "A", 10));
        let mut burn = tx.clone();
        burn.token_balance_deltas[0].delta = -4;
        let t = transfers_from_deltas("M", &burn);
        assert_eq!((t[0].from.as_str(), t[0].to.as_str(), t[0].amount), ("A", "M", 4));
    }
}

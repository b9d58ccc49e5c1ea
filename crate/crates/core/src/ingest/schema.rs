//! Versioned on-disk form of a [`TokenRecord`], shared by fixture
//! directories and the cache.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "mint": "...",
//!   "creation_time": 1700000000,
//!   "meta": { "name": "...", "symbol": "...", "freeze_authority": null,
//!             "mint_authority": null, "creator": "...", "decimals": 6, "links": [] },
//!   "transactions": [ { "signature": "...", "timestamp": 0,
//!                       "instructions": [ { "program": "...", "name": "...", "accounts": [] } ],
//!                       "log_lines": [], "token_balance_deltas": [] } ],
//!   "defi_activities": [ { "signature": "...", "kind": "add_liquidity", "actor": "...",
//!                          "timestamp": 0, "base_amount": "-1000", "quote_asset": "SOL",
//!                          "quote_amount": "-10.000000000", "pool": "..." } ],
//!   "transfers": [ { "signature": "...", "from": "...", "to": "...",
//!                    "amount": "1000", "timestamp": 0 } ]
//! }
//! ```
//!
//! Raw token amounts are integer strings; quote amounts are decimal strings.

use serde::{Deserialize, Serialize};

use super::{IngestError, Result};
use crate::model::TokenRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct DocOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    record: &'a TokenRecord,
}

#[derive(Deserialize)]
struct DocIn {
    schema_version: u32,
    #[serde(flatten)]
    record: TokenRecord,
}

/// Pretty JSON with a trailing newline. Byte-identical for equal records.
pub fn write_record(record: &TokenRecord) -> String {
    let mut s = serde_json::to_string_pretty(&DocOut {
        schema_version: SCHEMA_VERSION,
        record,
    })
    .expect("token records serialize");
    s.push('\n');
    s
}

/// Parses and validates a document. `expected_mint` guards against a file
/// named after a different mint.
pub fn read_record(text: &str, expected_mint: Option<&str>) -> Result<TokenRecord> {
    let version = serde_json::from_str::<serde_json::Value>(text)
        .map_err(|e| IngestError::parse(e.to_string(), text))?
        .get("schema_version")
        .and_then(|v| v.as_u64());
    match version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(IngestError::parse(format!("unsupported schema_version {v}"), text)),
        None => return Err(IngestError::parse("missing schema_version", text)),
    }
    let doc: DocIn = serde_json::from_str(text).map_err(|e| IngestError::parse(e.to_string(), text))?;
    debug_assert_eq!(doc.schema_version, SCHEMA_VERSION);
    if let Some(m) = expected_mint {
        if doc.record.mint != m {
            return Err(IngestError::parse(
                format!("file for {m} contains mint {}", doc.record.mint),
                text,
            ));
        }
    }
    Ok(doc.record.normalized()?)
}

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use rugscan::ingest::{
    read_record, write_record, Cache, CachePolicy, DataSource, IngestError, Ingestor, RetryPolicy, SourceKind,
};
use rugscan::model::{TokenMeta, TransactionRecord};
use rugscan::{synth, TokenRecord};

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(10),
    }
}

fn fixture_ingestor(dir: &Path, cache: Option<&Path>, policy: CachePolicy) -> Ingestor {
    Ingestor::from_source(&DataSource::fixture(dir), cache.map(Cache::new), policy, fast_retry()).unwrap()
}

fn rpc_ingestor(url: &str, rate: f64, cache: Option<&Path>, policy: CachePolicy) -> Ingestor {
    let source = DataSource {
        kind: SourceKind::LiveRpc { endpoint: url.into() },
        rate_limit: rate,
    };
    Ingestor::from_source(&source, cache.map(Cache::new), policy, fast_retry()).unwrap()
}

fn record_with_txs(seed: u64, n: usize) -> TokenRecord {
    let mut r = synth::rng(seed);
    let mint = synth::address(&mut r);
    let meta = TokenMeta {
        name: "Plain".into(),
        symbol: "PLN".into(),
        freeze_authority: None,
        mint_authority: None,
        creator: synth::address(&mut r),
        decimals: 6,
        links: vec![],
    };
    let txs = (0..n)
        .map(|i| TransactionRecord {
            signature: format!("sig{seed}x{i:05}"),
            timestamp: synth::EPOCH + i as i64,
            instructions: vec![],
            log_lines: vec![],
            token_balance_deltas: vec![],
        })
        .collect();
    TokenRecord::new(mint, meta, synth::EPOCH, txs, vec![], vec![]).unwrap()
}

#[test]
fn fixture_signatures_are_newest_first_and_capped() {
    let dir = tempfile::tempdir().unwrap();
    let records = [record_with_txs(1, 3), record_with_txs(2, 0), record_with_txs(3, 1500)];
    synth::write_fixture_dir(dir.path(), &records).unwrap();
    let ing = fixture_ingestor(dir.path(), None, CachePolicy::PreferCache);

    let three = ing.fetch_signatures(&records[0].mint, 1000).unwrap();
    assert_eq!(three.len(), 3);
    assert_eq!(three[0].signature, "sig1x00002");
    assert!(ing.fetch_signatures(&records[1].mint, 1000).unwrap().is_empty());

    let many = ing.fetch_signatures(&records[2].mint, 1000).unwrap();
    assert_eq!(many.len(), 1000);
    assert_eq!(many[0].signature, "sig3x01499");
    assert_eq!(many[999].signature, "sig3x00500");
    assert!(many.windows(2).all(|w| w[0].timestamp >= w[1].timestamp));

    assert!(ing.fetch_signatures(&records[0].mint, 0).is_err());
    let unknown = synth::address(&mut synth::rng(99));
    assert!(ing.fetch_signatures(&unknown, 10).unwrap().is_empty());
    assert!(matches!(ing.fetch_token_bundle(&unknown), Err(IngestError::UnknownAddress(_))));
}

#[test]
fn corrupted_transaction_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth::fixture_suite(synth::DEFAULT_SEED).remove(0).record;
    let sig = record.transactions[0].signature.clone();
    let path = dir.path().join(format!("{}.json", record.mint));
    let mut doc: Value = serde_json::from_str(&write_record(&record)).unwrap();
    doc["transactions"][0].as_object_mut().unwrap().remove("log_lines");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let ing = fixture_ingestor(dir.path(), None, CachePolicy::PreferCache);
    match ing.fetch_transaction(&sig) {
        Err(IngestError::ParseError { raw, .. }) => assert!(raw.contains(&sig)),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(ing.fetch_token_bundle(&record.mint), Err(IngestError::ParseError { .. })));
    // other transactions in the same file still resolve
    assert!(ing.fetch_transaction(&record.transactions[1].signature).is_ok());
}

#[test]
fn fixture_reads_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let suite: Vec<TokenRecord> = synth::fixture_suite(synth::DEFAULT_SEED).into_iter().map(|s| s.record).collect();
    synth::write_fixture_dir(dir.path(), &suite).unwrap();
    let ing = fixture_ingestor(dir.path(), None, CachePolicy::PreferCache);
    for r in &suite {
        let a = ing.fetch_token_bundle(&r.mint).unwrap();
        let b = ing.fetch_token_bundle(&r.mint).unwrap();
        assert_eq!(&a, r);
        assert_eq!(a, b);
        let text = std::fs::read_to_string(dir.path().join(format!("{}.json", r.mint))).unwrap();
        assert_eq!(write_record(&a), text);
        assert_eq!(read_record(&text, Some(&r.mint)).unwrap(), a);
    }
}

#[test]
fn schema_rejects_wrong_mint_and_version() {
    let r = record_with_txs(4, 2);
    let text = write_record(&r);
    assert!(read_record(&text, Some("SomeOtherMint1111111111111111111111111111")).is_err());
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["schema_version"] = json!(99);
    assert!(read_record(&doc.to_string(), None).is_err());
    doc.as_object_mut().unwrap().remove("schema_version");
    assert!(read_record(&doc.to_string(), None).is_err());
}

#[test]
fn unreachable_endpoint_falls_back_to_cache() {
    let fixtures = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let record = record_with_txs(5, 4);
    synth::write_fixture_dir(fixtures.path(), std::slice::from_ref(&record)).unwrap();
    fixture_ingestor(fixtures.path(), Some(cache.path()), CachePolicy::Refresh)
        .fetch_token_bundle(&record.mint)
        .unwrap();

    let dead = "http://127.0.0.1:9";
    for policy in [CachePolicy::Refresh, CachePolicy::PreferCache, CachePolicy::CacheOnly] {
        let ing = rpc_ingestor(dead, 50.0, Some(cache.path()), policy);
        assert_eq!(ing.fetch_token_bundle(&record.mint).unwrap(), record, "{policy:?}");
    }
    let other = record_with_txs(6, 1);
    let ing = rpc_ingestor(dead, 50.0, Some(cache.path()), CachePolicy::Refresh);
    assert!(matches!(
        ing.fetch_token_bundle(&other.mint),
        Err(IngestError::EndpointUnavailable { .. })
    ));
    let ing = rpc_ingestor(dead, 50.0, Some(cache.path()), CachePolicy::CacheOnly);
    assert!(ing.fetch_token_bundle(&other.mint).is_err());
}

/// Minimal HTTP/1.1 server: every request body is logged and answered by
/// `handler(request_index, body)`.
struct MockServer {
    url: String,
    log: Arc<Mutex<Vec<(Instant, Value)>>>,
}

type Handler = dyn Fn(usize, &Value) -> (u16, Value) + Send + Sync;

impl MockServer {
    fn start(handler: impl Fn(usize, &Value) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let log: Arc<Mutex<Vec<(Instant, Value)>>> = Arc::default();
        let handler: Arc<Handler> = Arc::new(handler);
        let server_log = log.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (log, handler) = (server_log.clone(), handler.clone());
                std::thread::spawn(move || serve(stream, &log, &*handler));
            }
        });
        MockServer { url, log }
    }

    fn requests(&self) -> Vec<(Instant, Value)> {
        self.log.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, log: &Mutex<Vec<(Instant, Value)>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut len = 0usize;
        let mut line = String::new();
        let mut first = true;
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let l = line.trim_end();
            if l.is_empty() && !first {
                break;
            }
            first = false;
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; len];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let index = {
            let mut l = log.lock().unwrap();
            l.push((Instant::now(), body.clone()));
            l.len() - 1
        };
        let (status, reply) = handler(index, &body);
        let text = reply.to_string();
        let head = format!(
            "HTTP/1.1 {status} Mock\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
            text.len()
        );
        if out.write_all(head.as_bytes()).and_then(|_| out.write_all(text.as_bytes())).is_err() {
            return;
        }
    }
}

fn rpc_result(result: Value) -> (u16, Value) {
    (200, json!({"jsonrpc": "2.0", "id": 1, "result": result}))
}

const MINT: &str = "So11111111111111111111111111111111111111112";

/// 1500 signatures, newest first, served in pages honoring `limit` and
/// `before`.
fn signature_handler(_: usize, body: &Value) -> (u16, Value) {
    let opts = &body["params"][1];
    let limit = opts["limit"].as_u64().unwrap_or(1000) as usize;
    let all: Vec<usize> = (0..1500).rev().collect();
    let start = match opts["before"].as_str() {
        Some(b) => all.iter().position(|i| format!("s{i}") == b).map_or(all.len(), |p| p + 1),
        None => 0,
    };
    let page: Vec<Value> = all[start..]
        .iter()
        .take(limit)
        .map(|i| json!({"signature": format!("s{i}"), "blockTime": 1_700_000_000 + *i as i64}))
        .collect();
    rpc_result(json!(page))
}

#[test]
fn rpc_signatures_page_backwards() {
    let server = MockServer::start(signature_handler);
    let ing = rpc_ingestor(&server.url, 100.0, None, CachePolicy::PreferCache);
    let sigs = ing.fetch_signatures(MINT, 1200).unwrap();
    assert_eq!(sigs.len(), 1200);
    assert_eq!(sigs[0].signature, "s1499");
    assert_eq!(sigs[1199].signature, "s300");
    let reqs = server.requests();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0].1["params"][1]["limit"], 1000);
    assert_eq!(reqs[1].1["params"][1]["before"], "s500");
    assert_eq!(reqs[1].1["params"][1]["limit"], 200);
}

#[test]
fn rpc_respects_rate_limit() {
    let server = MockServer::start(signature_handler);
    let rate = 5.0;
    let ing = rpc_ingestor(&server.url, rate, None, CachePolicy::PreferCache);
    let started = Instant::now();
    for _ in 0..11 {
        ing.fetch_signatures(MINT, 1).unwrap();
    }
    let elapsed = started.elapsed();
    let times: Vec<Instant> = server.requests().into_iter().map(|(t, _)| t).collect();
    assert_eq!(times.len(), 11);
    // 11 requests at 5/s need at least two full windows
    assert!(elapsed >= Duration::from_secs(2), "finished in {elapsed:?}");
    for (i, t) in times.iter().enumerate() {
        let in_window = times[i..].iter().filter(|u| u.duration_since(*t) < Duration::from_secs(1)).count();
        assert!(in_window <= rate as usize, "{in_window} requests within one second");
    }
}

#[test]
fn rpc_retries_throttling_then_gives_up() {
    let server = MockServer::start(|i, body| if i < 2 { (429, json!({})) } else { signature_handler(i, body) });
    let ing = rpc_ingestor(&server.url, 100.0, None, CachePolicy::PreferCache);
    assert_eq!(ing.fetch_signatures(MINT, 3).unwrap().len(), 3);
    assert_eq!(server.requests().len(), 3);

    let failing = MockServer::start(|_, _| (500, json!({"oops": true})));
    let ing = rpc_ingestor(&failing.url, 100.0, None, CachePolicy::PreferCache);
    match ing.fetch_signatures(MINT, 3) {
        Err(e @ IngestError::EndpointUnavailable { .. }) => assert!(e.is_retryable()),
        other => panic!("expected endpoint failure, got {other:?}"),
    }
    assert_eq!(failing.requests().len(), 3);

    let rpc_error = MockServer::start(|_, _| (200, json!({"jsonrpc": "2.0", "id": 1, "error": {"code": -32600}})));
    let ing = rpc_ingestor(&rpc_error.url, 100.0, None, CachePolicy::PreferCache);
    assert!(matches!(ing.fetch_signatures(MINT, 3), Err(IngestError::ParseError { .. })));
    assert_eq!(rpc_error.requests().len(), 1);
}

fn transfer_tx(amount_a: &str, amount_b: &str, freeze: bool) -> Value {
    let ix = if freeze {
        json!({"program": "spl-token", "programId": "Tokenkeg", "parsed": {"type": "freezeAccount", "info": {}}})
    } else {
        json!({"program": "spl-token", "programId": "Tokenkeg", "parsed": {"type": "transfer", "info": {}}})
    };
    json!({
        "transaction": {"message": {
            "accountKeys": [{"pubkey": "Payer111111111111111111111111111111111111"}],
            "instructions": [ix]
        }},
        "meta": {
            "logMessages": ["Program log: Instruction: Transfer"],
            "preTokenBalances": [
                {"accountIndex": 1, "mint": MINT, "owner": "A", "uiTokenAmount": {"amount": "100"}}
            ],
            "postTokenBalances": [
                {"accountIndex": 1, "mint": MINT, "owner": "A", "uiTokenAmount": {"amount": amount_a}},
                {"accountIndex": 2, "mint": MINT, "owner": "B", "uiTokenAmount": {"amount": amount_b}}
            ]
        }
    })
}

#[test]
fn rpc_bundle_is_assembled_and_cached() {
    let server = MockServer::start(|_, body| match body["method"].as_str() {
        Some("getAccountInfo") => rpc_result(json!({"value": {"data": {"parsed": {"info": {
            "decimals": 6, "freezeAuthority": "Auth111111111111111111111111111111111111111"
        }}}}})),
        Some("getSignaturesForAddress") => rpc_result(json!([
            {"signature": "t2", "blockTime": 1_700_000_100},
            {"signature": "t1", "blockTime": 1_700_000_000}
        ])),
        Some("getTransaction") => {
            let sig = body["params"][0].as_str().unwrap_or_default();
            let mut tx = if sig == "t1" { transfer_tx("40", "60", false) } else { transfer_tx("100", "0", true) };
            tx["blockTime"] = json!(if sig == "t1" { 1_700_000_000 } else { 1_700_000_100 });
            rpc_result(tx)
        }
        _ => (400, json!({})),
    });
    let cache = tempfile::tempdir().unwrap();
    let ing = rpc_ingestor(&server.url, 100.0, Some(cache.path()), CachePolicy::PreferCache);
    let r = ing.fetch_token_bundle(MINT).unwrap();
    assert_eq!(r.creation_time, 1_700_000_000);
    assert_eq!(r.meta.creator, "Payer111111111111111111111111111111111111");
    assert_eq!(r.meta.decimals, 6);
    assert!(r.meta.freeze_authority.is_some());
    assert_eq!(r.transactions.len(), 2);
    assert_eq!(r.transactions[1].instructions[0].name, "FreezeAccount");
    assert_eq!(r.transfers.len(), 1);
    assert_eq!((r.transfers[0].from.as_str(), r.transfers[0].to.as_str(), r.transfers[0].amount), ("A", "B", 60));

    let served = server.requests().len();
    assert_eq!(ing.fetch_token_bundle(MINT).unwrap(), r);
    assert_eq!(server.requests().len(), served, "second fetch must come from the cache");
}

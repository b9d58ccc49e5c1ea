//! Deterministic synthetic token histories: the labeled rule suite,
//! syndicate topologies and a small profit-tracing set.
//!
//! Each history is generated by replaying trades against a constant-product
//! pool, so liquidity profits and pool balances follow from the trades
//! themselves. Every generator is seeded; equal seeds give equal records.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::RugKind;
use crate::eval::{EvalError, Label, LabeledDataset};
use crate::fixed::Fixed;
use crate::ingest::{write_record, IngestError};
use crate::model::{
    Address, DefiActivity, DefiKind, InstructionRecord, Link, LinkKind, QuoteAsset, Signature, Timestamp,
    TokenMeta, TokenRecord, TransactionRecord, TransferEvent, SECONDS_PER_DAY, SECONDS_PER_HOUR,
};

const TOKEN_PROGRAM: &str = "TokenkegQfeZyiNwAJbNbGKPFXCWuBvf9Ss623VQ5DA";
const AMM_PROGRAM: &str = "675kPX9MHTjS2zt1qfr1NYHuzeLXfQM9H24wFSUt1Mp8";

/// 2025-01-01T00:00:00Z
pub const EPOCH: Timestamp = 1_735_689_600;
pub const DEFAULT_SEED: u64 = 0x5eed_2025;

const DECIMALS: u8 = 6;
const SUPPLY: u128 = 1_000_000_000 * 1_000_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random base58 address.
pub fn address(rng: &mut impl RngCore) -> Address {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    bs58::encode(b).into_string()
}

fn signature(rng: &mut impl RngCore) -> Signature {
    let mut b = [0u8; 64];
    rng.fill_bytes(&mut b);
    bs58::encode(b).into_string()
}

fn sol(x: f64) -> Fixed {
    Fixed::from_raw((x * 1e9).round() as i128)
}

/// Constant-product pool with per-provider share accounting.
#[derive(Debug, Clone, Default)]
struct Amm {
    base: u128,
    quote: i128,
    shares: HashMap<Address, u128>,
    total_shares: u128,
}

impl Amm {
    fn deposit(&mut self, who: &str, base: u128, quote: i128) {
        let minted = if self.total_shares == 0 {
            quote as u128
        } else {
            quote as u128 * self.total_shares / self.quote as u128
        };
        *self.shares.entry(who.to_string()).or_default() += minted;
        self.total_shares += minted;
        self.base += base;
        self.quote += quote;
    }

    /// Burns `fraction` of `who`'s shares; returns (base, quote) paid out.
    fn withdraw(&mut self, who: &str, fraction: f64) -> (u128, i128) {
        let held = self.shares.get(who).copied().unwrap_or(0);
        let burn = ((held as f64) * fraction).round() as u128;
        let burn = burn.min(held);
        let base = self.base * burn / self.total_shares;
        let quote = (self.quote as u128 * burn / self.total_shares) as i128;
        *self.shares.get_mut(who).expect("provider has shares") -= burn;
        self.total_shares -= burn;
        self.base -= base;
        self.quote -= quote;
        (base, quote)
    }

    fn buy(&mut self, quote_in: i128) -> u128 {
        let out = self.base * quote_in as u128 / (self.quote + quote_in) as u128;
        self.base -= out;
        self.quote += quote_in;
        out
    }

    fn sell(&mut self, base_in: u128) -> i128 {
        let out = (self.quote as u128 * base_in / (self.base + base_in)) as i128;
        self.base += base_in;
        self.quote -= out;
        out
    }
}

/// Accumulates one token's history while keeping balances consistent.
struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    mint: Address,
    pool: Address,
    asset: QuoteAsset,
    meta: TokenMeta,
    t0: Timestamp,
    amm: Amm,
    balances: HashMap<Address, u128>,
    txs: Vec<TransactionRecord>,
    defi: Vec<DefiActivity>,
    transfers: Vec<TransferEvent>,
}

impl<'r> Builder<'r> {
    fn new(rng: &'r mut ChaCha8Rng, name: &str, symbol: &str, t0: Timestamp) -> Self {
        let mint = address(rng);
        let pool = address(rng);
        let creator = address(rng);
        Builder {
            rng,
            mint,
            pool,
            asset: QuoteAsset::Sol,
            meta: TokenMeta {
                name: name.into(),
                symbol: symbol.into(),
                freeze_authority: None,
                mint_authority: None,
                creator,
                decimals: DECIMALS,
                links: vec![],
            },
            t0,
            amm: Amm::default(),
            balances: HashMap::new(),
            txs: Vec::new(),
            defi: Vec::new(),
            transfers: Vec::new(),
        }
    }

    fn creator(&self) -> Address {
        self.meta.creator.clone()
    }

    fn balance(&self, who: &str) -> u128 {
        self.balances.get(who).copied().unwrap_or(0)
    }

    fn tx(&mut self, t: Timestamp, ixs: &[(&str, &str)], mut logs: Vec<String>, accounts: Vec<Address>) -> Signature {
        let sig = signature(self.rng);
        let mut lines = Vec::new();
        for (program, name) in ixs {
            lines.push(format!("Program {program} invoke [1]"));
            lines.push(format!("Program log: Instruction: {name}"));
        }
        lines.append(&mut logs);
        self.txs.push(TransactionRecord {
            signature: sig.clone(),
            timestamp: t,
            instructions: ixs
                .iter()
                .map(|(program, name)| InstructionRecord {
                    program: program.to_string(),
                    name: name.to_string(),
                    accounts: accounts.clone(),
                })
                .collect(),
            log_lines: lines,
            token_balance_deltas: vec![],
        });
        sig
    }

    fn move_tokens(&mut self, sig: &str, from: &str, to: &str, amount: u128, t: Timestamp) {
        assert!(amount > 0, "zero transfer");
        if from != self.mint {
            let bal = self.balances.get_mut(from).expect("sender holds tokens");
            *bal = bal.checked_sub(amount).expect("sender balance covers transfer");
        }
        if to != self.mint {
            *self.balances.entry(to.to_string()).or_default() += amount;
        }
        self.transfers.push(TransferEvent {
            signature: sig.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            amount,
            timestamp: t,
        });
    }

    fn activity(&mut self, sig: &str, kind: DefiKind, actor: &str, t: Timestamp, base: i128, quote: i128) {
        self.defi.push(DefiActivity {
            signature: sig.to_string(),
            kind,
            actor: actor.to_string(),
            timestamp: t,
            base_amount: base,
            quote_asset: self.asset.clone(),
            quote_amount: Fixed::from_raw(quote),
            pool: self.pool.clone(),
        });
    }

    fn mint_to(&mut self, to: &str, amount: u128, t: Timestamp) {
        let sig = self.tx(t, &[(TOKEN_PROGRAM, "MintTo")], vec![], vec![to.to_string()]);
        let mint = self.mint.clone();
        self.move_tokens(&sig, &mint, to, amount, t);
    }

    fn send(&mut self, from: &str, to: &str, amount: u128, t: Timestamp) {
        let sig = self.tx(t, &[(TOKEN_PROGRAM, "Transfer")], vec![], vec![from.to_string(), to.to_string()]);
        self.move_tokens(&sig, from, to, amount, t);
    }

    fn add_liquidity(&mut self, who: &str, base: u128, quote: Fixed, t: Timestamp) {
        let sig = self.tx(t, &[(AMM_PROGRAM, "AddLiquidity")], vec![], vec![who.to_string(), self.pool.clone()]);
        self.amm.deposit(who, base, quote.raw());
        self.activity(&sig, DefiKind::AddLiquidity, who, t, -(base as i128), -quote.raw());
        let pool = self.pool.clone();
        self.move_tokens(&sig, who, &pool, base, t);
    }

    /// Returns the quote amount received.
    fn remove_liquidity(&mut self, who: &str, fraction: f64, t: Timestamp) -> Fixed {
        let (base, quote) = self.amm.withdraw(who, fraction);
        let sig = self.tx(t, &[(AMM_PROGRAM, "RemoveLiquidity")], vec![], vec![who.to_string(), self.pool.clone()]);
        self.activity(&sig, DefiKind::RemoveLiquidity, who, t, base as i128, quote);
        if base > 0 {
            let pool = self.pool.clone();
            self.move_tokens(&sig, &pool, who, base, t);
        }
        Fixed::from_raw(quote)
    }

    fn buy(&mut self, who: &str, quote: Fixed, t: Timestamp) -> u128 {
        let base = self.amm.buy(quote.raw());
        let sig = self.tx(t, &[(AMM_PROGRAM, "SwapBaseIn")], vec![], vec![who.to_string(), self.pool.clone()]);
        self.activity(&sig, DefiKind::Swap, who, t, base as i128, -quote.raw());
        let pool = self.pool.clone();
        self.move_tokens(&sig, &pool, who, base, t);
        base
    }

    fn sell(&mut self, who: &str, base: u128, t: Timestamp) {
        let quote = self.amm.sell(base);
        let sig = self.tx(t, &[(AMM_PROGRAM, "SwapBaseIn")], vec![], vec![who.to_string(), self.pool.clone()]);
        self.activity(&sig, DefiKind::Swap, who, t, -(base as i128), quote);
        let pool = self.pool.clone();
        self.move_tokens(&sig, who, &pool, base, t);
    }

    fn sell_all(&mut self, who: &str, t: Timestamp) {
        let b = self.balance(who);
        if b > 0 {
            self.sell(who, b, t);
        }
    }

    /// A failed sell attempt: a transaction with no token movement.
    fn failed_sell(&mut self, who: &str, t: Timestamp) {
        self.tx(
            t,
            &[(AMM_PROGRAM, "SwapBaseIn")],
            vec![format!("Program {AMM_PROGRAM} failed: custom program error: 0x1e")],
            vec![who.to_string()],
        );
    }

    /// Freeze of `victim` followed by its rejected transfer, in one
    /// transaction.
    fn freeze(&mut self, victim: &str, t: Timestamp) {
        let authority = self.meta.freeze_authority.clone().expect("freeze authority set");
        self.tx(
            t,
            &[(TOKEN_PROGRAM, "FreezeAccount"), (TOKEN_PROGRAM, "Transfer")],
            vec![
                "Program log: Error: Account is frozen".into(),
                format!("Program {TOKEN_PROGRAM} failed: custom program error: 0x11"),
            ],
            vec![victim.to_string(), self.mint.clone(), authority],
        );
    }

    /// Random buys and sells by `traders` over `[from, to)`.
    fn trade(&mut self, traders: &[Address], n: usize, from: Timestamp, to: Timestamp, buy_share: f64) {
        let mut times: Vec<Timestamp> = (0..n).map(|_| self.rng.gen_range(from..to)).collect();
        times.sort_unstable();
        for t in times {
            let who = traders[self.rng.gen_range(0..traders.len())].clone();
            let held = self.balance(&who);
            if held > 0 && !self.rng.gen_bool(buy_share) {
                let part = if self.rng.gen_bool(0.5) { held } else { held / 2 };
                self.sell(&who, part.max(1), t);
            } else {
                let q = sol(self.rng.gen_range(0.05..1.5));
                self.buy(&who, q, t);
            }
        }
    }

    fn wallets(&mut self, n: usize) -> Vec<Address> {
        (0..n).map(|_| address(self.rng)).collect()
    }

    fn finish(self) -> TokenRecord {
        TokenRecord::new(self.mint, self.meta, self.t0, self.txs, self.defi, self.transfers)
            .expect("generated record is consistent")
    }
}

/// Creator mints the supply and seeds the pool with most of it at `t0`.
fn launch(b: &mut Builder, quote: Fixed, pool_share: f64) {
    let creator = b.creator();
    let t0 = b.t0;
    b.mint_to(&creator, SUPPLY, t0);
    let base = (SUPPLY as f64 * pool_share) as u128;
    b.add_liquidity(&creator, base, quote, t0);
}

/// A few transaction-only pings well after the detection window, so the
/// token reads as inactive.
fn dead_tail(b: &mut Builder, from: Timestamp, n: usize) {
    let who = address(b.rng);
    for i in 0..n {
        let t = from + (i as i64 + 1) * 7 * SECONDS_PER_HOUR + b.rng.gen_range(0..600);
        b.failed_sell(&who, t);
    }
}

/// Bundle-style launch: `bundle` wallets are funded in the creation second,
/// outside buyers pump, the bundle and all but `bag_holders` buyers exit.
/// Holder decline over the first day is `(bundle - bag_holders) / (bundle + 2)`.
pub fn pump_and_dump(seed: u64, t0: Timestamp, bundle: usize, bag_holders: usize) -> TokenRecord {
    assert!(bag_holders < bundle);
    let mut r = rng(seed);
    let mut b = Builder::new(&mut r, "Moon Pepe", "MPEPE", t0);
    launch(&mut b, sol(40.0), 0.8);
    let creator = b.creator();
    let wallets = b.wallets(bundle);
    for w in &wallets {
        b.send(&creator, w, SUPPLY / 500, t0);
    }
    let bags = b.wallets(bag_holders);
    let flippers = b.wallets(12);
    let h = SECONDS_PER_HOUR;
    for (i, w) in bags.iter().enumerate() {
        let q = sol(b.rng.gen_range(4.0..8.0));
        b.buy(w, q, t0 + h / 2 + i as i64 * 97);
    }
    for (i, w) in flippers.iter().enumerate() {
        let q = sol(b.rng.gen_range(0.2..1.0));
        b.buy(w, q, t0 + h + i as i64 * 131);
    }
    // gradual exit over several hours
    let mut exits: Vec<&Address> = wallets.iter().chain(flippers.iter()).collect();
    exits.sort();
    for (i, w) in exits.iter().enumerate() {
        let t = t0 + 3 * h + i as i64 * (8 * h / exits.len() as i64);
        b.sell_all(w, t);
    }
    dead_tail(&mut b, t0 + 2 * SECONDS_PER_DAY, 3);
    b.finish()
}

/// Creator-side liquidity pull after buyers pile in.
pub struct LiquidityPull {
    pub asset: QuoteAsset,
    /// First liquidity deposit comes from a separate deployer address.
    pub separate_provider: bool,
    /// Transactions in the day after the pull.
    pub after_txs: usize,
}

pub fn liquidity_manipulation(seed: u64, t0: Timestamp, cfg: &LiquidityPull) -> TokenRecord {
    let mut r = rng(seed);
    let mut b = Builder::new(&mut r, "Solar Cat", "SCAT", t0);
    b.asset = cfg.asset.clone();
    let creator = b.creator();
    let provider = if cfg.separate_provider { address(b.rng) } else { creator.clone() };
    b.mint_to(&creator, SUPPLY, t0);
    if provider != creator {
        b.send(&creator, &provider, SUPPLY * 9 / 10, t0);
    }
    b.add_liquidity(&provider, SUPPLY * 9 / 10, sol(25.0), t0);
    let h = SECONDS_PER_HOUR;
    let buyers = b.wallets(25);
    b.trade(&buyers, 40, t0 + 60, t0 + 6 * h, 0.85);
    let pull = t0 + 7 * h + b.rng.gen_range(0..h);
    let got = b.remove_liquidity(&provider, 1.0, pull);
    assert!(got > sol(25.0), "pull is profitable");
    let stuck = buyers[0].clone();
    for i in 0..cfg.after_txs {
        let t = pull + 60 + (i as i64 * 23 * h) / cfg.after_txs.max(1) as i64;
        b.failed_sell(&stuck, t);
    }
    dead_tail(&mut b, pull + 3 * SECONDS_PER_DAY, 2);
    b.finish()
}

/// Freeze authority kept and used on buyers once they try to sell.
pub fn freeze_abuse(seed: u64, t0: Timestamp, victims: usize, also_dump: bool) -> TokenRecord {
    let mut r = rng(seed);
    let mut b = Builder::new(&mut r, "Honey Doge", "HDOGE", t0);
    b.meta.freeze_authority = Some(b.creator());
    b.meta.mint_authority = Some(b.creator());
    launch(&mut b, sol(15.0), 0.9);
    let h = SECONDS_PER_HOUR;
    let buyers = b.wallets(victims);
    for (i, w) in buyers.iter().enumerate() {
        let q = sol(b.rng.gen_range(0.1..2.0));
        b.buy(w, q, t0 + 300 + i as i64 * 400);
    }
    for (i, w) in buyers.iter().enumerate() {
        b.freeze(w, t0 + 4 * h + i as i64 * 120);
    }
    if also_dump {
        let creator = b.creator();
        let half = b.balance(&creator) / 2;
        b.sell(&creator, half, t0 + 6 * h);
    }
    dead_tail(&mut b, t0 + 2 * SECONDS_PER_DAY, 2);
    b.finish()
}

/// Legitimate quiet token: modest, steady trading and no exit.
pub struct QuietToken {
    pub retain_freeze_authority: bool,
    /// A later, non-creator liquidity provider withdraws at a profit.
    pub whale_provider: bool,
}

pub fn quiet_legit(seed: u64, t0: Timestamp, cfg: &QuietToken) -> TokenRecord {
    let mut r = rng(seed);
    let mut b = Builder::new(&mut r, "Garden Fund", "GRDN", t0);
    if cfg.retain_freeze_authority {
        b.meta.freeze_authority = Some(b.creator());
    }
    b.meta.links.push(Link {
        kind: LinkKind::Website,
        url: "https://example.org".into(),
    });
    launch(&mut b, sol(30.0), 0.7);
    let d = SECONDS_PER_DAY;
    let traders = b.wallets(30);
    b.trade(&traders, 25, t0 + 600, t0 + 2 * d, 0.9);
    if cfg.whale_provider {
        let whale = address(b.rng);
        let q = sol(10.0);
        let base = (b.amm.base as f64 * (q.raw() as f64 / b.amm.quote as f64)) as u128;
        let creator = b.creator();
        b.send(&creator, &whale, base, t0 + 2 * d);
        b.add_liquidity(&whale, base, q, t0 + 2 * d + 60);
        b.trade(&traders, 20, t0 + 2 * d + 120, t0 + 4 * d, 0.95);
        b.remove_liquidity(&whale, 1.0, t0 + 4 * d + 60);
    }
    b.trade(&traders, 30, t0 + 4 * d + 600, t0 + 9 * d, 0.7);
    b.finish()
}

/// Legitimate active token: long life and about `rate_hr` trades per hour
/// over its last day.
pub fn active_legit(seed: u64, t0: Timestamp, days: i64, rate_hr: usize) -> TokenRecord {
    let mut r = rng(seed);
    let mut b = Builder::new(&mut r, "Orbit Labs", "ORBT", t0);
    b.meta.links.push(Link {
        kind: LinkKind::Social,
        url: "https://x.com/orbit".into(),
    });
    launch(&mut b, sol(120.0), 0.85);
    let d = SECONDS_PER_DAY;
    let traders = b.wallets(150);
    for day in 0..days - 1 {
        let from = t0 + day * d + 60;
        b.trade(&traders, 30, from, from + d - 120, 0.6);
        if day % 3 == 2 {
            let creator = b.creator();
            let q = sol(20.0);
            let base = (b.amm.base as f64 * (q.raw() as f64 / b.amm.quote as f64)) as u128;
            if b.balance(&creator) >= base {
                b.add_liquidity(&creator, base, q, from + d / 2);
            }
        }
    }
    let last = t0 + (days - 1) * d;
    b.trade(&traders, rate_hr * 24, last, last + d, 0.5);
    b.finish()
}

/// A generated record with its ground truth.
pub struct LabeledRecord {
    pub record: TokenRecord,
    pub label: Label,
}

/// The bundled rule-fidelity suite: freeze abuse, liquidity pulls and
/// pump-and-dumps (declines between 0.75 and 0.9), active legitimate tokens
/// and quiet legitimate tokens that match no rule.
pub fn fixture_suite(seed: u64) -> Vec<LabeledRecord> {
    let mut out = Vec::new();
    let mut t0 = EPOCH;
    let mut next = || {
        t0 += 11 * SECONDS_PER_DAY;
        t0
    };
    let rug = |k| Label::RugPull(Some(k));
    for (i, (victims, dump)) in [(6, false), (10, false), (3, false), (8, true)].into_iter().enumerate() {
        out.push(LabeledRecord {
            record: freeze_abuse(seed ^ (0x100 + i as u64), next(), victims, dump),
            label: rug(RugKind::FreezeAbuse),
        });
    }
    let pulls = [
        LiquidityPull {
            asset: QuoteAsset::Sol,
            separate_provider: false,
            after_txs: 0,
        },
        LiquidityPull {
            asset: QuoteAsset::Usdc,
            separate_provider: false,
            after_txs: 5,
        },
        LiquidityPull {
            asset: QuoteAsset::Sol,
            separate_provider: true,
            after_txs: 0,
        },
        LiquidityPull {
            asset: QuoteAsset::Sol,
            separate_provider: false,
            after_txs: 60,
        },
    ];
    for (i, cfg) in pulls.iter().enumerate() {
        out.push(LabeledRecord {
            record: liquidity_manipulation(seed ^ (0x200 + i as u64), next(), cfg),
            label: rug(RugKind::LiquidityManipulation),
        });
    }
    // bundle of 47 plus creator and pool: declines 37/49 .. 44/49
    for (i, bags) in [10usize, 8, 6, 4, 3].into_iter().enumerate() {
        out.push(LabeledRecord {
            record: pump_and_dump(seed ^ (0x300 + i as u64), next(), 47, bags),
            label: rug(RugKind::PumpAndDump),
        });
    }
    for (i, (days, rate)) in [(8, 12), (12, 10), (15, 14), (20, 12), (9, 8)].into_iter().enumerate() {
        out.push(LabeledRecord {
            record: active_legit(seed ^ (0x400 + i as u64), next(), days, rate),
            label: Label::Legitimate,
        });
    }
    let quiet = [
        QuietToken {
            retain_freeze_authority: false,
            whale_provider: false,
        },
        QuietToken {
            retain_freeze_authority: true,
            whale_provider: false,
        },
        QuietToken {
            retain_freeze_authority: false,
            whale_provider: true,
        },
    ];
    for (i, cfg) in quiet.iter().enumerate() {
        out.push(LabeledRecord {
            record: quiet_legit(seed ^ (0x500 + i as u64), next(), cfg),
            label: Label::Legitimate,
        });
    }
    out
}

/// Pump-and-dumps with gradual exits whose first-day holder declines are
/// spread over `[0.6, 0.9]`.
pub fn gradual_variants(seed: u64) -> Vec<LabeledRecord> {
    // bundle of 47 (start 49 holders); bags 18 -> 29/49 = 0.59 is excluded
    [17usize, 15, 13, 11, 9, 7, 5, 3]
        .into_iter()
        .enumerate()
        .map(|(i, bags)| LabeledRecord {
            record: pump_and_dump(seed ^ (0x600 + i as u64), EPOCH + i as i64 * 5 * SECONDS_PER_DAY, 47, bags),
            label: Label::RugPull(Some(RugKind::PumpAndDump)),
        })
        .collect()
}

/// Liquidity pull for a syndicate token: `creator` deploys, `provider`
/// seeds and withdraws the pool.
fn syndicate_token(rng: &mut ChaCha8Rng, t0: Timestamp, creator: &str, provider: &str) -> TokenRecord {
    let mut b = Builder::new(rng, "Pump Coin", "PUMP", t0);
    b.meta.creator = creator.to_string();
    b.mint_to(creator, SUPPLY, t0);
    if provider != creator {
        b.send(creator, provider, SUPPLY / 2, t0);
    }
    b.add_liquidity(provider, SUPPLY / 2, sol(5.0), t0 + 1);
    let buyers = b.wallets(4);
    b.trade(&buyers, 6, t0 + 60, t0 + 3 * SECONDS_PER_HOUR, 1.0);
    b.remove_liquidity(provider, 1.0, t0 + 4 * SECONDS_PER_HOUR);
    b.finish()
}

/// One profit sink seeds and drains every token; each token has its own
/// throwaway creator.
pub fn star_syndicate(seed: u64, tokens: usize) -> Vec<TokenRecord> {
    let mut r = rng(seed);
    let sink = address(&mut r);
    (0..tokens)
        .map(|i| {
            let creator = address(&mut r);
            syndicate_token(&mut r, EPOCH + i as i64 * SECONDS_PER_DAY, &creator, &sink)
        })
        .collect()
}

/// A ring of `members` addresses: token `i` is created by member `i` and
/// seeded and drained by member `i + 1`, so the profit sink rotates.
pub fn cluster_syndicate(seed: u64, tokens: usize, members: usize) -> Vec<TokenRecord> {
    let mut r = rng(seed);
    let addrs: Vec<Address> = (0..members).map(|_| address(&mut r)).collect();
    (0..tokens)
        .map(|i| {
            let creator = addrs[i % members].clone();
            let provider = addrs[(i + 1) % members].clone();
            syndicate_token(&mut r, EPOCH + i as i64 * SECONDS_PER_DAY, &creator, &provider)
        })
        .collect()
}

/// One address deploys, seeds and drains every token.
pub fn single_actor_syndicate(seed: u64, tokens: usize) -> Vec<TokenRecord> {
    let mut r = rng(seed);
    let actor = address(&mut r);
    (0..tokens)
        .map(|i| syndicate_token(&mut r, EPOCH + i as i64 * SECONDS_PER_DAY, &actor, &actor))
        .collect()
}

/// Three tokens with round liquidity amounts for profit arithmetic checks.
///
/// - token 1: `A` adds 10 SOL, removes 25 SOL.
/// - token 2: `A` adds 100 USDC, removes 340.5 USDC; first provider `B`
///   adds 5 SOL, removes 7.25 SOL.
/// - token 3: `A` adds 3 SOL, removes 1 SOL.
///
/// Returns the records and the addresses `A` and `B`.
pub fn profit_fixture() -> (Vec<TokenRecord>, Address, Address) {
    let mut r = rng(7);
    let a = address(&mut r);
    let b_addr = address(&mut r);
    let mut make = |t0: Timestamp, ops: &[(&str, QuoteAsset, DefiKind, &str)]| {
        let mut b = Builder::new(&mut r, "Ledger Token", "LGR", t0);
        b.meta.creator = a.clone();
        let creator = b.creator();
        b.mint_to(&creator, SUPPLY, t0);
        for (i, (who, asset, kind, amount)) in ops.iter().enumerate() {
            let t = t0 + 60 * (i as i64 + 1);
            let amount: Fixed = amount.parse().expect("literal amount");
            b.asset = asset.clone();
            let sig = b.tx(t, &[(AMM_PROGRAM, "Liquidity")], vec![], vec![]);
            let quote = match kind {
                DefiKind::AddLiquidity => -amount,
                _ => amount,
            };
            b.activity(&sig, *kind, who, t, 0, quote.raw());
        }
        b.finish()
    };
    use DefiKind::{AddLiquidity as Add, RemoveLiquidity as Rem};
    let (a_s, b_s) = (a.as_str(), b_addr.as_str());
    let t1 = make(EPOCH, &[(a_s, QuoteAsset::Sol, Add, "10"), (a_s, QuoteAsset::Sol, Rem, "25")]);
    let t2 = make(
        EPOCH + SECONDS_PER_DAY,
        &[
            (b_s, QuoteAsset::Sol, Add, "5"),
            (a_s, QuoteAsset::Usdc, Add, "100"),
            (a_s, QuoteAsset::Usdc, Rem, "340.5"),
            (b_s, QuoteAsset::Sol, Rem, "7.25"),
        ],
    );
    let t3 = make(
        EPOCH + 2 * SECONDS_PER_DAY,
        &[(a_s, QuoteAsset::Sol, Add, "3"), (a_s, QuoteAsset::Sol, Rem, "1")],
    );
    (vec![t1, t2, t3], a, b_addr)
}

/// Writes one `<mint>.json` per record.
pub fn write_fixture_dir(dir: &Path, records: &[TokenRecord]) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    for r in records {
        let path = dir.join(format!("{}.json", r.mint));
        std::fs::write(&path, write_record(r)).map_err(|e| IngestError::io(&path, e))?;
    }
    Ok(())
}

pub fn labels_of(suite: &[LabeledRecord]) -> Result<LabeledDataset, EvalError> {
    LabeledDataset::new(suite.iter().map(|s| (s.record.mint.clone(), s.label)))
}

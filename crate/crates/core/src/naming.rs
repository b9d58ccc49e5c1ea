//! Name and symbol deception features: word n-grams, name/symbol mismatch
//! against well-known assets, and look-alike detection.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Address, TokenMeta};

const BUILTIN_REFERENCES: &str = include_str!("../data/references.csv");

/// Reference-name words too generic to show a name relates to an asset.
const GENERIC_WORDS: &[&str] = &["coin", "token", "official", "wrapped", "the"];

#[derive(Debug, Error)]
pub enum NamingError {
    #[error("reference list line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

fn words(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Word-level n-gram counts over lower-cased names split on
/// non-alphanumerics. N-grams are joined with a single space.
pub fn ngram_counts<S: AsRef<str>>(names: &[S], n: usize) -> BTreeMap<String, usize> {
    assert!(n >= 1, "n-gram size must be at least 1");
    let mut out = BTreeMap::new();
    for name in names {
        let ws: Vec<String> = words(name.as_ref()).collect();
        for gram in ws.windows(n) {
            *out.entry(gram.join(" ")).or_insert(0) += 1;
        }
    }
    out
}

/// `term,count` rows, most frequent first.
pub fn ngram_csv(counts: &BTreeMap<String, usize>) -> String {
    let mut rows: Vec<_> = counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let mut out = String::from("term,count\n");
    for (term, count) in rows {
        let term = if term.contains(',') || term.contains('"') {
            format!("\"{}\"", term.replace('"', "\"\""))
        } else {
            term.clone()
        };
        out.push_str(&format!("{term},{count}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    /// Case-folded.
    pub symbol: String,
    /// Case-folded.
    pub name: String,
    pub verified_mint: Option<Address>,
}

/// Well-known asset names and symbols, case-folded and unique by symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceList {
    pub entries: Vec<Reference>,
}

impl ReferenceList {
    /// Parses `symbol,name[,verified_mint]` lines. `#` comments, blank lines
    /// and a `symbol,...` header are skipped. Later duplicates of a symbol
    /// are dropped.
    pub fn parse(text: &str) -> Result<Self, NamingError> {
        let mut list = ReferenceList::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.to_lowercase().starts_with("symbol,") {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let symbol = fold(cols.next().unwrap_or_default());
            let name = fold(cols.next().unwrap_or_default());
            let mint = cols.next().filter(|m| !m.is_empty()).map(str::to_string);
            if symbol.is_empty() {
                return Err(NamingError::Format {
                    line: i + 1,
                    reason: "empty symbol".into(),
                });
            }
            if seen.insert(symbol.clone()) {
                list.entries.push(Reference {
                    symbol,
                    name,
                    verified_mint: mint,
                });
            }
        }
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<Self, NamingError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_REFERENCES).expect("bundled reference list parses")
    }
}

/// Symbol matches a reference symbol while the name shows no relation to
/// that asset. Returns the reason when flagged.
pub fn detect_symbol_mismatch(mint: &str, meta: &TokenMeta, refs: &ReferenceList) -> Option<String> {
    let symbol = fold(&meta.symbol);
    let name = fold(&meta.name);
    let r = refs.entries.iter().find(|r| r.symbol == symbol)?;
    if r.verified_mint.as_deref() == Some(mint) {
        return None;
    }
    let related = name.contains(&r.symbol)
        || words(&r.name)
            .filter(|w| w.chars().count() >= 3 && !GENERIC_WORDS.contains(&w.as_str()))
            .any(|w| name.contains(&w));
    if related {
        return None;
    }
    Some(format!(
        "symbol {symbol:?} matches reference {:?} but name {name:?} is unrelated",
        r.name
    ))
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max_len`; two empty strings are identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    /// Edit-distance similarity at or above the threshold.
    Similar,
    /// Reference text followed by a short suffix.
    Suffix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lookalike {
    pub matched_reference: String,
    pub similarity: f64,
    pub rule: MatchRule,
}

pub const DEFAULT_LOOKALIKE_THRESHOLD: f64 = 0.8;
pub const MAX_SUFFIX_CHARS: usize = 3;

/// Closest reference the name or symbol imitates, if any. The reference's
/// own verified mint is never flagged against it.
pub fn detect_lookalike(
    mint: &str,
    meta: &TokenMeta,
    refs: &ReferenceList,
    threshold: f64,
) -> Option<Lookalike> {
    let fields = [fold(&meta.name), fold(&meta.symbol)];
    let mut best: Option<Lookalike> = None;
    for r in &refs.entries {
        if r.verified_mint.as_deref() == Some(mint) {
            continue;
        }
        for target in [&r.symbol, &r.name] {
            if target.is_empty() {
                continue;
            }
            for field in &fields {
                let sim = similarity(field, target);
                let extra = field.chars().count().saturating_sub(target.chars().count());
                let rule = if sim >= threshold {
                    MatchRule::Similar
                } else if field.starts_with(target.as_str()) && (1..=MAX_SUFFIX_CHARS).contains(&extra) {
                    MatchRule::Suffix
                } else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| sim > b.similarity) {
                    best = Some(Lookalike {
                        matched_reference: target.clone(),
                        similarity: sim,
                        rule,
                    });
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamingFlags {
    pub mint: Address,
    pub inconsistent_metadata: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconsistency_reason: Option<String>,
    pub lookalike: Option<Lookalike>,
}

pub fn naming_flags(mint: &str, meta: &TokenMeta, refs: &ReferenceList, threshold: f64) -> NamingFlags {
    let reason = detect_symbol_mismatch(mint, meta, refs);
    NamingFlags {
        mint: mint.to_string(),
        inconsistent_metadata: reason.is_some(),
        inconsistency_reason: reason,
        lookalike: detect_lookalike(mint, meta, refs, threshold),
    }
}

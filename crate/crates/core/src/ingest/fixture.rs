use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde_json::Value;

use super::schema::read_record;
use super::{Backend, IngestError, Result, SignatureInfo};
use crate::model::{TokenRecord, TransactionRecord};

/// Directory of `<mint>.json` documents in the fixture schema.
pub struct FixtureBackend {
    dir: PathBuf,
    by_signature: OnceLock<BTreeMap<String, PathBuf>>,
}

impl FixtureBackend {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(IngestError::InvalidSource(format!(
                "fixture directory {} does not exist",
                dir.display()
            )));
        }
        Ok(FixtureBackend {
            dir,
            by_signature: OnceLock::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Mints with a fixture file, sorted.
    pub fn mints(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir).map_err(|e| IngestError::io(&self.dir, e))? {
            let path = entry.map_err(|e| IngestError::io(&self.dir, e))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    out.push(stem.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn path_for(&self, mint: &str) -> PathBuf {
        self.dir.join(format!("{mint}.json"))
    }

    fn read_text(&self, path: &Path) -> Result<Option<String>> {
        match std::fs::read_to_string(path) {
            Ok(t) => Ok(Some(t)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(IngestError::io(path, e)),
        }
    }

    fn load(&self, mint: &str) -> Result<Option<TokenRecord>> {
        match self.read_text(&self.path_for(mint))? {
            Some(text) => read_record(&text, Some(mint)).map(Some),
            None => Ok(None),
        }
    }

    /// Signature to file index, built on first use. Unreadable files are
    /// skipped here and reported when the mint itself is requested.
    fn index(&self) -> Result<&BTreeMap<String, PathBuf>> {
        if let Some(ix) = self.by_signature.get() {
            return Ok(ix);
        }
        let mut ix = BTreeMap::new();
        for mint in self.mints()? {
            let path = self.path_for(&mint);
            let Some(text) = self.read_text(&path)? else { continue };
            let Ok(doc) = serde_json::from_str::<Value>(&text) else { continue };
            for tx in doc["transactions"].as_array().into_iter().flatten() {
                if let Some(sig) = tx["signature"].as_str() {
                    ix.entry(sig.to_string()).or_insert_with(|| path.clone());
                }
            }
        }
        Ok(self.by_signature.get_or_init(|| ix))
    }
}

impl Backend for FixtureBackend {
    fn fetch_signatures(&self, address: &str, limit: usize) -> Result<Vec<SignatureInfo>> {
        let Some(record) = self.load(address)? else {
            return Ok(Vec::new());
        };
        Ok(record
            .transactions
            .iter()
            .rev()
            .take(limit)
            .map(|t| SignatureInfo {
                signature: t.signature.clone(),
                timestamp: t.timestamp,
            })
            .collect())
    }

    fn fetch_transaction(&self, signature: &str) -> Result<TransactionRecord> {
        let path = self
            .index()?
            .get(signature)
            .cloned()
            .ok_or_else(|| IngestError::NotFound(signature.to_string()))?;
        let text = self
            .read_text(&path)?
            .ok_or_else(|| IngestError::NotFound(signature.to_string()))?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| IngestError::parse(e.to_string(), &text))?;
        let raw = doc["transactions"]
            .as_array()
            .into_iter()
            .flatten()
            .find(|tx| tx["signature"].as_str() == Some(signature))
            .ok_or_else(|| IngestError::NotFound(signature.to_string()))?;
        serde_json::from_value(raw.clone()).map_err(|e| IngestError::parse(e.to_string(), raw.to_string()))
    }

    fn fetch_token_bundle(&self, mint: &str) -> Result<TokenRecord> {
        self.load(mint)?
            .ok_or_else(|| IngestError::UnknownAddress(mint.to_string()))
    }

    fn describe(&self) -> String {
        format!("fixture:{}", self.dir.display())
    }
}

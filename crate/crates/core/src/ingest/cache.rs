use std::io::Write;
use std::path::{Path, PathBuf};

use super::schema::{read_record, write_record, SCHEMA_VERSION};
use super::{IngestError, Result};
use crate::model::TokenRecord;

/// Per-mint record store at `<root>/v<schema>/<mint>.json`. Writes go to a
/// temporary file in the same directory and are renamed into place.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(root: impl AsRef<Path>) -> Self {
        Cache {
            dir: root.as_ref().join(format!("v{SCHEMA_VERSION}")),
        }
    }

    /// Directory holding the record files; usable as a fixture directory.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, mint: &str) -> PathBuf {
        self.dir.join(format!("{mint}.json"))
    }

    pub fn get(&self, mint: &str) -> Result<Option<TokenRecord>> {
        let path = self.path_for(mint);
        match std::fs::read_to_string(&path) {
            Ok(text) => read_record(&text, Some(mint)).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(IngestError::io(path, e)),
        }
    }

    pub fn put(&self, record: &TokenRecord) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| IngestError::io(&self.dir, e))?;
        let path = self.path_for(&record.mint);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| IngestError::io(&self.dir, e))?;
        tmp.write_all(write_record(record).as_bytes())
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| IngestError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| IngestError::io(&path, e.error))?;
        Ok(())
    }
}

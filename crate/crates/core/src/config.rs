//! Run configuration: command-line flags over environment over config file
//! over defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::ingest::{CachePolicy, DataSource, SourceKind};
use crate::model::DetectorParams;

pub const DEFAULT_RPC_URL: &str = "https://api.mainnet-beta.solana.com";
pub const DEFAULT_EXPLORER_URL: &str = "https://pro-api.solscan.io/v2.0";
pub const DEFAULT_RATE_LIMIT: f64 = 5.0;
/// Cache root used by live sources when none is configured.
pub const DEFAULT_CACHE_DIR: &str = ".rugscan-cache";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "jsonl" | "json-lines" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// `rpc`, `explorer` or `fixture:<dir>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    Rpc,
    Explorer,
    Fixture(PathBuf),
}

impl FromStr for SourceSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rpc" => Ok(SourceSpec::Rpc),
            "explorer" => Ok(SourceSpec::Explorer),
            _ => match s.strip_prefix("fixture:") {
                Some(dir) if !dir.is_empty() => Ok(SourceSpec::Fixture(PathBuf::from(dir))),
                _ => Err(format!("unknown source {s:?} (expected rpc, explorer or fixture:<dir>)")),
            },
        }
    }
}

/// Config file layout (TOML). Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub source: Option<String>,
    pub rpc_url: Option<String>,
    pub explorer_url: Option<String>,
    pub explorer_key: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub rate_limit: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub price_table: Option<PathBuf>,
    pub refs: Option<PathBuf>,
    #[serde(default)]
    pub detector: DetectorSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub tau_active: Option<f64>,
    pub tau_down: Option<f64>,
    pub detection_window_hours: Option<f64>,
    pub post_remove_window_hours: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

/// Values given on the command line or through environment variables.
/// `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub source: Option<String>,
    pub rpc_url: Option<String>,
    pub explorer_url: Option<String>,
    pub explorer_key: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub rate_limit: Option<f64>,
    pub tau_active: Option<f64>,
    pub tau_down: Option<f64>,
    pub window_hours: Option<f64>,
    pub post_remove_hours: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub price_table: Option<PathBuf>,
    pub refs: Option<PathBuf>,
    pub refresh: bool,
    pub offline: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub cache_dir: Option<PathBuf>,
    pub cache_policy: CachePolicy,
    pub params: DetectorParams,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub price_table: Option<PathBuf>,
    pub reference_list: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(o: &Overrides, file: &FileConfig) -> Result<RunConfig, ConfigError> {
        let source_text = o.source.clone().or_else(|| file.source.clone()).unwrap_or_else(|| "rpc".into());
        let spec: SourceSpec = source_text
            .parse()
            .map_err(|reason| ConfigError::Invalid { field: "source", reason })?;
        let rpc_url = o
            .rpc_url
            .clone()
            .or_else(|| file.rpc_url.clone())
            .unwrap_or_else(|| DEFAULT_RPC_URL.into());
        let rate_limit = o.rate_limit.or(file.rate_limit).unwrap_or(DEFAULT_RATE_LIMIT);
        let kind = match spec {
            SourceSpec::Rpc => SourceKind::LiveRpc { endpoint: rpc_url },
            SourceSpec::Explorer => SourceKind::ExplorerApi {
                endpoint: o
                    .explorer_url
                    .clone()
                    .or_else(|| file.explorer_url.clone())
                    .unwrap_or_else(|| DEFAULT_EXPLORER_URL.into()),
                api_key: o.explorer_key.clone().or_else(|| file.explorer_key.clone()),
                rpc_endpoint: rpc_url,
            },
            SourceSpec::Fixture(dir) => SourceKind::Fixture { dir },
        };
        let live = !matches!(kind, SourceKind::Fixture { .. });
        let source = DataSource { kind, rate_limit };
        source.validate().map_err(|e| ConfigError::Invalid {
            field: "rate_limit",
            reason: e.to_string(),
        })?;

        let cache_dir = o
            .cache_dir
            .clone()
            .or_else(|| file.cache_dir.clone())
            .or_else(|| live.then(|| PathBuf::from(DEFAULT_CACHE_DIR)));
        if o.offline && cache_dir.is_none() {
            return Err(ConfigError::Invalid {
                field: "offline",
                reason: "offline runs need a cache directory".into(),
            });
        }
        let cache_policy = match (o.offline, o.refresh) {
            (true, _) => CachePolicy::CacheOnly,
            (false, true) => CachePolicy::Refresh,
            _ => CachePolicy::PreferCache,
        };

        let d = DetectorParams::default();
        let fd = &file.detector;
        let params = DetectorParams {
            tau_active: o.tau_active.or(fd.tau_active).unwrap_or(d.tau_active),
            tau_down: o.tau_down.or(fd.tau_down).unwrap_or(d.tau_down),
            detection_window_hours: o
                .window_hours
                .or(fd.detection_window_hours)
                .unwrap_or(d.detection_window_hours),
            post_remove_window_hours: o
                .post_remove_hours
                .or(fd.post_remove_window_hours)
                .unwrap_or(d.post_remove_window_hours),
        };
        params.validate().map_err(|e| ConfigError::Invalid {
            field: "detector",
            reason: e.to_string(),
        })?;

        let jobs = o
            .jobs
            .or(file.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if jobs == 0 {
            return Err(ConfigError::Invalid {
                field: "jobs",
                reason: "must be at least 1".into(),
            });
        }
        let format = match o.format.clone().or_else(|| file.format.clone()) {
            Some(f) => f.parse().map_err(|reason| ConfigError::Invalid { field: "format", reason })?,
            None => OutputFormat::default(),
        };
        Ok(RunConfig {
            source,
            cache_dir,
            cache_policy,
            params,
            jobs,
            out: o.out.clone().or_else(|| file.out.clone()),
            format,
            price_table: o.price_table.clone().or_else(|| file.price_table.clone()),
            reference_list: o.refs.clone().or_else(|| file.refs.clone()),
        })
    }
}

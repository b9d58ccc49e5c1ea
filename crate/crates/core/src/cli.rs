//! Command-line front end. Stages exchange files: `batch` writes a report
//! directory that `profits`, `syndicates`, `naming` and `stats` read back.
//!
//! Exit codes: 0 success, 2 data error, 3 configuration error or missing
//! input.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{ConfigError, FileConfig, OutputFormat, Overrides, RunConfig};
use crate::detector::{classify, DetectError, Verdict};
use crate::eval::{self, EvalError, LabeledDataset, Prediction};
use crate::features::{dataset_summary, summary_csv, token_behavior_stats};
use crate::ingest::{self, Cache, IngestError, Ingestor, RetryPolicy};
use crate::model::{Address, DetectorParams, TokenRecord};
use crate::naming::{self, ReferenceList};
use crate::profits::{aggregate_losses, loss_csv, trace_profits, PriceTable, ProfitError};
use crate::report::{self, Manifest, MANIFEST_FILE, REPORT_FILE, SUMMARY_FILE};
use crate::syndicates::{build_address_graph, extract_groups, group_stats, stats_csv, to_dot, SyndicateConfig};
use crate::synth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

const DEFAULT_BATCH_DIR: &str = "rugscan-out";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn data(m: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_DATA,
            message: m.to_string(),
        }
    }

    pub fn config(m: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: m.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidMint(_) | IngestError::InvalidSource(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Params(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Detect(d) => d.into(),
            EvalError::Csv(_) | EvalError::Format { .. } | EvalError::DuplicateMint(_) => CliError::data(e),
            _ => CliError::config(e),
        }
    }
}

impl From<ProfitError> for CliError {
    fn from(e: ProfitError) -> Self {
        CliError::config(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "rugscan", version, about = "Rule-based rug pull detection for Solana tokens")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data source: rpc, explorer or fixture:<dir>.
    #[arg(long, global = true)]
    pub source: Option<String>,
    #[arg(long, global = true, env = ingest::ENV_RPC_URL)]
    pub rpc_url: Option<String>,
    #[arg(long, global = true, env = ingest::ENV_EXPLORER_URL)]
    pub explorer_url: Option<String>,
    #[arg(long, global = true, env = ingest::ENV_EXPLORER_KEY, hide_env_values = true)]
    pub explorer_key: Option<String>,
    #[arg(long, global = true, env = ingest::ENV_CACHE_DIR)]
    pub cache_dir: Option<PathBuf>,
    /// Live requests per second.
    #[arg(long, global = true)]
    pub rate_limit: Option<f64>,
    /// Always refetch, using the cache only when the endpoint is down.
    #[arg(long, global = true)]
    pub refresh: bool,
    /// Serve everything from the cache; never contact the source.
    #[arg(long, global = true, conflicts_with = "refresh")]
    pub offline: bool,
    #[arg(long, global = true)]
    pub tau_active: Option<f64>,
    #[arg(long, global = true)]
    pub tau_down: Option<f64>,
    /// Detection window after creation, in hours.
    #[arg(long, global = true)]
    pub window_hours: Option<f64>,
    /// Activity window after a liquidity removal, in hours.
    #[arg(long, global = true)]
    pub post_remove_hours: Option<f64>,
    /// Worker threads (default: logical CPUs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output path (a directory for `batch`; stdout otherwise when unset).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// CSV of `asset,usd_price`.
    #[arg(long, global = true)]
    pub price_table: Option<PathBuf>,
    /// CSV of reference `symbol,name[,verified_mint]`.
    #[arg(long, global = true)]
    pub refs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthSet {
    Suite,
    Gradual,
    Star,
    Cluster,
    Single,
    Profits,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one mint and print its verdict.
    Scan { mint: String },
    /// Classify every mint in a list file (one per line) into a report directory.
    Batch { list: PathBuf },
    /// Precision, recall, F1 and applicability against labels.
    Eval {
        labels: PathBuf,
        /// Score an existing batch report instead of rescanning.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Metrics for tau_down from 0.50 to 1.00 in steps of 0.01.
    Sweep { labels: PathBuf },
    /// Liquidity cash-out totals for the rug pulls in a report.
    Profits { report: PathBuf },
    /// Address groups behind the rug pulls in a report.
    Syndicates {
        report: PathBuf,
        /// Groups need members + tokens above this.
        #[arg(long, default_value_t = 50)]
        min_size: usize,
        #[arg(long, default_value_t = 0.8)]
        star_share: f64,
        /// Write one Graphviz file per group here.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
    },
    /// Name and symbol deception flags for the tokens in a report.
    Naming {
        report: PathBuf,
        #[arg(long, default_value_t = naming::DEFAULT_LOOKALIKE_THRESHOLD)]
        threshold: f64,
        /// Also write word n-gram counts over rug pull names to this CSV.
        #[arg(long)]
        ngrams: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        ngram_size: usize,
    },
    /// Behavior statistics of rug pull and legitimate tokens in a report.
    Stats { report: PathBuf },
    /// Write synthetic fixtures.
    Synth {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthSet::Suite)]
        set: SynthSet,
        #[arg(long, default_value_t = synth::DEFAULT_SEED)]
        seed: u64,
        /// Token count for syndicate sets.
        #[arg(long, default_value_t = 30)]
        tokens: usize,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            source: self.source.clone(),
            rpc_url: self.rpc_url.clone(),
            explorer_url: self.explorer_url.clone(),
            explorer_key: self.explorer_key.clone(),
            cache_dir: self.cache_dir.clone(),
            rate_limit: self.rate_limit,
            tau_active: self.tau_active,
            tau_down: self.tau_down,
            window_hours: self.window_hours,
            post_remove_hours: self.post_remove_hours,
            jobs: self.jobs,
            out: self.out.clone(),
            format: self.format.clone(),
            price_table: self.price_table.clone(),
            refs: self.refs.clone(),
            refresh: self.refresh,
            offline: self.offline,
        }
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(RunConfig::resolve(&self.overrides(), &file)?)
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Synth { dir, set, seed, tokens } = &cli.command {
        return cmd_synth(dir, *set, *seed, *tokens);
    }
    let cfg = cli.global.run_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(CliError::config)?;
    pool.install(|| match cli.command {
        Command::Scan { mint } => cmd_scan(&mint, &cfg),
        Command::Batch { list } => cmd_batch(&list, &cfg),
        Command::Eval { labels, report } => cmd_eval(&labels, report.as_deref(), &cfg),
        Command::Sweep { labels } => cmd_sweep(&labels, &cfg),
        Command::Profits { report } => cmd_profits(&report, &cfg),
        Command::Syndicates {
            report,
            min_size,
            star_share,
            dot_dir,
        } => cmd_syndicates(
            &report,
            &SyndicateConfig {
                min_combined_size: min_size,
                star_share,
            },
            dot_dir.as_deref(),
            &cfg,
        ),
        Command::Naming {
            report,
            threshold,
            ngrams,
            ngram_size,
        } => cmd_naming(&report, threshold, ngrams.as_deref(), ngram_size, &cfg),
        Command::Stats { report } => cmd_stats(&report, &cfg),
        Command::Synth { .. } => unreachable!("handled above"),
    })
}

fn ingestor(cfg: &RunConfig) -> Result<Ingestor, CliError> {
    Ok(Ingestor::from_source(
        &cfg.source,
        cfg.cache_dir.as_ref().map(Cache::new),
        cfg.cache_policy,
        RetryPolicy::default(),
    )?)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::config(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, content).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(cfg: &RunConfig, content: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => write_file(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn predict(ing: &Ingestor, mint: &str, params: &DetectorParams) -> Prediction {
    let undecided = |e: &dyn std::fmt::Display| Prediction::Undecided {
        mint: mint.to_string(),
        error: e.to_string(),
    };
    match ing.fetch_token_bundle(mint) {
        Ok(record) => match classify(&record, params) {
            Ok(v) => Prediction::Decided(v),
            Err(e) => undecided(&e),
        },
        Err(e) => undecided(&e),
    }
}

/// Predictions for `mints`, sorted by mint.
fn predict_all(ing: &Ingestor, mints: &BTreeSet<String>, params: &DetectorParams) -> Vec<Prediction> {
    let mints: Vec<&String> = mints.iter().collect();
    mints.par_iter().map(|m| predict(ing, m, params)).collect()
}

fn load_records(ing: &Ingestor, mints: &BTreeSet<Address>) -> Result<BTreeMap<Address, TokenRecord>, CliError> {
    let mints: Vec<&Address> = mints.iter().collect();
    let records: Vec<Result<TokenRecord, IngestError>> = mints.par_iter().map(|m| ing.fetch_token_bundle(m)).collect();
    let mut out = BTreeMap::new();
    for (m, r) in mints.into_iter().zip(records) {
        out.insert(m.clone(), r.map_err(|e| CliError::data(format!("{m}: {e}")))?);
    }
    Ok(out)
}

fn read_report(path: &Path) -> Result<Vec<Prediction>, CliError> {
    let path = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
    report::read_jsonl(&read_input(&path)?).map_err(CliError::data)
}

fn decided(preds: &[Prediction]) -> Vec<&Verdict> {
    preds
        .iter()
        .filter_map(|p| match p {
            Prediction::Decided(v) => Some(v),
            Prediction::Undecided { .. } => None,
        })
        .collect()
}

fn rug_mints(preds: &[Prediction]) -> BTreeSet<Address> {
    decided(preds)
        .into_iter()
        .filter(|v| v.outcome.is_rug_pull())
        .map(|v| v.mint.clone())
        .collect()
}

fn price_table(cfg: &RunConfig) -> Result<PriceTable, CliError> {
    let path = cfg
        .price_table
        .as_ref()
        .ok_or_else(|| CliError::config("a price table is required (--price-table)"))?;
    if !path.exists() {
        return Err(CliError::config(format!("price table {} not found", path.display())));
    }
    Ok(PriceTable::load(path)?)
}

fn json_line<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn json_pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_scan(mint: &str, cfg: &RunConfig) -> Result<(), CliError> {
    ingest::validate_mint(mint)?;
    let ing = ingestor(cfg)?;
    let record = ing.fetch_token_bundle(mint)?;
    let verdict = classify(&record, &cfg.params)?;
    let p = Prediction::Decided(verdict);
    let out = match cfg.format {
        OutputFormat::Json => report::write_jsonl(std::slice::from_ref(&p)),
        OutputFormat::Csv => report::summary_csv(std::slice::from_ref(&p)),
    };
    emit(cfg, &out)
}

fn read_mint_list(path: &Path) -> Result<BTreeSet<String>, CliError> {
    Ok(read_input(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn cmd_batch(list: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let mints = read_mint_list(list)?;
    let ing = ingestor(cfg)?;
    let started = now();
    let preds = predict_all(&ing, &mints, &cfg.params);
    let manifest = Manifest::new(&cfg.source.describe(), cfg.params, &preds, started, now());
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_BATCH_DIR));
    write_file(&dir.join(REPORT_FILE), &report::write_jsonl(&preds))?;
    write_file(&dir.join(SUMMARY_FILE), &report::summary_csv(&preds))?;
    write_file(&dir.join(MANIFEST_FILE), &json_pretty(&manifest))?;
    eprintln!(
        "scanned {} tokens: {} rug pulls, {} undecided; report in {}",
        manifest.total,
        manifest.rug_pulls,
        manifest.counts["undecided"],
        dir.display()
    );
    Ok(())
}

fn metrics_csv(m: &eval::Metrics) -> String {
    let c = m.confusion;
    format!(
        "precision,recall,f1,applicability,tp,fp,tn,fn,undecided,kind_accuracy\n{:.4},{:.4},{:.4},{:.4},{},{},{},{},{},{}\n",
        m.precision,
        m.recall,
        m.f1,
        m.applicability,
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        c.undecided,
        m.kind_accuracy.map(|k| format!("{k:.4}")).unwrap_or_default()
    )
}

pub fn cmd_eval(labels: &Path, report_path: Option<&Path>, cfg: &RunConfig) -> Result<(), CliError> {
    if !labels.exists() {
        return Err(CliError::config(format!("labels file {} not found", labels.display())));
    }
    let labels = LabeledDataset::load(labels)?;
    let preds = match report_path {
        Some(p) => read_report(p)?,
        None => {
            let ing = ingestor(cfg)?;
            predict_all(&ing, &labels.mints().cloned().collect(), &cfg.params)
        }
    };
    let m = eval::compute_metrics(&preds, &labels)?;
    let out = match cfg.format {
        OutputFormat::Json => json_pretty(&m),
        OutputFormat::Csv => metrics_csv(&m),
    };
    emit(cfg, &out)
}

pub fn cmd_sweep(labels: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    if !labels.exists() {
        return Err(CliError::config(format!("labels file {} not found", labels.display())));
    }
    let labels = LabeledDataset::load(labels)?;
    let ing = ingestor(cfg)?;
    let records = load_records(&ing, &labels.mints().cloned().collect())?;
    let points = eval::sweep_tau_down(&records, &labels, &cfg.params)?;
    let out = match cfg.format {
        OutputFormat::Csv => eval::sweep_csv(&points),
        OutputFormat::Json => points.iter().map(json_line).collect(),
    };
    emit(cfg, &out)
}

pub fn cmd_profits(report_path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let preds = read_report(report_path)?;
    let prices = price_table(cfg)?;
    let ing = ingestor(cfg)?;
    let records = load_records(&ing, &rug_mints(&preds))?;
    let profits: Vec<_> = records.values().flat_map(trace_profits).collect();
    let summary = aggregate_losses(&profits, &prices)?;
    let out = match cfg.format {
        OutputFormat::Csv => loss_csv(&summary),
        OutputFormat::Json => json_pretty(&serde_json::json!({"records": profits, "summary": summary})),
    };
    emit(cfg, &out)
}

pub fn cmd_syndicates(
    report_path: &Path,
    syn: &SyndicateConfig,
    dot_dir: Option<&Path>,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let preds = read_report(report_path)?;
    let prices = price_table(cfg)?;
    let ing = ingestor(cfg)?;
    let records: Vec<TokenRecord> = load_records(&ing, &rug_mints(&preds))?.into_values().collect();
    let profits: Vec<_> = records.iter().flat_map(trace_profits).collect();
    let graph = build_address_graph(&records, &profits);
    let groups = extract_groups(&graph, syn, &prices).map_err(CliError::config)?;
    if let Some(dir) = dot_dir {
        for g in &groups {
            write_file(&dir.join(format!("{}.dot", g.group_id)), &to_dot(&graph, g))?;
        }
    }
    let out = match cfg.format {
        OutputFormat::Json => groups.iter().map(json_line).collect(),
        OutputFormat::Csv => match group_stats(&groups) {
            Ok(rows) => stats_csv(&rows),
            Err(_) => stats_csv(&[]),
        },
    };
    eprintln!("{} syndicate groups", groups.len());
    emit(cfg, &out)
}

pub fn cmd_naming(
    report_path: &Path,
    threshold: f64,
    ngrams: Option<&Path>,
    ngram_size: usize,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    if ngram_size == 0 {
        return Err(CliError::config("n-gram size must be at least 1"));
    }
    let preds = read_report(report_path)?;
    let refs = match &cfg.reference_list {
        Some(p) if !p.exists() => return Err(CliError::config(format!("reference list {} not found", p.display()))),
        Some(p) => ReferenceList::load(p).map_err(CliError::config)?,
        None => ReferenceList::builtin(),
    };
    let ing = ingestor(cfg)?;
    let mints: BTreeSet<Address> = decided(&preds).iter().map(|v| v.mint.clone()).collect();
    let records = load_records(&ing, &mints)?;
    let flags: Vec<_> = records
        .values()
        .map(|r| naming::naming_flags(&r.mint, &r.meta, &refs, threshold))
        .collect();
    if let Some(path) = ngrams {
        let rugs = rug_mints(&preds);
        let names: Vec<&str> = records
            .values()
            .filter(|r| rugs.contains(&r.mint))
            .map(|r| r.meta.name.as_str())
            .collect();
        write_file(path, &naming::ngram_csv(&naming::ngram_counts(&names, ngram_size)))?;
    }
    let out = match cfg.format {
        OutputFormat::Json => flags.iter().map(json_line).collect(),
        OutputFormat::Csv => {
            let mut s = String::from("mint,inconsistent_metadata,lookalike,similarity,rule\n");
            for f in &flags {
                let (r, sim, rule) = match &f.lookalike {
                    Some(l) => (
                        l.matched_reference.clone(),
                        format!("{:.4}", l.similarity),
                        format!("{:?}", l.rule).to_lowercase(),
                    ),
                    None => Default::default(),
                };
                let _ = writeln!(s, "{},{},{},{},{}", f.mint, f.inconsistent_metadata, r, sim, rule);
            }
            s
        }
    };
    emit(cfg, &out)
}

pub fn cmd_stats(report_path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let preds = read_report(report_path)?;
    let ing = ingestor(cfg)?;
    let verdicts = decided(&preds);
    let mints: BTreeSet<Address> = verdicts.iter().map(|v| v.mint.clone()).collect();
    let records = load_records(&ing, &mints)?;
    let (mut rug, mut legit) = (Vec::new(), Vec::new());
    for v in verdicts {
        let s = token_behavior_stats(&records[&v.mint]).map_err(CliError::data)?;
        if v.outcome.is_rug_pull() {
            rug.push(s);
        } else {
            legit.push(s);
        }
    }
    let mut groups = Vec::new();
    for (label, stats) in [("rug_pull", &rug), ("legitimate", &legit)] {
        if let Ok(summary) = dataset_summary(stats) {
            groups.push((label, summary));
        }
    }
    let out = match cfg.format {
        OutputFormat::Csv => {
            let refs: Vec<(&str, &_)> = groups.iter().map(|(l, s)| (*l, s)).collect();
            summary_csv(&refs)
        }
        OutputFormat::Json => json_pretty(&groups.iter().cloned().collect::<BTreeMap<_, _>>()),
    };
    emit(cfg, &out)
}

fn mint_list(records: &[TokenRecord]) -> String {
    let mut mints: Vec<&str> = records.iter().map(|r| r.mint.as_str()).collect();
    mints.sort_unstable();
    mints.iter().map(|m| format!("{m}\n")).collect()
}

pub fn cmd_synth(dir: &Path, set: SynthSet, seed: u64, tokens: usize) -> Result<(), CliError> {
    let (records, labels) = match set {
        SynthSet::Suite | SynthSet::Gradual => {
            let suite = if set == SynthSet::Suite {
                synth::fixture_suite(seed)
            } else {
                synth::gradual_variants(seed)
            };
            let labels = synth::labels_of(&suite).map_err(CliError::data)?;
            (suite.into_iter().map(|s| s.record).collect(), Some(labels))
        }
        SynthSet::Star => (synth::star_syndicate(seed, tokens), None),
        SynthSet::Cluster => (synth::cluster_syndicate(seed, tokens, tokens.saturating_sub(6).max(2)), None),
        SynthSet::Single => (synth::single_actor_syndicate(seed, tokens), None),
        SynthSet::Profits => (synth::profit_fixture().0, None),
    };
    synth::write_fixture_dir(dir, &records).map_err(CliError::config)?;
    write_file(&dir.join("mints.txt"), &mint_list(&records))?;
    if let Some(l) = labels {
        write_file(&dir.join("labels.csv"), &l.to_csv())?;
    }
    eprintln!("wrote {} fixtures to {}", records.len(), dir.display());
    Ok(())
}

//! Command-line driver: JSON run configs, subcommands and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{
    expect_count, export_fewrel_instructions, load_records, load_split, BenchmarkSplit, ClaimRecord, DatasetSource,
    FieldMapping,
};
use crate::evalkit::{ablation_grid, challenge_breakdown, score, EvalReport};
use crate::gateway::{
    record_replay, ApiMode, CompletionBackend, Gateway, HttpBackend, HttpConfig, ReplayBackend, ReplayStore,
    ResponseCache, DEFAULT_MAX_TOKENS, DEFAULT_PARALLELISM,
};
use crate::pipeline::{
    extract_relations, read_traces, reorganize, run_batch, write_jsonl, write_traces, AblationFlags, ClaimRunTrace,
    PipelineSettings,
};
use crate::prompts::{builtin_few_shot, load_few_shot, PromptTemplate, DEFAULT_CHAR_BUDGET};
use crate::relation::{load_catalog, RelationCatalog};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FATAL: u8 = 1;
pub const EXIT_CLAIM_ERRORS: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Http,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub kind: BackendChoice,
    #[serde(default)]
    pub base_url: Option<String>,
    pub model_id: String,
    #[serde(default)]
    pub api_mode: ApiMode,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub replay_path: Option<PathBuf>,
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_retries() -> u32 {
    3
}

fn default_parallelism() -> usize {
    DEFAULT_PARALLELISM
}

fn default_budget() -> usize {
    DEFAULT_CHAR_BUDGET
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptsSection {
    #[serde(default)]
    pub catalog_path: Option<PathBuf>,
    #[serde(default)]
    pub few_shot_path: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub char_budget: usize,
}

impl Default for PromptsSection {
    fn default() -> Self {
        Self {
            catalog_path: None,
            few_shot_path: None,
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

/// `"canonical"`, `"hover"`, `"feverous"`, or an explicit field mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MappingSpec {
    Preset(String),
    Custom(FieldMapping),
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec::Preset("canonical".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dataset_path: PathBuf,
    /// Report column id; the benchmark ids also pick source and claim count.
    #[serde(default = "default_dataset_id")]
    pub dataset_id: String,
    #[serde(default)]
    pub mapping: MappingSpec,
    /// Fail unless the split has exactly this many claims.
    #[serde(default)]
    pub expected_count: Option<usize>,
    #[serde(default)]
    pub flags: AblationFlags,
    pub out_dir: PathBuf,
    /// Decoding is greedy by default; only temperature 0 responses are cached.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_dataset_id() -> String {
    "custom".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewRelSection {
    pub input_path: PathBuf,
    pub output_path: PathBuf,
}

/// A run configuration file. Relative paths resolve against the file's
/// directory; the snapshot in each manifest keeps them as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendSection,
    #[serde(default)]
    pub prompts: PromptsSection,
    pub run: RunSection,
    #[serde(default)]
    pub fewrel: Option<FewRelSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.backend;
        if b.model_id.trim().is_empty() {
            bail!("backend.model_id is empty");
        }
        if b.parallelism == 0 {
            bail!("backend.parallelism must be at least 1");
        }
        match b.kind {
            BackendChoice::Http if b.base_url.is_none() => bail!("backend.base_url is required for the http backend"),
            BackendChoice::Replay if b.replay_path.is_none() => {
                bail!("backend.replay_path is required for the replay backend")
            }
            _ => {}
        }
        if self.prompts.char_budget == 0 {
            bail!("prompts.char_budget must be positive");
        }
        if !(0.0..=2.0).contains(&self.run.temperature) {
            bail!("run.temperature must be within [0, 2]");
        }
        if let MappingSpec::Preset(name) = &self.run.mapping {
            if !["canonical", "hover", "feverous"].contains(&name.as_str()) {
                bail!("unknown mapping preset `{name}` (expected canonical, hover or feverous)");
            }
        }
        if let MappingSpec::Custom(m) = &self.run.mapping {
            m.validate()?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.run.out_dir)
    }

    pub fn settings(&self) -> Result<PipelineSettings> {
        let mut s = PipelineSettings::new(self.backend.model_id.clone());
        s.catalog = match &self.prompts.catalog_path {
            Some(p) => load_catalog(self.resolve(p))?,
            None => RelationCatalog::builtin(),
        };
        s.few_shot = match &self.prompts.few_shot_path {
            Some(p) => load_few_shot(self.resolve(p))?,
            None => builtin_few_shot(),
        };
        s.char_budget = self.prompts.char_budget;
        for stage in [&mut s.relation, &mut s.infore, &mut s.verdict] {
            stage.temperature = self.run.temperature;
            stage.max_tokens = self.run.max_tokens;
        }
        Ok(s)
    }

    fn backend(&self) -> Result<Box<dyn CompletionBackend>> {
        let b = &self.backend;
        Ok(match b.kind {
            BackendChoice::Http => {
                let mut http = HttpConfig::new(b.base_url.clone().expect("validated"));
                http.mode = b.api_mode;
                http.api_key_env = b.api_key_env.clone();
                http.timeout = Duration::from_secs(b.timeout_secs);
                http.retries = b.retries;
                Box::new(HttpBackend::new(http))
            }
            BackendChoice::Replay => {
                let path = self.resolve(b.replay_path.as_ref().expect("validated"));
                let store = ReplayStore::load(&path)
                    .with_context(|| format!("cannot load replay store {}", path.display()))?;
                Box::new(ReplayBackend::new(store))
            }
        })
    }

    /// Gateway for one run directory; `cache_dir` overrides the configured cache.
    pub fn gateway(&self, run_dir: &Path, cache_dir: Option<PathBuf>) -> Result<Gateway> {
        let mut gateway = Gateway::from_boxed(self.backend()?).with_parallelism(self.backend.parallelism);
        let cache_dir = cache_dir.or_else(|| self.backend.cache_dir.as_ref().map(|p| self.resolve(p)));
        if let Some(dir) = cache_dir {
            let cache = ResponseCache::new(&dir).with_context(|| format!("cannot open cache {}", dir.display()))?;
            gateway = gateway.with_cache(cache);
        }
        fs::create_dir_all(run_dir).with_context(|| format!("cannot create {}", run_dir.display()))?;
        let log = run_dir.join("run_log.jsonl");
        if log.exists() {
            fs::remove_file(&log)?;
        }
        Ok(gateway.with_run_log(&log)?)
    }

    pub fn dataset_source(&self) -> DatasetSource {
        BenchmarkSplit::from_dataset_id(&self.run.dataset_id).map_or(DatasetSource::Custom, BenchmarkSplit::source)
    }

    pub fn load_records(&self) -> Result<Vec<ClaimRecord>> {
        let path = self.resolve(&self.run.dataset_path);
        let records = match &self.run.mapping {
            MappingSpec::Preset(name) if name == "canonical" => load_records(&path)?,
            MappingSpec::Preset(name) => {
                let mapping = if name == "hover" {
                    FieldMapping::hover()
                } else {
                    FieldMapping::feverous()
                };
                load_split(&path, &mapping, self.dataset_source())?
            }
            MappingSpec::Custom(mapping) => load_split(&path, mapping, self.dataset_source())?,
        };
        if let Some(n) = self.run.expected_count {
            expect_count(&records, n)?;
        }
        Ok(records)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Drop the raw evidence context from the verdict prompt.
    #[arg(long)]
    pub no_context: bool,
    /// Skip relation extraction.
    #[arg(long)]
    pub no_relations: bool,
    /// Skip evidence reorganization.
    #[arg(long)]
    pub no_infore: bool,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset file (same mapping as the config).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Use an OpenAI-compatible server at this URL.
    #[arg(long, conflicts_with = "replay")]
    pub base_url: Option<String>,
    /// Serve responses from this replay store.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub char_budget: Option<usize>,
}

impl Overrides {
    /// Command-line values take precedence over the file. Paths given on the
    /// command line are used as-is, relative to the working directory.
    pub fn apply(&self, config: &mut RunConfig) -> Result<()> {
        let absolute = |p: &Path| -> Result<PathBuf> {
            Ok(if p.is_absolute() {
                p.to_path_buf()
            } else {
                std::env::current_dir()?.join(p)
            })
        };
        let flags = &mut config.run.flags;
        let (rel, inf, ctx) = (
            flags.use_relations && !self.no_relations,
            flags.use_infore && !self.no_infore,
            flags.use_context && !self.no_context,
        );
        *flags = AblationFlags::new(rel, inf, ctx).context("overrides leave no verdict prompt section enabled")?;
        if let Some(n) = self.parallelism {
            config.backend.parallelism = n;
        }
        if let Some(p) = &self.out {
            config.run.out_dir = absolute(p)?;
        }
        if let Some(p) = &self.dataset {
            config.run.dataset_path = absolute(p)?;
        }
        if let Some(m) = &self.model {
            config.backend.model_id = m.clone();
        }
        if let Some(url) = &self.base_url {
            config.backend.kind = BackendChoice::Http;
            config.backend.base_url = Some(url.clone());
        }
        if let Some(p) = &self.replay {
            config.backend.kind = BackendChoice::Replay;
            config.backend.replay_path = Some(absolute(p)?);
        }
        if let Some(p) = &self.cache_dir {
            config.backend.cache_dir = Some(absolute(p)?);
        }
        if let Some(b) = self.char_budget {
            config.prompts.char_budget = b;
        }
        config.validate()
    }
}

#[derive(Debug, Parser)]
#[command(name = "zefav", version, about = "Zero-shot claim verification over evidence with an LLM backend")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(long, short)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and score it when gold labels exist.
    Verify(ConfigArgs),
    /// Run all six ablation configurations over one shared cache.
    Ablate(ConfigArgs),
    /// Relation extraction and closure only.
    ExtractRelations(ConfigArgs),
    /// Evidence reorganization only.
    Reorganize(ConfigArgs),
    /// Re-score an existing trace file.
    Score {
        #[command(flatten)]
        args: ConfigArgs,
        /// Trace file; defaults to traces.jsonl in the output directory.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Write FewRel instruction-tuning pairs as JSON Lines.
    ExportFewrel {
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Relation catalog (one name per line); the built-in catalog otherwise.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Turn a run log into a replay store.
    RecordReplay {
        #[arg(long)]
        run_log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub flags: AblationFlags,
    pub template_digests: BTreeMap<String, String>,
    pub catalog: CatalogInfo,
    pub dataset_digest: String,
    pub claims: usize,
}

#[derive(Debug, Serialize)]
pub struct CatalogInfo {
    pub source: String,
    pub relations: usize,
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    settings: &PipelineSettings,
    claims: usize,
) -> Result<()> {
    let templates = [
        PromptTemplate::relation_extraction(),
        PromptTemplate::infore(settings.few_shot.clone()),
        PromptTemplate::verdict(),
    ];
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: config.clone(),
        flags: config.run.flags,
        template_digests: templates.iter().map(|t| (t.stage.to_string(), t.digest())).collect(),
        catalog: CatalogInfo {
            source: settings.catalog.source().to_string(),
            relations: settings.catalog.len(),
        },
        dataset_digest: file_digest(&config.resolve(&config.run.dataset_path))?,
        claims,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut config)?;
    Ok(config)
}

/// Outcome of one verification run.
pub struct RunOutcome {
    pub traces: Vec<ClaimRunTrace>,
    pub report: Option<EvalReport>,
}

impl RunOutcome {
    pub fn errored(&self) -> usize {
        self.traces.iter().filter(|t| t.is_error()).count()
    }
}

/// Runs one flag configuration into `run_dir`: traces, report (when every
/// record has a gold label), manifest and run log.
pub fn run_verification(
    config: &RunConfig,
    records: &[ClaimRecord],
    run_dir: &Path,
    cache_dir: Option<PathBuf>,
) -> Result<RunOutcome> {
    let settings = config.settings()?;
    let gateway = config.gateway(run_dir, cache_dir)?;
    let traces = run_batch(records, config.run.flags, &gateway, &settings, config.backend.parallelism);
    gateway.flush_run_log()?;
    write_traces(run_dir.join("traces.jsonl"), &traces)?;
    let report = if records.iter().all(|r| r.gold.is_some()) {
        let report = score(&traces, records)?.with_dataset(config.run.dataset_id.clone());
        report.write_json(run_dir.join("report.json"))?;
        Some(report)
    } else {
        tracing::info!("records lack gold labels; no report written");
        None
    };
    write_manifest(run_dir, "verify", config, &settings, records.len())?;
    Ok(RunOutcome { traces, report })
}

fn claim_error_code(errored: usize, total: usize) -> u8 {
    if errored > 0 {
        eprintln!("{errored} of {total} claims errored; see the traces for details");
        EXIT_CLAIM_ERRORS
    } else {
        EXIT_OK
    }
}

fn cmd_verify(args: &ConfigArgs) -> Result<u8> {
    let config = load_config(args)?;
    let records = config.load_records()?;
    let out = config.out_dir();
    let outcome = run_verification(&config, &records, &out, None)?;
    if let Some(report) = &outcome.report {
        print!("{report}");
        if config.dataset_source() == DatasetSource::FeverousS {
            print!("{}", challenge_breakdown(report));
        }
    }
    println!("traces written to {}", out.join("traces.jsonl").display());
    Ok(claim_error_code(outcome.errored(), records.len()))
}

fn cmd_ablate(args: &ConfigArgs) -> Result<u8> {
    let config = load_config(args)?;
    let records = config.load_records()?;
    if let Some(r) = records.iter().find(|r| r.gold.is_none()) {
        bail!("ablation needs gold labels; record `{}` has none", r.id);
    }
    let out = config.out_dir();
    let cache = config
        .backend
        .cache_dir
        .as_ref()
        .map(|p| config.resolve(p))
        .unwrap_or_else(|| out.join("cache"));
    let mut reports = Vec::new();
    let mut errored = 0;
    for flags in AblationFlags::GRID {
        let cell = out.join(flags.label());
        let report_path = cell.join("report.json");
        if report_path.exists() {
            tracing::info!("{} already complete; reusing its report", flags.label());
            reports.push(EvalReport::read_json(&report_path)?);
            continue;
        }
        let mut cell_config = config.clone();
        cell_config.run.flags = flags;
        let outcome = run_verification(&cell_config, &records, &cell, Some(cache.clone()))?;
        errored += outcome.errored();
        reports.extend(outcome.report);
    }
    let grid = ablation_grid(&reports)?;
    grid.write_json(out.join("grid.json"))?;
    print!("{grid}");
    for w in &grid.warnings {
        eprintln!("warning: {w}");
    }
    Ok(claim_error_code(errored, records.len() * AblationFlags::GRID.len()))
}

fn par_map<T: Send>(parallelism: usize, records: &[ClaimRecord], f: impl Fn(&ClaimRecord) -> T + Sync) -> Vec<T> {
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(|| records.par_iter().map(&f).collect()),
        Err(_) => records.iter().map(f).collect(),
    }
}

fn cmd_stage(args: &ConfigArgs, relations: bool) -> Result<u8> {
    let config = load_config(args)?;
    let records = config.load_records()?;
    let settings = config.settings()?;
    let out = config.out_dir();
    let gateway = config.gateway(&out, None)?;
    let rows: Vec<serde_json::Value> = par_map(config.backend.parallelism, &records, |r| {
        let result = if relations {
            extract_relations(r, &gateway, &settings).map(|s| serde_json::to_value(s).expect("serializable"))
        } else {
            reorganize(r, &gateway, &settings).map(|text| serde_json::json!({"claim_id": r.id, "infore_text": text}))
        };
        result.unwrap_or_else(|e| {
            serde_json::json!({"claim_id": r.id, "error": {"kind": e.kind(), "message": e.to_string()}})
        })
    });
    gateway.flush_run_log()?;
    let name = if relations { "relations.jsonl" } else { "infore.jsonl" };
    write_jsonl(out.join(name), &rows)?;
    println!("{} records written to {}", rows.len(), out.join(name).display());
    let errored = rows.iter().filter(|r| r.get("error").is_some()).count();
    Ok(claim_error_code(errored, rows.len()))
}

fn cmd_score(args: &ConfigArgs, traces: Option<&Path>) -> Result<u8> {
    let config = load_config(args)?;
    let records = config.load_records()?;
    let out = config.out_dir();
    let trace_path = traces.map(Path::to_path_buf).unwrap_or_else(|| out.join("traces.jsonl"));
    let traces = read_traces(&trace_path)?;
    let report = score(&traces, &records)?.with_dataset(config.run.dataset_id.clone());
    report.write_json(out.join("report.json"))?;
    print!("{report}");
    if config.dataset_source() == DatasetSource::FeverousS {
        print!("{}", challenge_breakdown(&report));
    }
    Ok(EXIT_OK)
}

fn cmd_export_fewrel(
    config: Option<&Path>,
    input: Option<&Path>,
    output: Option<&Path>,
    catalog: Option<&Path>,
) -> Result<u8> {
    let config = config.map(RunConfig::load).transpose()?;
    let section = config.as_ref().and_then(|c| c.fewrel.as_ref());
    let from_config = |p: Option<&PathBuf>| p.zip(config.as_ref()).map(|(p, c)| c.resolve(p));
    let input = input
        .map(Path::to_path_buf)
        .or_else(|| from_config(section.map(|s| &s.input_path)))
        .context("no FewRel input: pass --input or set fewrel.input_path")?;
    let output = output
        .map(Path::to_path_buf)
        .or_else(|| from_config(section.map(|s| &s.output_path)))
        .context("no output path: pass --output or set fewrel.output_path")?;
    let catalog = match catalog {
        Some(p) => load_catalog(p)?,
        None => match &config {
            Some(c) => c.settings()?.catalog,
            None => RelationCatalog::builtin(),
        },
    };
    let n = export_fewrel_instructions(&input, &catalog, &output)?;
    println!("{n} instruction pairs written to {}", output.display());
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::ExtractRelations(args) => cmd_stage(&args, true),
        Command::Reorganize(args) => cmd_stage(&args, false),
        Command::Score { args, traces } => cmd_score(&args, traces.as_deref()),
        Command::ExportFewrel {
            config,
            input,
            output,
            catalog,
        } => cmd_export_fewrel(config.as_deref(), input.as_deref(), output.as_deref(), catalog.as_deref()),
        Command::RecordReplay { run_log, out } => {
            let store = record_replay(&run_log, &out)?;
            println!("{} responses written to {}", store.len(), out.display());
            Ok(EXIT_OK)
        }
    }
}

pub fn run(args: impl IntoIterator<Item = std::ffi::OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FATAL } else { EXIT_OK });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", error_message(&e));
            ExitCode::from(EXIT_FATAL)
        }
    }
}

// Library errors often repeat their source in the message; skip those causes.
fn error_message(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let cause = cause.to_string();
        if !msg.contains(&cause) {
            msg = format!("{msg}: {cause}");
        }
    }
    msg
}

pub fn main() -> ExitCode {
    run(std::env::args_os())
}

//! Per-claim verification flow and the batch runner.
//!
//! Stages per claim, strictly in order:
//! 1. relation extraction on the claim (one call) and on every evidence
//!    sentence (one call each), parsed into triples;
//! 2. closure filtering of the evidence triples;
//! 3. evidence reorganization over the whole evidence set;
//! 4. verdict prompt and generation;
//! 5. verdict parsing.
//!
//! Stages 1-2 are skipped when relations are disabled, stage 3 when
//! reorganization is disabled.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{closure_stats, find_evidence_relations_with, ClosureOptions, ClosureStats};
use crate::datasets::ClaimRecord;
use crate::gateway::{GatewayError, GenerationRequest, Stage, TextGenerator, DEFAULT_MAX_TOKENS};
use crate::prompts::{
    builtin_few_shot, parse_verdict, render_infore_prompt, render_relation_prompt, render_verdict_prompt,
    FewShotExample, PromptError, VerdictInputs, VerdictOutcome, DEFAULT_CHAR_BUDGET,
};
use crate::relation::{parse_triples, Origin, RelationCatalog, RelationTriple};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("ablation flags disable every section")]
    NoSectionsEnabled,
    #[error("cannot write traces: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: invalid trace: {message}")]
    TraceFormat { path: String, line: usize, message: String },
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Gateway(e) => e.kind(),
            PipelineError::Prompt(PromptError::NothingToVerify) => "NothingToVerify",
            PipelineError::Prompt(_) => "Prompt",
            PipelineError::NoSectionsEnabled => "NoSectionsEnabled",
            PipelineError::Io(_) => "Io",
            PipelineError::TraceFormat { .. } => "TraceFormat",
        }
    }
}

/// Which evidence views reach the verdict prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFlags")]
pub struct AblationFlags {
    pub use_relations: bool,
    pub use_infore: bool,
    pub use_context: bool,
}

#[derive(Deserialize)]
struct RawFlags {
    use_relations: bool,
    use_infore: bool,
    use_context: bool,
}

impl TryFrom<RawFlags> for AblationFlags {
    type Error = PipelineError;

    fn try_from(raw: RawFlags) -> Result<Self, Self::Error> {
        AblationFlags::new(raw.use_relations, raw.use_infore, raw.use_context)
    }
}

impl AblationFlags {
    pub const ALL_ON: AblationFlags = AblationFlags {
        use_relations: true,
        use_infore: true,
        use_context: true,
    };

    /// The six configurations of the ablation grid, in display order: with
    /// evidence context first, and within each block (relations + reorganized,
    /// reorganized only, relations only).
    pub const GRID: [AblationFlags; 6] = [
        AblationFlags { use_relations: true, use_infore: true, use_context: true },
        AblationFlags { use_relations: false, use_infore: true, use_context: true },
        AblationFlags { use_relations: true, use_infore: false, use_context: true },
        AblationFlags { use_relations: true, use_infore: true, use_context: false },
        AblationFlags { use_relations: false, use_infore: true, use_context: false },
        AblationFlags { use_relations: true, use_infore: false, use_context: false },
    ];

    pub fn new(use_relations: bool, use_infore: bool, use_context: bool) -> Result<Self, PipelineError> {
        if !(use_relations || use_infore || use_context) {
            return Err(PipelineError::NoSectionsEnabled);
        }
        Ok(Self {
            use_relations,
            use_infore,
            use_context,
        })
    }

    /// Short directory-safe name, e.g. `rel-infore-ctx` or `infore-noctx`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.use_relations {
            parts.push("rel");
        }
        if self.use_infore {
            parts.push("infore");
        }
        parts.push(if self.use_context { "ctx" } else { "noctx" });
        parts.join("-")
    }
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self::ALL_ON
    }
}

/// Decoding parameters for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSettings {
    pub max_tokens: u32,
    pub temperature: f64,
    pub stop: Option<Vec<String>>,
}

impl Default for StageSettings {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            stop: None,
        }
    }
}

/// Everything the pipeline needs besides the generator.
#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub model_id: String,
    pub catalog: RelationCatalog,
    pub few_shot: Vec<FewShotExample>,
    pub char_budget: usize,
    pub closure: ClosureOptions,
    pub relation: StageSettings,
    pub infore: StageSettings,
    pub verdict: StageSettings,
}

impl PipelineSettings {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            catalog: RelationCatalog::builtin(),
            few_shot: builtin_few_shot(),
            char_budget: DEFAULT_CHAR_BUDGET,
            closure: ClosureOptions::default(),
            relation: StageSettings::default(),
            infore: StageSettings::default(),
            verdict: StageSettings::default(),
        }
    }

    fn request(&self, stage: Stage, prompt: String) -> GenerationRequest {
        let s = match stage {
            Stage::RelationExtraction => &self.relation,
            Stage::InfoRE => &self.infore,
            Stage::Verdict => &self.verdict,
        };
        GenerationRequest {
            prompt,
            max_tokens: s.max_tokens,
            temperature: s.temperature,
            stop: s.stop.clone(),
            model_id: self.model_id.clone(),
            stage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceError {
    pub kind: String,
    pub message: String,
}

/// Everything one claim went through.
///
/// `stage_timings` sums the backend-reported latency per stage: cache hits and
/// replayed responses contribute zero, so replayed traces are reproducible
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRunTrace {
    pub claim_id: String,
    pub flags: AblationFlags,
    pub claim_triples: Vec<RelationTriple>,
    pub evidence_triples_all: Vec<RelationTriple>,
    pub evidence_triples_kept: Vec<RelationTriple>,
    pub closure: Option<ClosureStats>,
    pub infore_text: Option<String>,
    pub final_prompt: String,
    pub prompt_truncated: bool,
    pub outcome: Option<VerdictOutcome>,
    pub generations: BTreeMap<Stage, u32>,
    pub stage_timings: BTreeMap<Stage, u64>,
    pub warnings: Vec<String>,
    pub error: Option<TraceError>,
}

impl ClaimRunTrace {
    fn empty(claim_id: &str, flags: AblationFlags) -> Self {
        Self {
            claim_id: claim_id.to_string(),
            flags,
            claim_triples: Vec::new(),
            evidence_triples_all: Vec::new(),
            evidence_triples_kept: Vec::new(),
            closure: None,
            infore_text: None,
            final_prompt: String::new(),
            prompt_truncated: false,
            outcome: None,
            generations: BTreeMap::new(),
            stage_timings: BTreeMap::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn errored(claim_id: &str, flags: AblationFlags, error: &PipelineError) -> Self {
        let mut trace = Self::empty(claim_id, flags);
        trace.error = Some(TraceError {
            kind: error.kind().to_string(),
            message: error.to_string(),
        });
        trace
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    fn call(
        &mut self,
        generator: &dyn TextGenerator,
        settings: &PipelineSettings,
        stage: Stage,
        prompt: String,
    ) -> Result<String, GatewayError> {
        let response = generator.generate(&settings.request(stage, prompt))?;
        *self.generations.entry(stage).or_default() += 1;
        *self.stage_timings.entry(stage).or_default() += response.latency_ms;
        Ok(response.text)
    }
}

/// Splits on `.`, `!` or `?` followed by whitespace; the punctuation stays
/// with its sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    sentences.push(&text[start..j]);
                    start = j;
                }
            }
        }
    }
    sentences.push(&text[start..]);
    sentences
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Relation triples for one claim, before and after closure filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStage {
    pub claim_id: String,
    pub claim_triples: Vec<RelationTriple>,
    pub evidence_triples_all: Vec<RelationTriple>,
    pub evidence_triples_kept: Vec<RelationTriple>,
    pub closure: ClosureStats,
    pub warnings: Vec<String>,
}

fn run_relation_stage(
    trace: &mut ClaimRunTrace,
    record: &ClaimRecord,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
) -> Result<(), PipelineError> {
    let claim_prompt = render_relation_prompt(&record.claim, &settings.catalog)?;
    let text = trace.call(generator, settings, Stage::RelationExtraction, claim_prompt)?;
    let parsed = parse_triples(&text, Origin::Claim, &settings.catalog);
    trace
        .warnings
        .extend(parsed.warnings.iter().map(|w| format!("claim relations {w}")));
    trace.claim_triples = parsed.triples;

    let mut seen = HashSet::new();
    for (n, sentence) in record.evidence.iter().flat_map(|e| split_sentences(e)).enumerate() {
        let prompt = render_relation_prompt(&sentence, &settings.catalog)?;
        let text = trace.call(generator, settings, Stage::RelationExtraction, prompt)?;
        let parsed = parse_triples(&text, Origin::Evidence, &settings.catalog);
        trace
            .warnings
            .extend(parsed.warnings.iter().map(|w| format!("evidence sentence {} relations {w}", n + 1)));
        for t in parsed.triples {
            if seen.insert(t.key()) {
                trace.evidence_triples_all.push(t);
            }
        }
    }

    let result = find_evidence_relations_with(&trace.claim_triples, &trace.evidence_triples_all, settings.closure);
    trace.closure = Some(closure_stats(&result, &trace.evidence_triples_all).expect("closure of these inputs"));
    trace.evidence_triples_kept = result.evidence_rels_new;
    Ok(())
}

fn run_infore_stage(
    trace: &mut ClaimRunTrace,
    record: &ClaimRecord,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
) -> Result<(), PipelineError> {
    if record.evidence.iter().all(|e| e.trim().is_empty()) {
        trace.warnings.push("no evidence to reorganize; skipped".into());
        return Ok(());
    }
    let rendered = render_infore_prompt(&record.evidence, &settings.few_shot, settings.char_budget)?;
    if rendered.truncated {
        trace.warnings.push("reorganization prompt truncated to the character budget".into());
    }
    let text = trace.call(generator, settings, Stage::InfoRE, rendered.text)?;
    trace.infore_text = Some(text.trim().to_string());
    Ok(())
}

/// Stages 1-2 only.
pub fn extract_relations(
    record: &ClaimRecord,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
) -> Result<RelationStage, PipelineError> {
    let mut trace = ClaimRunTrace::empty(&record.id, AblationFlags::ALL_ON);
    run_relation_stage(&mut trace, record, generator, settings)?;
    Ok(RelationStage {
        claim_id: record.id.clone(),
        claim_triples: trace.claim_triples,
        evidence_triples_all: trace.evidence_triples_all,
        evidence_triples_kept: trace.evidence_triples_kept,
        closure: trace.closure.expect("set by relation stage"),
        warnings: trace.warnings,
    })
}

/// Stage 3 only. `None` when the record has no evidence.
pub fn reorganize(
    record: &ClaimRecord,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
) -> Result<Option<String>, PipelineError> {
    let mut trace = ClaimRunTrace::empty(&record.id, AblationFlags::ALL_ON);
    run_infore_stage(&mut trace, record, generator, settings)?;
    Ok(trace.infore_text)
}

pub fn verify_claim(
    record: &ClaimRecord,
    flags: AblationFlags,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
) -> Result<ClaimRunTrace, PipelineError> {
    let mut trace = ClaimRunTrace::empty(&record.id, flags);
    if flags.use_relations {
        run_relation_stage(&mut trace, record, generator, settings)?;
    }
    if flags.use_infore {
        run_infore_stage(&mut trace, record, generator, settings)?;
    }
    let rendered = render_verdict_prompt(
        &VerdictInputs {
            claim: &record.claim,
            context_evidence: Some(&record.evidence),
            infore: trace.infore_text.as_deref(),
            claim_rels: &trace.claim_triples,
            evidence_rels: &trace.evidence_triples_kept,
            flags,
        },
        settings.char_budget,
    )?;
    if rendered.truncated {
        trace.warnings.push("verdict prompt truncated to the character budget".into());
    }
    trace.prompt_truncated = rendered.truncated;
    trace.final_prompt = rendered.text.clone();
    let text = trace.call(generator, settings, Stage::Verdict, rendered.text)?;
    trace.outcome = Some(parse_verdict(&text));
    Ok(trace)
}

/// Runs every record with at most `parallelism` claims in flight. Traces come
/// back in input order; a failing claim yields an errored trace instead of
/// aborting the batch.
pub fn run_batch(
    records: &[ClaimRecord],
    flags: AblationFlags,
    generator: &dyn TextGenerator,
    settings: &PipelineSettings,
    parallelism: usize,
) -> Vec<ClaimRunTrace> {
    let one = |record: &ClaimRecord| {
        verify_claim(record, flags, generator, settings).unwrap_or_else(|e| {
            tracing::warn!(claim = %record.id, "claim failed: {e}");
            ClaimRunTrace::errored(&record.id, flags, &e)
        })
    };
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(|| records.par_iter().map(one).collect()),
        Err(e) => {
            tracing::warn!("thread pool unavailable ({e}); running sequentially");
            records.iter().map(one).collect()
        }
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), PipelineError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_traces(path: impl AsRef<Path>, traces: &[ClaimRunTrace]) -> Result<(), PipelineError> {
    write_jsonl(path, traces)
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<ClaimRunTrace>, PipelineError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut traces = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        traces.push(serde_json::from_str(&line).map_err(|e| PipelineError::TraceFormat {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(traces)
}

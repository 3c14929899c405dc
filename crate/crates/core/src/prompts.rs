//! The three prompt templates (relation extraction, evidence reorganization,
//! verdict) and the verdict parser.
//!
//! Rendering is a pure function of its inputs: the same arguments always give
//! byte-identical prompts.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gateway::Stage;
use crate::pipeline::AblationFlags;
use crate::relation::{RelationCatalog, RelationTriple};

/// Default rendered-prompt budget in characters, sized for a 2,048-token context.
pub const DEFAULT_CHAR_BUDGET: usize = 6000;

const BUILTIN_FEW_SHOT: &str = include_str!("../data/infore_examples.json");

const RELATION_BODY: &str = "### Instruction: Given a sentence, please identify the head and tail entities in the sentence and classify the relation type into one of the appropriate categories; The collection of categories is: [{categories}]; \nSentence: {sentence} \n### Response: ";

const INFORE_HEADER: &str = "Transform the following text into a hierarchical structure that organizes the information in the text into levels. The same level can reflect parallel relationships and indented levels reflect causal relationships. Here are some examples:\n";
const INFORE_EXAMPLE: &str = "The evidence: {evidence}\nThe hierarchical structure: {hierarchy}\n";
const INFORE_TARGET: &str = "### The evidence: {evidence}\nThe hierarchical structure:";

const VERDICT_INSTRUCTION: &str = "Please answer the question based on Documents, Context, and the following relations. The answer must belong to one of two values: True or False.";
const VERDICT_CLAIM_RELATION: &str = "    {n}. The question mentioned the relation between {head} and {tail} as {relation} *";
const VERDICT_EVIDENCE_RELATION: &str = "    {n}. {head} and {tail} has relation with {relation} **";
const VERDICT_STEP: &str = "    Let's think step-by-step.";
pub const ANSWER_MARKER: &str = "###The answer is:";

const EVIDENCE_SEPARATOR: &str = "\n\n";
const CONTEXT_SEPARATOR: &str = "\n";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("the sentence to analyse is empty")]
    EmptySentence,
    #[error("the claim is empty")]
    EmptyClaim,
    #[error("evidence reorganization needs at least one evidence item")]
    NoEvidence,
    #[error("evidence reorganization needs at least one few-shot example")]
    MissingExamples,
    #[error("nothing to verify: every content section is disabled or empty")]
    NothingToVerify,
    #[error("cannot read few-shot examples {path}: {message}")]
    FewShotFile { path: String, message: String },
}

/// Binary verdict. `True` means the evidence supports the claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }

    pub fn flip(self) -> Self {
        Self::from_bool(!self.is_true())
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_true() { "True" } else { "False" })
    }
}

/// One worked example for the reorganization prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub evidence: String,
    pub hierarchy: String,
}

pub fn builtin_few_shot() -> Vec<FewShotExample> {
    serde_json::from_str(BUILTIN_FEW_SHOT).expect("bundled few-shot examples are valid JSON")
}

/// Reads a JSON array of `{"evidence": ..., "hierarchy": ...}` objects.
pub fn load_few_shot(path: impl AsRef<Path>) -> Result<Vec<FewShotExample>, PromptError> {
    let path = path.as_ref();
    let err = |message: String| PromptError::FewShotFile {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let examples: Vec<FewShotExample> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if examples.is_empty() {
        return Err(PromptError::MissingExamples);
    }
    Ok(examples)
}

/// A template body with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub stage: Stage,
    pub body: String,
    pub few_shot_examples: Vec<FewShotExample>,
}

impl PromptTemplate {
    pub fn relation_extraction() -> Self {
        Self {
            stage: Stage::RelationExtraction,
            body: RELATION_BODY.to_string(),
            few_shot_examples: Vec::new(),
        }
    }

    pub fn infore(examples: Vec<FewShotExample>) -> Self {
        Self {
            stage: Stage::InfoRE,
            body: format!("{INFORE_HEADER}{INFORE_EXAMPLE}{INFORE_TARGET}"),
            few_shot_examples: examples,
        }
    }

    pub fn verdict() -> Self {
        Self {
            stage: Stage::Verdict,
            body: [
                "Documents: {documents}",
                "Context: {context}",
                "Question: {claim}?",
                VERDICT_INSTRUCTION,
                VERDICT_CLAIM_RELATION,
                VERDICT_EVIDENCE_RELATION,
                VERDICT_STEP,
                ANSWER_MARKER,
            ]
            .join("\n"),
            few_shot_examples: Vec::new(),
        }
    }

    /// SHA-256 over the body and few-shot examples, for run manifests.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.stage.as_str().as_bytes());
        h.update([0]);
        h.update(self.body.as_bytes());
        for ex in &self.few_shot_examples {
            h.update([0]);
            h.update(ex.evidence.as_bytes());
            h.update([0]);
            h.update(ex.hierarchy.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Substitutes `{name}` placeholders in one pass; substituted values are not
/// rescanned, so braces inside them survive untouched.
fn fill(body: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            values.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    /// Evidence was shortened to fit the character budget.
    pub truncated: bool,
}

pub fn render_relation_prompt(sentence: &str, catalog: &RelationCatalog) -> Result<String, PromptError> {
    let sentence = sentence.trim();
    if sentence.is_empty() {
        return Err(PromptError::EmptySentence);
    }
    let categories = catalog.names().join(", ");
    Ok(fill(RELATION_BODY, &[("categories", &categories), ("sentence", sentence)]))
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Shrinks `items` so that `fixed + sum(items)` fits in `budget` characters.
///
/// One character at a time is cut from the end of the currently longest item
/// (lowest index on ties). Returns whether anything was cut.
fn fit_to_budget(items: &mut [String], fixed: usize, budget: usize) -> bool {
    let mut lens: Vec<usize> = items.iter().map(|s| char_len(s)).collect();
    let total = fixed + lens.iter().sum::<usize>();
    if total <= budget {
        return false;
    }
    let mut overflow = total - budget;
    while overflow > 0 {
        let Some((idx, &len)) = lens
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
        else {
            break;
        };
        if len == 0 {
            break;
        }
        // Cut down to the runner-up length in one step (or less if that covers the overflow).
        let runner_up = lens
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(i, &l)| if i < idx { l + 1 } else { l })
            .max()
            .unwrap_or(0);
        let step = overflow.min(len.saturating_sub(runner_up).max(1));
        lens[idx] -= step;
        overflow -= step;
    }
    for (item, len) in items.iter_mut().zip(&lens) {
        if let Some((byte, _)) = item.char_indices().nth(*len) {
            item.truncate(byte);
        }
    }
    true
}

pub fn render_infore_prompt(
    evidence: &[String],
    examples: &[FewShotExample],
    budget: usize,
) -> Result<RenderedPrompt, PromptError> {
    if examples.is_empty() {
        return Err(PromptError::MissingExamples);
    }
    let mut items: Vec<String> = evidence
        .iter()
        .map(|e| e.trim().to_string())
        .filter(|e| !e.is_empty())
        .collect();
    if items.is_empty() {
        return Err(PromptError::NoEvidence);
    }
    let mut prefix = String::from(INFORE_HEADER);
    for ex in examples {
        prefix.push_str(&fill(
            INFORE_EXAMPLE,
            &[("evidence", ex.evidence.trim()), ("hierarchy", ex.hierarchy.trim())],
        ));
    }
    let target_fixed = char_len(&fill(INFORE_TARGET, &[("evidence", "")]));
    let separators = char_len(EVIDENCE_SEPARATOR) * (items.len() - 1);
    let truncated = fit_to_budget(&mut items, char_len(&prefix) + target_fixed + separators, budget);
    let target = fill(INFORE_TARGET, &[("evidence", &items.join(EVIDENCE_SEPARATOR))]);
    Ok(RenderedPrompt {
        text: prefix + &target,
        truncated,
    })
}

/// Inputs for the final verdict prompt. Sections are dropped when the
/// matching ablation flag is off or the content is empty.
#[derive(Debug, Clone, Copy)]
pub struct VerdictInputs<'a> {
    pub claim: &'a str,
    pub context_evidence: Option<&'a [String]>,
    pub infore: Option<&'a str>,
    pub claim_rels: &'a [RelationTriple],
    pub evidence_rels: &'a [RelationTriple],
    pub flags: AblationFlags,
}

pub fn render_verdict_prompt(inputs: &VerdictInputs<'_>, budget: usize) -> Result<RenderedPrompt, PromptError> {
    let claim = inputs.claim.trim();
    if claim.is_empty() {
        return Err(PromptError::EmptyClaim);
    }
    let flags = inputs.flags;
    let documents = inputs
        .infore
        .map(str::trim)
        .filter(|d| flags.use_infore && !d.is_empty());
    let context: Vec<String> = match inputs.context_evidence {
        Some(items) if flags.use_context => items
            .iter()
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .collect(),
        _ => Vec::new(),
    };

    let mut relation_lines = Vec::new();
    if flags.use_relations {
        let mut n = 0;
        for r in inputs.claim_rels {
            n += 1;
            relation_lines.push(fill(
                VERDICT_CLAIM_RELATION,
                &[("n", &n.to_string()), ("head", r.head()), ("tail", r.tail()), ("relation", r.relation())],
            ));
        }
        for r in inputs.evidence_rels {
            n += 1;
            relation_lines.push(fill(
                VERDICT_EVIDENCE_RELATION,
                &[("n", &n.to_string()), ("head", r.head()), ("tail", r.tail()), ("relation", r.relation())],
            ));
        }
    }
    if documents.is_none() && context.is_empty() && relation_lines.is_empty() {
        return Err(PromptError::NothingToVerify);
    }

    let question = if claim.ends_with('?') {
        format!("Question: {claim}")
    } else {
        format!("Question: {claim}?")
    };
    let tail_lines: Vec<&str> = std::iter::once(question.as_str())
        .chain(std::iter::once(VERDICT_INSTRUCTION))
        .chain(relation_lines.iter().map(String::as_str))
        .chain([VERDICT_STEP, ANSWER_MARKER])
        .collect();
    let tail = tail_lines.join("\n");

    // Budgeted items: the reorganized document first, then the context items.
    let has_documents = documents.is_some();
    let mut items: Vec<String> = documents.map(str::to_string).into_iter().collect();
    let context_count = context.len();
    items.extend(context);
    let mut fixed = char_len(&tail);
    if has_documents {
        fixed += char_len("Documents: \n");
    }
    if context_count > 0 {
        fixed += char_len("Context: \n") + char_len(CONTEXT_SEPARATOR) * (context_count - 1);
    }
    let truncated = fit_to_budget(&mut items, fixed, budget);

    let mut text = String::new();
    let mut items = items.into_iter();
    if has_documents {
        text.push_str("Documents: ");
        text.push_str(&items.next().unwrap_or_default());
        text.push('\n');
    }
    if context_count > 0 {
        text.push_str("Context: ");
        text.push_str(&items.collect::<Vec<_>>().join(CONTEXT_SEPARATOR));
        text.push('\n');
    }
    text.push_str(&tail);
    Ok(RenderedPrompt { text, truncated })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseStatus {
    /// Exactly one of true/false after the last answer marker.
    Clean,
    /// No usable answer after a marker, but exactly one of true/false in the whole text.
    Salvaged,
    /// Neither or both values present; scored as `False`.
    Defaulted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictOutcome {
    pub label: Verdict,
    pub parse_status: ParseStatus,
    pub raw: String,
    pub marker_found: bool,
}

/// Byte offset of the last ASCII-case-insensitive occurrence of `needle`.
fn rfind_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).rev().find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Which of the standalone words `true`/`false` occur in `text`.
fn answer_tokens(text: &str) -> (bool, bool) {
    let mut found = (false, false);
    let mut word_start: Option<usize> = None;
    let mut check = |word: &str| {
        if word.eq_ignore_ascii_case("true") {
            found.0 = true;
        } else if word.eq_ignore_ascii_case("false") {
            found.1 = true;
        }
    };
    for (i, c) in text.char_indices() {
        match (is_word_char(c), word_start) {
            (true, None) => word_start = Some(i),
            (false, Some(s)) => {
                check(&text[s..i]);
                word_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = word_start {
        check(&text[s..]);
    }
    found
}

fn single_answer(tokens: (bool, bool)) -> Option<Verdict> {
    match tokens {
        (true, false) => Some(Verdict::True),
        (false, true) => Some(Verdict::False),
        _ => None,
    }
}

/// Reads the verdict out of a generation. Never fails.
pub fn parse_verdict(generation: &str) -> VerdictOutcome {
    const MARKER: &str = "the answer is";
    let marker_at = rfind_ascii_ci(generation, MARKER);
    let outcome = |label, parse_status| VerdictOutcome {
        label,
        parse_status,
        raw: generation.to_string(),
        marker_found: marker_at.is_some(),
    };
    if let Some(at) = marker_at {
        if let Some(label) = single_answer(answer_tokens(&generation[at + MARKER.len()..])) {
            return outcome(label, ParseStatus::Clean);
        }
    }
    match single_answer(answer_tokens(generation)) {
        Some(label) => outcome(label, ParseStatus::Salvaged),
        None => outcome(Verdict::False, ParseStatus::Defaulted),
    }
}

/// Identifies which template produced a prompt; used by stub servers.
pub fn classify_prompt(prompt: &str) -> Option<Stage> {
    if prompt.starts_with("### Instruction: Given a sentence") {
        Some(Stage::RelationExtraction)
    } else if prompt.starts_with("Transform the following text into a hierarchical structure") {
        Some(Stage::InfoRE)
    } else if prompt.trim_end().ends_with(ANSWER_MARKER) {
        Some(Stage::Verdict)
    } else {
        None
    }
}

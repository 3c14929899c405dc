//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;
use zefav::datasets::{load_records, ClaimRecord};
use zefav::gateway::{Gateway, GenerationRequest, ReplayBackend, ReplayStore, ScriptedBackend, Stage};
use zefav::pipeline::PipelineSettings;
use zefav::prompts::classify_prompt;

pub const MODEL_ID: &str = "fixture-model";

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn claims() -> Vec<ClaimRecord> {
    load_records(fixtures().join("claims.jsonl")).expect("fixture claims")
}

pub fn settings() -> PipelineSettings {
    PipelineSettings::new(MODEL_ID)
}

pub fn replay_gateway() -> Gateway {
    let store = ReplayStore::load(fixtures().join("replay.jsonl")).expect("fixture replay store");
    Gateway::new(ReplayBackend::new(store))
}

#[derive(Debug, Deserialize)]
pub struct ModelScript {
    relations: BTreeMap<String, String>,
    verdicts: BTreeMap<String, BTreeMap<String, String>>,
}

impl ModelScript {
    pub fn load() -> Arc<Self> {
        let text = std::fs::read_to_string(fixtures().join("model_script.json")).expect("model script");
        Arc::new(serde_json::from_str(&text).expect("model script json"))
    }

    /// The scripted reply for a rendered prompt.
    pub fn reply(&self, prompt: &str) -> String {
        match classify_prompt(prompt) {
            Some(Stage::RelationExtraction) => {
                let sentence = between(prompt, "\nSentence: ", " \n### Response: ");
                self.relations.get(sentence).cloned().unwrap_or_default()
            }
            Some(Stage::InfoRE) => {
                let evidence = prompt.rsplit("### The evidence: ").next().unwrap_or("");
                let evidence = evidence.trim_end_matches("\nThe hierarchical structure:");
                let mut out = String::from("Evidence");
                for item in evidence.split("\n\n") {
                    for line in item.lines() {
                        out.push_str("\n    - ");
                        out.push_str(line.trim());
                    }
                }
                out
            }
            Some(Stage::Verdict) => {
                let question = prompt
                    .lines()
                    .find_map(|l| l.strip_prefix("Question: "))
                    .unwrap_or("");
                let claim = question.strip_suffix('?').unwrap_or(question);
                let Some(variants) = self.verdicts.get(claim) else {
                    return "No verdict scripted.".into();
                };
                let has = |section: &str| prompt.lines().any(|l| l.starts_with(section));
                let key = if !has("Context: ") && variants.contains_key("no_context") {
                    "no_context"
                } else if !has("Documents: ") && variants.contains_key("no_documents") {
                    "no_documents"
                } else {
                    "default"
                };
                variants[key].clone()
            }
            None => String::new(),
        }
    }
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> &'a str {
    let after = text.split_once(start).map_or("", |(_, rest)| rest);
    after.rsplit_once(end).map_or(after, |(inner, _)| inner)
}

/// Gateway over the scripted fixture model.
pub fn scripted_gateway() -> Gateway {
    let script = ModelScript::load();
    Gateway::new(ScriptedBackend::new(move |req: &GenerationRequest| Ok(script.reply(&req.prompt))))
}

/// The three prompts rendered for fixture claim `f01`, as `(file name, text)`.
pub fn golden_prompts() -> Vec<(&'static str, String)> {
    use zefav::pipeline::AblationFlags;
    use zefav::prompts::{
        builtin_few_shot, render_infore_prompt, render_relation_prompt, render_verdict_prompt, VerdictInputs,
        DEFAULT_CHAR_BUDGET,
    };
    use zefav::relation::{parse_triples, Origin, RelationCatalog};

    let catalog = RelationCatalog::builtin();
    let record = claims().into_iter().find(|r| r.id == "f01").expect("f01");
    let claim_rels = parse_triples(
        "(Eiffel Tower, architect, Gustave Eiffel), (Gustave Eiffel, place of birth, Dijon)",
        Origin::Claim,
        &catalog,
    )
    .triples;
    let evidence_rels = parse_triples(
        "(Gustave Eiffel, place of birth, Dijon), (Dijon, country, France)",
        Origin::Evidence,
        &catalog,
    )
    .triples;
    let infore = "Gustave Eiffel\n    - designed the Eiffel Tower\n    - born in Dijon, France, in 1832";
    let verdict = render_verdict_prompt(
        &VerdictInputs {
            claim: &record.claim,
            context_evidence: Some(&record.evidence),
            infore: Some(infore),
            claim_rels: &claim_rels,
            evidence_rels: &evidence_rels,
            flags: AblationFlags::ALL_ON,
        },
        DEFAULT_CHAR_BUDGET,
    )
    .expect("verdict prompt");
    vec![
        (
            "prompt_relation.txt",
            render_relation_prompt(&record.evidence[1], &catalog).expect("relation prompt"),
        ),
        (
            "prompt_infore.txt",
            render_infore_prompt(&record.evidence, &builtin_few_shot(), DEFAULT_CHAR_BUDGET)
                .expect("infore prompt")
                .text,
        ),
        ("prompt_verdict.txt", verdict.text),
    ]
}

//! Evaluation splits (HoVer 2/3/4-hop, FEVEROUS-S, custom files) and the
//! FewRel instruction-tuning export.
//!
//! Upstream schemas are reached only through a [`FieldMapping`]; the shipped
//! presets match the released claim files, but every field name is
//! configuration.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::prompts::{render_relation_prompt, Verdict};
use crate::relation::{builtin_pid_names, format_triple, RelationCatalog};

pub const HOVER_2HOP_CLAIMS: usize = 1126;
pub const HOVER_3HOP_CLAIMS: usize = 1835;
pub const HOVER_4HOP_CLAIMS: usize = 1039;
pub const FEVEROUS_S_CLAIMS: usize = 2962;

/// FEVEROUS challenge annotations in display order.
pub const FEVEROUS_CHALLENGES: [&str; 6] = [
    "Search terms not in claim",
    "Multi-hop Reasoning",
    "Combining Tables and Text",
    "Entity Disambiguation",
    "Numerical Reasoning",
    "Other",
];

const TABLE_CELL_SEPARATOR: &str = " | ";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("record {record}: {message}")]
    Schema { record: String, message: String },
    #[error("{} record(s) with unknown labels: {}", .0.len(), format_label_errors(.0))]
    Label(Vec<LabelIssue>),
    #[error("expected {expected} records, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("invalid field mapping: {0}")]
    InvalidMapping(String),
    #[error("FewRel record {record}: {message}")]
    Span { record: String, message: String },
    #[error(transparent)]
    Prompt(#[from] crate::prompts::PromptError),
}

fn format_label_errors(issues: &[LabelIssue]) -> String {
    issues.iter().take(10).map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIssue {
    pub record: String,
    pub value: String,
}

impl fmt::Display for LabelIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:?})", self.record, self.value)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetSource {
    HoVer,
    FeverousS,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim: String,
    /// `None` for unlabeled inputs; scoring requires every record labeled.
    pub gold: Option<Verdict>,
    pub evidence: Vec<String>,
    /// Hop count (`2-hop`) or FEVEROUS challenge type.
    pub stratum: Option<String>,
    pub source: DatasetSource,
}

/// The four benchmark splits with their published claim counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkSplit {
    Hover2Hop,
    Hover3Hop,
    Hover4Hop,
    FeverousS,
}

impl BenchmarkSplit {
    pub const ALL: [BenchmarkSplit; 4] = [
        BenchmarkSplit::Hover2Hop,
        BenchmarkSplit::Hover3Hop,
        BenchmarkSplit::Hover4Hop,
        BenchmarkSplit::FeverousS,
    ];

    pub fn claim_count(self) -> usize {
        match self {
            BenchmarkSplit::Hover2Hop => HOVER_2HOP_CLAIMS,
            BenchmarkSplit::Hover3Hop => HOVER_3HOP_CLAIMS,
            BenchmarkSplit::Hover4Hop => HOVER_4HOP_CLAIMS,
            BenchmarkSplit::FeverousS => FEVEROUS_S_CLAIMS,
        }
    }

    /// Identifier used in reports and configs.
    pub fn dataset_id(self) -> &'static str {
        match self {
            BenchmarkSplit::Hover2Hop => "hover-2hop",
            BenchmarkSplit::Hover3Hop => "hover-3hop",
            BenchmarkSplit::Hover4Hop => "hover-4hop",
            BenchmarkSplit::FeverousS => "feverous-s",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            BenchmarkSplit::Hover2Hop => "HoVer (2-hop)",
            BenchmarkSplit::Hover3Hop => "HoVer (3-hop)",
            BenchmarkSplit::Hover4Hop => "HoVer (4-hop)",
            BenchmarkSplit::FeverousS => "FEVEROUS-S",
        }
    }

    pub fn from_dataset_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.dataset_id() == id)
    }

    pub fn source(self) -> DatasetSource {
        match self {
            BenchmarkSplit::FeverousS => DatasetSource::FeverousS,
            _ => DatasetSource::HoVer,
        }
    }

    pub fn mapping(self) -> FieldMapping {
        match self {
            BenchmarkSplit::FeverousS => FieldMapping::feverous(),
            _ => FieldMapping::hover(),
        }
    }
}

/// Dotted paths (`evidence.0.text`) into each source record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapping {
    /// Missing id field: records are numbered by position.
    #[serde(default)]
    pub id_field: Option<String>,
    pub claim_field: String,
    #[serde(default)]
    pub label_field: Option<String>,
    #[serde(default)]
    pub evidence_field: Option<String>,
    #[serde(default)]
    pub stratum_field: Option<String>,
    /// Applied to the stratum value, `{}` marks the value (`{}-hop`).
    #[serde(default)]
    pub stratum_format: Option<String>,
    /// Path to the record array inside a JSON document; unused for JSON Lines.
    #[serde(default)]
    pub records_field: Option<String>,
    pub label_true_values: Vec<String>,
    pub label_false_values: Vec<String>,
}

fn default_true_labels() -> Vec<String> {
    ["supports", "supported", "true"].map(String::from).to_vec()
}

fn default_false_labels() -> Vec<String> {
    ["refutes", "refuted", "not_supported", "not supported", "not-supported", "false"]
        .map(String::from)
        .to_vec()
}

impl FieldMapping {
    /// HoVer claim files: `id`, `claim`, `label`, `evidence`, `num_hops`.
    pub fn hover() -> Self {
        Self {
            id_field: Some("id".into()),
            claim_field: "claim".into(),
            label_field: Some("label".into()),
            evidence_field: Some("evidence".into()),
            stratum_field: Some("num_hops".into()),
            stratum_format: Some("{}-hop".into()),
            records_field: None,
            label_true_values: default_true_labels(),
            label_false_values: default_false_labels(),
        }
    }

    /// FEVEROUS-S claim files: `id`, `claim`, `label`, `evidence`, `challenge`.
    pub fn feverous() -> Self {
        Self {
            stratum_field: Some("challenge".into()),
            stratum_format: None,
            ..Self::hover()
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.claim_field.trim().is_empty() {
            return Err(DatasetError::InvalidMapping("claim_field is empty".into()));
        }
        if self.label_field.is_some() && (self.label_true_values.is_empty() || self.label_false_values.is_empty()) {
            return Err(DatasetError::InvalidMapping("label value sets must be non-empty".into()));
        }
        let trues: HashSet<String> = self.label_true_values.iter().map(|v| fold_label(v)).collect();
        if let Some(both) = self.label_false_values.iter().find(|v| trues.contains(&fold_label(v))) {
            return Err(DatasetError::InvalidMapping(format!("label `{both}` is both true and false")));
        }
        Ok(())
    }

    fn label_of(&self, raw: &str) -> Option<Verdict> {
        let folded = fold_label(raw);
        if self.label_true_values.iter().any(|v| fold_label(v) == folded) {
            Some(Verdict::True)
        } else if self.label_false_values.iter().any(|v| fold_label(v) == folded) {
            Some(Verdict::False)
        } else {
            None
        }
    }
}

fn fold_label(s: &str) -> String {
    s.trim().to_lowercase()
}

fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(value, |v, part| match v {
        Value::Object(map) => map.get(part),
        Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// One table row, cells joined by ` | `.
fn linearize_row(cells: &[Value]) -> Option<String> {
    let cells: Option<Vec<String>> = cells.iter().map(scalar_text).collect();
    Some(cells?.iter().map(|c| c.trim()).collect::<Vec<_>>().join(TABLE_CELL_SEPARATOR))
}

/// A table: rows linearized and joined by newlines.
fn linearize_table(rows: &[Value]) -> Option<String> {
    rows.iter()
        .map(|r| match r {
            Value::Array(cells) => linearize_row(cells),
            other => scalar_text(other),
        })
        .collect::<Option<Vec<_>>>()
        .map(|rows| rows.join("\n"))
}

fn evidence_item(v: &Value) -> Option<String> {
    match v {
        Value::Array(items) if items.iter().all(|i| i.is_array()) => linearize_table(items),
        Value::Array(cells) => linearize_row(cells),
        Value::Object(map) => {
            for key in ["text", "sentence", "content"] {
                if let Some(text) = map.get(key).and_then(scalar_text) {
                    return Some(text);
                }
            }
            for key in ["table", "rows"] {
                if let Some(Value::Array(rows)) = map.get(key) {
                    return linearize_table(rows);
                }
            }
            None
        }
        other => scalar_text(other),
    }
}

fn evidence_list(v: &Value) -> Option<Vec<String>> {
    let items = match v {
        Value::Null => Vec::new(),
        Value::Array(items) => items.iter().map(evidence_item).collect::<Option<Vec<_>>>()?,
        other => vec![evidence_item(other)?],
    };
    Some(
        items
            .into_iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
    )
}

fn read_source_records(path: &Path, mapping: &FieldMapping) -> Result<Vec<Value>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, e: serde_json::Error| DatasetError::Parse {
        path: path.display().to_string(),
        line,
        message: e.to_string(),
    };
    let trimmed = text.trim_start();
    let whole_document = trimmed.starts_with('[') || mapping.records_field.is_some();
    if whole_document {
        let doc: Value = serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e))?;
        let records = match &mapping.records_field {
            Some(field) => lookup(&doc, field).ok_or_else(|| DatasetError::Schema {
                record: "<document>".into(),
                message: format!("missing records field `{field}`"),
            })?,
            None => &doc,
        };
        return match records {
            Value::Array(items) => Ok(items.clone()),
            _ => Err(DatasetError::Schema {
                record: "<document>".into(),
                message: "records are not a JSON array".into(),
            }),
        };
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(i + 1, e)))
        .collect()
}

/// Maps every record of a JSON / JSON Lines split through `mapping`.
///
/// Unknown label values are collected and reported together; records are
/// never dropped silently.
pub fn load_split(
    path: impl AsRef<Path>,
    mapping: &FieldMapping,
    source: DatasetSource,
) -> Result<Vec<ClaimRecord>, DatasetError> {
    mapping.validate()?;
    let path = path.as_ref();
    let raw = read_source_records(path, mapping)?;
    let mut records = Vec::with_capacity(raw.len());
    let mut label_issues = Vec::new();
    for (index, value) in raw.iter().enumerate() {
        let id = match &mapping.id_field {
            Some(field) => lookup(value, field).and_then(scalar_text).ok_or_else(|| DatasetError::Schema {
                record: format!("#{}", index + 1),
                message: format!("missing id field `{field}`"),
            })?,
            None => format!("{}", index + 1),
        };
        let schema = |message: String| DatasetError::Schema {
            record: id.clone(),
            message,
        };
        let claim = lookup(value, &mapping.claim_field)
            .and_then(scalar_text)
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .ok_or_else(|| schema(format!("missing or empty claim field `{}`", mapping.claim_field)))?;
        let gold = match &mapping.label_field {
            Some(field) => {
                let raw_label = lookup(value, field)
                    .and_then(scalar_text)
                    .ok_or_else(|| schema(format!("missing label field `{field}`")))?;
                match mapping.label_of(&raw_label) {
                    Some(label) => Some(label),
                    None => {
                        label_issues.push(LabelIssue {
                            record: id.clone(),
                            value: raw_label,
                        });
                        None
                    }
                }
            }
            None => None,
        };
        let evidence = match &mapping.evidence_field {
            Some(field) => {
                let v = lookup(value, field).ok_or_else(|| schema(format!("missing evidence field `{field}`")))?;
                evidence_list(v).ok_or_else(|| schema(format!("unsupported evidence shape in `{field}`")))?
            }
            None => Vec::new(),
        };
        let stratum = match &mapping.stratum_field {
            Some(field) => lookup(value, field).and_then(scalar_text).map(|s| match &mapping.stratum_format {
                Some(fmt) => fmt.replacen("{}", s.trim(), 1),
                None => s.trim().to_string(),
            }),
            None => None,
        };
        records.push(ClaimRecord {
            id,
            claim,
            gold,
            evidence,
            stratum,
            source,
        });
    }
    if !label_issues.is_empty() {
        return Err(DatasetError::Label(label_issues));
    }
    Ok(records)
}

pub fn expect_count(records: &[ClaimRecord], expected: usize) -> Result<(), DatasetError> {
    if records.len() != expected {
        return Err(DatasetError::CountMismatch {
            expected,
            found: records.len(),
        });
    }
    Ok(())
}

/// Canonical record format: JSON Lines of [`ClaimRecord`].
pub fn write_records(path: impl AsRef<Path>, records: &[ClaimRecord]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        let line = serde_json::to_string(r).expect("serializable");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<ClaimRecord>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// One instruction-tuning pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub instruction: String,
    pub response: String,
}

/// A FewRel entity: `[surface, wikidata id, [[token indices], ...]]`.
#[derive(Debug, Clone, Deserialize)]
struct FewRelEntity(String, #[allow(dead_code)] Value, Vec<Vec<usize>>);

#[derive(Debug, Clone, Deserialize)]
struct FewRelInstance {
    tokens: Vec<String>,
    h: FewRelEntity,
    t: FewRelEntity,
    #[serde(default)]
    relation: Option<String>,
}

fn entity_surface(tokens: &[String], entity: &FewRelEntity, role: &str, record: &str) -> Result<String, DatasetError> {
    let span = entity.2.first().filter(|s| !s.is_empty()).ok_or_else(|| DatasetError::Span {
        record: record.to_string(),
        message: format!("{role} entity `{}` has no token span", entity.0),
    })?;
    span.iter()
        .map(|&i| {
            tokens.get(i).map(String::as_str).ok_or_else(|| DatasetError::Span {
                record: record.to_string(),
                message: format!("{role} token index {i} out of bounds ({} tokens)", tokens.len()),
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|parts| parts.join(" "))
}

/// Reads FewRel instances from either the released `{relation: [instances]}`
/// document or JSON Lines / arrays of instances carrying a `relation` key.
fn read_fewrel(path: &Path) -> Result<Vec<(String, String, FewRelInstance)>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| DatasetError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let instance = |v: Value, record: String| -> Result<FewRelInstance, DatasetError> {
        serde_json::from_value(v).map_err(|e| DatasetError::Span {
            record,
            message: format!("not a FewRel instance: {e}"),
        })
    };
    let mut out = Vec::new();
    let with_relation = |inst: FewRelInstance, record: String| {
        let rel = inst.relation.clone().ok_or_else(|| DatasetError::Span {
            record: record.clone(),
            message: "instance has no relation label".into(),
        })?;
        Ok::<_, DatasetError>((record, rel, inst))
    };
    match serde_json::from_str::<Value>(&text) {
        // A one-line JSON Lines file also parses as a single object.
        Ok(Value::Object(map)) if !map.contains_key("tokens") => {
            for (relation, items) in map {
                let Value::Array(items) = items else {
                    return Err(parse_err(1, format!("relation `{relation}` does not hold an array")));
                };
                for (i, item) in items.into_iter().enumerate() {
                    let record = format!("{relation}#{i}");
                    out.push((record.clone(), relation.clone(), instance(item, record)?));
                }
            }
        }
        Ok(Value::Array(items)) => {
            for (i, item) in items.into_iter().enumerate() {
                let record = format!("#{}", i + 1);
                out.push(with_relation(instance(item, record.clone())?, record)?);
            }
        }
        _ => {
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: Value = serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?;
                let record = format!("line {}", i + 1);
                out.push(with_relation(instance(v, record.clone())?, record)?);
            }
        }
    }
    Ok(out)
}

/// Resolves a FewRel relation key: catalog names pass through, Wikidata ids
/// map to their names, anything else is kept verbatim.
fn relation_name(key: &str, catalog: &RelationCatalog, pid_names: &[(String, String)]) -> String {
    if catalog.contains(key) {
        return key.to_string();
    }
    pid_names
        .iter()
        .find(|(pid, _)| pid == key)
        .map(|(_, name)| name.clone())
        .unwrap_or_else(|| key.to_string())
}

/// Builds `(instruction, response)` pairs: the relation-extraction prompt
/// filled with the detokenized sentence, answered by `(head, relation, tail)`.
pub fn fewrel_instructions(
    fewrel_path: impl AsRef<Path>,
    catalog: &RelationCatalog,
) -> Result<Vec<InstructionPair>, DatasetError> {
    let pid_names = builtin_pid_names();
    read_fewrel(fewrel_path.as_ref())?
        .into_iter()
        .map(|(record, key, inst)| {
            let head = entity_surface(&inst.tokens, &inst.h, "head", &record)?;
            let tail = entity_surface(&inst.tokens, &inst.t, "tail", &record)?;
            let sentence = inst.tokens.join(" ");
            let relation = relation_name(&key, catalog, &pid_names);
            Ok(InstructionPair {
                instruction: render_relation_prompt(&sentence, catalog)?,
                response: format_triple(&head, &relation, &tail),
            })
        })
        .collect()
}

/// Writes the FewRel instruction dataset as JSON Lines; returns the line count.
pub fn export_fewrel_instructions(
    fewrel_path: impl AsRef<Path>,
    catalog: &RelationCatalog,
    out: impl AsRef<Path>,
) -> Result<usize, DatasetError> {
    let pairs = fewrel_instructions(fewrel_path, catalog)?;
    let out = out.as_ref();
    let mut w = BufWriter::new(File::create(out).map_err(io_err(out))?);
    for pair in &pairs {
        let line = serde_json::to_string(pair).expect("serializable");
        writeln!(w, "{line}").map_err(io_err(out))?;
    }
    w.flush().map_err(io_err(out))?;
    Ok(pairs.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{parse_triples, Origin};

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn custom_two_line_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"claim\":\"X\",\"label\":\"SUPPORTS\",\"evidence\":[\"e1\"]}\n\
             {\"id\":\"b\",\"claim\":\"Y\",\"label\":\"REFUTES\",\"evidence\":\"e2\"}\n",
        );
        let recs = load_split(&p, &FieldMapping::feverous(), DatasetSource::Custom).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].gold, Some(Verdict::True));
        assert_eq!(recs[1].gold, Some(Verdict::False));
        assert_eq!(recs[1].evidence, ["e2"]);
        assert!(expect_count(&recs, 2).is_ok());
        assert!(matches!(expect_count(&recs, 3), Err(DatasetError::CountMismatch { expected: 3, found: 2 })));
    }

    #[test]
    fn hover_hops_become_strata() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "h.json",
            r#"[{"id": 7, "claim": "c", "label": "NOT_SUPPORTED", "evidence": [], "num_hops": 3}]"#,
        );
        let recs = load_split(&p, &FieldMapping::hover(), DatasetSource::HoVer).unwrap();
        assert_eq!(recs[0].id, "7");
        assert_eq!(recs[0].stratum.as_deref(), Some("3-hop"));
        assert_eq!(recs[0].gold, Some(Verdict::False));
    }

    #[test]
    fn tables_are_linearized() {
        let v: Value = serde_json::from_str(
            r#"["plain sentence", [["Year", "Team"], ["1999", "Ajax"]], {"text": "obj"}, {"table": [["a", 1]]}]"#,
        )
        .unwrap();
        assert_eq!(
            evidence_list(&v).unwrap(),
            ["plain sentence", "Year | Team\n1999 | Ajax", "obj", "a | 1"]
        );
    }

    #[test]
    fn unknown_labels_are_all_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"claim\":\"X\",\"label\":\"MAYBE\",\"evidence\":[]}\n\
             {\"id\":\"b\",\"claim\":\"Y\",\"label\":\"supports\",\"evidence\":[]}\n\
             {\"id\":\"c\",\"claim\":\"Z\",\"label\":\"NEI\",\"evidence\":[]}\n",
        );
        match load_split(&p, &FieldMapping::hover(), DatasetSource::Custom) {
            Err(DatasetError::Label(issues)) => {
                let ids: Vec<_> = issues.iter().map(|i| i.record.as_str()).collect();
                assert_eq!(ids, ["a", "c"]);
            }
            other => panic!("expected label error, got {other:?}"),
        }
    }

    #[test]
    fn missing_fields_are_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", "{\"id\":\"a\",\"label\":\"supports\",\"evidence\":[]}\n");
        assert!(matches!(
            load_split(&p, &FieldMapping::hover(), DatasetSource::Custom),
            Err(DatasetError::Schema { .. })
        ));
        let p = write(dir.path(), "d.jsonl", "{\"id\":\"a\",\"claim\":\"c\",\"label\":\"supports\"}\n");
        assert!(matches!(
            load_split(&p, &FieldMapping::hover(), DatasetSource::Custom),
            Err(DatasetError::Schema { .. })
        ));
        let p = write(dir.path(), "e.jsonl", "{not json\n");
        assert!(matches!(
            load_split(&p, &FieldMapping::hover(), DatasetSource::Custom),
            Err(DatasetError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn overlapping_label_sets_rejected() {
        let mut m = FieldMapping::hover();
        m.label_false_values.push("Supports".into());
        assert!(matches!(m.validate(), Err(DatasetError::InvalidMapping(_))));
    }

    #[test]
    fn nested_records_field_and_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "n.json",
            r#"{"data": {"items": [{"meta": {"uid": "u1"}, "q": {"text": "c"}, "y": "TRUE", "ev": [{"sentence": "s"}]}]}}"#,
        );
        let mapping = FieldMapping {
            id_field: Some("meta.uid".into()),
            claim_field: "q.text".into(),
            label_field: Some("y".into()),
            evidence_field: Some("ev".into()),
            stratum_field: None,
            stratum_format: None,
            records_field: Some("data.items".into()),
            label_true_values: vec!["true".into()],
            label_false_values: vec!["false".into()],
        };
        let recs = load_split(&p, &mapping, DatasetSource::Custom).unwrap();
        assert_eq!(recs[0].id, "u1");
        assert_eq!(recs[0].evidence, ["s"]);
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"claim\":\" X \",\"label\":\"supports\",\"evidence\":[\"e1\", \" \"],\"challenge\":\"Other\"}\n",
        );
        let recs = load_split(&p, &FieldMapping::feverous(), DatasetSource::FeverousS).unwrap();
        let out = dir.path().join("canon.jsonl");
        write_records(&out, &recs).unwrap();
        assert_eq!(load_records(&out).unwrap(), recs);
        assert_eq!(recs[0].claim, "X");
        assert_eq!(recs[0].evidence, ["e1"]);
    }

    #[test]
    fn benchmark_split_counts() {
        let counts: Vec<_> = BenchmarkSplit::ALL.iter().map(|s| s.claim_count()).collect();
        assert_eq!(counts, [1126, 1835, 1039, 2962]);
        assert_eq!(BenchmarkSplit::from_dataset_id("feverous-s"), Some(BenchmarkSplit::FeverousS));
    }

    #[test]
    fn fewrel_single_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "f.jsonl",
            r#"{"tokens": ["A", "b", "C"], "h": ["A", "Q1", [[0]]], "t": ["C", "Q2", [[2]]], "relation": "r"}"#,
        );
        let out = dir.path().join("out.jsonl");
        let cat = RelationCatalog::builtin();
        assert_eq!(export_fewrel_instructions(&p, &cat, &out).unwrap(), 1);
        let pair: InstructionPair = serde_json::from_str(fs::read_to_string(&out).unwrap().trim()).unwrap();
        assert_eq!(pair.response, "(A, r, C)");
        assert!(pair.instruction.contains("\nSentence: A b C \n"));
        assert!(pair.instruction.ends_with("### Response: "));
    }

    #[test]
    fn fewrel_released_layout_uses_pid_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "train.json",
            r#"{"P17": [{"tokens": ["Rome", "is", "in", "Italy", ",", "Europe"], "h": ["rome", "Q220", [[0]]], "t": ["italy", "Q38", [[3, 4, 5]]]}]}"#,
        );
        let pairs = fewrel_instructions(&p, &RelationCatalog::builtin()).unwrap();
        assert_eq!(pairs[0].response, "(Rome, country, \"Italy , Europe\")");
        let parsed = parse_triples(&pairs[0].response, Origin::Evidence, &RelationCatalog::builtin());
        assert_eq!(parsed.triples.len(), 1);
        assert_eq!(parsed.triples[0].tail(), "Italy , Europe");
    }

    #[test]
    fn fewrel_bad_span_names_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "f.jsonl",
            r#"{"tokens": ["A"], "h": ["A", "Q1", [[0]]], "t": ["C", "Q2", [[5]]], "relation": "r"}"#,
        );
        match fewrel_instructions(&p, &RelationCatalog::builtin()) {
            Err(DatasetError::Span { record, .. }) => assert_eq!(record, "line 1"),
            other => panic!("expected span error, got {other:?}"),
        }
    }
}

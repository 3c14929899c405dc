//! Relation triples, the relation-type catalog, entity normalization and the
//! parser for LLM-emitted `(head, relation, tail)` text.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_CATALOG: &str = include_str!("../data/fewrel_relations.txt");
const BUILTIN_PID_MAP: &str = include_str!("../data/fewrel_pids.tsv");

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("entity `{0}` is empty after normalization")]
    EmptyEntity(String),
    #[error("triple field `{field}` is empty after normalization (got `{value}`)")]
    EmptyField { field: &'static str, value: String },
    #[error("relation catalog from {0} is empty")]
    EmptyCatalog(String),
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Canonical form of an entity surface string.
///
/// Two triples mention the same entity iff their normalized entities are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedEntity(String);

impl NormalizedEntity {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NormalizedEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Characters stripped from the outer edges of an entity.
///
/// ASCII punctuation except the symbols that commonly carry meaning inside a
/// name (`C#`, `C++`, `AT&T`, `$5`, `50%`, `@handle`), plus the Unicode
/// general-punctuation and CJK-punctuation blocks.
fn is_outer_punct(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation() && !matches!(c, '#' | '+' | '&' | '$' | '%' | '@');
    }
    matches!(c, '\u{2010}'..='\u{205E}' | '\u{3000}'..='\u{303F}' | '«' | '»' | '¡' | '¿' | '·' | '\u{00A0}')
}

/// Lowercases, strips leading/trailing punctuation and whitespace, and
/// collapses inner whitespace runs to a single space.
pub fn normalize_entity(surface: &str) -> Result<NormalizedEntity, RelationError> {
    let lowered = surface.to_lowercase();
    let trimmed = lowered.trim_matches(|c: char| c.is_whitespace() || is_outer_punct(c));
    let canonical = trimmed.split_whitespace().collect::<Vec<_>>().join(" ");
    if canonical.is_empty() {
        return Err(RelationError::EmptyEntity(surface.to_string()));
    }
    Ok(NormalizedEntity(canonical))
}

/// Where a triple was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Claim,
    Evidence,
}

/// Normalized identity of a triple: `(head, relation, tail)` canonical forms.
pub type TripleKey = (NormalizedEntity, NormalizedEntity, NormalizedEntity);

/// A `(head, relation, tail)` fact stated in a claim or evidence sentence.
///
/// Surface forms are kept as written; comparisons go through [`RelationTriple::key`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTriple")]
pub struct RelationTriple {
    head: String,
    relation: String,
    tail: String,
    origin: Origin,
    /// False when the relation label is not in the catalog active at parse time.
    in_catalog: bool,
}

#[derive(Deserialize)]
struct RawTriple {
    head: String,
    relation: String,
    tail: String,
    origin: Origin,
    #[serde(default = "default_true")]
    in_catalog: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<RawTriple> for RelationTriple {
    type Error = RelationError;

    fn try_from(raw: RawTriple) -> Result<Self, Self::Error> {
        let mut triple = RelationTriple::new(raw.head, raw.relation, raw.tail, raw.origin)?;
        triple.in_catalog = raw.in_catalog;
        Ok(triple)
    }
}

impl RelationTriple {
    pub fn new(
        head: impl Into<String>,
        relation: impl Into<String>,
        tail: impl Into<String>,
        origin: Origin,
    ) -> Result<Self, RelationError> {
        let head = head.into().trim().to_string();
        let relation = relation.into().trim().to_string();
        let tail = tail.into().trim().to_string();
        let norm = |field: &'static str, value: &str| {
            normalize_entity(value).map_err(|_| RelationError::EmptyField {
                field,
                value: value.to_string(),
            })
        };
        norm("head", &head)?;
        norm("relation", &relation)?;
        norm("tail", &tail)?;
        Ok(Self {
            head,
            relation,
            tail,
            origin,
            in_catalog: true,
        })
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn tail(&self) -> &str {
        &self.tail
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn in_catalog(&self) -> bool {
        self.in_catalog
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Every constructor validates the three fields, so normalization cannot fail here.
    pub fn key(&self) -> TripleKey {
        (
            normalize_entity(&self.head).expect("validated head"),
            normalize_entity(&self.relation).expect("validated relation"),
            normalize_entity(&self.tail).expect("validated tail"),
        )
    }

    pub fn head_entity(&self) -> NormalizedEntity {
        self.key().0
    }

    pub fn tail_entity(&self) -> NormalizedEntity {
        self.key().2
    }
}

impl fmt::Display for RelationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_triple(&self.head, &self.relation, &self.tail))
    }
}

fn quote_field(field: &str) -> String {
    let needs_quotes = field.contains([',', '(', ')']) || field.trim() != field;
    if needs_quotes {
        format!("\"{}\"", field.replace('"', "'"))
    } else {
        field.to_string()
    }
}

/// Renders `(head, relation, tail)` so that [`parse_triples`] reads it back as
/// exactly one triple. Fields containing commas or parentheses are quoted.
pub fn format_triple(head: &str, relation: &str, tail: &str) -> String {
    format!("({}, {}, {})", quote_field(head), quote_field(relation), quote_field(tail))
}

/// Ordered, de-duplicated set of relation-type names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog")]
pub struct RelationCatalog {
    names: Vec<String>,
    source: String,
    #[serde(skip)]
    index: HashSet<NormalizedEntity>,
}

#[derive(Deserialize)]
struct RawCatalog {
    names: Vec<String>,
    source: String,
}

impl TryFrom<RawCatalog> for RelationCatalog {
    type Error = RelationError;

    fn try_from(raw: RawCatalog) -> Result<Self, Self::Error> {
        Self::from_names(raw.names, raw.source)
    }
}

impl RelationCatalog {
    /// Builds a catalog from names; `#` comment lines and blanks are skipped,
    /// duplicates (after normalization) keep their first occurrence.
    pub fn from_names<I, S>(names: I, source: impl Into<String>) -> Result<Self, RelationError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let source = source.into();
        let mut kept = Vec::new();
        let mut index = HashSet::new();
        for name in names {
            let name = name.as_ref().trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            let Ok(norm) = normalize_entity(name) else {
                continue;
            };
            if index.insert(norm) {
                kept.push(name.to_string());
            }
        }
        if kept.is_empty() {
            return Err(RelationError::EmptyCatalog(source));
        }
        Ok(Self { names: kept, source, index })
    }

    /// The FewRel relation inventory bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_names(BUILTIN_CATALOG.lines(), "builtin").expect("bundled catalog is non-empty")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, relation: &str) -> bool {
        normalize_entity(relation).is_ok_and(|norm| self.index.contains(&norm))
    }
}

/// Loads a catalog file: UTF-8, one relation name per line, `#` lines ignored.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<RelationCatalog, RelationError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| RelationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RelationCatalog::from_names(text.lines(), path.display().to_string())
}

/// Wikidata property id → FewRel relation name, for the bundled inventory.
pub fn builtin_pid_names() -> Vec<(String, String)> {
    BUILTIN_PID_MAP
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split_once('\t'))
        .map(|(pid, name)| (pid.trim().to_string(), name.trim().to_string()))
        .collect()
}

/// Non-fatal problem found while parsing generated triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    /// Byte offset of the fragment in the generation.
    pub offset: usize,
    pub fragment: String,
    pub reason: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {} (`{}`)", self.offset, self.reason, self.fragment)
    }
}

/// How out-of-catalog relation labels are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CatalogPolicy {
    /// Keep the triple, mark `in_catalog = false`.
    #[default]
    Flag,
    /// Drop the triple with a warning.
    Enforce,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTriples {
    pub triples: Vec<RelationTriple>,
    pub warnings: Vec<ParseWarning>,
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201C}' | '\u{201D}')
}

/// A top-level `(...)` span: byte range of the inner text.
enum Span {
    Balanced { open: usize, inner_end: usize },
    Unclosed { open: usize },
}

/// Finds the span opened at `open` (which holds `(`). Nested parentheses and
/// `"`-quoted text are skipped.
fn scan_span(text: &str, open: usize) -> Span {
    let mut depth = 0usize;
    let mut in_quote = false;
    for (i, c) in text[open..].char_indices() {
        let at = open + i;
        if is_quote(c) {
            in_quote = !in_quote;
            continue;
        }
        if in_quote {
            continue;
        }
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Span::Balanced { open, inner_end: at };
                }
            }
            _ => {}
        }
    }
    Span::Unclosed { open }
}

/// Splits span content on commas that are outside nested parentheses and quotes.
fn split_top_level(inner: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut in_quote = false;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        if is_quote(c) {
            in_quote = !in_quote;
        } else if !in_quote {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    parts.push(&inner[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    parts.push(&inner[start..]);
    parts
}

fn unquote(field: &str) -> &str {
    let field = field.trim();
    let mut chars = field.chars();
    match (chars.next(), chars.next_back()) {
        (Some(a), Some(b)) if is_quote(a) && is_quote(b) && field.len() >= a.len_utf8() + b.len_utf8() => {
            field[a.len_utf8()..field.len() - b.len_utf8()].trim()
        }
        _ => field,
    }
}

fn snippet(s: &str) -> String {
    const MAX: usize = 80;
    if s.chars().count() <= MAX {
        s.to_string()
    } else {
        let mut out: String = s.chars().take(MAX).collect();
        out.push('…');
        out
    }
}

/// Extracts every well-formed `(a, b, c)` triple from a generation.
///
/// Total: malformed fragments become warnings. Output keeps order of first
/// appearance and drops duplicates under normalized-triple equality.
pub fn parse_triples(generation: &str, origin: Origin, catalog: &RelationCatalog) -> ParsedTriples {
    parse_triples_with_policy(generation, origin, catalog, CatalogPolicy::Flag)
}

pub fn parse_triples_with_policy(
    generation: &str,
    origin: Origin,
    catalog: &RelationCatalog,
    policy: CatalogPolicy,
) -> ParsedTriples {
    let mut out = ParsedTriples::default();
    let mut seen = HashSet::new();
    let mut pos = 0;
    while let Some(rel) = generation[pos..].find('(') {
        let open = pos + rel;
        match scan_span(generation, open) {
            Span::Unclosed { open } => {
                out.warnings.push(ParseWarning {
                    offset: open,
                    fragment: snippet(&generation[open..]),
                    reason: "unclosed parenthesis".into(),
                });
                // Retry from inside the unclosed span so nested triples survive.
                pos = open + 1;
            }
            Span::Balanced { open, inner_end } => {
                let inner = &generation[open + 1..inner_end];
                pos = inner_end + 1;
                let parts = split_top_level(inner);
                if parts.len() != 3 {
                    out.warnings.push(ParseWarning {
                        offset: open,
                        fragment: snippet(&generation[open..=inner_end]),
                        reason: format!("expected 3 comma-separated fields, found {}", parts.len()),
                    });
                    continue;
                }
                let mut triple = match RelationTriple::new(
                    unquote(parts[0]),
                    unquote(parts[1]),
                    unquote(parts[2]),
                    origin,
                ) {
                    Ok(t) => t,
                    Err(e) => {
                        out.warnings.push(ParseWarning {
                            offset: open,
                            fragment: snippet(&generation[open..=inner_end]),
                            reason: e.to_string(),
                        });
                        continue;
                    }
                };
                triple.in_catalog = catalog.contains(&triple.relation);
                if !triple.in_catalog && policy == CatalogPolicy::Enforce {
                    out.warnings.push(ParseWarning {
                        offset: open,
                        fragment: snippet(&generation[open..=inner_end]),
                        reason: format!("relation `{}` is not in the catalog", triple.relation),
                    });
                    continue;
                }
                if seen.insert(triple.key()) {
                    out.triples.push(triple);
                }
            }
        }
    }
    out
}

/// Number of balanced top-level `(...)` spans; an upper bound on the number of
/// triples [`parse_triples`] can return.
pub fn count_balanced_spans(text: &str) -> usize {
    let mut count = 0;
    let mut pos = 0;
    while let Some(rel) = text[pos..].find('(') {
        let open = pos + rel;
        match scan_span(text, open) {
            Span::Balanced { inner_end, .. } => {
                count += 1;
                pos = inner_end + 1;
            }
            Span::Unclosed { .. } => pos = open + 1,
        }
    }
    count
}

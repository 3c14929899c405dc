//! Scoring: confusion matrices, macro-F1, per-stratum breakdowns, the
//! ablation grid and the FEVEROUS challenge table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{BenchmarkSplit, ClaimRecord, FEVEROUS_CHALLENGES};
use crate::pipeline::{AblationFlags, ClaimRunTrace};
use crate::prompts::{ParseStatus, Verdict};

pub const UNSPECIFIED_STRATUM: &str = "unspecified";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("traces and records do not align: {0}")]
    Alignment(String),
    #[error("records without a gold label: {}", .0.join(", "))]
    Unlabeled(Vec<String>),
    #[error("traces mix ablation configurations {0} and {1}")]
    MixedConfig(String, String),
    #[error("two reports for configuration {flags} on {dataset}")]
    DuplicateConfig { flags: String, dataset: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid report {path}: {message}")]
    Format { path: String, message: String },
}

/// Binary confusion counts with `True` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold claims of this class.
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn add(&mut self, predicted: Verdict, gold: Verdict) {
        match (predicted, gold) {
            (Verdict::True, Verdict::True) => self.tp += 1,
            (Verdict::True, Verdict::False) => self.fp += 1,
            (Verdict::False, Verdict::True) => self.fn_ += 1,
            (Verdict::False, Verdict::False) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Verdict, Verdict)>) -> Self {
        let mut m = Self::default();
        for (p, g) in pairs {
            m.add(p, g);
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Metrics with `class` treated as positive; 0/0 is 0.
    pub fn class_metrics(&self, class: Verdict) -> ClassMetrics {
        let (tp, fp, fn_) = match class {
            Verdict::True => (self.tp, self.fp, self.fn_),
            Verdict::False => (self.tn, self.fn_, self.fp),
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: tp + fn_,
        }
    }

    /// Whether `class` occurs among the gold labels or the predictions.
    fn class_present(&self, class: Verdict) -> bool {
        match class {
            Verdict::True => self.tp + self.fp + self.fn_ > 0,
            Verdict::False => self.tn + self.fp + self.fn_ > 0,
        }
    }

    /// Mean per-class F1 over the classes present in gold or predictions, in [0, 1].
    pub fn macro_f1(&self) -> f64 {
        let present: Vec<f64> = [Verdict::True, Verdict::False]
            .into_iter()
            .filter(|&c| self.class_present(c))
            .map(|c| self.class_metrics(c).f1)
            .collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }

    pub fn f1_percent(&self) -> f64 {
        100.0 * self.macro_f1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumScore {
    pub count: u64,
    pub f1_percent: f64,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub config: AblationFlags,
    pub total: u64,
    pub f1_percent: f64,
    pub matrix: ConfusionMatrix,
    pub class_true: ClassMetrics,
    pub class_false: ClassMetrics,
    pub by_stratum: BTreeMap<String, StratumScore>,
    pub parse_status: BTreeMap<String, u64>,
    pub errored: u64,
    /// (defaulted parses + errored claims) / total.
    pub defaulted_rate: f64,
}

impl EvalReport {
    pub fn with_dataset(mut self, dataset: impl Into<String>) -> Self {
        self.dataset = dataset.into();
        self
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        write_json(path.as_ref(), self)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| EvalError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), EvalError> {
    let io = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io)
}

/// The label a trace is scored with: errored and unparsed claims count as `False`.
pub fn predicted_label(trace: &ClaimRunTrace) -> Verdict {
    match (&trace.error, &trace.outcome) {
        (None, Some(outcome)) => outcome.label,
        _ => Verdict::False,
    }
}

fn status_name(trace: &ClaimRunTrace) -> &'static str {
    match (&trace.error, &trace.outcome) {
        (Some(_), _) | (None, None) => "errored",
        (None, Some(o)) => match o.parse_status {
            ParseStatus::Clean => "clean",
            ParseStatus::Salvaged => "salvaged",
            ParseStatus::Defaulted => "defaulted",
        },
    }
}

/// Scores one run. Traces and records are matched by claim id; order does
/// not matter but both sides must cover the same ids exactly once.
pub fn score(traces: &[ClaimRunTrace], records: &[ClaimRecord]) -> Result<EvalReport, EvalError> {
    let mut by_id: HashMap<&str, &ClaimRecord> = HashMap::with_capacity(records.len());
    for r in records {
        if by_id.insert(r.id.as_str(), r).is_some() {
            return Err(EvalError::Alignment(format!("duplicate record id `{}`", r.id)));
        }
    }
    if traces.len() != records.len() {
        return Err(EvalError::Alignment(format!(
            "{} traces for {} records",
            traces.len(),
            records.len()
        )));
    }
    let unlabeled: Vec<String> = records.iter().filter(|r| r.gold.is_none()).map(|r| r.id.clone()).collect();
    if !unlabeled.is_empty() {
        return Err(EvalError::Unlabeled(unlabeled));
    }

    let config = traces.first().map_or(AblationFlags::ALL_ON, |t| t.flags);
    let mut matrix = ConfusionMatrix::default();
    let mut strata: BTreeMap<String, ConfusionMatrix> = BTreeMap::new();
    let mut statuses: BTreeMap<String, u64> = BTreeMap::new();
    let mut seen = std::collections::HashSet::with_capacity(traces.len());
    for trace in traces {
        if trace.flags != config {
            return Err(EvalError::MixedConfig(config.label(), trace.flags.label()));
        }
        let record = by_id
            .get(trace.claim_id.as_str())
            .ok_or_else(|| EvalError::Alignment(format!("trace `{}` has no record", trace.claim_id)))?;
        if !seen.insert(trace.claim_id.as_str()) {
            return Err(EvalError::Alignment(format!("duplicate trace id `{}`", trace.claim_id)));
        }
        let gold = record.gold.expect("checked above");
        let predicted = predicted_label(trace);
        matrix.add(predicted, gold);
        let stratum = record.stratum.clone().unwrap_or_else(|| UNSPECIFIED_STRATUM.to_string());
        strata.entry(stratum).or_default().add(predicted, gold);
        *statuses.entry(status_name(trace).to_string()).or_default() += 1;
    }

    let total = matrix.total();
    let errored = statuses.get("errored").copied().unwrap_or(0);
    let defaulted = statuses.get("defaulted").copied().unwrap_or(0);
    Ok(EvalReport {
        dataset: "custom".to_string(),
        config,
        total,
        f1_percent: matrix.f1_percent(),
        matrix,
        class_true: matrix.class_metrics(Verdict::True),
        class_false: matrix.class_metrics(Verdict::False),
        by_stratum: strata
            .into_iter()
            .map(|(name, m)| {
                let score = StratumScore {
                    count: m.total(),
                    f1_percent: m.f1_percent(),
                    matrix: m,
                };
                (name, score)
            })
            .collect(),
        parse_status: statuses,
        errored,
        defaulted_rate: ratio(defaulted + errored, total),
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dataset   {}", self.dataset)?;
        writeln!(f, "config    {}", self.config.label())?;
        writeln!(f, "claims    {}", self.total)?;
        writeln!(f, "macro-F1  {:.2}", self.f1_percent)?;
        writeln!(
            f,
            "matrix    tp={} fp={} fn={} tn={}",
            self.matrix.tp, self.matrix.fp, self.matrix.fn_, self.matrix.tn
        )?;
        for (name, m) in [("True", &self.class_true), ("False", &self.class_false)] {
            writeln!(
                f,
                "  {name:<6} P={:.4} R={:.4} F1={:.4} support={}",
                m.precision, m.recall, m.f1, m.support
            )?;
        }
        writeln!(f, "defaulted {:.2}%  (errored {})", 100.0 * self.defaulted_rate, self.errored)?;
        if !self.by_stratum.is_empty() {
            let width = self.by_stratum.keys().map(|k| k.chars().count()).max().unwrap_or(0);
            for (name, s) in &self.by_stratum {
                writeln!(f, "  {name:<width$}  {:>6}  {:>6.2}", s.count, s.f1_percent)?;
            }
        }
        Ok(())
    }
}

fn column_order(dataset: &str) -> (usize, String) {
    match BenchmarkSplit::from_dataset_id(dataset) {
        Some(split) => (BenchmarkSplit::ALL.iter().position(|s| *s == split).unwrap_or(0), String::new()),
        None => (BenchmarkSplit::ALL.len(), dataset.to_string()),
    }
}

fn column_title(dataset: &str) -> String {
    BenchmarkSplit::from_dataset_id(dataset).map_or_else(|| dataset.to_string(), |s| s.display_name().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub flags: AblationFlags,
    /// One F1 percentage per column; `None` where no report exists.
    pub cells: Vec<Option<f64>>,
}

/// The six-configuration ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub datasets: Vec<String>,
    pub rows: Vec<GridRow>,
    pub warnings: Vec<String>,
}

pub fn ablation_grid(reports: &[EvalReport]) -> Result<AblationGrid, EvalError> {
    let mut cells: HashMap<(AblationFlags, &str), f64> = HashMap::new();
    for r in reports {
        if cells.insert((r.config, r.dataset.as_str()), r.f1_percent).is_some() {
            return Err(EvalError::DuplicateConfig {
                flags: r.config.label(),
                dataset: r.dataset.clone(),
            });
        }
    }
    let mut datasets: Vec<String> = reports.iter().map(|r| r.dataset.clone()).collect();
    datasets.sort_by_key(|d| column_order(d));
    datasets.dedup();

    let mut warnings = Vec::new();
    let rows = AblationFlags::GRID
        .iter()
        .map(|&flags| GridRow {
            flags,
            cells: datasets
                .iter()
                .map(|d| {
                    let cell = cells.get(&(flags, d.as_str())).copied();
                    if cell.is_none() {
                        warnings.push(format!("no report for {} on {d}", flags.label()));
                    }
                    cell
                })
                .collect(),
        })
        .collect();
    for r in reports {
        if !AblationFlags::GRID.contains(&r.config) {
            warnings.push(format!("report {} on {} is outside the grid", r.config.label(), r.dataset));
        }
    }
    Ok(AblationGrid {
        datasets,
        rows,
        warnings,
    })
}

impl AblationGrid {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        write_json(path.as_ref(), self)
    }
}

fn mark(on: bool) -> &'static str {
    if on {
        "✓"
    } else {
        "✗"
    }
}

impl fmt::Display for AblationGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const BLOCK: usize = 20;
        let titles: Vec<String> = self.datasets.iter().map(|d| column_title(d)).collect();
        let widths: Vec<usize> = titles.iter().map(|t| t.chars().count().max(6)).collect();
        write!(f, "{:<BLOCK$}  Relation  InfoRE ", "")?;
        for (t, w) in titles.iter().zip(&widths) {
            write!(f, " | {t:>w$}")?;
        }
        writeln!(f)?;
        for (i, row) in self.rows.iter().enumerate() {
            let block = match i {
                0 => "Has Evidence context",
                3 => "No Evidence context",
                _ => "",
            };
            write!(
                f,
                "{block:<BLOCK$}  {:^8}  {:^6} ",
                mark(row.flags.use_relations),
                mark(row.flags.use_infore)
            )?;
            for (cell, w) in row.cells.iter().zip(&widths) {
                match cell {
                    Some(v) => write!(f, " | {v:>w$.2}")?,
                    None => write!(f, " | {:>w$}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeRow {
    pub challenge: String,
    pub count: u64,
    pub f1_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeTable {
    pub rows: Vec<ChallengeRow>,
}

/// Canonical position of a FEVEROUS challenge name, if it is one.
fn challenge_rank(name: &str) -> Option<usize> {
    let folded = name.trim().to_lowercase();
    if folded == "combining tables and tex" {
        return Some(2);
    }
    FEVEROUS_CHALLENGES.iter().position(|c| c.to_lowercase() == folded)
}

/// Per-stratum counts and F1 with known challenge types first, in canonical
/// order, followed by any other strata alphabetically.
pub fn challenge_breakdown(report: &EvalReport) -> ChallengeTable {
    let mut rows: Vec<(usize, ChallengeRow)> = report
        .by_stratum
        .iter()
        .map(|(name, s)| {
            let rank = challenge_rank(name);
            let challenge = rank.map_or_else(|| name.clone(), |i| FEVEROUS_CHALLENGES[i].to_string());
            (
                rank.unwrap_or(FEVEROUS_CHALLENGES.len()),
                ChallengeRow {
                    challenge,
                    count: s.count,
                    f1_percent: s.f1_percent,
                },
            )
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.challenge.cmp(&b.1.challenge)));
    ChallengeTable {
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    }
}

impl fmt::Display for ChallengeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.challenge.chars().count())
            .chain(["Type of challenge".len()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  {:>7}  {:>7}", "Type of challenge", "Claims", "F1 (%)")?;
        for r in &self.rows {
            writeln!(f, "{:<width$}  {:>7}  {:>7.2}", r.challenge, r.count, r.f1_percent)?;
        }
        Ok(())
    }
}

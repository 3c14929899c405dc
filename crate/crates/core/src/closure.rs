//! Evidence-relation closure: keeps only the evidence triples reachable from
//! the entities mentioned by the claim triples.
//!
//! The hypothesis set starts with the head and tail of every claim triple.
//! Passes over the evidence select each triple whose head is already
//! hypothesized and add its tail, until a full pass changes nothing.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::{NormalizedEntity, RelationTriple, TripleKey};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClosureError {
    #[error("closure result does not come from these evidence relations: {0}")]
    MismatchedInputs(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClosureOptions {
    /// Also select a triple when only its tail is hypothesized (adding its
    /// head). Off by default: expansion follows head to tail only.
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureResult {
    pub claim_rels: Vec<RelationTriple>,
    /// Selected evidence triples in first-selection order.
    pub evidence_rels_new: Vec<RelationTriple>,
    pub hypos: BTreeSet<NormalizedEntity>,
    /// Full passes over the evidence, including the final pass that changed nothing.
    pub rounds: usize,
}

impl ClosureResult {
    pub fn selected_keys(&self) -> HashSet<TripleKey> {
        self.evidence_rels_new.iter().map(RelationTriple::key).collect()
    }
}

pub fn find_evidence_relations(
    claim_rels: &[RelationTriple],
    evidence_rels: &[RelationTriple],
) -> ClosureResult {
    find_evidence_relations_with(claim_rels, evidence_rels, ClosureOptions::default())
}

pub fn find_evidence_relations_with(
    claim_rels: &[RelationTriple],
    evidence_rels: &[RelationTriple],
    options: ClosureOptions,
) -> ClosureResult {
    let mut hypos: BTreeSet<NormalizedEntity> = BTreeSet::new();
    for rel in claim_rels {
        hypos.insert(rel.head_entity());
        hypos.insert(rel.tail_entity());
    }

    // Normalize once; duplicates collapse onto their first occurrence.
    let mut seen = HashSet::new();
    let candidates: Vec<(TripleKey, &RelationTriple)> = evidence_rels
        .iter()
        .filter_map(|rel| {
            let key = rel.key();
            seen.insert(key.clone()).then_some((key, rel))
        })
        .collect();

    let mut selected = vec![false; candidates.len()];
    let mut evidence_rels_new = Vec::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut changed = false;
        for (i, ((head, _, tail), rel)) in candidates.iter().enumerate() {
            if selected[i] {
                continue;
            }
            let forward = hypos.contains(head);
            let backward = options.symmetric && hypos.contains(tail);
            if forward || backward {
                selected[i] = true;
                evidence_rels_new.push((*rel).clone());
                hypos.insert(tail.clone());
                if backward {
                    hypos.insert(head.clone());
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    ClosureResult {
        claim_rels: claim_rels.to_vec(),
        evidence_rels_new,
        hypos,
        rounds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureStats {
    pub kept: usize,
    pub dropped: usize,
    pub rounds: usize,
}

/// Kept/dropped counts over the de-duplicated evidence relations.
pub fn closure_stats(
    result: &ClosureResult,
    evidence_rels: &[RelationTriple],
) -> Result<ClosureStats, ClosureError> {
    let distinct: HashSet<TripleKey> = evidence_rels.iter().map(RelationTriple::key).collect();
    let kept = result.selected_keys();
    if let Some(stray) = result
        .evidence_rels_new
        .iter()
        .find(|rel| !distinct.contains(&rel.key()))
    {
        return Err(ClosureError::MismatchedInputs(format!("selected triple {stray} is not among the inputs")));
    }
    Ok(ClosureStats {
        kept: kept.len(),
        dropped: distinct.len() - kept.len(),
        rounds: result.rounds,
    })
}

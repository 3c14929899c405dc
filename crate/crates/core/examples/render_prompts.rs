//! Render the relation-extraction, reorganization and verdict prompts.
//!
//! cargo run --example render_prompts

use zefav::pipeline::AblationFlags;
use zefav::prompts::{
    builtin_few_shot, render_infore_prompt, render_relation_prompt, render_verdict_prompt, VerdictInputs,
};
use zefav::relation::{parse_triples, Origin, RelationCatalog};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = RelationCatalog::builtin();
    let evidence = vec![
        "The Danube is 2,850 kilometres long.".to_string(),
        "The Rhine is 1,230 kilometres long.".to_string(),
    ];

    let relation = render_relation_prompt(&evidence[0], &catalog)?;
    println!("--- relation extraction ({} chars)\n{}\n", relation.chars().count(), relation);

    // A small budget forces the evidence to be shortened.
    let infore = render_infore_prompt(&evidence, &builtin_few_shot(), 1800)?;
    println!("--- reorganization (truncated: {})\n{}\n", infore.truncated, infore.text);

    let claim_rels = parse_triples("(Danube, length, longer than the Rhine)", Origin::Claim, &catalog).triples;
    let evidence_rels = parse_triples(r#"(Danube, length, "2,850 kilometres")"#, Origin::Evidence, &catalog).triples;
    for flags in [AblationFlags::ALL_ON, AblationFlags::GRID[5]] {
        let verdict = render_verdict_prompt(
            &VerdictInputs {
                claim: "The Danube is longer than the Rhine",
                context_evidence: Some(&evidence),
                infore: Some("Rivers\n    - Danube: 2,850 km\n    - Rhine: 1,230 km"),
                claim_rels: &claim_rels,
                evidence_rels: &evidence_rels,
                flags,
            },
            6000,
        )?;
        println!("--- verdict [{}]\n{}\n", flags.label(), verdict.text);
    }
    Ok(())
}

//! Keep only the evidence relations reachable from the claim's entities.
//!
//! cargo run --example closure

use zefav::closure::{closure_stats, find_evidence_relations};
use zefav::relation::{parse_triples, Origin, RelationCatalog};

fn main() {
    let catalog = RelationCatalog::builtin();
    let claim = parse_triples("(Lake Baikal, outflow, river), (river, mouth of the watercourse, Yenisei)", Origin::Claim, &catalog);
    let evidence = parse_triples(
        "(Angara, located in or next to body of water, Lake Baikal), (Lake Baikal, outflow, Angara), \
         (Angara, mouth of the watercourse, Yenisei), (Strelka, country, Russia)",
        Origin::Evidence,
        &catalog,
    );

    let result = find_evidence_relations(&claim.triples, &evidence.triples);
    let stats = closure_stats(&result, &evidence.triples).expect("same inputs");
    println!("kept {} / dropped {} after {} passes", stats.kept, stats.dropped, stats.rounds);
    for t in &result.evidence_rels_new {
        println!("  {t}");
    }
    let hypos: Vec<&str> = result.hypos.iter().map(|e| e.as_str()).collect();
    println!("entities reached: {}", hypos.join(", "));
}

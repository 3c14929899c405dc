//! Turn FewRel instances into instruction/response pairs for fine-tuning.
//!
//! cargo run --example fewrel_export [fewrel.json] [out.jsonl]

use std::path::PathBuf;

use zefav::datasets::export_fewrel_instructions;
use zefav::relation::RelationCatalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fewrel_50.json")
    });
    let dir = tempfile::tempdir()?;
    let output = args.next().map(PathBuf::from).unwrap_or_else(|| dir.path().join("fewrel_instructions.jsonl"));

    let n = export_fewrel_instructions(&input, &RelationCatalog::builtin(), &output)?;
    println!("{n} pairs written to {}", output.display());
    let text = std::fs::read_to_string(&output)?;
    for line in text.lines().take(3) {
        let pair: serde_json::Value = serde_json::from_str(line)?;
        println!("  response: {}", pair["response"]);
    }
    Ok(())
}

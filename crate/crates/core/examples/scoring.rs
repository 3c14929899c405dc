//! Score traces, then render the ablation grid and the challenge table.
//!
//! cargo run --example scoring

use std::path::PathBuf;

use zefav::datasets::load_records;
use zefav::evalkit::{ablation_grid, challenge_breakdown, score};
use zefav::gateway::{Gateway, ReplayBackend, ReplayStore};
use zefav::pipeline::{run_batch, AblationFlags, PipelineSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let records = load_records(fixtures.join("claims.jsonl"))?;
    let gateway = Gateway::new(ReplayBackend::new(ReplayStore::load(fixtures.join("replay.jsonl"))?));
    let settings = PipelineSettings::new("fixture-model");

    let mut reports = Vec::new();
    for flags in AblationFlags::GRID {
        let traces = run_batch(&records, flags, &gateway, &settings, 4);
        reports.push(score(&traces, &records)?.with_dataset("feverous-s"));
    }
    println!("{}", ablation_grid(&reports)?);
    println!("{}", challenge_breakdown(&reports[0]));

    // Leaving a configuration out shows an absent cell, not a zero.
    let partial = ablation_grid(&reports[..5])?;
    print!("{partial}");
    for w in &partial.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

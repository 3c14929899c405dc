//! Run the full pipeline over the fixture claims from a replay store.
//! No model or network is needed and the output is identical on every run.
//!
//! cargo run --example replay_pipeline

use std::path::PathBuf;

use zefav::datasets::load_records;
use zefav::evalkit::score;
use zefav::gateway::{Gateway, ReplayBackend, ReplayStore};
use zefav::pipeline::{run_batch, AblationFlags, PipelineSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let records = load_records(fixtures.join("claims.jsonl"))?;
    let gateway = Gateway::new(ReplayBackend::new(ReplayStore::load(fixtures.join("replay.jsonl"))?));
    let settings = PipelineSettings::new("fixture-model");

    let traces = run_batch(&records, AblationFlags::ALL_ON, &gateway, &settings, 4);
    for (t, r) in traces.iter().zip(&records) {
        let outcome = t.outcome.as_ref().expect("replay store is complete");
        let closure = t.closure.expect("relations enabled");
        println!(
            "{}  gold={:<5} predicted={:<5} {:<9?}  relations kept {}/{}  {}",
            t.claim_id,
            r.gold.map(|g| g.to_string()).unwrap_or_default(),
            outcome.label,
            outcome.parse_status,
            closure.kept,
            closure.kept + closure.dropped,
            r.claim
        );
    }
    println!();
    print!("{}", score(&traces, &records)?.with_dataset("feverous-s"));
    Ok(())
}

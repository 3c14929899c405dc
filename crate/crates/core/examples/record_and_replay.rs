//! Record a live run's responses and replay them offline.
//!
//! cargo run --example record_and_replay

use zefav::datasets::{ClaimRecord, DatasetSource};
use zefav::gateway::{record_replay, Gateway, HttpBackend, HttpConfig, ReplayBackend};
use zefav::pipeline::{run_batch, AblationFlags, PipelineSettings};
use zefav::stub::{toy_responder, StubServer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let records: Vec<ClaimRecord> = ["Rome", "Kyoto", "Lima"]
        .iter()
        .enumerate()
        .map(|(i, city)| ClaimRecord {
            id: format!("c{i}"),
            claim: format!("{city} is a capital city."),
            gold: None,
            evidence: vec![format!("{city} has been a capital for centuries.")],
            stratum: None,
            source: DatasetSource::Custom,
        })
        .collect();
    let settings = PipelineSettings::new("stub-model");

    let log = dir.path().join("run_log.jsonl");
    let live = {
        let server = StubServer::start(toy_responder)?;
        let gateway = Gateway::new(HttpBackend::new(HttpConfig::new(server.base_url()))).with_run_log(&log)?;
        let traces = run_batch(&records, AblationFlags::ALL_ON, &gateway, &settings, 2);
        gateway.flush_run_log()?;
        traces
    };

    // The server is gone; the replay store answers instead.
    let store = record_replay(&log, dir.path().join("replay.jsonl"))?;
    println!("recorded {} responses", store.len());
    let replayed = run_batch(&records, AblationFlags::ALL_ON, &Gateway::new(ReplayBackend::new(store)), &settings, 2);
    for (a, b) in live.iter().zip(&replayed) {
        println!("{}: same prompt {}, same verdict {}", a.claim_id, a.final_prompt == b.final_prompt, a.outcome == b.outcome);
    }
    Ok(())
}

//! Talk to an OpenAI-compatible server (a local stub here) through the
//! gateway's response cache: the second pass is served from disk.
//!
//! cargo run --example http_stub

use zefav::datasets::{ClaimRecord, DatasetSource};
use zefav::gateway::{Gateway, HttpBackend, HttpConfig, ResponseCache, Stage};
use zefav::pipeline::{verify_claim, AblationFlags, PipelineSettings};
use zefav::stub::{toy_responder, StubServer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = StubServer::start(toy_responder)?;
    let cache_dir = tempfile::tempdir()?;
    let gateway = Gateway::new(HttpBackend::new(HttpConfig::new(server.base_url())))
        .with_cache(ResponseCache::new(cache_dir.path())?)
        .with_parallelism(2);

    let record = ClaimRecord {
        id: "demo".into(),
        claim: "Airbus is based in Blagnac.".into(),
        gold: None,
        evidence: vec!["Airbus has its head office in Blagnac. Blagnac borders Toulouse.".into()],
        stratum: None,
        source: DatasetSource::Custom,
    };
    let settings = PipelineSettings::new("stub-model");
    for pass in 1..=2 {
        let trace = verify_claim(&record, AblationFlags::ALL_ON, &gateway, &settings)?;
        println!(
            "pass {pass}: verdict {}  server requests {}  cache hits {}",
            trace.outcome.as_ref().map(|o| o.label.to_string()).unwrap_or_default(),
            server.total_requests(),
            gateway.cache_hits()
        );
    }
    for stage in Stage::ALL {
        println!("  {stage}: {} server calls", server.stage_requests(stage));
    }
    Ok(())
}

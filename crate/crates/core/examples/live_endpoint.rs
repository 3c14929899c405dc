//! Verify one claim against a real OpenAI-compatible endpoint.
//!
//! ZEFAV_BASE_URL=http://localhost:8000 ZEFAV_MODEL=meta-llama/Meta-Llama-3-70B-Instruct \
//!     cargo run --example live_endpoint
//!
//! Set ZEFAV_API_KEY if the server wants a bearer token.

use zefav::datasets::{ClaimRecord, DatasetSource};
use zefav::gateway::{Gateway, HttpBackend, HttpConfig};
use zefav::pipeline::{verify_claim, AblationFlags, PipelineSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Ok(base_url) = std::env::var("ZEFAV_BASE_URL") else {
        eprintln!("set ZEFAV_BASE_URL (and ZEFAV_MODEL) to run this example");
        return Ok(());
    };
    let model = std::env::var("ZEFAV_MODEL").unwrap_or_else(|_| "Meta-Llama-3-70B-Instruct".into());
    let mut config = HttpConfig::new(base_url);
    config.api_key_env = Some("ZEFAV_API_KEY".into());
    let gateway = Gateway::new(HttpBackend::new(config));

    let record = ClaimRecord {
        id: "live".into(),
        claim: "The architect of the Eiffel Tower was born in Dijon.".into(),
        gold: None,
        evidence: vec![
            "The Eiffel Tower was designed by the engineering company of Gustave Eiffel.".into(),
            "Gustave Eiffel was born in Dijon, France, in 1832.".into(),
        ],
        stratum: None,
        source: DatasetSource::Custom,
    };
    let trace = verify_claim(&record, AblationFlags::ALL_ON, &gateway, &PipelineSettings::new(model))?;
    println!("{}", trace.final_prompt);
    println!("---");
    let outcome = trace.outcome.expect("verdict stage ran");
    println!("{}\n=> {} ({:?})", outcome.raw, outcome.label, outcome.parse_status);
    Ok(())
}

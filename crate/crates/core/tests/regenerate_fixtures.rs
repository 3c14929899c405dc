//! Rebuilds the replay store and golden files from the scripted model:
//! `cargo test -p zefav --test regenerate_fixtures -- --ignored`.

mod common;

use zefav::evalkit::score;
use zefav::gateway::record_replay;
use zefav::pipeline::{run_batch, write_traces, AblationFlags};

#[test]
#[ignore]
fn regenerate_fixtures() {
    let records = common::claims();
    let settings = common::settings();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run_log.jsonl");
    let gateway = common::scripted_gateway().with_run_log(&log).unwrap();
    for flags in AblationFlags::GRID {
        let traces = run_batch(&records, flags, &gateway, &settings, 4);
        assert!(traces.iter().all(|t| !t.is_error()), "{flags:?}");
    }
    gateway.flush_run_log().unwrap();
    let fixtures = common::fixtures();
    record_replay(&log, fixtures.join("replay.jsonl")).unwrap();

    let traces = run_batch(&records, AblationFlags::ALL_ON, &common::replay_gateway(), &settings, 4);
    write_traces(fixtures.join("golden/traces.jsonl"), &traces).unwrap();
    let report = score(&traces, &records).unwrap().with_dataset("feverous-s");
    report.write_json(fixtures.join("golden/report.json")).unwrap();

    for (name, text) in common::golden_prompts() {
        std::fs::write(fixtures.join("golden").join(name), text).unwrap();
    }
}

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zefav::evalkit::{AblationGrid, EvalReport};
use zefav::gateway::Stage;
use zefav::pipeline::read_traces;
use zefav::stub::{toy_responder, StubServer};

fn zefav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zefav"))
        .args(args)
        .output()
        .expect("zefav binary runs")
}

fn config() -> String {
    common::fixtures().join("config_replay.json").display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn first_claims(dir: &Path, n: usize) -> PathBuf {
    let text = fs::read_to_string(common::fixtures().join("claims.jsonl")).unwrap();
    let path = dir.join("claims3.jsonl");
    let lines: Vec<&str> = text.lines().take(n).collect();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn verify_three_claims() {
    let tmp = tempfile::tempdir().unwrap();
    let claims = first_claims(tmp.path(), 3);
    let out = tmp.path().join("out");
    let o = zefav(&["verify", "--config", &config(), "--dataset", s(&claims), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traces = fs::read_to_string(out.join("traces.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 3);
    assert!(out.join("report.json").exists());
    assert!(out.join("run_log.jsonl").exists());

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["template_digests"].as_object().unwrap().len(), 3);
    assert_eq!(manifest["dataset_digest"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["claims"], 3);
}

#[test]
fn missing_replay_entry_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = tmp.path().join("out");
    let o = zefav(&["verify", "--config", &config(), "--replay", s(&empty), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let traces = read_traces(out.join("traces.jsonl")).unwrap();
    assert_eq!(traces.len(), 10);
    assert!(traces.iter().all(|t| t.error.as_ref().is_some_and(|e| e.kind == "ReplayMiss")));
}

#[test]
fn no_context_override_reaches_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = zefav(&["verify", "--config", &config(), "--no-context", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = EvalReport::read_json(out.join("report.json")).unwrap();
    assert!(!report.config.use_context);
    assert!(report.config.use_relations && report.config.use_infore);
}

#[test]
fn bad_config_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"backend": {"kind": "replay", "model_id": "m", "replay_path": "r"}, "run": {"dataset_path": "d", "out_dir": "o"}, "extra": 1}"#,
    )
    .unwrap();
    let o = zefav(&["verify", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));

    let o = zefav(&["verify", "--config", &config(), "--no-context", "--no-relations", "--no-infore"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ablate_shares_cache_and_resumes() {
    let server = StubServer::start(toy_responder).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("grid");
    let args = [
        "ablate",
        "--config",
        &config(),
        "--base-url",
        &server.base_url(),
        "--out",
        s(&out),
    ];
    let o = zefav(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // 10 claims plus 18 evidence sentences, extracted once and cached.
    assert_eq!(server.stage_requests(Stage::RelationExtraction), 28);
    assert_eq!(server.stage_requests(Stage::InfoRE), 10);
    assert_eq!(server.stage_requests(Stage::Verdict), 60);
    let grid: AblationGrid = serde_json::from_str(&fs::read_to_string(out.join("grid.json")).unwrap()).unwrap();
    assert_eq!(grid.rows.len(), 6);

    server.reset_counts();
    let again = zefav(&args);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(server.total_requests(), 0);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn record_replay_reproduces_a_live_run() {
    let server = StubServer::start(toy_responder).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let live = tmp.path().join("live");
    let o = zefav(&["verify", "--config", &config(), "--base-url", &server.base_url(), "--out", s(&live)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let store = tmp.path().join("replay.jsonl");
    let o = zefav(&["record-replay", "--run-log", s(&live.join("run_log.jsonl")), "--out", s(&store)]);
    assert_eq!(o.status.code(), Some(0));

    let replayed = tmp.path().join("replayed");
    let o = zefav(&["verify", "--config", &config(), "--replay", s(&store), "--out", s(&replayed)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a = read_traces(live.join("traces.jsonl")).unwrap();
    let b = read_traces(replayed.join("traces.jsonl")).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.final_prompt, y.final_prompt);
        assert_eq!(x.outcome, y.outcome);
        assert_eq!(x.generations, y.generations);
    }
}

#[test]
fn score_rescores_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let traces = common::fixtures().join("golden/traces.jsonl");
    let o = zefav(&["score", "--config", &config(), "--traces", s(&traces), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(out.join("report.json")).unwrap(),
        fs::read(common::fixtures().join("golden/report.json")).unwrap()
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("macro-F1  79.17"));
    assert!(stdout.contains("Search terms not in claim"));
}

#[test]
fn single_stage_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for (cmd, file) in [("extract-relations", "relations.jsonl"), ("reorganize", "infore.jsonl")] {
        let o = zefav(&[cmd, "--config", &config(), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let rows: Vec<serde_json::Value> = fs::read_to_string(out.join(file))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.get("error").is_none()));
    }
    let relations = fs::read_to_string(out.join("relations.jsonl")).unwrap();
    let f08: serde_json::Value = serde_json::from_str(relations.lines().nth(7).unwrap()).unwrap();
    assert_eq!(f08["closure"]["kept"], 1);
    assert_eq!(f08["closure"]["dropped"], 1);
}

#[test]
fn export_fewrel_from_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pairs.jsonl");
    let input = common::fixtures().join("fewrel_50.json");
    let o = zefav(&["export-fewrel", "--input", s(&input), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 50);

    let o = zefav(&["export-fewrel", "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

use std::path::Path;

use koforge::{demos, emit_report, run_scenario, RunOptions};
use serde_json::Value;

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).expect("schema compiles")
}

fn errors(v: &jsonschema::Validator, doc: &Value) -> Vec<String> {
    v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

#[test]
fn every_demo_report_validates() {
    let v = schema();
    let dir = tempfile::tempdir().unwrap();
    for d in demos::DEMOS {
        let sc = (d.build)();
        let out = run_scenario(&sc, &RunOptions::default());
        let sub = dir.path().join(d.name);
        emit_report(&sub, &sc, &out.outputs, false).unwrap();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(sub.join("report.json")).unwrap()).unwrap();
        let errs = errors(&v, &doc);
        assert!(errs.is_empty(), "{}: {errs:?}", d.name);
    }
}

#[test]
fn sigma_probe_trace_is_required() {
    let v = schema();
    let sc = (demos::find("closed-form").unwrap().build)();
    let out = run_scenario(&sc, &RunOptions::default());
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &sc, &out.outputs, false).unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();

    let probes = doc["tasks"][2]["data"]["probes"].as_array().unwrap();
    assert!(probes.iter().any(|p| p["passed"] == true));
    assert!(errors(&v, &doc).is_empty());

    doc["tasks"][2]["data"].as_object_mut().unwrap().remove("probes");
    assert!(!errors(&v, &doc).is_empty());
}

#[test]
fn error_and_skipped_entries_validate() {
    let v = schema();
    let doc = serde_json::json!({
        "scenario": { "name": "x", "tasks": [], "numeric": {} },
        "tasks": [
            { "name": "ko", "status": "error", "data": { "error": "missing profile block" } },
            { "name": "ko", "status": "skipped", "data": { "reason": "strict" } }
        ],
        "versions": { "koforge": "0", "koforge_core": "0" },
        "numeric_settings": { "grid_points": 10, "c_increasing_tolerance": 0.0, "force_numeric": false, "seed": 0, "strict": true }
    });
    assert!(errors(&v, &doc).is_empty(), "{:?}", errors(&v, &doc));
    let mut bad = doc.clone();
    bad["tasks"][0]["data"] = serde_json::json!({});
    assert!(!errors(&v, &bad).is_empty());
}

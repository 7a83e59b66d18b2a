use std::path::Path;
use std::process::{Command, Output};

fn xmas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmas")).args(args).current_dir(dir).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eye_on_ideal_channel_is_fully_open() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("eye.json"),
        r#"{"scheme": {"fixture": {"name": "three_over_four"}}, "channel": {"ideal": {"samples_per_symbol": 16}}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["eye", "--config", "eye.json", "--out", "out", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("out/eye.json"));
    assert_eq!(r["format_version"], 1);
    assert_eq!(r["worst"]["width_ui"], 1.0);
    for j in 0..3 {
        let svg = std::fs::read_to_string(d.path().join(format!("out/eye_{j}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    }
}

#[test]
fn unknown_key_is_an_error_with_its_path() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("c.json"),
        r#"{"scheme": {"fixture": {"name": "toy_corrected"}}, "channel": {"ideal": {"rate": 5}}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["cij", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("channel.ideal") && err.contains("rate"), "{err}");
}

#[test]
fn missing_config_file_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let o = xmas(d.path(), &["simulate", "--config", "nope.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_search_exits_with_two() {
    let d = tempfile::tempdir().unwrap();
    // odd wire counts have no zero-bias scheme over ninths
    std::fs::write(
        d.path().join("s.json"),
        r#"{"search": {"n": 3, "level_family": {"denominator": 9, "numerators": [0, 2, 3, 4, 5, 6, 7, 9]}}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["search", "--config", "s.json", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.path().join("out/search.json"))["ranked"], serde_json::json!([]));
}

#[test]
fn cij_csv_and_compare_table() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("cij.json"),
        r#"{"scheme": {"baseline": {"kind": "differential", "wires": 4}}, "channel": {"synth": {"rate_gsps": 10.0}}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["cij", "--config", "cij.json", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("cij.csv")).unwrap();
    assert!(csv.starts_with("output,lane,earliest_s,latest_s,cij_s,mode,closed\n"));
    assert_eq!(csv.lines().count(), 3);

    std::fs::write(
        d.path().join("cmp.json"),
        r#"{"entries": [
            {"scheme": {"baseline": {"kind": "single_ended", "wires": 4}}, "channel": {"ideal": {}}},
            {"scheme": {"fixture": {"name": "three_over_four"}}, "channel": {"ideal": {}}}
        ], "supply": {"inductance_h": 5e-9, "nominal_vddq": 0.4}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["compare", "--config", "cmp.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("compare.json"));
    assert_eq!(r["rows"][1]["pin_efficiency"], 0.75);
    assert_eq!(r["rows"][1]["ssn_droop_v"], 0.0);
    assert!(r["rows"][0]["ssn_droop_v"].as_f64().unwrap() > 0.0);
}

#[test]
fn synth_then_simulate_from_file() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("synth.json"),
        r#"{"setup": {"geometry": {"spacing_um": 0.126, "width_um": 0.36, "length_mm": 1.26, "n_wires": 3}, "ctle": null}}"#,
    )
    .unwrap();
    let o = xmas(d.path(), &["synth-channel", "--config", "synth.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("channel_report.json"));
    assert_eq!(rep["il_db"].as_array().unwrap().len(), 3);
    assert!(d.path().join("responses.json").exists());

    std::fs::write(
        d.path().join("sim.json"),
        r#"{"scheme": {"fixture": {"name": "toy_corrected"}}, "channel": {"file": "responses.csv"},
            "pattern": {"kind": "prbs7", "seed": 3, "length": 64}}"#,
    )
    .unwrap();
    let run = |seed: &str, out: &str| {
        let o = xmas(d.path(), &["simulate", "--config", "sim.json", "--seed", seed, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(d.path().join(out).join("waveforms.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("9", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let head = String::from_utf8_lossy(&a[..40]).to_string();
    assert!(head.starts_with("time_s,y0,y1,y2,w0,w1\n"), "{head}");
}

#[test]
fn repro_toy_and_edge_density() {
    let d = tempfile::tempdir().unwrap();
    let o = xmas(d.path(), &["repro", "toy-example"]);
    assert!(o.status.success());
    let r = json(&d.path().join("toy_example.json"));
    assert_eq!(r["cancels"], true);
    assert_eq!(r["variants"][0]["monomial"], false);
    assert_eq!(r["variants"][1]["gains"], serde_json::json!([2, 4]));
    let o = xmas(d.path(), &["repro", "edge-density"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("edge density: 3.601 TB/s/mm"), "{out}");
}

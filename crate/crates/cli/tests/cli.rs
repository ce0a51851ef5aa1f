use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: Option<&str>) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_orbitpair"));
    cmd.args(args);
    if let Some(text) = config {
        let path = dir.path().join("run.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(&path);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const HARNESS_L3: &str = r#"{"mode": "harness", "harness": {"l": 3}}"#;
const HARNESS_L4: &str = r#"{"mode": "harness", "l_max": 4, "harness": {"l": 4}}"#;

#[test]
fn zero_budget_gives_an_empty_table() {
    let o = run(&["orbits"], Some(r#"{"max_word_length": 0}"#));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "word,trace,period,primitive");
}

#[test]
fn schottky_budget_two_lists_four_classes() {
    let o = run(&["orbits"], Some(r#"{"max_word_length": 2}"#));
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() >= 4, "{text}");
    for w in ["g1,", "g2,", "g1.g2,", "g1.g2^-1,"] {
        assert!(rows.iter().any(|r| r.starts_with(w)), "missing {w} in {text}");
    }
    // Squares are listed as non-primitive.
    assert!(rows.iter().filter(|r| r.ends_with(",false")).count() >= 2);
}

#[test]
fn json_format_for_orbits() {
    let o = run(&["orbits", "--format", "json"], Some(r#"{"max_word_length": 1}"#));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn malformed_config_exits_2() {
    let o = run(&["orbits"], Some("{ not json"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("configuration error"));
    let o = run(&["orbits"], Some(r#"{"epsilon": 0.01}"#));
    assert_eq!(o.status.code(), Some(2), "unknown field must be rejected");
    let o = run(&["partners"], Some(r#"{"eps": 0.5}"#));
    assert_eq!(o.status.code(), Some(2), "eps above epsilon_star bound");
}

#[test]
fn invalid_thread_count_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_orbitpair")).arg("orbits").env("ORBITPAIR_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harness_l3_reports_one_passing_partner() {
    let o = run(&["partners"], Some(HARNESS_L3));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let enc = &v["reports"][0]["encounters"][0];
    assert_eq!(enc["L"], 3);
    let partners = enc["partners"].as_array().unwrap();
    assert_eq!(partners.len(), 1);
    let p = &partners[0];
    assert_eq!(p["P"], serde_json::json!([2, 3, 1]));
    assert_eq!(p["pass"], true);
    assert!(p["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(p["residual"].as_f64().unwrap() < p["bound"].as_f64().unwrap());
    assert!(p["cascade_trace_gap"].as_f64().unwrap() < 1e-9);
}

#[test]
fn harness_l4_reports_five_distinct_partners() {
    let o = run(&["partners"], Some(HARNESS_L4));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let partners = v["reports"][0]["encounters"][0]["partners"].as_array().unwrap();
    assert_eq!(partners.len(), 5);
    let mut words: Vec<&str> = partners.iter().map(|p| p["word"].as_str().unwrap()).collect();
    words.sort_unstable();
    words.dedup();
    assert_eq!(words.len(), 5);
    assert!(partners.iter().all(|p| p["pass"] == true));
}

#[test]
fn survey_with_tiny_budget_finds_nothing() {
    let o = run(&["partners"], Some(r#"{"max_word_length": 2}"#));
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["encounters"], Some(r#"{"max_word_length": 2}"#));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn survey_finds_two_encounters_on_longer_words() {
    let o = run(&["encounters"], Some(r#"{"max_word_length": 5}"#));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().count() > 1);
}

#[test]
fn orbit_selector_restricts_the_survey() {
    let o = run(&["encounters", "--orbit", "g1.g2^-1.g1.g2^-1.g2^-1", "--format", "json"], Some(r#"{"max_word_length": 5}"#));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|e| e["orbit"] == "g1.g2^-1.g1.g2^-1.g2^-1"));
    let o = run(&["encounters", "--orbit", "g7"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_with_default_seed() {
    let o = run(&["verify"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn injected_fault_names_the_inequality() {
    let o = run(&["verify", "--inject-fault", "closing-period"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("e^(T'/2)"), "{}", stderr(&o));
}

#[test]
fn identical_seeds_give_identical_reports() {
    let a = run(&["verify", "--seed", "7"], None);
    let b = run(&["verify", "--seed", "7"], None);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["verify", "--seed", "8"], None);
    assert_ne!(a.stdout, c.stdout);
    let p = run(&["partners"], Some(HARNESS_L4));
    let q = run(&["partners"], Some(HARNESS_L4));
    assert_eq!(p.stdout, q.stdout);
}

#[test]
fn out_dir_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.json");
    std::fs::write(&cfg, HARNESS_L3).unwrap();
    let out = dir.path().join("reports");
    let o = Command::new(env!("CARGO_BIN_EXE_orbitpair"))
        .args(["partners", "--svg", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let svg = std::fs::read_to_string(out.join("partners.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<path").count() >= 2);
    let json: Value = serde_json::from_str(&std::fs::read_to_string(out.join("partners.json")).unwrap()).unwrap();
    assert_eq!(json["mode"], "harness");

    let o = Command::new(env!("CARGO_BIN_EXE_orbitpair")).args(["plot", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(Path::new(&out.join("plot.svg")).exists());
}

#[test]
fn partner_csv_has_one_row_per_partner() {
    let o = run(&["partners", "--format", "csv"], Some(HARNESS_L4));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 6);
}

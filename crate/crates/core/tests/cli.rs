use std::fs;
use std::path::{Path, PathBuf};

use leadlag::cli::{run, EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK};
use leadlag::prelude::*;
use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(args: &[&str]) -> Outcome {
    invoke_env(args, &[])
}

fn invoke_env(args: &[&str], env: &[(&str, &str)]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let lookup = |k: &str| env.iter().find(|(name, _)| *name == k).map(|(_, v)| v.to_string());
    let code = run(std::iter::once("leadlag").chain(args.iter().copied()), &mut out, &mut err, &lookup);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_corpus(dir: &Path, spec: &PlantSpec) -> PathBuf {
    let path = dir.join(format!("{}.csv", spec.region_label));
    let mut buf = Vec::new();
    write_chart_csv(&generate_planted(spec).unwrap(), &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_summarizes_a_clean_corpus() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let o = invoke(&["validate", "--corpus", s(&corpus)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("region: reference"));
    assert!(o.stdout.contains("weeks: 157"));
    assert!(o.stdout.contains("cities: 4"));
    assert!(o.stdout.contains("gaps: 0"));
}

#[test]
fn validate_cites_the_offending_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "week_start,city,artist,listeners\n2010-01-03,Boston,a,5\n2010-01-03,Boston,b,many\n",
    )
    .unwrap();
    let o = invoke(&["validate", "--corpus", s(&path)]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("line 3"), "{}", o.stderr);
}

#[test]
fn validate_accepts_a_header_only_corpus() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.csv");
    fs::write(&path, "week_start,city,artist,listeners\n").unwrap();
    let o = invoke(&["validate", "--corpus", s(&path)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("records: 0"));
    assert!(o.stdout.contains(leadlag::synth::EMPTY_FINGERPRINT));
}

#[test]
fn evaluate_writes_sorted_report() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let labels = dir.path().join("labels.csv");
    fs::write(&labels, "city,role\nMontreal,leader\nToronto,follower\n").unwrap();
    let out_dir = dir.path().join("out");
    let o = invoke(&["evaluate", "--corpus", s(&corpus), "--labels", s(&labels), "--output-dir", s(&out_dir)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "city,self_pct,all_pct,difference,role,status");
    // Toronto gains the most, so it sorts first.
    assert!(lines[1].starts_with("Toronto,") && lines[1].contains(",follower,"), "{csv}");
    assert!(csv.contains("Avg. followers"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("Toronto"));
    assert!(o.stdout.contains("Toronto, "));
}

#[test]
fn tag_filter_reaches_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let tags = dir.path().join("tags.csv");
    let mut text = String::from("artist,tag\n");
    for a in (0..200).step_by(2) {
        text.push_str(&format!("artist{a:04},rock\n"));
    }
    fs::write(&tags, text).unwrap();
    let out_dir = dir.path().join("out");
    let args = ["evaluate", "--corpus", s(&corpus), "--tags", s(&tags), "--tag", "rock", "--output-dir", s(&out_dir)];
    let o = invoke(&args);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let filtered = fs::read(out_dir.join("report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&filtered).unwrap();
    assert!(json.to_string().contains("\"rock\""));

    let out_all = dir.path().join("all");
    assert_eq!(invoke(&["evaluate", "--corpus", s(&corpus), "--output-dir", s(&out_all)]).code, EXIT_OK);
    assert_ne!(fs::read(out_all.join("report.csv")).unwrap(), fs::read(out_dir.join("report.csv")).unwrap());
}

#[test]
fn boundary_outside_the_corpus_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let out_dir = dir.path().join("out");
    for b in ["2001-01-07", "2007-01-07", "2030-01-06"] {
        let o = invoke(&["evaluate", "--corpus", s(&corpus), "--boundary", b, "--output-dir", s(&out_dir)]);
        assert_eq!(o.code, EXIT_INPUT, "{b}");
        assert!(o.stderr.contains("boundary"), "{}", o.stderr);
    }
}

#[test]
fn all_cities_failing_exits_three() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let out_dir = dir.path().join("out");
    let o = invoke(&["evaluate", "--corpus", s(&corpus), "--lag-count", "400", "--output-dir", s(&out_dir)]);
    assert_eq!(o.code, EXIT_ANALYSIS, "{}", o.stderr);
    assert!(o.stdout.contains("failed: Toronto"));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.contains("Toronto") && csv.contains("failed"), "{csv}");
}

#[test]
fn environment_and_config_file_layer_under_flags() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let config = dir.path().join("run.conf");
    fs::write(&config, format!("# run settings\ncorpus = {}\nlag-count = 400\n", s(&corpus))).unwrap();
    let out_dir = dir.path().join("out");
    let base = ["evaluate", "--config", s(&config), "--output-dir", s(&out_dir)];
    assert_eq!(invoke(&base).code, EXIT_ANALYSIS);
    assert_eq!(invoke_env(&base, &[("LEADLAG_LAG_COUNT", "4")]).code, EXIT_OK);
    let mut flagged = base.to_vec();
    flagged.extend(["--lag-count", "400"]);
    assert_eq!(invoke_env(&flagged, &[("LEADLAG_LAG_COUNT", "4")]).code, EXIT_ANALYSIS);
    assert_eq!(invoke_env(&base, &[("LEADLAG_SOLVER", "lasso")]).code, EXIT_INPUT);
}

#[test]
fn synth_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&PlantSpec::reference()).unwrap()).unwrap();
    let (a, b) = (dir.path().join("a/corpus.csv"), dir.path().join("b/corpus.csv"));
    for out in [&a, &b] {
        let o = invoke(&["synth", "--spec", s(&spec_path), "--out", s(out)]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(a.with_extension("json")).unwrap(), fs::read(b.with_extension("json")).unwrap());
    let labels = fs::read_to_string(dir.path().join("a/corpus_labels.csv")).unwrap();
    assert_eq!(labels, "city,role\nMontreal,leader\nToronto,follower\n");
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(a.with_extension("json")).unwrap()).unwrap();
    let series = parse_chart_csv(&a).unwrap();
    assert_eq!(sidecar["fingerprint"], fingerprint(&series));
}

#[test]
fn synth_rejects_too_few_weeks() {
    let dir = TempDir::new().unwrap();
    let mut spec = PlantSpec::reference();
    spec.weeks = 15;
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = dir.path().join("c.csv");
    let o = invoke(&["synth", "--spec", s(&spec_path), "--out", s(&out)]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("weeks"), "{}", o.stderr);
    assert!(!out.exists());
}

#[test]
fn dump_design_writes_matrix_and_coefficients() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path(), &PlantSpec::reference());
    let out_dir = dir.path().join("dump");
    for (scope, cols) in [("all", 32), ("own", 8)] {
        let args = ["dump-design", "--corpus", s(&corpus), "--city", "Toronto", "--scope", scope, "--output-dir", s(&out_dir)];
        let o = invoke(&args);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        let design = fs::read_to_string(out_dir.join(format!("design_Toronto_{scope}.csv"))).unwrap();
        let header: Vec<&str> = design.lines().next().unwrap().split(',').collect();
        assert_eq!(header.len(), 3 + cols);
        assert_eq!(&header[..3], ["artist", "week", "y"]);
        let coef = fs::read_to_string(out_dir.join(format!("coefficients_Toronto_{scope}.csv"))).unwrap();
        assert_eq!(coef.lines().count(), 1 + cols);
    }
    let coef = fs::read_to_string(out_dir.join("coefficients_Toronto_all.csv")).unwrap();
    let lead: f64 = coef
        .lines()
        .find(|l| l.starts_with("Montreal,2,"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((lead - 0.8).abs() < 0.05);
    let o = invoke(&["dump-design", "--corpus", s(&corpus), "--city", "Nowhere", "--output-dir", s(&out_dir)]);
    assert_eq!(o.code, EXIT_INPUT);
}

//! Drives the command-line front end in-process: generate a corpus from a
//! spec, validate it, evaluate it and dump one design.
//!
//! cargo run --release --example command_line

use leadlag::cli::run;
use leadlag::prelude::*;

pub fn run_example() -> leadlag::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("tempdir", e))?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(path("spec.json"), serde_json::to_string_pretty(&PlantSpec::reference()).unwrap())
        .map_err(|e| Error::io(path("spec.json"), e))?;

    let corpus = path("reference.csv");
    let commands: [Vec<String>; 4] = [
        vec!["synth".into(), "--spec".into(), path("spec.json"), "--out".into(), corpus.clone()],
        vec!["validate".into(), "--corpus".into(), corpus.clone()],
        vec![
            "evaluate".into(),
            "--corpus".into(),
            corpus.clone(),
            "--labels".into(),
            path("reference_labels.csv"),
            "--output-dir".into(),
            path("out"),
        ],
        vec![
            "dump-design".into(),
            "--corpus".into(),
            corpus.clone(),
            "--city".into(),
            "Toronto".into(),
            "--scope".into(),
            "own".into(),
            "--output-dir".into(),
            path("out"),
        ],
    ];
    let env = |key: &str| (key == "LEADLAG_JOBS").then(|| "2".to_string());
    for args in commands {
        println!("$ leadlag {}", args.join(" "));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("leadlag".to_string()).chain(args), &mut out, &mut err, &env);
        print!("{}{}", String::from_utf8_lossy(&out), String::from_utf8_lossy(&err));
        assert_eq!(code, 0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}

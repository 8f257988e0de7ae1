use std::path::PathBuf;

use stcl::harness::{run_experiment, ExperimentConfig};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.csv"))
}

/// Set `STCL_BLESS=1` to regenerate the frozen file.
#[test]
fn contraction_baseline_matches_golden_file() {
    let name = "contraction-flat-burgers";
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(name).unwrap();
    cfg.output = Some(dir.path().join("out.csv"));
    let report = run_experiment(&cfg).unwrap();
    assert!(report.verdict);
    let produced = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    if std::env::var_os("STCL_BLESS").is_some() {
        std::fs::write(golden(name), &produced).unwrap();
    }
    let frozen = std::fs::read_to_string(golden(name)).expect("golden file present");
    assert_eq!(produced.lines().count(), frozen.lines().count());
    for (i, (a, b)) in produced.lines().zip(frozen.lines()).enumerate() {
        assert_eq!(a, b, "line {}", i + 1);
    }
}

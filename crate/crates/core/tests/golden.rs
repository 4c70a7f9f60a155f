//! The shipped default experiment's split report, pinned after inspection.
//! Regenerate with `LPNLS_BLESS=1 cargo test -p lpnls-core --test golden`.

use std::path::PathBuf;

use lpnls::experiment::{run_split, ExperimentConfig};
use lpnls::report::{read_json, write_json};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/split_default.json")
}

#[test]
fn default_split_matches_golden() {
    let report = run_split(&ExperimentConfig::builtin("default").unwrap()).unwrap();
    let path = golden_path();
    if std::env::var_os("LPNLS_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        write_json(&report, &path).unwrap();
    }
    let golden = read_json(&path).unwrap();
    assert_eq!(golden.tables, report.tables);
    assert_eq!(golden.scalars, report.scalars);
    assert_eq!(golden.config, report.config);
}

#[test]
fn reports_are_deterministic() {
    let cfg = ExperimentConfig::builtin("default").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    write_json(&run_split(&cfg).unwrap(), &a).unwrap();
    write_json(&run_split(&cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

use std::path::Path;
use std::process::{Command, Output};

use lpnls::report::{read_csv, read_json};

fn lpnls(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpnls"))
        .args(args)
        .env("LPNLS_OUT_DIR", out)
        .output()
        .unwrap()
}

#[test]
fn unknown_subcommand_and_flag_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpnls(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(lpnls(&["split", "--bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"x\"\n[initial_data]\nkind = \"soliton\"\n[grid]\nn_points = 1000\n").unwrap();
    let o = lpnls(&["split", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1000"));

    std::fs::write(&cfg, "name = \"x\"\n[initial_data]\nkind = \"soliton\"\nwidth = 3\n").unwrap();
    let o = lpnls(&["split", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("width") && err.contains("line"), "{err}");

    let o = lpnls(&["split", "--config", "no-such-experiment"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = lpnls(&["split", "--resolution-scale", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn split_writes_sweep_csv_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpnls(&["split", "--config", "powerlaw_p2.1", "--quiet"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let base = dir.path().join("powerlaw_p2.1/split");
    let t = read_csv(&base.join("sweep.csv")).unwrap();
    assert_eq!(t.columns[..4], ["N", "l2_norm_phi", "lp0_norm_psi", "c0_fit"]);
    assert_eq!(t.rows.len(), 8);
    let r = read_json(&base.join("report.json")).unwrap();
    assert!(r.scalars.contains_key("slope_l2_phi") && r.scalars.contains_key("slope_lp0_psi"));
    assert!(base.join("timing.json").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_lpnls"))
        .args(["report", base.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope_lp0_psi"));
}

#[test]
fn globalize_above_threshold_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    std::fs::write(
        &cfg,
        "name = \"above\"\n[initial_data]\nkind = \"gaussian\"\na = 1.0\n[grid]\nn_points = 512\nhalf_width = 20.0\n\
         [plan]\nalpha = 0.4\nns = [4.0]\n",
    )
    .unwrap();
    let o = lpnls(&["globalize", "--config", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("above/globalize/report.json")).unwrap();
    assert!(!r.flags["globalcond"]);
    assert!(!r.flags["t_n_increasing"]);
    let sweep = read_csv(&dir.path().join("above/globalize/t_n_sweep.csv")).unwrap();
    let t = sweep.column("t_n").unwrap();
    assert!(t.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn seed_changes_random_data_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, out: &str| {
        let o = lpnls(&["propagate", "--config", "random_smooth", "--seed", seed, "--quiet", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(Path::new(out).join("random_smooth/propagate/report.json")).unwrap()
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let ra = run("3", a.to_str().unwrap());
    let rb = run("3", b.to_str().unwrap());
    let rc = run("4", c.to_str().unwrap());
    assert_eq!(ra, rb);
    assert_ne!(ra, rc);
    let r = read_json(&a.join("random_smooth/propagate/report.json")).unwrap();
    assert_eq!(r.seed, Some(3));
    assert!(r.scalars["twisted_lp_spread"] < 1e-12);
}

#[test]
fn report_of_missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpnls(&["report", dir.path().join("nope.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

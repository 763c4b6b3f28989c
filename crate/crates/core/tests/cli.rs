use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 5
trials = 1
[radio]
num_antennas = 8
num_bins = 256
[alignment]
measurements = 8
active_bins = 4
[comm]
beamwidth_deg = 20.0
[grid]
count = 2
[[devices]]
position = [2.0, 4.0, 1.2]
[[devices]]
position = [8.0, 5.5, 1.3]
[[devices]]
position = [5.0, 8.0, 1.0]
[sweep]
measurements = [4, 8]
active_bins = [4]
tx_power_dbm = [0.0]
methods = ["mmv", "baseline"]
"#;

fn beamnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamnet")).args(args).output().unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn setup() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let s = cfg.to_str().unwrap().to_string();
    (dir, s)
}

fn manifest_command(dir: &Path) -> String {
    let text = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    let v: toml::Table = text.parse().unwrap();
    assert!(v.contains_key("version") && v.contains_key("config"));
    v["command"].as_str().unwrap().to_string()
}

#[test]
fn design_pilots_writes_samples_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = beamnet(&["design-pilots", "--m", "64", "--ms", "4", "--k", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("pilot.csv")), "n,re,im");
    assert_eq!(header(&out.join("spectrum.csv")), "m,power_db");
    assert_eq!(fs::read_to_string(out.join("pilot.csv")).unwrap().lines().count(), 65);
    assert_eq!(manifest_command(&out), "design-pilots");

    let bad = beamnet(&["design-pilots", "--m", "64", "--ms", "5", "--k", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn alignment_runs_write_tables() {
    let (dir, cfg) = setup();
    let out = dir.path().join("mmv");
    let o = beamnet(&["run-alignment", "--config", &cfg, "--method", "mmv", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("table.csv")), "a,b,tx_beam,rx_beam,rownorm,ok");
    assert_eq!(fs::read_to_string(out.join("table.csv")).unwrap().lines().count(), 1 + 6);
    assert_eq!(header(&out.join("objective.csv")), "iteration,objective");
    assert_eq!(header(&out.join("estimates.csv")), "row,col,re,im");
    assert_eq!(header(&out.join("channel.csv")), "n,i,j,re,im");
    assert!(header(&out.join("metrics.csv")).starts_with("pair,sinr_db,se"));
    assert!(out.join("records.csv").exists());
    assert_eq!(manifest_command(&out), "run-alignment");

    for (args, name) in [
        (vec!["run-alignment", "--method", "baseline"], "base1"),
        (vec!["run-baseline"], "base2"),
    ] {
        let out = dir.path().join(name);
        let mut a = args.clone();
        a.extend(["--config", &cfg, "--out", out.to_str().unwrap()]);
        let o = beamnet(&a);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.join("objective.csv").exists());
    }
    // Both spellings of the baseline run agree.
    let t1 = fs::read(dir.path().join("base1/table.csv")).unwrap();
    let t2 = fs::read(dir.path().join("base2/table.csv")).unwrap();
    assert_eq!(t1, t2);
}

#[test]
fn evaluate_and_sweep_write_their_tables() {
    let (dir, cfg) = setup();
    let out = dir.path().join("eval");
    let o = beamnet(&["evaluate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("grid.csv")).unwrap().lines().count(), 1 + 4);
    assert_eq!(header(&out.join("flatness_pre.csv")), "m,mag_db");
    assert_eq!(manifest_command(&out), "evaluate");

    let out = dir.path().join("sweep");
    let o = beamnet(&["sweep", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["records.csv", "mae_vs_q.csv", "cdf.csv", "sum_se_vs_pilots.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let mae = fs::read_to_string(out.join("mae_vs_q.csv")).unwrap();
    // Two methods by two measurement counts.
    assert_eq!(mae.lines().count(), 1 + 4);
    let text = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(text.contains("seed = 9"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let (dir, _) = setup();
    let bad = dir.path().join("bad.toml");
    for text in ["trials = 0", "nonsense = true", "method = \"guess\"", "[radio]\nnum_bins = 100"] {
        fs::write(&bad, text).unwrap();
        let o = beamnet(&["sweep", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    let o = beamnet(&["evaluate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let o = beamnet(&["run-alignment", "--method", "exhaustive"]);
    assert_ne!(o.status.code(), Some(0));
}

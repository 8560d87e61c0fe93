use std::fs;
use std::path::Path;
use std::process::Command;

use incrack::config::{RunConfig, TractionsConfig};
use incrack::scenario::semicircle_config;

fn small_config(gamma: f64) -> RunConfig {
    let mut c = semicircle_config(gamma, 0.0, 0.0);
    c.numerics.order = 12;
    c.output.samples = 41;
    c
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p
}

fn incrack(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_incrack")).args(args).output().unwrap()
}

#[test]
fn solve_writes_every_output_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(0.5));
    let mut summaries = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = incrack(&[
            "--quiet",
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(3)), "{o:?}");
        for f in [
            "config.toml",
            "densities.json",
            "boundary_fields.csv",
            "deformed_boundary.csv",
            "aperture.csv",
            "validation.json",
            "summary.json",
        ] {
            assert!(out.join(f).is_file(), "missing {f}");
        }
        summaries.push(fs::read(out.join("summary.json")).unwrap());
        assert_eq!(
            fs::read(out.join("densities.json")).unwrap(),
            fs::read(tmp.path().join("a/densities.json")).unwrap()
        );
    }
    assert_eq!(summaries[0], summaries[1]);

    // the echoed configuration reproduces the run
    let echoed = RunConfig::from_file(&tmp.path().join("a/config.toml")).unwrap();
    assert_eq!(echoed.numerics.order, 12);

    let csv = fs::read_to_string(tmp.path().join("a/boundary_fields.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("sigma_n_plus_0") && header.contains("u_n_prime_minus"));
    assert_eq!(csv.lines().count(), 1 + 2 * 41);
}

#[test]
fn zero_load_gives_zero_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small_config(0.5);
    c.load.sigma1_gpa = 0.0;
    c.tractions = TractionsConfig::Zero;
    let cfg = write_config(tmp.path(), &c);
    let out = tmp.path().join("zero");
    let o = incrack(&[
        "--quiet",
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["max_crack_opening"].as_f64().unwrap(), 0.0);
    let mut rdr = csv::Reader::from_path(out.join("boundary_fields.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for (h, v) in headers.iter().zip(rec.iter()) {
            if h.starts_with("sigma") || h.starts_with("tau") || h.starts_with("u_") {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{h}");
            }
        }
    }
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(0.5));
    let out = tmp.path().join("sweep");
    let o = incrack(&[
        "--quiet",
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--parameter",
        "gamma0",
        "--values",
        "0.5,1",
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{o:?}");
    assert!(out.join("gamma0_0.5/summary.json").is_file());
    assert!(out.join("gamma0_1/summary.json").is_file());
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().next().unwrap().starts_with("parameter,value,max_crack_opening"));
}

#[test]
fn bad_input_exits_with_usage_status() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[contour]\nshape = \"circle\"\n").unwrap();
    assert_eq!(
        incrack(&["--quiet", "solve", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let mut c = small_config(0.5);
    c.matrix.nu = 0.7;
    let cfg = write_config(tmp.path(), &c);
    assert_eq!(
        incrack(&["--quiet", "solve", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let good = write_config(tmp.path(), &small_config(0.5));
    let o = incrack(&[
        "sweep",
        "--config",
        good.to_str().unwrap(),
        "--parameter",
        "alpha",
        "--values",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(incrack(&["scenario", "fig9"]).status.code(), Some(1));
}

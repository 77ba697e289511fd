use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddmag_cli::RunConfig;
use tempfile::TempDir;

fn ddmag(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddmag"))
        .args(args)
        .arg("--quiet")
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

#[test]
fn mesh_is_written_and_deterministic() {
    let t = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        let o = ddmag(&["mesh", "--out", dir], t.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("12960 elements, 6642 vertices"));
    }
    for f in ["vertices.csv", "triangles.csv", "mesh.vtk"] {
        assert_eq!(
            read(t.path().join("a").join(f)),
            read(t.path().join("b").join(f))
        );
    }
}

#[test]
fn coarse_mesh_fails_numerically() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("c.toml"), "version = 1\n[mesh]\nh = 0.05\n").unwrap();
    let o = ddmag(&["mesh", "--config", "c.toml"], t.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh resolution"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let t = TempDir::new().unwrap();
    assert_eq!(ddmag(&["frobnicate"], t.path()).status.code(), Some(1));
    assert_eq!(ddmag(&["--help"], t.path()).status.code(), Some(0));
    fs::write(
        t.path().join("bad.toml"),
        "version = 1\n[solver]\nstate_tol = -1.0\n",
    )
    .unwrap();
    assert_eq!(
        ddmag(&["mesh", "--config", "bad.toml"], t.path())
            .status
            .code(),
        Some(1)
    );
    let o = ddmag(&["sweep", "--n-list", "50,10,100"], t.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_inputs_exit_3() {
    let t = TempDir::new().unwrap();
    let o = ddmag(
        &["compare", "--dd", "nope.csv", "--newton", "nope.csv"],
        t.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));
    assert_eq!(
        ddmag(&["mesh", "--config", "nope.toml"], t.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn solve_both_and_compare() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    let o = ddmag(&["solve-dd", "--samples", "100", "--out", "dd"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(p.join("dd/summary.json"));
    assert!(s["w_air"].as_f64().unwrap() > 0.0);
    assert_eq!(s["converged"], true);
    for f in ["fields.csv", "fields.vtk", "convergence.csv"] {
        assert!(p.join("dd").join(f).is_file(), "{f}");
    }
    assert!(read(p.join("dd/fields.csv")).starts_with("element,x,y,Bx,By,Hx,Hy,region\n"));

    assert!(ddmag(&["solve-newton", "--out", "nt"], p).status.success());
    assert_eq!(json(p.join("nt/summary.json"))["converged"], true);

    let nt = p.join("nt/fields.csv");
    let nt = nt.to_str().unwrap();
    assert!(
        ddmag(&["compare", "--dd", nt, "--newton", nt, "--out", "same"], p)
            .status
            .success()
    );
    assert_eq!(
        json(p.join("same/compare.json"))["eps_em"].as_f64(),
        Some(0.0)
    );

    let dd = p.join("dd/fields.csv");
    let o = ddmag(
        &[
            "compare",
            "--dd",
            dd.to_str().unwrap(),
            "--newton",
            nt,
            "--out",
            "cmp",
        ],
        p,
    );
    assert!(o.status.success());
    let eps = json(p.join("cmp/compare.json"))["eps_em"].as_f64().unwrap();
    assert!(eps > 0.0 && eps < 1e-2, "{eps}");

    // a field file from another mesh is rejected
    fs::write(p.join("fine.toml"), "version = 1\n[mesh]\nh = 0.0025\n").unwrap();
    let o = ddmag(
        &[
            "compare",
            "--config",
            "fine.toml",
            "--dd",
            nt,
            "--newton",
            nt,
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatch"));
}

#[test]
fn measured_curve_runs_end_to_end() {
    let t = TempDir::new().unwrap();
    let cfg = repo_file("configs/measured.toml");
    let o = ddmag(
        &["solve-dd", "--config", cfg.to_str().unwrap(), "--out", "m"],
        t.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(t.path().join("m/summary.json"));
    assert_eq!(s["samples"], 28);
    assert!(s["w_air"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_writes_study_and_is_repeatable() {
    let t = TempDir::new().unwrap();
    for dir in ["s1", "s2"] {
        let o = ddmag(&["sweep", "--n-list", "10,50,100", "--out", dir], t.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let study = read(t.path().join("s1/study.csv"));
    assert_eq!(study.lines().count(), 4);
    assert!(study.starts_with("N,eps_em,eps_W_rel,iterations\n"));
    let slopes = json(t.path().join("s1/slopes.json"));
    assert!(slopes["eps_em_slope"].as_f64().unwrap() < 0.0);
    assert!(slopes["eps_w_slope"].as_f64().unwrap() < 0.0);
    for f in [
        "study.csv",
        "slopes.json",
        "N_50/fields.csv",
        "newton/fields.csv",
    ] {
        assert_eq!(
            read(t.path().join("s1").join(f)),
            read(t.path().join("s2").join(f))
        );
    }
}

#[test]
fn shipped_configs_parse() {
    let cfg = RunConfig::load(&repo_file("configs/inductor.toml")).unwrap();
    assert_eq!(cfg, RunConfig::default());
    RunConfig::load(&repo_file("configs/measured.toml")).unwrap();
}

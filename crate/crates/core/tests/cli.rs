use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use diffreg::cli::image_io::{read_pgm, write_pgm};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn diffreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = diffreg(&[
        "--example",
        "circle_square",
        "--size",
        "64",
        "--levels",
        "3",
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "warped.pgm",
        "warped.png",
        "grid.csv",
        "grid.svg",
        "det.csv",
        "f.csv",
        "trace.csv",
        "metrics.json",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["gfr"], 0.0);
    assert_eq!(m["degraded"], false);
    let iterations = m["iterations"].as_u64().unwrap() as usize;
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,iter,lambda,data,reg_u,reg_phi,reg_f,constraint,total,det_mean"
    );
    assert_eq!(lines.count(), iterations);
    let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "i,j,phi1,phi2");
    assert_eq!(grid.lines().count(), 64 * 64 + 1);
    let warped = read_pgm(&out.join("warped.pgm")).unwrap();
    assert_eq!((warped.spec().m(), warped.spec().n()), (64, 64));
}

#[test]
fn identical_inputs_report_null_re_ssd() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = generate(ExampleSpec::square(ExampleKind::TranslatedBlob, 32).unwrap()).unwrap();
    let img = dir.path().join("a.pgm");
    write_pgm(&img, &t.map(|v| v.round())).unwrap();
    let out = dir.path().join("same");
    let o = diffreg(&[
        "--ref",
        img.to_str().unwrap(),
        "--template",
        img.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(out.join("warped.pgm")).unwrap(),
        fs::read(&img).unwrap()
    );
    let m = json(&out.join("metrics.json"));
    assert!(m["re_ssd"].is_null());
    assert_eq!(m["re_ssd_reason"], "identical inputs");
    assert_eq!(m["gfr"], 0.0);
}

#[test]
fn missing_input_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = diffreg(&[
        "--ref",
        "/nonexistent/r.pgm",
        "--template",
        "/nonexistent/t.pgm",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("r.pgm"));
    assert!(!out.exists());
}

#[test]
fn rho_at_one_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffreg(&[
        "--example",
        "disc_to_c",
        "--rho",
        "1.0",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`rho`"));
}

#[test]
fn config_file_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "example = disc_to_c\nsmoothness = 2\n").unwrap();
    let o = diffreg(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`smoothness`"));

    fs::write(&cfg, "example = disc_to_c\ntau2 = lots\n").unwrap();
    let o = diffreg(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tau2`"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    fs::write(
        &cfg,
        format!("example = translated_blob\nsize = 32\nlevels = 2\nvariant = phi2\nmax_iter = 3\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = diffreg(&["--config", cfg.to_str().unwrap(), "--max-iter", "2", "-q"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["config"]["variant"], "phi2");
    assert_eq!(m["config"]["max_iter"], 2);
    assert!(m["iterations"].as_u64().unwrap() <= 4);
}

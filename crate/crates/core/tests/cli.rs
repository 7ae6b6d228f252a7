use std::path::Path;
use std::process::{Command, Output};

use ifdefense::io::read_cloud;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifdefense"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn corrupt_defend_eval_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&cli(
        &[
            "corrupt",
            "--fixture",
            "sphere",
            "--corruption",
            "none",
            "--out",
            "clean.xyz",
            "--seed",
            "1",
        ],
        d,
    ));
    ok(&cli(
        &[
            "corrupt",
            "--fixture",
            "sphere",
            "--corruption",
            "outliers(0.1,0.3)",
            "--out",
            "noisy.ply",
            "--format",
            "ply",
            "--seed",
            "1",
        ],
        d,
    ));
    assert_eq!(read_cloud(d.join("noisy.ply")).unwrap().len(), 1024);
    ok(&cli(
        &[
            "defend",
            "--input",
            "noisy.ply",
            "--fixture",
            "sphere",
            "--variant",
            "sor",
            "--out",
            "fixed.xyz",
        ],
        d,
    ));
    let report = ok(&cli(
        &["eval", "--input", "fixed.xyz", "--reference", "clean.xyz"],
        d,
    ));
    let mut lines = report.lines();
    assert_eq!(
        lines.next().unwrap(),
        "chamfer_x1e3,hausdorff,uniformity_cv,N_in,N_ref"
    );
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(cols[0].parse::<f64>().unwrap() < 3.0);
    assert_eq!(cols[4], "1024");
}

#[test]
fn mesh_writes_obj() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&cli(
        &[
            "mesh",
            "--fixture",
            "torus",
            "--grid-res",
            "32",
            "--out",
            "t.obj",
        ],
        dir.path(),
    ));
    assert!(out.contains("triangles"));
    let mesh = ifdefense::io::read_obj(dir.path().join("t.obj")).unwrap();
    assert!(ifdefense::remesh::is_watertight(&mesh));
}

#[test]
fn identity_pipeline_has_zero_chamfer() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&cli(
        &[
            "pipeline",
            "--fixture",
            "two-spheres",
            "--variant",
            "none",
            "--no-timing",
        ],
        dir.path(),
    ));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "none");
    assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[6].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn report_header_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    ok(&cli(
        &[
            "pipeline",
            "--fixture",
            "sphere",
            "--variant",
            "sor",
            "--report",
            "r.csv",
        ],
        dir.path(),
    ));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "file,variant,seed,N_in,N_out,chamfer_x1e3,hausdorff,uniformity_cv,seconds,error"
    );
}

#[test]
fn sweep_emits_one_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&cli(
        &[
            "sweep-lambda",
            "--fixture",
            "sphere",
            "--lambdas",
            "0,100,500,1000",
            "--iters",
            "20",
            "--no-timing",
        ],
        dir.path(),
    ));
    let variants: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(
        variants,
        [
            "sor+opt@lambda=0",
            "sor+opt@lambda=100",
            "sor+opt@lambda=500",
            "sor+opt@lambda=1000"
        ]
    );
}

#[test]
fn failing_input_yields_error_row_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.xyz"), "1 2\n").unwrap();
    let out = cli(
        &[
            "pipeline",
            "--input",
            "bad.xyz",
            "--fixture",
            "sphere",
            "--variant",
            "sor",
            "--no-timing",
        ],
        dir.path(),
    );
    // The field for a file input comes from --field; without it the row errors.
    assert!(!out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("bad"));
    assert!(!rows[0].ends_with(','));
    assert!(rows[1].starts_with("sphere") && rows[1].ends_with(','));
}

#[test]
fn unknown_options_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!cli(
        &[
            "defend",
            "--input",
            "x.xyz",
            "--fixture",
            "cube",
            "--out",
            "y.xyz"
        ],
        dir.path()
    )
    .status
    .success());
    assert!(!cli(
        &["pipeline", "--fixture", "sphere", "--corruption", "melt(1)"],
        dir.path()
    )
    .status
    .success());
}

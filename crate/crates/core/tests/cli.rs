use std::fs;
use std::path::PathBuf;

use chford::cli::{main_with_args, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use chford::group::{generators, ModuliPoint};
use chford::heisenberg::{cygan_sphere_residual, isometric_sphere, HeisenbergPoint};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("chford").chain(args.iter().copied()))
}

#[test]
fn verify_full_passes_and_writes_json() {
    let dir = scratch("verify");
    let out = dir.join("report.json");
    assert_eq!(run(&["verify", "--full", "--k-max", "3", "--out", out.to_str().unwrap()]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdict"], serde_json::Value::Bool(true));
}

#[test]
fn a_failing_verdict_exits_one() {
    // a tolerance this tight cannot be met by floating point identities
    let dir = scratch("strict");
    let out = dir.join("report.json");
    let code = run(&["verify", "--full", "--k-max", "2", "--tol-id", "1e-300", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAIL);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--h", "0.4", "--t", "1.0"]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["classify", "--word", "AQ"]), EXIT_USAGE);
    assert_eq!(run(&["verify", "--tol-id=0"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn scan_writes_both_csv_files() {
    let dir = scratch("scan");
    assert_eq!(run(&["scan", "--grid", "12", "--out", dir.to_str().unwrap()]), EXIT_OK);
    let grid = fs::read_to_string(dir.join("scan.csv")).unwrap();
    let curves = fs::read_to_string(dir.join("curves.csv")).unwrap();
    assert!(grid.lines().count() > 12);
    assert!(curves.lines().count() > 1);
    let width = grid.lines().next().unwrap().split(',').count();
    assert!(grid.lines().all(|l| l.split(',').count() == width));
}

#[test]
fn mesh_lies_on_the_sphere_and_hits_the_tangent_point() {
    let dir = scratch("mesh");
    let out = dir.join("c.obj");
    assert_eq!(run(&["mesh", "--word", "C", "--grid", "16", "--out", out.to_str().unwrap()]), EXIT_OK);
    let g = generators(&ModuliPoint::base_point(), 2).unwrap();
    let sphere = isometric_sphere(&g.c).unwrap();
    let text = fs::read_to_string(&out).unwrap();
    let verts: Vec<[f64; 3]> = text
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let x: Vec<f64> = l.split_whitespace().map(|s| s.parse().unwrap()).collect();
            [x[0], x[1], x[2]]
        })
        .collect();
    assert!(!verts.is_empty());
    assert!(text.lines().any(|l| l.starts_with("f ")));
    for v in &verts {
        let p = HeisenbergPoint::from_xyt(v[0], v[1], v[2]);
        assert!(cygan_sphere_residual(&p, &sphere).abs() < 1e-6);
    }
    let tangent = [-3.0, 0.0, -(15f64.sqrt()) / 2.0];
    assert!(verts.iter().any(|v| (0..3).all(|i| (v[i] - tangent[i]).abs() < 1e-9)));
}

#[test]
fn config_file_is_read_and_checked() {
    let dir = scratch("config");
    let out = dir.join("classify.json");
    let cfg = dir.join("ok.toml");
    fs::write(&cfg, format!("words = [\"C\", \"A\"]\nout = {:?}\n", out.to_str().unwrap())).unwrap();
    assert_eq!(run(&["classify", "--config", cfg.to_str().unwrap()]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["word"], "C");
    assert_eq!(records[0]["eigen_order"], 3);

    let bad = dir.join("bad.toml");
    fs::write(&bad, "colour = 3\n").unwrap();
    assert_eq!(run(&["classify", "--config", bad.to_str().unwrap()]), EXIT_USAGE);
    assert_eq!(run(&["classify", "--config", dir.join("missing.toml").to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn spheres_lists_the_word_set() {
    let dir = scratch("spheres");
    let out = dir.join("spheres.json");
    assert_eq!(run(&["spheres", "--k-max", "1", "--out", out.to_str().unwrap()]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["dim"], 2);
    assert!(!v["spheres"].as_array().unwrap().is_empty());
}

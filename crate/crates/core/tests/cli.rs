use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nematic_wave::cli::io::{load_initial_csv, write_initial_csv};
use nematic_wave::cli::{run_cli, RunConfig, EXIT_CONFIG, EXIT_PASS, EXIT_SOLVER};
use nematic_wave::initial::{sample_profile, Sampling, SmoothAngles};
use nematic_wave::model::MaterialParams;

const SMALL: &str = r#"{
  "grid_step": 0.02,
  "domain_radius": 1.0,
  "times": [0.0, 0.2, 0.4],
  "initial": { "profile": "smooth", "energy": 0.02 }
}"#;

fn cli(args: &[&str]) -> i32 {
    run_cli(std::iter::once("nematic-wave").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn vacuum_data_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "vacuum.json", r#"{ "grid_step": 0.05, "initial": { "profile": "vacuum" } }"#);
    let out = tmp.path().join("out");
    assert_eq!(cli(&["verify", "--config", &config, "--out", out.to_str().unwrap()]), EXIT_PASS);
    let m = manifest(&out);
    assert_eq!(m["experiment"], "verify");
    assert_eq!(m["passed"], true);
    assert_eq!(m["energy0"], 0.0);
    assert!(out.join("verify.json").exists());
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let unknown = write(tmp.path(), "unknown.json", "{\n  \"mu\": 0.5,\n  \"grid_stp\": 0.01\n}");
    assert_eq!(cli(&["simulate", "--config", &unknown, "--out", out]), EXIT_CONFIG);
    let negative = write(tmp.path(), "negative.json", "{\n  \"mu\": 0.5,\n  \"alpha\": -1.0\n}");
    assert_eq!(cli(&["simulate", "--config", &negative, "--out", out]), EXIT_CONFIG);
    assert_eq!(cli(&["simulate", "--grid-step", "0", "--out", out]), EXIT_CONFIG);
    assert_eq!(cli(&["simulate", "--eps", "0.01", "--out", out]), EXIT_CONFIG);
    assert_eq!(cli(&["no-such-command"]), EXIT_CONFIG);
    let wrong = write(tmp.path(), "wrong.json", r#"{ "experiment": "verify" }"#);
    assert_eq!(cli(&["simulate", "--config", &wrong, "--out", out]), EXIT_CONFIG);
}

#[test]
fn configuration_errors_point_at_the_line() {
    let err = RunConfig::from_json_str("{\n  \"mu\": 0.5,\n  \"grid_stp\": 0.01\n}").unwrap_err();
    assert_eq!(err.line, Some(3), "{err}");
    let err = RunConfig::from_json_str("{\n  \"mu\": 0.5,\n  \"alpha\": -1.0\n}").unwrap_err();
    assert_eq!(err.line, Some(3), "{err}");
}

#[test]
fn unconverged_iteration_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "tight.json", r#"{ "grid_step": 0.05, "picard_max_iters": 1 }"#);
    let out = tmp.path().join("out");
    assert_eq!(cli(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]), EXIT_SOLVER);
}

#[test]
fn exported_data_reimports_bit_identically() {
    let p = MaterialParams::new(2.0, 1.0, 0.5).unwrap();
    let prof = SmoothAngles::default().with_energy(&p, 0.1);
    let s = Sampling { x_min: -1.0, x_max: 1.0, arc_step: 5e-3, max_step: 5e-3 };
    let data = sample_profile(&prof, &p, &s).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("initial.csv");
    write_initial_csv(&path, &data).unwrap();
    let back = load_initial_csv(&path, false).unwrap();
    assert_eq!(back.x, data.x);
    assert_eq!(back.n, data.n);
    assert_eq!(back.n_t, data.n_t);
}

#[test]
fn two_constant_rows_give_constant_data() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "two.csv", "x,n1,n2,n3,nt1,nt2,nt3\n-1,0,0,1,0,0,0\n1,0,0,1,0,0,0\n");
    let data = load_initial_csv(Path::new(&path), false).unwrap();
    assert_eq!(data.x, vec![-1.0, 1.0]);
    assert!(data.n.iter().all(|n| *n == [0.0, 0.0, 1.0]));
    assert!(data.n_t.iter().chain(&data.n_x).all(|v| *v == [0.0; 3]));
}

#[test]
fn off_sphere_rows_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(
        tmp.path(),
        "bad.csv",
        "x,n1,n2,n3,nt1,nt2,nt3\n0,1,0,0,0,0,0\n0.1,1.001,0,0,0,0,0\n0.2,1,0,0,0,0,0\n",
    );
    let err = load_initial_csv(Path::new(&path), false).unwrap_err();
    assert_eq!(err.row, Some(2), "{err}");
    let path = write(tmp.path(), "order.csv", "x,u,ut\n0,0.1,0\n0,0.2,0\n");
    assert_eq!(load_initial_csv(Path::new(&path), true).unwrap_err().row, Some(2));
}

#[test]
fn planar_rows_become_planar_directors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "planar.csv", "x,u,ut\n0,0.3,0.5\n0.5,0.3,0.5\n1,0.3,0.5\n");
    let data = load_initial_csv(Path::new(&path), true).unwrap();
    let (s, c) = 0.3f64.sin_cos();
    for i in 0..3 {
        assert!((data.n[i][0] - c).abs() < 1e-15 && (data.n[i][1] - s).abs() < 1e-15 && data.n[i][2] == 0.0);
        assert!((data.n_t[i][0] + 0.5 * s).abs() < 1e-15 && (data.n_t[i][1] - 0.5 * c).abs() < 1e-15);
    }
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .filter(|(name, _)| name != "manifest.json")
        .collect()
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "small.json", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(cli(&["simulate", "--config", &config, "--out", dir.to_str().unwrap()]), EXIT_PASS);
    }
    let (fa, fb) = (artifacts(&a), artifacts(&b));
    assert!(fa.contains_key("slice_000.csv") && fa.contains_key("grid.csv"), "{:?}", fa.keys());
    assert_eq!(fa, fb);
    let strip = |mut m: serde_json::Value| {
        m.as_object_mut().unwrap().remove("wall_time_s");
        m
    };
    assert_eq!(strip(manifest(&a)), strip(manifest(&b)));
}

#[test]
fn imported_csv_drives_a_simulation() {
    let p = MaterialParams::new(2.0, 1.0, 0.5).unwrap();
    let prof = SmoothAngles::default().with_energy(&p, 0.02);
    let s = Sampling { x_min: -1.5, x_max: 1.5, arc_step: 5e-3, max_step: 5e-3 };
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("initial.csv");
    write_initial_csv(&csv, &sample_profile(&prof, &p, &s).unwrap()).unwrap();
    let text = format!(
        r#"{{ "grid_step": 0.02, "domain_radius": 1.0, "times": [0.0, 0.3],
             "initial": {{ "profile": "csv", "path": {:?} }} }}"#,
        csv.to_str().unwrap()
    );
    let config = write(tmp.path(), "csv.json", &text);
    let out = tmp.path().join("out");
    assert_eq!(cli(&["verify", "--config", &config, "--out", out.to_str().unwrap()]), EXIT_PASS);
}

#[test]
fn comparison_with_finite_differences_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("out");
    assert_eq!(cli(&["compare-fd", "--config", &config, "--out", out.to_str().unwrap()]), EXIT_PASS);
    let table = fs::read_to_string(out.join("compare_fd.csv")).unwrap();
    assert!(table.starts_with("time,linf_error,l2_error"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn blowup_demo_reports_the_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(cli(&["blowup-demo", "--eps", "0.01", "--out", out.to_str().unwrap()]), EXIT_PASS);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("blowup_report.json")).unwrap()).unwrap();
    assert_eq!(report["blew_up"], true);
    assert!(report["t_star"].as_f64().unwrap() <= report["theoretical_bound"].as_f64().unwrap());
    assert!(out.join("blowup_trace.csv").exists());
}

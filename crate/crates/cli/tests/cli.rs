use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_burgerslab"));
    c.env_remove("BURGERS_LAB_OUT");
    c
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn n_wave_config(run_id: &str) -> Value {
    let times: Vec<f64> = (0..20).map(|k| 0.1 * 200f64.powf(k as f64 / 20.0)).collect();
    json!({
        "run_id": run_id,
        "flux": {"kind": "burgers", "n": 1},
        "data": {"type": "n_wave", "l": 1.0},
        "auto_grid": {"cells_per_unit": 100, "margin": 0.25},
        "solver": {"t_end": 20.0, "output_times": times},
        "checks": [
            {"kind": "estfond"},
            {"kind": "decay", "options": {"time_shift": 1.0, "window": [2.0, 20.0], "expected_slope": -0.375}}
        ]
    })
}

fn cone_2d_config(run_id: &str) -> Value {
    json!({
        "run_id": run_id,
        "flux": {"kind": "burgers", "n": 2},
        "data": {"type": "cone", "height": 1.0, "center": [0.0, 0.0], "radius": 0.5},
        "auto_grid": {"cells_per_unit": 24, "margin": 0.25},
        "solver": {"t_end": 1.0, "output_times": [0.25, 0.5, 0.75], "entropy_diagnostics": [{"kind": "quadratic"}]}
    })
}

fn run_ok(cfg: &Path, out: &Path, extra: &[&str]) {
    let mut args: Vec<&str> = extra.to_vec();
    args.extend(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let o = exec(&args);
    assert_eq!(code(&o), 0, "run failed: {}", stderr(&o));
}

fn read_snapshot_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(2).map(|l| l.trim().parse().unwrap()).collect()
}

#[test]
fn run_writes_diagnostics_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &n_wave_config("smoke"));
    run_ok(&cfg, dir.path(), &[]);
    let run = dir.path().join("smoke");
    let csv = std::fs::read_to_string(run.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass,l1,l2,lp_main,"));
    assert!(csv.lines().count() >= 3);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["run_id"], "smoke");
    // defaults are explicit in the echo and the auto grid is resolved
    assert_eq!(manifest["config"]["solver"]["cfl_fraction"], 0.9);
    assert!(manifest["config"]["grid"].is_object());
    assert!(manifest["config"].get("auto_grid").is_none());
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &cone_2d_config("env-root"));
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("BURGERS_LAB_OUT", dir.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("root/env-root/diagnostics.csv").exists());
}

#[test]
fn boundary_contact_exits_3_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "run_id": "tight",
        "flux": {"kind": "burgers", "n": 1},
        "data": {"type": "n_wave", "l": 1.0},
        "grid": {"axes": [{"origin": -0.2, "width": 0.01, "count": 140}]},
        "solver": {"t_end": 3.0}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let o = exec(&["run", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("enlarge axis 0 to at least"), "{err}");
    // the required upper end covers the propagation bound 1 * t_end beyond the support
    let range = err.split("at least [").nth(1).unwrap().split(']').next().unwrap();
    let hi: f64 = range.split(',').nth(1).unwrap().trim().parse().unwrap();
    assert!(hi > 3.0, "{hi}");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tight/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "aborted");
    assert!(manifest["error"].as_str().unwrap().contains("enlarge"));
}

#[test]
fn auto_grid_keeps_final_support_inside_margin() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = n_wave_config("margin");
    cfg["solver"] = json!({"t_end": 3.0});
    let p = write_config(dir.path(), "c.json", &cfg);
    run_ok(&p, dir.path(), &[]);
    let values = read_snapshot_values(&dir.path().join("margin/final.snap"));
    // margin 0.25 at 100 cells per unit leaves at least 25 empty cells each side
    let k = 20;
    assert!(values[..k].iter().all(|&v| v == 0.0));
    assert!(values[values.len() - k..].iter().all(|&v| v == 0.0));
    assert!(values.iter().any(|&v| v > 0.0));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cone_2d_config("bad");
    cfg["checks"] = json!([{"kind": "daf_tv"}]);
    let p = write_config(dir.path(), "c.json", &cfg);
    let o = exec(&["run", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n = 1 only"));

    let mut cfg = cone_2d_config("bad");
    cfg["solver"]["cfl_fraction"] = json!(1.5);
    let p = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(code(&exec(&["run", "--config", p.to_str().unwrap()])), 2);

    let mut cfg = cone_2d_config("bad");
    cfg["unknown_field"] = json!(1);
    let p = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(code(&exec(&["run", "--config", p.to_str().unwrap()])), 2);

    assert_eq!(code(&exec(&["run", "--config", "/nonexistent/config.json"])), 2);
}

#[test]
fn verify_passes_on_stored_n_wave_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &n_wave_config("nw"));
    run_ok(&cfg, dir.path(), &[]);
    let run = dir.path().join("nw");
    let o = exec(&["verify", run.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let reports: Value = serde_json::from_str(&std::fs::read_to_string(run.join("reports.json")).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        for key in ["run_id", "estimate", "lhs", "rhs", "ratio", "slope", "pass"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["run_id"], "nw");
    }
    let decay = reports.iter().find(|r| r["estimate"] == "decay").unwrap();
    assert!((decay["slope"].as_f64().unwrap() + 0.375).abs() <= 0.02);
    let csv = std::fs::read_to_string(run.join("reports.csv")).unwrap();
    assert!(csv.starts_with("run_id,estimate,lhs,rhs,ratio,slope,pass"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn verify_check_selection_and_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &n_wave_config("sel"));
    run_ok(&cfg, dir.path(), &[]);
    let run = dir.path().join("sel");
    let r = run.to_str().unwrap();

    let o = exec(&["verify", r, "--checks", ""]);
    assert_eq!(code(&o), 0);
    let reports: Value = serde_json::from_str(&std::fs::read_to_string(run.join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports, json!([]));

    let o = exec(&["verify", r, "--checks", "daf_tv,heat_linf"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    // a window holding too few samples for the decay fit is inconclusive
    let o = exec(&["verify", r, "--checks", "decay", "--window", "19:20"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("inconclusive"));

    assert_eq!(code(&exec(&["verify", r, "--checks", "nonsense"])), 2);
    assert_eq!(code(&exec(&["verify", r, "--window", "5"])), 2);
}

#[test]
fn verify_rejects_corrupted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &n_wave_config("bad-csv"));
    run_ok(&cfg, dir.path(), &[]);
    let run = dir.path().join("bad-csv");
    let path = run.join("diagnostics.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("0.5", "zzz", 1).lines().take(4).collect::<Vec<_>>().join("\n")).unwrap();
    let o = exec(&["verify", run.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    std::fs::write(&path, "t,mass\n0,1\n").unwrap();
    assert_eq!(code(&exec(&["verify", run.to_str().unwrap()])), 2);
}

#[test]
fn exact_tables() {
    let o = exec(&["exact", "constants", "--d", "2"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("gamma,5/8,0.625"), "{s}");
    assert!(s.contains("delta,3/8,0.375"), "{s}");
    assert!(s.contains("p_star,4,4"));

    let o = exec(&["exact", "hilbert", "--d", "3"]);
    assert!(stdout(&o).contains("3,1/2160,"));

    let o = exec(&["exact", "n-wave", "--l", "1", "--times", "0,3", "--p", "1,4"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "t,l1,l4");
    let l4: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
    // (1/5)^{1/4} 4^{-3/8}
    assert!((l4 - 0.2f64.powf(0.25) * 4f64.powf(-0.375)).abs() < 1e-14);

    let o = exec(&["exact", "monomial", "--k", "2,3"]);
    assert!(stdout(&o).contains("N,9,9"));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.csv");
    let o = exec(&["exact", "--output", file.to_str().unwrap(), "riemann", "--ul", "1", "--ur", "0", "--t", "1", "--points", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(file).unwrap();
    assert_eq!(table.lines().count(), 4);

    assert_eq!(code(&exec(&["exact", "hilbert", "--d", "0"])), 2);
    assert_eq!(code(&exec(&["exact", "constants", "--d", "1"])), 2);
    assert_eq!(code(&exec(&["exact", "monomial", "--k", "3,2"])), 2);
}

#[test]
fn csv_is_bitwise_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &cone_2d_config("det"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&cfg, &a, &["--threads", "1"]);
    run_ok(&cfg, &b, &["--threads", "4"]);
    for f in ["diagnostics.csv", "final.snap"] {
        let x = std::fs::read(a.join("det").join(f)).unwrap();
        let y = std::fs::read(b.join("det").join(f)).unwrap();
        assert!(x == y, "{f} differs between thread counts");
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &cone_2d_config("rt"));
    run_ok(&cfg, &dir.path().join("first"), &[]);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("first/rt/manifest.json")).unwrap()).unwrap();
    let echo = write_config(dir.path(), "echo.json", &manifest["config"]);
    run_ok(&echo, &dir.path().join("second"), &[]);
    let second: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("second/rt/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"], second["config"]);
    let x = std::fs::read(dir.path().join("first/rt/diagnostics.csv")).unwrap();
    let y = std::fs::read(dir.path().join("second/rt/diagnostics.csv")).unwrap();
    assert!(x == y);
}

fn sweep_summary(dir: &Path, run_id: &str, axis: &str) -> Value {
    let p = dir.join(format!("{run_id}-sweep-{axis}/summary.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn mesh_sweep_converges_at_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "run_id": "mesh",
        "flux": {"kind": "burgers", "n": 1},
        "data": {"type": "n_wave", "l": 1.0},
        "auto_grid": {"cells_per_unit": 100, "margin": 0.25},
        "solver": {"t_end": 3.0, "output_times": [1.0, 2.0]}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let o = exec(&["sweep", "--config", p.to_str().unwrap(), "--axis", "mesh", "--values", "1/100,1/200,1/400", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = sweep_summary(dir.path(), "mesh", "mesh");
    assert!(s["summary"]["min_order"].as_f64().unwrap() >= 0.8);
    let err = s["points"][2]["l1_error"].as_f64().unwrap();
    assert!(err <= 5e-3, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("mesh-sweep-mesh/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn truncation_sweep_gaps_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "run_id": "trunc",
        "flux": {"kind": "burgers", "n": 1},
        "data": {"type": "singular"},
        "auto_grid": {"cells_per_unit": 400, "margin": 0.25},
        "solver": {"t_end": 0.5}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let o = exec(&["sweep", "--config", p.to_str().unwrap(), "--axis", "truncation", "--values", "2,4,8,16", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = sweep_summary(dir.path(), "trunc", "truncation");
    assert_eq!(s["summary"]["gaps_decreasing"], true);
    let gaps: Vec<f64> = (0..3).map(|k| s["points"][k]["gap"].as_f64().unwrap()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
}

#[test]
fn lambda_sweep_keeps_estfond_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.json", &cone_2d_config("lam"));
    let o = exec(&["sweep", "--config", p.to_str().unwrap(), "--axis", "lambda", "--values", "0.5,1,1.5,2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = sweep_summary(dir.path(), "lam", "lambda");
    assert!(s["summary"]["ratio_spread"].as_f64().unwrap() <= 0.01);
}

#[test]
fn exponent_sweep_marks_incompatible_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cone_2d_config("exps");
    cfg["checks"] = json!([{"kind": "estfond"}]);
    let p = write_config(dir.path(), "c.json", &cfg);
    let o = exec(&["sweep", "--config", p.to_str().unwrap(), "--axis", "exponents", "--values", "2,3;2,4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let s = sweep_summary(dir.path(), "exps", "exponents");
    assert_eq!(s["points"][0]["completed"], true);
    assert_eq!(s["points"][1]["completed"], false);
    assert!(s["points"][1]["error"].as_str().unwrap().contains("Burgers"));
    assert_eq!(s["summary"]["pass"], false);
}

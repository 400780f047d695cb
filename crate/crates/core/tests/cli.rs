use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deadcore::config::RunConfig;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deadcore"))
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn same_files(a: &Path, b: &Path) {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

const PROFILE: &str = "[potential]\nkind = characteristic\nq = 1\n\n[geometry]\nn = 2\nR = 4.7\nN = 400\nM = 100\n";

const VERIFY_1D: &str = "[run]\nseed = 7\n\n[potential]\nkind = power_law\nalpha = 2\n\n[geometry]\nn = 1\nN = 400\nM = 200\n\n[solver]\njitter = 0.05\n\n[field]\ndomain = interval\nlo = -1\nhi = 1\ncells = 200\nboundary = constant\nvalue = 1\n\n[checks]\ninterior_balls = 0:0:1; 0.25:0:0.75\npohozaev_radii = 0.4, 0.8\nmonotonicity_radii = 0.2, 0.5, 0.9\nmaximum_principle = true\n";

#[test]
fn profile_writes_pair_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.ini", PROFILE);
    let out = dir.path().join("out");
    let o = run("profile", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("dead_core.json"));
    assert_eq!(report["results"][0]["has_dead_core"], Value::Bool(true));
    assert_eq!(report["config"]["geometry"]["M"], "100");
    let csv = std::fs::read_to_string(out.join("profile_upper.csv")).unwrap();
    assert!(csv.starts_with("r,h\n"));
    assert_eq!(csv.lines().count(), 402);
    assert!(!csv.contains('\r'));
}

#[test]
fn profile_sweep_and_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "z.ini",
        "[potential]\nkind = zero\nq = 1.5\n[geometry]\nn = 2\nR = 1, 3\nN = 64\nM = 16\n",
    );
    let out = dir.path().join("out");
    assert!(run("profile", &cfg, &out, &[]).status.success());
    for k in 0..2 {
        for side in ["upper", "lower"] {
            let (_, rows) = deadcore::io::read_csv(&out.join(format!("profile_{side}_{k}.csv"))).unwrap();
            assert!(rows.iter().all(|r| r[1] == 1.5));
        }
    }
    assert_eq!(json(&out.join("dead_core.json"))["results"][1]["has_dead_core"], Value::Bool(false));
}

#[test]
fn invalid_level_count_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.ini", &PROFILE.replace("M = 100", "M = 4"));
    let out = dir.path().join("out");
    let o = run("profile", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (k, text) in
        ["[potential\nkind = zero\n", "[potential]\nkind = zero\n[field]\ndomain = ellipse\n", "[field]\ncells = 10\n"]
            .iter()
            .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("m{k}.ini"), text);
        assert_eq!(run("verify", &cfg, &out, &[]).status.code(), Some(2), "{text}");
    }
    assert!(!out.exists());
    assert_eq!(bin().arg("verify").output().unwrap().status.code(), Some(2));
}

#[test]
fn critical_with_divergent_iq_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.ini", "[potential]\nkind = power_law\nalpha = 2\n[geometry]\nn = 2\n");
    let o = run("critical", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("I_q divergent: no dead core exists"));
}

#[test]
fn critical_power_law_n1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.ini", "[potential]\nkind = power_law\nalpha = 1\nq = 1\n[geometry]\nn = 1\n");
    let out = dir.path().join("out");
    assert!(run("critical", &cfg, &out, &["--threads", "2"]).status.success());
    let doc = json(&out.join("critical.json"));
    let estimate = doc["critical_radius"].as_f64().unwrap();
    assert!((estimate / 2f64.sqrt() - 1.0).abs() < 0.02, "{estimate}");
    assert!((doc["theory"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
    let b = &doc["bracket"];
    assert!(b[0].as_f64().unwrap() <= estimate && estimate <= b[1].as_f64().unwrap());
}

#[test]
fn verify_1d_scenario_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.ini", VERIFY_1D);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("verify", &cfg, &a, &[]).status.success());
    assert!(run("verify", &cfg, &b, &["--threads", "1"]).status.success());
    same_files(&a, &b);

    let report = json(&a.join("report.json"));
    let checks = report["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["field_solve", "comparison", "comparison", "pohozaev", "monotonicity", "maximum_principle"]);
    for c in checks {
        assert_eq!(c["verdict"], "pass", "{c}");
    }
    assert_eq!(report["config"]["run"]["seed"], "7");
    assert!(a.join("field.csv").exists() && a.join("field.json").exists());
}

#[test]
fn seed_flag_changes_the_jittered_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.ini", &VERIFY_1D.replace("cells = 200", "cells = 64"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("verify", &cfg, &a, &["--seed", "1"]).status.success());
    assert!(run("verify", &cfg, &b, &["--seed", "2"]).status.success());
    assert_eq!(json(&a.join("report.json"))["config"]["run"]["seed"], "1");
    assert_ne!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}

#[test]
fn embedded_config_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.ini", &VERIFY_1D.replace("cells = 200", "cells = 64"));
    let first = dir.path().join("first");
    assert!(run("verify", &cfg, &first, &[]).status.success());
    let embedded = RunConfig::ini_from_json(&json(&first.join("report.json"))["config"]).unwrap();
    let again_cfg = write_config(dir.path(), "again.ini", &embedded);
    let second = dir.path().join("second");
    assert!(run("verify", &again_cfg, &second, &[]).status.success());
    same_files(&first, &second);
    let resolved = std::fs::read_to_string(first.join("config.resolved.ini")).unwrap();
    assert_eq!(RunConfig::parse(&resolved).unwrap().to_ini(deadcore::config::Command::Verify), resolved);
}

#[test]
fn verify_hedgehog_disk() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[potential]\nkind = characteristic\nm = 2\n\n[geometry]\nn = 2\nN = 800\nM = 200\n\n[solver]\nfield_tol = 1e-10\n\n[field]\ndomain = disk\nradius = 4.6632\ncells = 100\nboundary = hedgehog\n\n[checks]\ninterior_balls = 0:0:2.3316; 1:0:3.5\ndead_core = true\n";
    let cfg = write_config(dir.path(), "h.ini", text);
    let out = dir.path().join("out");
    let o = run("verify", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    let checks = report["checks"].as_array().unwrap();
    for c in checks.iter().filter(|c| c["name"] == "comparison") {
        assert_eq!(c["verdict"], "pass", "{c}");
    }
    let core = checks.iter().find(|c| c["name"] == "dead_core").unwrap();
    assert_ne!(core["verdict"], "fail");
    assert!(core["residuals"]["empirical_depth"].as_f64().unwrap() < 4.6632);
}

#[test]
fn non_converged_verify_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = VERIFY_1D.replace("jitter = 0.05", "jitter = 0.05\nmax_iters = 2\ncascade_levels = 1\ncontinuation = 0");
    let cfg = write_config(dir.path(), "n.ini", &text);
    let out = dir.path().join("out");
    assert_eq!(run("verify", &cfg, &out, &[]).status.code(), Some(3));
    let report = json(&out.join("report.json"));
    assert_eq!(report["checks"][0]["verdict"], "inconclusive");
}

#[test]
fn plotdata_overlay_heatmap_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("prof");
    assert!(run("profile", &write_config(dir.path(), "p.ini", PROFILE), &prof, &[]).status.success());

    let field_cfg = "[potential]\nkind = quadratic\n[geometry]\nn = 2\n[field]\ndomain = rectangle\nlo = 0:0\nhi = 2:1\ncells = 32\nboundary = constant\nvalue = 1\n";
    let field = dir.path().join("field");
    assert!(run("verify", &write_config(dir.path(), "f.ini", field_cfg), &field, &[]).status.success());

    let text = format!(
        "[potential]\nkind = characteristic\n[geometry]\nn = 2\nR = 4.7\n[output]\nprofile_csv = {}\nfield_csv = {}\noracle = harmonic\ndownsample = 50\n",
        prof.join("profile_upper.csv").display(),
        field.join("field.csv").display()
    );
    let out = dir.path().join("plots");
    let o = run("plotdata", &write_config(dir.path(), "plot.ini", &text), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = deadcore::io::read_csv(&out.join("overlay.csv")).unwrap();
    assert_eq!(header, ["r", "h", "oracle"]);
    assert!(rows.len() <= 52 && rows.iter().all(|r| (r[1] - r[2]).abs() < 0.05));
    let (header, rows) = deadcore::io::read_csv(&out.join("heatmap.csv")).unwrap();
    assert_eq!(header, ["i", "j", "modulus"]);
    assert!(rows.iter().all(|r| r[2] <= 1.0 + 1e-12));
    assert!(std::fs::read_to_string(out.join("overlay.gp")).unwrap().contains("overlay.csv"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let text = format!("[potential]\nkind = zero\n[output]\nprofile_csv = {}\n", empty.display());
    let out = dir.path().join("none");
    assert_eq!(run("plotdata", &write_config(dir.path(), "e.ini", &text), &out, &[]).status.code(), Some(2));
    let text = "[potential]\nkind = zero\n[output]\nfield_csv = /nonexistent/field.csv\n";
    assert_eq!(run("plotdata", &write_config(dir.path(), "m.ini", text), &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

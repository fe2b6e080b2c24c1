use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn stflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stflow")).args(args).output().expect("spawn stflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(format!("{name}.cfg"));
    std::fs::write(&p, text).unwrap();
    p
}

const BIGBANG: &str = "scenario = bigbang
[grid]
half_width = 1.125
spacing = 0.0625
[domain]
kind = disk
radius = 1
[flow]
kind = big-bang
[time]
t_init = 0.25
tau = 0.01
t_final = 0.5
stride = 0.125
";

const PUNCTURE: &str = "scenario = puncture
[grid]
half_width = 2.25
spacing = 0.125
[domain]
kind = punctured-disk
radius = 2
puncture = 0.01, 0.01
fill_time = 0.3
[flow]
kind = flat
value = 1
[time]
t_init = 0.1
tau = 0.05
t_final = 0.5
stride = 0.05
[check.continuity]
";

fn run(cfg: &Path, out: &Path) -> Output {
    stflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn reports(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("reports.jsonl")).unwrap()
}

#[test]
fn harnack_run_passes_and_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{BIGBANG}[check.harnack]\nt0 = 0.25\nt1 = 0.5\ntol = 0.05\n[check.chen]\n");
    let cfg = write_cfg(tmp.path(), "bb", &text);
    let o = run(&cfg, &tmp.path().join("out"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("out/bigbang");
    for f in ["reports.jsonl", "reports.csv", "summary.txt", "domain.spacetime", "trajectory"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let r = reports(&dir);
    assert_eq!(r.lines().count(), 2);
    assert!(r.contains("\"name\":\"harnack\"") && r.contains("\"name\":\"chen-global\""));
    assert!(!r.contains("\"verdict\":\"fail\""));
}

#[test]
fn runs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{BIGBANG}[check.harnack]\n[check.hyperbolic-lower]\n");
    let cfg = write_cfg(tmp.path(), "bb", &text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&cfg, &a)), 0);
    assert_eq!(code(&run(&cfg, &b)), 0);
    assert_eq!(reports(&a.join("bigbang")), reports(&b.join("bigbang")));
}

#[test]
fn empty_check_list_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "bb", BIGBANG);
    let o = run(&cfg, &tmp.path().join("out"));
    assert_eq!(code(&o), 0);
    assert_eq!(reports(&tmp.path().join("out/bigbang")).trim(), "");
}

#[test]
fn puncture_fails_continuity_at_the_puncture() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "p", PUNCTURE);
    assert_eq!(code(&run(&cfg, &tmp.path().join("out"))), 1);
    let line = reports(&tmp.path().join("out/puncture"));
    let v: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(v["name"], "continuity");
    assert_eq!(v["verdict"], "fail");
    let (x, y) = (v["witness"]["x"].as_f64().unwrap(), v["witness"]["y"].as_f64().unwrap());
    assert!(x.abs() <= 0.125 && y.abs() <= 0.125, "witness ({x}, {y})");
}

#[test]
fn expected_failure_inverts_the_exit_code() {
    let tmp = TempDir::new().unwrap();
    let failing = write_cfg(tmp.path(), "p", &PUNCTURE.replace("scenario = puncture", "scenario = p\nexpect_fail = true"));
    assert_eq!(code(&run(&failing, &tmp.path().join("out"))), 0);
    let passing = write_cfg(tmp.path(), "q", &format!("expect_fail = true\n{BIGBANG}"));
    assert_eq!(code(&run(&passing, &tmp.path().join("out"))), 1);
}

#[test]
fn bad_configs_exit_two() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("unknown-kind", BIGBANG.replace("kind = disk", "kind = hexagon")),
        ("bad-number", BIGBANG.replace("radius = 1", "radius = one")),
        ("bad-time", BIGBANG.replace("t_final = 0.5", "t_final = 0.1")),
        ("unknown-section", format!("{BIGBANG}[bogus]\na = 1\n")),
        ("unknown-check", format!("{BIGBANG}[check.nonsense]\n")),
        ("missing-file", BIGBANG.replace("kind = big-bang", "kind = file\nfile = nowhere")),
    ];
    for (name, text) in cases {
        let cfg = write_cfg(tmp.path(), name, &text);
        let o = run(&cfg, &tmp.path().join("out"));
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&run(&tmp.path().join("absent.cfg"), tmp.path())), 2);
}

#[test]
fn degenerate_domain_is_a_solver_failure() {
    let tmp = TempDir::new().unwrap();
    let text = BIGBANG.replace("kind = disk\nradius = 1", "kind = annulus\nradius = 0.1\ninner_radius = 0.05");
    let cfg = write_cfg(tmp.path(), "thin", &text);
    assert_eq!(code(&run(&cfg, &tmp.path().join("out"))), 3);
}

#[test]
fn parallel_jobs_report_the_worst_status() {
    let tmp = TempDir::new().unwrap();
    let a = write_cfg(tmp.path(), "bb", BIGBANG);
    let b = write_cfg(tmp.path(), "p", PUNCTURE);
    let out = tmp.path().join("out");
    let o = stflow(&["run", a.to_str().unwrap(), b.to_str().unwrap(), "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(out.join("bigbang/summary.txt").exists() && out.join("puncture/summary.txt").exists());
}

#[test]
fn verify_subcommands_read_run_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    run(&write_cfg(tmp.path(), "p", PUNCTURE), &out);
    run(&write_cfg(tmp.path(), "bb", BIGBANG), &out);
    let st = out.join("puncture/domain.spacetime");
    let traj = out.join("bigbang/trajectory");
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let o = stflow(&["verify", "continuity", &s(&st)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"name\":\"continuity\""));
    assert_eq!(code(&stflow(&["verify", "expanding", &s(&st)])), 0);
    assert_eq!(code(&stflow(&["verify", "chen", &s(&traj), "--tau", "0.01"])), 0);
    let o = stflow(&["verify", "harnack", &s(&traj), "--t0", "0.25", "--t1", "0.5", "--tol", "0.05"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    // A missing flag or file is a usage error, not a check failure.
    assert_ne!(code(&stflow(&["verify", "chen", &s(&traj)])), 0);
    assert_eq!(code(&stflow(&["verify", "expanding", &s(&tmp.path().join("nothing"))])), 2);
}

#[test]
fn emit_plots_groups_reports_by_family() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let text = format!("{BIGBANG}[check.harnack]\nt0 = 0.25\nt1 = 0.5\ntol = 0.05\n");
    run(&write_cfg(tmp.path(), "bb", &text), &out);
    run(&write_cfg(tmp.path(), "p", PUNCTURE), &out);
    let o = stflow(&["emit-plots", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let harnack = std::fs::read_to_string(out.join("plots/harnack.csv")).unwrap();
    assert_eq!(harnack.lines().count(), 2);
    assert!(out.join("plots/continuity.csv").exists());
    // Re-emitting must not pick up its own output.
    assert_eq!(code(&stflow(&["emit-plots", out.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read_to_string(out.join("plots/harnack.csv")).unwrap(), harnack);
}

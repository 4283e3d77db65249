use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nlwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON summary")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn kernel_info_prints_symbol_table() {
    let out = nlwave(&["kernel-info"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,symbol,k"));
    assert_eq!(
        lines.next(),
        Some("0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0")
    );
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn kernel_info_accepts_a_table_file() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "sym.txt", "# xi beta\n0 1\n1 0.5\n4 0.1\n");
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"command": "kernel-info", "kernel": "sym.txt", "xi_max": 4, "xi_count": 5}"#,
    );
    let out_dir = dir.path().join("out");
    let out = nlwave(&["--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kernel"], "table");
    assert_eq!(summary["passed"], true);
    let csv = fs::read_to_string(out_dir.join("kernel_info.csv")).unwrap();
    assert!(csv.contains("\n2.0000000000000000e0,3.6666666666666670e-1,"), "{csv}");
}

#[test]
fn invalid_configs_exit_3_with_field_names() {
    let out = nlwave(&["simulate", "--delta", "-0.5"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("delta"), "{}", stderr(&out));

    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"command": "converge-dispersion", "delta_list": [0.05, 0.1, 0.2, 0.4]}"#,
    );
    let out = nlwave(&["--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("delta_list ordering"), "{}", stderr(&out));

    let cfg = write(dir.path(), "b.json", r#"{"grid_size": 64}"#);
    let out = nlwave(&["simulate", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("grid_size"));

    let out = nlwave(&["simulate", "--n", "0"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("config-invalid: n:"), "{}", stderr(&out));

    let out = nlwave(&["simulate", "--grid-n", "abc"]);
    assert_eq!(code(&out), 3);

    let out = nlwave(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn minimal_file_is_filled_with_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"command": "simulate", "t_end": 0.05}"#);
    let out = nlwave(&["--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = json(&out);
    let c = &s["config"];
    assert_eq!(c["grid_l"], 20.0);
    assert_eq!(c["grid_n"], 1024);
    assert_eq!(c["s"], 3.0);
    assert_eq!(c["kernel"], "triangular");
    assert_eq!(c["dt"].as_f64().unwrap(), 0.25 * 40.0 / 1024.0);
    assert_eq!(s["t_final"], 0.05);
    assert_eq!(s["status"], "completed");
}

#[test]
fn flags_override_file_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"command": "simulate", "grid_n": 128, "epsilon": 0.3, "t_end": 0.1, "delta": "dirac-limit"}"#,
    );
    let out = nlwave(&["--config", &cfg, "--epsilon", "0.2", "--grid-n", "64"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let c = json(&out)["config"].clone();
    assert_eq!(c["epsilon"], 0.2);
    assert_eq!(c["grid_n"], 64);
    assert_eq!(c["delta"], "dirac-limit");
}

#[test]
fn breakdown_exits_2_with_halt_time() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"command": "simulate", "grid_n": 128, "breakdown_threshold": 0.1}"#,
    );
    let out = nlwave(&["--config", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("halted at t ="), "{}", stderr(&out));
    assert_eq!(json(&out)["status"], "breakdown");
}

#[test]
fn simulate_writes_field_dumps_and_time_series() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("sim");
    let out = nlwave(&[
        "simulate",
        "--grid-n",
        "64",
        "--t-end",
        "0.2",
        "--dt",
        "0.05",
        "--emit-timeseries",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ts = fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next(), Some("t,E_s,monitor,u_linf"));
    assert_eq!(ts.lines().count(), 1 + 5);
    let u = fs::read_to_string(out_dir.join("u.csv")).unwrap();
    assert_eq!(u.lines().next(), Some("x,value"));
    assert_eq!(u.lines().count(), 65);
    assert!(u.lines().nth(1).unwrap().starts_with("-2.0000000000000000e1,"));
}

#[test]
fn converge_dispersion_acceptance_config_reports_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{
            "command": "converge-dispersion",
            "kernel": "triangular",
            "grid_l": 20, "grid_n": 2048,
            "delta_list": [0.4, 0.2, 0.1, 0.05],
            "epsilon": 0.1, "n": 1, "s": 3, "t_end": 1,
            "u0": {"shape": "gaussian", "a": 0.5, "b": 2},
            "v0": {"shape": "zero"}
        }"#,
    );
    let out = nlwave(&["--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = json(&out);
    let slope = s["slope"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&slope), "{slope}");
    assert_eq!(s["errors"].as_array().unwrap().len(), 4);
}

#[test]
fn dirac_sweep_skips_the_fit() {
    let out = nlwave(&[
        "converge-dispersion",
        "--grid-n",
        "128",
        "--t-end",
        "0.2",
        "--config",
        "/dev/null",
    ]);
    // /dev/null is not a JSON object.
    assert_eq!(code(&out), 3);
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"command": "converge-dispersion", "kernel": "dirac"}"#,
    );
    let out = nlwave(&["--config", &cfg, "--grid-n", "128", "--t-end", "0.2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = json(&out);
    assert!(s["slope"].is_null());
    assert_eq!(s["fit_excluded"], 4);
}

#[test]
fn lattice_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = nlwave(&[
            "converge-lattice",
            "--grid-l",
            "12.8",
            "--grid-n",
            "512",
            "--t-end",
            "0.3",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["report.csv", "errors.csv", "chain.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // The summaries differ only in the echoed output path.
    let sa = fs::read_to_string(a.join("summary.json")).unwrap();
    let sb = fs::read_to_string(b.join("summary.json")).unwrap();
    assert_eq!(sa.replace(a.to_str().unwrap(), ""), sb.replace(b.to_str().unwrap(), ""));

    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("delta,error_terminal,slope_running"));
    assert!(lines.next().unwrap().ends_with(",nan"));
    let chain = fs::read_to_string(a.join("chain.csv")).unwrap();
    assert_eq!(chain.lines().next(), Some("j,x,u,u_t"));
    assert_eq!(chain.lines().count(), 1 + 512);
}

#[test]
fn misaligned_lattice_deltas_are_rejected() {
    let out = nlwave(&["converge-lattice", "--grid-n", "1000"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("delta_list"), "{}", stderr(&out));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_frmpc");

fn params() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/lfp_graphite.toml")
}

fn frmpc(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FRMPC_OUT_DIR")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// `key=value` field of a summary line.
fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in '{line}'"))
        .to_string()
}

fn read_trace(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "P", "E", "V", "C_r", "C_f", "delta_f"]
    );
    r.records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn missing_params_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = frmpc(&["simulate", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--params"));
    assert!(!d.path().join("trace.csv").exists());
}

#[test]
fn resting_cell_without_side_reaction_is_constant() {
    let d = tempfile::tempdir().unwrap();
    let o = frmpc(&[
        "simulate",
        "--params",
        params().to_str().unwrap(),
        "--steps",
        "120",
        "--no-side-reaction",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trace(&d.path().join("trace.csv"));
    assert_eq!(rows.len(), 120);
    let e0 = rows[0][2];
    for r in &rows {
        assert_eq!(r[1], 0.0);
        assert!((r[2] - e0).abs() < 1e-12);
        assert_eq!(r[5], 0.0);
    }
    // time stamps are step ends: 30 s ... 3600 s
    assert_eq!(rows[0][0], 30.0);
    assert_eq!(rows[119][0], 3600.0);
}

#[test]
fn trace_matches_summary_line() {
    let d = tempfile::tempdir().unwrap();
    let o = frmpc(&[
        "simulate",
        "--params",
        params().to_str().unwrap(),
        "--steps",
        "360",
        "--hours",
        "2",
        "--band",
        "2",
        "--order",
        "0.1",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    let rows = read_trace(&d.path().join("trace.csv"));
    assert_eq!(rows.len(), 720);
    let scheduled: f64 = rows.iter().map(|r| r[1] / 360.0).sum();
    assert!((scheduled - field(&line, "scheduled_mwh").parse::<f64>().unwrap()).abs() < 1e-12);
    let last = rows.last().unwrap();
    assert_eq!(last[2], field(&line, "final_energy_mwh").parse::<f64>().unwrap());
    assert_eq!(last[5], field(&line, "final_fade").parse::<f64>().unwrap());
    assert_eq!(field(&line, "verdict"), "feasible");
    // fade never decreases along the trace
    assert!(rows.windows(2).all(|w| w[1][5] >= w[0][5]));
}

#[test]
fn infeasible_hour_exits_with_three() {
    let d = tempfile::tempdir().unwrap();
    let o = frmpc(&[
        "simulate",
        "--params",
        params().to_str().unwrap(),
        "--steps",
        "360",
        "--order",
        "10",
        "--hours",
        "3",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("over-charge"));
    assert_eq!(field(&stdout(&o), "hours"), "1");
    assert!(d.path().join("trace.csv").exists());
}

#[test]
fn refuses_to_overwrite_without_force() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let p = params();
    let args = ["simulate", "--params", p.to_str().unwrap(), "--steps", "60", "--out", out];
    assert_eq!(frmpc(&args).status.code(), Some(0));
    let o = frmpc(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(frmpc(&forced).status.code(), Some(0));
}

#[test]
fn honours_out_dir_environment() {
    let d = tempfile::tempdir().unwrap();
    let env_dir = d.path().join("from-env");
    let o = Command::new(BIN)
        .args(["simulate", "--params", params().to_str().unwrap(), "--steps", "60"])
        .env("FRMPC_OUT_DIR", &env_dir)
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("trace.csv").exists());
    // the flag wins over the environment
    let flag_dir = d.path().join("from-flag");
    let o = Command::new(BIN)
        .args(["simulate", "--params", params().to_str().unwrap(), "--steps", "60", "--out"])
        .arg(&flag_dir)
        .env("FRMPC_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("trace.csv").exists());
}

#[test]
fn sweep_writes_one_summary_per_band() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["sweep", "--grid", "10,1,3", "--hours", "2", "--steps", "360", "--out"])
        .arg(d.path())
        .env("FRMPC_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["1", "3", "10"] {
        let s: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.path().join(format!("summary_band_{f}.json"))).unwrap())
                .unwrap();
        assert_eq!(s["fixed_band"].as_f64().unwrap(), f.parse::<f64>().unwrap());
        assert_eq!(s["hours"], 2);
    }
    let table = std::fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let line = stdout(&o);
    let best: f64 = field(&line, "best_profit_band").parse().unwrap();
    assert!([1.0, 3.0, 10.0].contains(&best));
    field(&line, "best_revenue_per_fade_band");
}

#[test]
fn bad_thread_count_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["sweep", "--grid", "1", "--hours", "1", "--steps", "60", "--out"])
        .arg(d.path())
        .env("FRMPC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn hf_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--strategy",
        "hf-mpc",
        "--hours",
        "6",
        "--steps",
        "360",
        "--ocp-steps",
        "30",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    frmpc(&args)
}

#[test]
fn hf_run_writes_ledger_and_summary() {
    let d = tempfile::tempdir().unwrap();
    let o = hf_run(d.path(), &["--timing", "--states"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ledger = std::fs::read_to_string(d.path().join("hf-mpc.ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 7);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("hf-mpc.summary.json")).unwrap()).unwrap();
    assert_eq!(s["strategy"], "hf-mpc");
    assert_eq!(s["hours"], 6);
    assert_eq!(s["solver_failures"], 0);
    let timing = std::fs::read_to_string(d.path().join("hf-mpc.timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 7);
    let states = std::fs::read_to_string(d.path().join("hf-mpc.states.csv")).unwrap();
    assert_eq!(states.lines().count(), 1 + 6 * 360);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = frmpc(&[
            "run",
            "--strategy",
            "lf-fade-mpc",
            "--horizon",
            "4",
            "--hours",
            "4",
            "--steps",
            "360",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["lf-fade-mpc.ledger.csv", "lf-fade-mpc.summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn report_lists_each_summary() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(
        frmpc(&["sweep", "--grid", "2,4", "--hours", "1", "--steps", "60", "--out", out]).status.code(),
        Some(0)
    );
    let s2 = d.path().join("summary_band_2.json");
    let s4 = d.path().join("summary_band_4.json");
    let o = frmpc(&["report", "--csv", s2.to_str().unwrap(), s4.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(&r.headers().unwrap()[0], "Strategy");
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "fixed-band F=2");
    assert!(rows[0][2].ends_with('+'));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&s2).unwrap()).unwrap();
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), summary["revenue"].as_f64().unwrap());

    let table = stdout(&frmpc(&["report", s2.to_str().unwrap(), s4.to_str().unwrap()]));
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("Strategy"));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let junk = d.path().join("junk.json");
    std::fs::write(&junk, "{\"strategy\": 3}").unwrap();
    assert_eq!(frmpc(&["report", junk.to_str().unwrap()]).status.code(), Some(2));
    let out = d.path().to_str().unwrap();
    assert_eq!(frmpc(&["run", "--strategy", "greedy", "--out", out]).status.code(), Some(2));
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[ocp]\nhorizn = 2\n").unwrap();
    assert_eq!(
        frmpc(&["run", "--config", cfg.to_str().unwrap(), "--out", out]).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("frmpc.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[plant]\nsteps_per_hour = 120\n[run]\nmax_hours = 2\n[strategy]\nkind = \"fixed-band\"\nfixed_band = 4.0\n",
    )
    .unwrap();
    let out = d.path().join("o");
    let o = frmpc(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--band",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fixed-band.summary.json")).unwrap()).unwrap();
    assert_eq!(s["hours"], 2);
    assert_eq!(s["fixed_band"].as_f64().unwrap(), 2.0);
}

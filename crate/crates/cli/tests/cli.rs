use std::path::Path;
use std::process::{Command, Output};

use mimo_dmt_cli::record::{read_csv, Cell, CurveDocument};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mimo-dmt"));
    c.env_remove("MIMO_DMT_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn minimal_sweep_writes_31_rows() {
    let o = run(&["sweep", "--m", "2", "--n", "2", "--r", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(recs.len(), 31);
    assert!(recs.iter().all(|r| r.definition == "mean-fraction"));
    assert_eq!(recs[0].gamma_db, 0.0);
    assert_eq!(recs[30].gamma_db, 30.0);
    assert!(recs
        .windows(2)
        .all(|w| w[1].p_analytic.value() < w[0].p_analytic.value()));
    assert!(recs.iter().all(|r| r.mc_p_hat == Cell::Na));
}

#[test]
fn mc_reruns_are_identical_across_workers() {
    let base = [
        "sweep",
        "--m",
        "2",
        "--n",
        "2",
        "--r",
        "1",
        "--stop-db",
        "10",
        "--outputs",
        "analytic,mc",
    ];
    let args = |extra: &[&'static str]| {
        base.iter()
            .copied()
            .chain(extra.iter().copied())
            .collect::<Vec<_>>()
    };
    let a = run(&args(&[
        "--trials",
        "20000",
        "--seed",
        "7",
        "--workers",
        "1",
    ]));
    let b = run(&args(&[
        "--trials",
        "20000",
        "--seed",
        "7",
        "--workers",
        "3",
    ]));
    let c = run(&args(&[
        "--trials",
        "20000",
        "--seed",
        "8",
        "--workers",
        "1",
    ]));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    let recs = read_csv(a.stdout.as_slice()).unwrap();
    assert!(recs.iter().all(|r| r.mc_trials == Cell::Value(20000.0)));
    for r in &recs {
        let (lo, p, hi) = (
            r.mc_ci_lo.value().unwrap(),
            r.mc_p_hat.value().unwrap(),
            r.mc_ci_hi.value().unwrap(),
        );
        assert!(lo <= p && p <= hi);
    }
}

#[test]
fn usage_and_config_errors_exit_1() {
    let o = run(&["sweep", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sweep", "--m", "2", "--n", "2", "--step-db", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step_db"), "{}", stderr(&o));
    let o = run(&["thresholds", "--n", "2", "--r", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sweep", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "[sweep]\nstep = 2\n").unwrap();
    let o = run(&["sweep", "-c", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
}

#[test]
fn all_points_failing_exits_2() {
    let o = run(&[
        "sweep",
        "--m",
        "2",
        "--n",
        "2",
        "--r",
        "1",
        "--definition",
        "log-snr-offset",
        "--start-db",
        "-10",
        "--stop-db",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn json_metadata_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    std::fs::write(
        &cfg,
        "[channel]\nm = 3\nn = 3\n[sweep]\nstart_db = 0\nstop_db = 12\nstep_db = 3\n\
         [mux]\ndefinitions = [\"mean-fraction\", \"log-snr\"]\nr = 1\n\
         [mc]\ntrials = 5000\nseed = 42\n[report]\noutputs = [\"analytic\", \"mc\", \"numeric\"]\nformat = \"both\"\n",
    )
    .unwrap();
    let first = dir.path().join("first.csv");
    let o = run(&[
        "sweep",
        "-c",
        cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: CurveDocument = serde_json::from_str(&read(&dir.path().join("first.json"))).unwrap();
    assert_eq!(json.schema, 1);
    assert_eq!(json.tool, "mimo-dmt");
    assert_eq!((json.seed, json.trials), (42, 5000));
    assert_eq!(json.records.len(), 10);
    assert_eq!(read_csv(read(&first).as_bytes()).unwrap(), json.records);

    let again = dir.path().join("again.toml");
    std::fs::write(&again, &json.config_toml).unwrap();
    let second = dir.path().join("second.csv");
    let o = run(&[
        "sweep",
        "-c",
        again.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_csv(read(&second).as_bytes()).unwrap(), json.records);
}

#[test]
fn relative_output_lands_in_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("MIMO_DMT_OUT_DIR", dir.path())
        .args([
            "sweep",
            "--m",
            "2",
            "--n",
            "2",
            "--r",
            "1",
            "--stop-db",
            "2",
            "--out",
            "rel.csv",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        read_csv(read(&dir.path().join("rel.csv")).as_bytes())
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn thresholds_json_and_table() {
    let o = run(&["thresholds", "--n", "2", "--r", "1", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let ls = rows.iter().find(|r| r["definition"] == "log-snr").unwrap();
    assert_eq!(ls["gamma"], 900.0);
    assert_eq!(ls["reported_db"], 22.0);

    let o = run(&["reproduce", "ex2"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("differs from reported value by +7.5 dB"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn reproduce_fig4_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "reproduce",
        "fig4",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs = read_csv(read(&dir.path().join("fig4.csv")).as_bytes()).unwrap();
    assert_eq!(recs.len(), 3 * 61);
    assert!(dir.path().join("fig4.json").exists());
    let text = stdout(&o);
    assert!(text.contains("asymptote (n-r)^2 = 1"), "{text}");
}

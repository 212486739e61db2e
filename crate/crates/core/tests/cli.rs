use std::path::Path;
use std::process::{Command, Output};

use creditfair::io::TraceDocument;

fn creditfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_creditfair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn repro_passes_every_check() {
    let o = creditfair(&["repro"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
    assert!(stdout(&o).lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn repro_rejects_unknown_target() {
    assert_eq!(creditfair(&["repro", "nope"]).status.code(), Some(2));
}

#[test]
fn run_writes_traces_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = creditfair(&[
        "run",
        "--instance",
        "synthetic",
        "--agents",
        "6",
        "--rounds",
        "20",
        "--seeds",
        "0..2",
        "--mechanisms",
        "lendrecoup,smmf,karma",
        "--alpha",
        "1/4",
        "--format",
        "json,csv",
        "--jobs",
        "1",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.csv", "run.json", "metrics_seed0.csv", "metrics_seed1.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    for stem in ["lendrecoup_seed1", "smmf_seed0", "karma_1_4_seed1"] {
        assert!(
            out.join("traces").join(format!("{stem}.json")).is_file(),
            "missing {stem}.json"
        );
        assert!(
            out.join("traces").join(format!("{stem}.csv")).is_file(),
            "missing {stem}.csv"
        );
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("mechanism,nw,nw_std,"));
    assert_eq!(summary.lines().count(), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["rng"], "chacha8");
    assert_eq!(meta["seeds"], serde_json::json!([0, 1]));

    let doc = TraceDocument::load(&out.join("traces/lendrecoup_seed1.json")).unwrap();
    assert_eq!(doc.seed, Some(1));
    assert_eq!(doc.instance.agents(), 6);
    let audit = creditfair(&["audit", path(&out.join("traces/lendrecoup_seed1.json"))]);
    assert_eq!(audit.status.code(), Some(0), "{}", stdout(&audit));
}

#[test]
fn runs_are_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for (k, jobs) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("r{k}"));
        let o = creditfair(&[
            "run",
            "--agents",
            "5",
            "--rounds",
            "15",
            "--seeds",
            "3",
            "--mechanisms",
            "dmmf",
            "--jobs",
            jobs,
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        traces.push(std::fs::read_to_string(out.join("traces/dmmf_seed3.json")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "# small run\nagents = 4\nrounds = 10\nmechanisms = smmf,dmmf\nrepetitions = 2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = creditfair(&[
        "run",
        "--config",
        path(&cfg),
        "--mechanisms",
        "lendrecoup",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("traces/lendrecoup_seed1.json").is_file());
    assert!(!out.join("traces/smmf_seed0.json").exists());
}

#[test]
fn audit_modes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = creditfair(&[
        "run",
        "--instance",
        "builtin:smmf_unfair",
        "--mechanisms",
        "smmf,lendrecoup",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let smmf = out.join("traces/smmf_seed0.json");
    let lr = out.join("traces/lendrecoup_seed0.json");

    let refute = creditfair(&[
        "audit",
        path(&smmf),
        "--mode",
        "refute",
        "--out",
        path(&dir.path().join("v.json")),
    ]);
    assert_eq!(refute.status.code(), Some(1));
    assert!(stdout(&refute).contains("REFUTED at round 2 by CF5"));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "REFUTED");

    assert_eq!(
        creditfair(&["audit", path(&lr), "--mode", "refute"]).status.code(),
        Some(0)
    );
    assert_eq!(
        creditfair(&["audit", path(&lr), "--mode", "osp"]).status.code(),
        Some(0)
    );
    assert_eq!(
        creditfair(&["audit", path(&smmf), "--mode", "sp"]).status.code(),
        Some(0)
    );
    // SMMF has no ledger, so the explicit audit has nothing to check against.
    assert_eq!(creditfair(&["audit", path(&smmf)]).status.code(), Some(2));
}

#[test]
fn misreport_schedule_shows_gain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    creditfair(&[
        "run",
        "--instance",
        "builtin:misreport_gain",
        "--mechanisms",
        "lendrecoup",
        "--out",
        path(&out),
    ]);
    let trace = out.join("traces/lendrecoup_seed0.json");
    let o = creditfair(&[
        "audit",
        path(&trace),
        "--mode",
        "sp",
        "--agent",
        "1",
        "--schedule",
        "0,2,0,0,3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("truthful 4 misreport 9/2 delta 1/2"),
        "{}",
        stdout(&o)
    );
    assert_eq!(
        creditfair(&["audit", path(&trace), "--mode", "sp", "--agent", "9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let o = creditfair(&[
        "gen",
        "--agents",
        "3",
        "--rounds",
        "4",
        "--seed",
        "9",
        "--out",
        path(&inst),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("r");
    let spec = format!("json:{}", path(&inst));
    let o = creditfair(&[
        "run",
        "--instance",
        &spec,
        "--mechanisms",
        "lendrecoup",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = TraceDocument::load(&out.join("traces/lendrecoup_seed0.json")).unwrap();
    assert_eq!((doc.instance.agents(), doc.instance.rounds()), (3, 4));
}

#[test]
fn trace_csv_instance_source() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tasks.csv");
    let mut text = String::from("timestamp_us,agent_id,cpu_request\n");
    for t in 0..6u64 {
        let ts = t * 900_000_000;
        text.push_str(&format!("{ts},a,{}\n", 1 + t % 2));
        text.push_str(&format!("{ts},b,0.5\n"));
        text.push_str(&format!("{ts},c,{}\n", t % 3));
    }
    std::fs::write(&csv, text).unwrap();
    let out = dir.path().join("r");
    let spec = format!("trace:{}", path(&csv));
    let o = creditfair(&[
        "run",
        "--instance",
        &spec,
        "--mechanisms",
        "lendrecoup,dmmf",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = TraceDocument::load(&out.join("traces/dmmf_seed0.json")).unwrap();
    assert_eq!(doc.instance.rounds(), 6);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(creditfair(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(creditfair(&["run", "--seeds", "5..5"]).status.code(), Some(2));
    assert_eq!(creditfair(&["run", "--instance", "ftp:x"]).status.code(), Some(2));
    assert_eq!(creditfair(&["run", "--mechanisms", "fifo"]).status.code(), Some(2));
    assert_eq!(creditfair(&["audit", "/nonexistent/trace.json"]).status.code(), Some(2));
    assert_eq!(creditfair(&["--help"]).status.code(), Some(0));
}

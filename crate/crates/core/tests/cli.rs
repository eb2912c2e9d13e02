use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rasgw::{synthetic, RngStream};
use serde_json::Value;

fn rasgw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rasgw"))
        .args(args)
        .env_remove("RA_SGW_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> Output {
    let out = rasgw(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Gaussian-4 in 3D and Gaussian-8 in 2D, with different point counts.
fn fixtures(dir: &Path) -> (PathBuf, PathBuf) {
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    synthetic::gaussian4(3, 40, RngStream::new(1, 0))
        .unwrap()
        .save_csv(&a)
        .unwrap();
    synthetic::gaussian8(48, RngStream::new(2, 0))
        .unwrap()
        .save_csv(&b)
        .unwrap();
    (a, b)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Drops timing fields and the embedded manifest.
fn numeric(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        for k in ["wall_time_s", "wall_time", "t", "manifest"] {
            m.remove(k);
        }
    }
    v
}

fn trace_values(dir: &Path) -> Vec<Value> {
    std::fs::read_to_string(dir.join("trace.jsonl"))
        .unwrap()
        .lines()
        .map(|l| numeric(serde_json::from_str(l).unwrap()))
        .collect()
}

fn table_values(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&rasgw(&["--help"])), 0);
    assert_eq!(code(&rasgw(&["dist", "--help"])), 0);
    assert_eq!(code(&rasgw(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    for args in [
        vec!["dist"],
        vec!["frobnicate"],
        vec!["dist", "--method", "nope", s(&a), s(&b)],
        vec!["dist", "--kappa", "0", s(&a), s(&b)],
        vec!["dist", "--projections", "0", s(&a), s(&b)],
        vec!["dist", "--threads", "0", s(&a), s(&b)],
        vec!["flow", "--method", "max-sgw", "--out", s(dir.path())],
        vec!["ablate", "--param", "kappa", "--values", "1,x", "--out", "t.csv"],
    ] {
        let out = rasgw(&args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn data_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = fixtures(dir.path());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x0,x1\n1,2\n3\n").unwrap();
    let missing = dir.path().join("missing.csv");
    for args in [vec!["dist", s(&a), s(&missing)], vec!["dist", s(&a), s(&bad)]] {
        let out = rasgw(&args);
        assert_eq!(code(&out), 3, "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("rasgw:"));
    }
}

#[test]
fn divergent_flow_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = rasgw(&[
        "flow",
        "--n",
        "16",
        "--steps",
        "20",
        "--eval-every",
        "20",
        "--lr",
        "1e200",
        "--method",
        "sgw",
        "--projections",
        "10",
        "--out",
        s(&dir.path().join("f")),
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn self_distance_is_zero_and_printed_with_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = fixtures(dir.path());
    let out = ok(&[
        "dist",
        "--method",
        "rasgw",
        "--kappa",
        "50",
        "--projections",
        "500",
        "--seed",
        "42",
        s(&a),
        s(&a),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.trim().parse().unwrap();
    assert!(v.abs() <= 1e-10);
    let mantissa = text.trim().split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 12);
}

#[test]
fn dist_json_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    let (o1, o2) = (dir.path().join("1.json"), dir.path().join("2.json"));
    for o in [&o1, &o2] {
        ok(&["dist", "--seed", "3", "--out", s(o), s(&a), s(&b)]);
    }
    let (j1, j2) = (read_json(&o1), read_json(&o2));
    for k in [
        "value",
        "raw_mean",
        "M",
        "kappa",
        "seed",
        "wall_time_s",
        "method",
        "manifest",
    ] {
        assert!(j1.get(k).is_some(), "missing {k}");
    }
    assert_eq!(j1["d"], 3);
    assert_eq!(j1["n"], 40);
    assert_eq!(numeric(j1.clone()), numeric(j2.clone()));
    assert_eq!(j1["manifest"]["spec"], j2["manifest"]["spec"]);
    assert_eq!(j1["manifest"]["seed"], 3);
}

#[test]
fn iwrasgw_with_one_inner_draw_equals_rasgw() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    let (o1, o2) = (dir.path().join("iw.json"), dir.path().join("ra.json"));
    ok(&[
        "dist",
        "--method",
        "iwrasgw",
        "--inner",
        "1",
        "--outer",
        "37",
        "--seed",
        "5",
        "--out",
        s(&o1),
        s(&a),
        s(&b),
    ]);
    ok(&[
        "dist",
        "--method",
        "rasgw",
        "--projections",
        "37",
        "--seed",
        "5",
        "--out",
        s(&o2),
        s(&a),
        s(&b),
    ]);
    let (x, y) = (
        read_json(&o1)["value"].as_f64().unwrap(),
        read_json(&o2)["value"].as_f64().unwrap(),
    );
    assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    let p = |name: &str| dir.path().join(name);
    for t in ["1", "4"] {
        ok(&[
            "--threads",
            t,
            "dist",
            "--method",
            "iwrasgw",
            "--inner",
            "10",
            "--outer",
            "20",
            "--out",
            s(&p(&format!("d{t}.json"))),
            s(&a),
            s(&b),
        ]);
        ok(&[
            "flow",
            "--threads",
            t,
            "--n",
            "32",
            "--steps",
            "20",
            "--eval-every",
            "5",
            "--out",
            s(&p(&format!("f{t}"))),
        ]);
        ok(&[
            "ablate",
            "--threads",
            t,
            "--param",
            "projections",
            "--values",
            "5,50",
            "--repeats",
            "2",
            "--scenario",
            "dist",
            "--a",
            s(&a),
            "--b",
            s(&b),
            "--out",
            s(&p(&format!("t{t}.csv"))),
        ]);
    }
    assert_eq!(numeric(read_json(&p("d1.json"))), numeric(read_json(&p("d4.json"))));
    assert_eq!(trace_values(&p("f1")), trace_values(&p("f4")));
    assert_eq!(
        std::fs::read(p("f1/final.csv")).unwrap(),
        std::fs::read(p("f4/final.csv")).unwrap()
    );
    assert_eq!(table_values(&p("t1.csv")), table_values(&p("t4.csv")));
}

#[test]
fn environment_variable_sets_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_rasgw"));
        c.args(["dist", s(&a), s(&b)]);
        match env {
            Some(v) => c.env("RA_SGW_THREADS", v),
            None => c.env_remove("RA_SGW_THREADS"),
        };
        c.output().unwrap()
    };
    let base = run(None);
    let two = run(Some("2"));
    assert_eq!(code(&two), 0);
    assert_eq!(base.stdout, two.stdout);
    assert_eq!(code(&run(Some("0"))), 2);
}

#[test]
fn flow_smoke_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow");
    ok(&[
        "flow",
        "--source-dim",
        "2",
        "--target",
        "gaussian4",
        "--target-dim",
        "3",
        "--n",
        "64",
        "--steps",
        "100",
        "--out",
        s(&out),
    ]);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["final.csv", "manifest.json", "trace.jsonl"]);
    assert_eq!(trace_values(&out).len(), 1 + 100 / 10);
    let fin = rasgw::PointCloud::load_csv(out.join("final.csv")).unwrap();
    assert_eq!((fin.n(), fin.d()), (64, 2));
    let m = rasgw::cli::RunManifest::load(out.join("manifest.json")).unwrap();
    assert_eq!(m.outputs.len(), 3);
}

#[test]
fn flow_smoke_run_reduces_the_reference_score() {
    let dir = tempfile::tempdir().unwrap();
    let mut improved = 0;
    for seed in 0..10 {
        let out = dir.path().join(format!("s{seed}"));
        let seed = seed.to_string();
        ok(&[
            "flow",
            "--source-dim",
            "2",
            "--target-dim",
            "3",
            "--n",
            "64",
            "--steps",
            "100",
            "--eval-every",
            "100",
            "--seed",
            &seed,
            "--out",
            s(&out),
        ]);
        let tr = trace_values(&out);
        if tr[1]["ref"].as_f64().unwrap() < tr[0]["ref"].as_f64().unwrap() {
            improved += 1;
        }
    }
    assert!(improved >= 8, "{improved}/10");
}

#[test]
fn ablate_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("k.csv");
    let out = ok(&[
        "ablate",
        "--param",
        "kappa",
        "--values",
        "1,5,10,50",
        "--repeats",
        "2",
        "--n",
        "32",
        "--steps",
        "10",
        "--eval-every",
        "10",
        "--projections",
        "20",
        "--out",
        s(&table),
    ]);
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "param,value,metric_mean,metric_std,time_mean_s,time_std_s");
    assert!(lines[1].starts_with("kappa,1,"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
    assert!(dir.path().join("k.csv.manifest.json").exists());
    let proj = dir.path().join("m.csv");
    ok(&[
        "ablate",
        "--param",
        "projections",
        "--values",
        "1,10,100",
        "--repeats",
        "3",
        "--scenario",
        "dist",
        "--n",
        "32",
        "--out",
        s(&proj),
    ]);
    assert_eq!(std::fs::read_to_string(&proj).unwrap().lines().count(), 4);
    let bad = rasgw(&[
        "ablate",
        "--param",
        "projections",
        "--values",
        "10",
        "--method",
        "max-sgw",
        "--scenario",
        "dist",
        "--out",
        s(&proj),
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn replay_reproduces_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixtures(dir.path());
    let p = |name: &str| dir.path().join(name);

    ok(&[
        "--threads",
        "4",
        "dist",
        "--method",
        "ebsgw",
        "--inner",
        "64",
        "--seed",
        "9",
        "--out",
        s(&p("d.json")),
        s(&a),
        s(&b),
    ]);
    ok(&["--threads", "1", "replay", s(&p("d.json")), "--out", s(&p("d2.json"))]);
    assert_eq!(numeric(read_json(&p("d.json"))), numeric(read_json(&p("d2.json"))));

    ok(&[
        "flow",
        "--n",
        "24",
        "--steps",
        "12",
        "--eval-every",
        "4",
        "--seed",
        "2",
        "--out",
        s(&p("f")),
    ]);
    ok(&[
        "--threads",
        "4",
        "replay",
        s(&p("f/manifest.json")),
        "--out",
        s(&p("g")),
    ]);
    assert_eq!(trace_values(&p("f")), trace_values(&p("g")));
    assert_eq!(
        std::fs::read(p("f/final.csv")).unwrap(),
        std::fs::read(p("g/final.csv")).unwrap()
    );

    ok(&[
        "ablate",
        "--param",
        "kappa",
        "--values",
        "1,50",
        "--repeats",
        "2",
        "--scenario",
        "dist",
        "--n",
        "24",
        "--out",
        s(&p("t.csv")),
    ]);
    ok(&["replay", s(&p("t.csv.manifest.json")), "--out", s(&p("u.csv"))]);
    assert_eq!(table_values(&p("t.csv")), table_values(&p("u.csv")));

    let missing = rasgw(&["replay", s(&p("nothing.json"))]);
    assert_eq!(code(&missing), 3);
}

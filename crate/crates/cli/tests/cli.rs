use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kpzlab(args: &[&str], out: &Path, threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpzlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("KPZLAB_THREADS", threads)
        .output()
        .expect("binary runs")
}

/// Every artifact except the timing sidecar.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL: &[&[&str]] = &[
    &["simulate", "--size", "24"],
    &[
        "duality",
        "--size",
        "16",
        "--k",
        "64",
        "--seeds",
        "2",
        "--samples",
        "1000",
        "--law-size",
        "32",
        "--law-k",
        "128",
    ],
    &["dimension", "--n", "512", "--scales", "6", "--replicas", "2", "--walk-steps", "16384"],
    &["exponent", "--sizes", "8,16,32,64", "--replicas", "32", "--scaling-n", "8", "--scaling-replicas", "40"],
    &["holder", "--n", "512"],
    &["occupation", "--n", "16", "--replicas", "100"],
    &["busemann", "--size", "32", "--k", "128", "--samples", "1000"],
    &["highways", "--n", "32", "--seeds", "1", "--grid", "8"],
    &["frame", "--n", "32", "--seeds", "1", "--grid", "6"],
    &["one-ended", "--n", "64", "--sources", "4", "--spacing", "0.125", "--multiples", "2,4", "--seeds", "2"],
    &["export", "--size", "12", "--k", "48"],
];

#[test]
fn every_command_is_deterministic_across_reruns_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for args in SMALL {
        let runs: Vec<_> = [("a", "1"), ("b", "1"), ("c", "4")]
            .iter()
            .map(|(tag, threads)| {
                let dir = tmp.path().join(format!("{}-{tag}", args[0]));
                let o = kpzlab(args, &dir, threads);
                let code = o.status.code().unwrap();
                assert!(code <= 1, "{args:?} exited {code}: {}", String::from_utf8_lossy(&o.stderr));
                (code, artifacts(&dir))
            })
            .collect();
        assert!(runs[0].1.contains_key("report.json") && runs[0].1.contains_key("config.lock.json"));
        assert!(runs[0].1.len() > 2, "{args:?} wrote no data files");
        assert_eq!(runs[0], runs[1], "{args:?} differs between reruns");
        assert_eq!(runs[0], runs[2], "{args:?} differs between 1 and 4 threads");
        let r = report(&tmp.path().join(format!("{}-a", args[0])));
        assert_eq!(r["status"] == "pass", runs[0].0 == 0, "{args:?}");
    }
}

#[test]
fn threads_flag_overrides_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let eight = tmp.path().join("eight");
    let args = ["busemann", "--size", "32", "--k", "128", "--samples", "2000"];
    let a = kpzlab(&[&args[..], &["--threads", "1"]].concat(), &one, "8");
    let b = kpzlab(&[&args[..], &["--threads", "8"]].concat(), &eight, "1");
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(artifacts(&one), artifacts(&eight));
    let sidecar: Value = serde_json::from_slice(&fs::read(eight.join("run.json")).unwrap()).unwrap();
    assert_eq!(sidecar["threads"], 8);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"command": "simulate", "seed": 7, "size": 40}"#).unwrap();
    let dir = tmp.path().join("out");
    let o = kpzlab(&["simulate", "--config", cfg.to_str().unwrap(), "--size", "20"], &dir, "1");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lock: Value = serde_json::from_slice(&fs::read(dir.join("config.lock.json")).unwrap()).unwrap();
    assert_eq!(lock["config"]["seed"], 7);
    assert_eq!(lock["config"]["size"], 20);
    assert!(lock["hash"].as_str().unwrap().starts_with("sha256:"));
    let csv = fs::read_to_string(dir.join("passage.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("i,j,value"));
    assert_eq!(csv.lines().count(), 1 + 20 * 20);
}

#[test]
fn bad_configuration_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"size": 40, "k": 3}"#).unwrap();
    let o = kpzlab(&["simulate", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"), "1");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`k`"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_assertions_exit_nonzero_and_list_expected_observed_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    // far too few samples for the law tolerances
    let o = kpzlab(&["busemann", "--size", "16", "--k", "64", "--samples", "1000"], &dir, "1");
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().find(|l| l.starts_with("FAIL")).expect("a failure line");
    assert!(line.contains("expected") && line.contains("observed") && line.contains("tolerance"), "{line}");
    let r = report(&dir);
    assert_eq!(r["status"], "fail");
    let failed = r["assertions"].as_array().unwrap().iter().find(|a| a["passed"] == false).unwrap();
    for key in ["expected", "observed", "tolerance"] {
        assert!(failed[key].is_number());
    }
}

#[test]
fn insufficient_certification_attaches_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    // K equal to the window side leaves almost nothing certified
    let o = kpzlab(&["busemann", "--size", "32", "--k", "32", "--samples", "100000", "--max-replicas", "2"], &dir, "1");
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir);
    assert_eq!(r["status"], "insufficient_certification");
    assert!(!r["certificates"].as_array().unwrap().is_empty());
}

#[test]
fn csv_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let expected: &[(&str, &str, &str)] = &[
        ("simulate", "geodesic.csv", "m,x"),
        ("simulate", "path.csv", "t,x"),
        ("dimension", "boxcount.csv", "scale,count"),
        ("exponent", "exponent.csv", "size,rms"),
        ("occupation", "occupation.csv", "m,frequency"),
        ("busemann", "increments.csv", "z"),
        ("export", "edges.csv", "x1,y1,x2,y2,kind"),
        ("export", "tree_down.csv", "i,j,step"),
        ("export", "busemann.csv", "i,j,value"),
    ];
    for (cmd, file, header) in expected {
        let args = SMALL.iter().find(|a| a[0] == *cmd).unwrap();
        let dir = tmp.path().join(cmd);
        if !dir.exists() {
            kpzlab(args, &dir, "1");
        }
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(*header), "{cmd} {file}");
    }
}

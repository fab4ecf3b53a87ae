use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bessel-house"));
    c.env_remove("BESSEL_HOUSE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

// CSV body rows (after the metadata line and header), split into numbers.
fn csv_rows(text: &str) -> (Value, Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.split("\r\n").filter(|l| !l.is_empty());
    let meta: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (meta, header, rows)
}

#[test]
fn hitting_density_value() {
    let o = run(&["hitting", "--delta", "3", "--a", "0", "--b", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["delta", "t", "density", "cdf"]);
    assert_eq!(rows.len(), 1);
    assert!((rows[0][2] - 0.070_980_938_004_648_68).abs() < 1e-12);
    assert!((rows[0][3] - 0.985_616_238_638_923_3).abs() < 1e-12);
    assert_eq!(meta["command"], "hitting");
    assert_eq!(meta["config"]["t"], "1");
    assert_eq!(meta["policy"]["n_max"], 20000);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn density_figure_grid() {
    let o = run(&["density", "--delta", "3", "--b", "1.5", "--a", "0", "--t", "0.1:0.9:0.1", "--grid", "512"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["delta", "t", "y", "density"]);
    assert_eq!(rows.len(), 9 * 512);
    assert!(rows.windows(2).all(|w| (w[0][1], w[0][2]) < (w[1][1], w[1][2])));
    assert!(rows.iter().all(|r| r[2] > 0.0 && r[2] < 1.5 && r[3] >= 0.0));
    let curves = meta["checks"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 9);
    for c in curves {
        assert!((c["mass"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
        assert_eq!(c["unit_mass"], true);
    }
}

#[test]
fn density_high_dimension_is_unimodal() {
    let o = run(&["density", "--delta", "10", "--b", "1.5", "--t", "0.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 512);
    assert!(doc["meta"]["checks"]["curves"][0]["slope_sign_changes"].as_u64().unwrap() <= 1);
}

#[test]
fn canonical_order_across_dimensions() {
    let o = run(&["density", "--delta", "6,2", "--t", "0.7,0.3", "--grid", "4", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, _, rows) = csv_rows(&stdout(&o));
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    assert_eq!(rows.len(), 16);
}

#[test]
fn argument_errors_exit_one() {
    for args in [
        vec!["density", "--t", ""],
        vec!["density", "--t", "0.5:0.1:0.1"],
        vec!["density", "--t", "1.2"],
        vec!["density", "--delta", "0"],
        vec!["density", "--b", "-1"],
        vec!["maxdist", "--x", "2", "--c", "1"],
        vec!["hitting", "--t", "x"],
        vec!["validate", "--suite", "bogus"],
        vec!["frobnicate"],
        vec!["density", "--rel-tol", "2"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    let o = run(&["density", "--t", ""]);
    assert!(stderr(&o).contains("t list is empty"));
    assert!(stderr(&o).contains("--help"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    let o = run(&["hitting", "--delta", "6", "--t", "1e-3", "--n-max", "8"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let err = stderr(&o);
    assert!(err.contains("delta=6") && err.contains("t=0.001") && err.contains("c=1"), "{err}");
}

#[test]
fn mean_curves() {
    let o = run(&["mean", "--format", "jsonl"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1 + 4 * 201);
    let rows = &lines[1..];
    assert!(rows.iter().all(|r| (0.0..=1.5).contains(&r["mean"].as_f64().unwrap())));
    let mid = rows.iter().find(|r| r["delta"] == 3.0 && r["t"] == 0.5).unwrap();
    assert!((mid["mean"].as_f64().unwrap() - 0.75).abs() <= 1e-6);
    for r in rows.iter().filter(|r| r["t"] == 0.0 || r["t"] == 1.0) {
        assert_eq!(r["mean"].as_f64().unwrap(), 1.5 * r["t"].as_f64().unwrap());
    }
}

#[test]
fn maxdist_probabilities() {
    let o = run(&["maxdist", "--delta", "1,3", "--x", "0.2", "--y", "0.5", "--c", "1", "--t", "0.1,1,4"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["delta", "t", "c", "x", "y", "probability"]);
    assert_eq!(rows.len(), 6);
    for d in rows.chunks(3) {
        assert!(d.iter().all(|r| (0.0..=1.0).contains(&r[5])));
        assert!(d[0][5] > d[1][5] && d[1][5] > d[2][5]);
    }
}

#[test]
fn house_path_ensemble() {
    let o = run(&["sample", "--delta", "3", "--a", "0", "--b", "1", "--paths", "100", "--steps", "256", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let (meta, header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["path_id", "t", "value"]);
    assert_eq!(rows.len(), 100 * 257);
    for (i, path) in rows.chunks(257).enumerate() {
        assert!(path.iter().all(|r| r[0] == i as f64));
        assert_eq!(path[0][2], 0.0);
        assert_eq!(path[256][2], 1.0);
        assert!(path[1..256].iter().all(|r| r[2] < 1.0));
    }
    assert_eq!(meta["config"]["seed"], 7);
    assert_eq!(meta["config"]["sampler"], "house");
}

#[test]
fn samples_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let o = run(&[
            "sample",
            "--sampler",
            "conditioned",
            "--delta",
            "3",
            "--eta",
            "0.2",
            "--paths",
            "30",
            "--steps",
            "32",
            "--seed",
            seed,
            "--crossing-correction",
            "--format",
            "jsonl",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(p).unwrap()
    };
    let (a, b, c) = (out("paths.jsonl", "3"), out("paths.jsonl", "3"), out("paths.jsonl", "4"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first["meta"]["checks"]["attempts"].as_u64().unwrap() >= 30);
    let path: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(path["meta"]["eta"], 0.2);
    assert_eq!(path["meta"]["crossing_correction"], true);
    assert!(path["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() <= 1.2));
}

#[test]
fn other_samplers() {
    for sampler in ["bessel", "bridge"] {
        let o = run(&[
            "sample",
            "--sampler",
            sampler,
            "--delta",
            "2.5",
            "--a",
            "0.3",
            "--paths",
            "5",
            "--steps",
            "8",
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{sampler}");
        let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
        let paths = doc["paths"].as_array().unwrap();
        assert_eq!(paths.len(), 5);
        assert_eq!(paths[0]["values"][0], 0.3);
    }
    let o = run(&["sample", "--sampler", "conditioned", "--delta", "2", "--crossing-correction"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_are_byte_identical() {
    let args = ["validate", "--suite", "all", "--seed", "42", "--json", "--paths", "2000"];
    let a = run(&args);
    let b = run(&args);
    assert!(matches!(a.status.code(), Some(0) | Some(3)));
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
    let reports: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 12);
    assert!(reports[0].get("timing").is_none());
}

#[test]
fn validate_exit_codes() {
    let o = run(&["validate", "--suite", "theta_oracle,reversal"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("suite theta_oracle (seed 42): PASS"));
    let o = run(&["validate", "--suite", "theta_oracle", "--n-max", "8"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["validate", "--suite", "list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 12);
    let o = run(&["validate", "--suite", "theta_oracle", "--json", "--timings"]);
    let reports: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(reports[0]["timing"]["budget"], 10.0);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# hitting setup\ndelta=3\nt = 0.5,1\nformat=json\n").unwrap();
    let c = conf.to_str().unwrap();
    let o = run(&["--config", c, "hitting"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert_eq!(doc["meta"]["config"]["t"], "0.5,1");
    let o = run(&["hitting", "--config", c, "--t", "2"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
    assert_eq!(doc["rows"][0]["t"], 2.0);
    std::fs::write(&conf, "nonsense\n").unwrap();
    assert_eq!(run(&["--config", c, "hitting"]).status.code(), Some(1));
    assert_eq!(run(&["--config", "/nonexistent/x.conf", "hitting"]).status.code(), Some(1));
}

#[test]
fn thread_count_from_environment() {
    let o = bin().args(["hitting", "--t", "1"]).env("BESSEL_HOUSE_THREADS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = bin().args(["hitting", "--t", "1"]).env("BESSEL_HOUSE_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["--threads", "0", "hitting"]).status.code(), Some(1));
}

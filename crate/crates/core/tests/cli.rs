use std::process::{Command, Output};

use serde_json::Value;

fn kb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kb"))
        .args(args)
        .env("KB_THREADS", "1")
        .output()
        .expect("run kb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_ball_and_shell() {
    let o = kb(&["classify", "--domain", "ball:r=1", "--point", "1,0"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"], "strongly-pseudoconvex");

    let o = kb(&["classify", "--domain", "shell:R=4", "--point", "0,1i"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"], "non-semipositive");
}

#[test]
fn pair_json_and_csv() {
    let args = ["pair", "--domain", "ball:r=1", "--z", "0.99,0", "--w", "0.98,0"];
    let o = kb(&args);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let a = v["a"].as_f64().unwrap();
    assert!((a - 0.0111 / (0.01f64 * 0.02).sqrt()).abs() < 1e-9);

    let o = kb(&[&args[..], &["--format", "csv"]].concat());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("delta_z,delta_w,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 17 significant digits.
    assert_eq!(row[0].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn bounds_report_each_method() {
    let o = kb(&[
        "bounds",
        "--domain",
        "ball:r=1",
        "--z",
        "0.99,0",
        "--w",
        "0.98,0.05",
        "--mesh",
        "100",
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let exact = v["exact"].as_f64().unwrap();
    let bounds = v["bounds"].as_array().unwrap();
    let names: Vec<&str> = bounds.iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["segment", "lift", "graph", "claim", "halflog", "F"]);
    for b in bounds {
        let Some(r) = b.get("result") else { continue };
        let value = r["value"].as_f64().unwrap();
        match r["kind"].as_str().unwrap() {
            "upper" => assert!(value >= exact * (1.0 - 1e-6), "{b}"),
            _ if r["model"] == false => assert!(value <= exact * (1.0 + 1e-6), "{b}"),
            _ => {}
        }
    }
    // Regime (b) pair: the segment construction does not apply.
    assert!(bounds[0]["error"].as_str().unwrap().contains("claim-a"));

    let o = kb(&[
        "bounds",
        "--domain",
        "ball:r=1",
        "--z",
        "0.99,0",
        "--w",
        "0.98,0.05",
        "--method",
        "lift",
    ]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["bounds"].as_array().unwrap().len(), 1);
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let samples = dir.path().join("samples.csv");
    let env = dir.path().join("env.csv");
    std::fs::write(
        &cfg,
        format!(
            "# small ball run\ndomain = ball:r=1\nsamples = 20   # pairs\nstability = false\noutput = {}\nenvelopes = {}\n",
            samples.display(),
            env.display()
        ),
    )
    .unwrap();
    let o = kb(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(&samples).unwrap();
    assert_eq!(rd.headers().unwrap().get(0), Some("index"));
    assert_eq!(rd.records().count(), 20);
    let text = std::fs::read_to_string(&env).unwrap();
    assert!(text.contains("thm_ratio"));
    assert!(text.contains("\r\n"));

    let json = dir.path().join("samples.json");
    let o = kb(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "samples=5",
        "--format",
        "json",
        "--output",
        json.to_str().unwrap(),
        "--sequential",
    ]);
    assert!(o.status.success());
    let lines: Vec<Value> = std::fs::read_to_string(&json)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0]["a"].is_number());
}

#[test]
fn experiment_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "samples = 10\nnonsense = 3\n").unwrap();
    let o = kb(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn shell_scan_rows() {
    let o = kb(&[
        "shell-scan",
        "--R",
        "4",
        "--eps-grid",
        "1e-4,1e-3",
        "--eta-grid",
        "1e-2",
        "--beta-grid",
        "0,1e-2",
        "--c0",
        "0.01",
        "--perturbations",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let h = rd.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    // ε₁ ≥ ε₂ pairs: 3, times 2 β values.
    assert_eq!(rows.len(), 6);
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for r in &rows {
        let hv: f64 = r[col("h")].parse().unwrap();
        let curve: f64 = r[col("curve_min")].parse().unwrap();
        let upper: f64 = r[col("upper")].parse().unwrap();
        let f: f64 = r[col("f")].parse().unwrap();
        assert!(hv > 0.0 && curve > 0.0 && f <= upper);
    }

    let o = kb(&[
        "shell-scan",
        "--eps-grid",
        "1e-3",
        "--eta-grid",
        "1e-2",
        "--beta-grid",
        "0",
        "--c0",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

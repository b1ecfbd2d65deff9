use std::process::{Command, Output};

fn spca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spca"))
        .args(args)
        .env_remove("SPCA_WORKERS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn solve_appendix_json() {
    let v = json(&spca(&[
        "solve",
        "--appendix",
        "0.1,0.1",
        "--k",
        "2",
        "--s",
        "2",
        "--eps",
        "0.9",
    ]));
    assert!((v["objective"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["termination"], "complete");
    assert_eq!(v["spec"]["polish"], true);
    assert_eq!(v["spec"]["sketch"]["target_rank"], 4);
    for key in [
        "net_points_total",
        "net_points_examined",
        "guarantee_factor",
        "elapsed_ms",
        "library_version",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn solve_writes_cumulative_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cum = dir.path().join("cum.csv");
    let rep = dir.path().join("rep.json");
    let out = spca(&[
        "solve",
        "--appendix",
        "0.1,0.1",
        "--k",
        "2",
        "--s",
        "2",
        "--eps",
        "0.9",
        "--cumulative",
        cum.to_str().unwrap(),
        "--output",
        rep.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(cum).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "2,2.0");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn oracle_subcommand() {
    let v = json(&spca(&["oracle", "--appendix", "0.1,0.1", "--k", "2", "--s", "2"]));
    assert!((v["objective"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["supports"], serde_json::json!([[0, 1], [2, 3]]));
}

#[test]
fn compare_csv_rows() {
    let out = spca(&[
        "compare",
        "--appendix",
        "0.1,0.1",
        "--k",
        "2",
        "--s",
        "2",
        "--eps",
        "0.9",
        "--algorithms",
        "joint,deflate-exact,oracle",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let objs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(objs.len(), 3);
    assert!((objs[0] - 2.0).abs() < 1e-9);
    assert!((objs[1] - 1.2).abs() < 1e-12);
    assert!((objs[2] - 2.0).abs() < 1e-12);
}

#[test]
fn netinfo_reports_cover() {
    let v = json(&spca(&["netinfo", "--r", "3", "--eps", "0.8", "--trials", "20000"]));
    assert_eq!(v["violations"], 0);
    assert!(v["points"].as_u64().unwrap() > 0);
    assert_eq!(v["antipodal_reduced"], true);
}

#[test]
fn topics_from_header_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("docs.csv");
    std::fs::write(&data, "alpha,beta,gamma,delta\n3,1,0,0\n0,0,2,1\n1,2,0,0\n0,0,1,3\n").unwrap();
    let out = spca(&[
        "topics",
        "--input",
        data.to_str().unwrap(),
        "--input-format",
        "csv-header",
        "--k",
        "2",
        "--s",
        "2",
        "--algorithm",
        "deflate-exact",
        "--no-center",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| ["alpha", "beta", "gamma", "delta"].iter().any(|w| l.contains(w))));
}

#[test]
fn bow_input() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("docword.txt");
    let vocab = dir.path().join("vocab.txt");
    std::fs::write(&doc, "3\n4\n6\n1 1 4\n1 2 3\n2 3 2\n2 4 2\n3 1 1\n3 3 1\n").unwrap();
    std::fs::write(&vocab, "w1\nw2\nw3\nw4\n").unwrap();
    let v = json(&spca(&[
        "solve",
        "--input",
        doc.to_str().unwrap(),
        "--input-format",
        "uci-bow",
        "--vocab",
        vocab.to_str().unwrap(),
        "--k",
        "2",
        "--s",
        "2",
        "--eps",
        "0.8",
    ]));
    assert_eq!(v["spec"]["center"], serde_json::Value::Null);
    assert_eq!(v["topics"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_code_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1,2\n3\n").unwrap();
    let out = spca(&["solve", "--input", data.to_str().unwrap(), "--k", "1", "--s", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("load failed"));
}

#[test]
fn exit_code_config_error() {
    let out = spca(&["solve", "--appendix", "0.1,0.1", "--k", "3", "--s", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spca(&["solve", "--appendix", "0.1,0.1", "--k", "1", "--s", "1", "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spca(&["solve", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_capacity() {
    // 60 variables with k=3, s=5 exceeds the exhaustive search budget
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("big.csv");
    let mut text = String::new();
    for i in 0..40 {
        let row: Vec<String> = (0..60).map(|j| (((i * 7 + j * 13) % 11) as f64).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&data, text).unwrap();
    let out = spca(&["oracle", "--input", data.to_str().unwrap(), "--k", "3", "--s", "5"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn workers_env_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_spca"))
        .args(["solve", "--appendix", "0.1,0.1", "--k", "2", "--s", "2", "--eps", "0.9"])
        .env("SPCA_WORKERS", "3")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["spec"]["workers"], 3);
}

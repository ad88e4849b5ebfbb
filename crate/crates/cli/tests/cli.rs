use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use revbrew::io::{RunRecord, Workspace};

fn revbrew(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revbrew"))
        .args(args)
        .current_dir(cwd)
        .env_remove("REVBREW_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A saved copy of the shipped workspace with short NSGA-II runs.
fn quick_workspace(dir: &Path) {
    let mut ws = Workspace::builtin();
    ws.nsga2.generations = 20;
    ws.nsga2.population_size = 20;
    ws.de.max_evaluations = 400;
    ws.de.population_size = 20;
    ws.save(dir).unwrap();
}

#[test]
fn evaluate_prints_properties_and_objectives() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = dir.path().join("stout.toml");
    fs::write(
        &recipe,
        "target = \"Guinness Extra Stout\"\n[uptake]\n\"Pale Malt (UK)\" = 4.0\n\"Roasted Barley\" = 0.4\nCascade = 0.02\n",
    )
    .unwrap();
    let o = revbrew(&["evaluate", "--recipe", "stout.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Guinness Extra Stout (product 2)"), "{out}");
    for key in ["OG", "FG", "ABV", "IBU", "SRM", "EBC", "f1"] {
        assert!(out.contains(key), "{key} missing: {out}");
    }

    let o = revbrew(&["evaluate", "--recipe", "stout.toml", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["product"], 2);
    let e = v["e"].as_f64().unwrap();
    let o = &v["objectives"];
    let sum = o["f1"].as_f64().unwrap() + o["f2"].as_f64().unwrap() + o["f3"].as_f64().unwrap();
    assert!((e - sum).abs() < 1e-12);
}

#[test]
fn optimize_writes_a_replayable_result() {
    let dir = tempfile::tempdir().unwrap();
    quick_workspace(dir.path());
    let o = revbrew(
        &["optimize", "--workspace", ".", "--product", "5", "--algo", "nsga2", "--seed", "4", "--generations", "10", "--out", "r.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("non-dominated"));
    let rec = RunRecord::read(&dir.path().join("r.json")).unwrap();
    assert_eq!(rec.product, 5);
    assert_eq!(rec.result.seed, 4);
    assert_eq!(rec.result.trace.len(), 10);
    assert_eq!(rec.replay().unwrap(), rec.result);

    let o = revbrew(
        &["optimize", "--workspace", ".", "--product", "Punk IPA", "--algo", "de", "--seed", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("p20-punk-ipa-de-best1-seed2.json").exists());
}

#[test]
fn batch_and_analyze_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    quick_workspace(dir.path());
    let o = revbrew(
        &["batch", "--workspace", ".", "--products", "2,7", "--runs", "2", "--seed", "3", "--algo", "both", "--out", "res", "--threads", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Sunmaid Stout"));
    let res = dir.path().join("res");
    for f in ["counts.csv", "objective-deviation.csv", "failure-diagnostics.csv", "uptake-deviation.csv", "summary.json"] {
        assert!(res.join(f).exists(), "{f}");
    }
    assert!(res.join("p02-guinness-extra-stout/nsga2/run-001.json").exists());
    let t3 = fs::read_to_string(res.join("counts.csv")).unwrap();
    assert!(t3.starts_with("product,name,algorithm,nondominated_median,nondominated_stdev,successful_median,successful_stdev"));
    assert_eq!(t3.lines().count(), 5);

    fs::remove_file(res.join("counts.csv")).unwrap();
    let o = revbrew(&["analyze", "--results", "res", "--normalize-genome"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(res.join("counts.csv")).unwrap(), t3);
}

#[test]
fn batch_honours_thread_variable() {
    let dir = tempfile::tempdir().unwrap();
    quick_workspace(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_revbrew"))
        .args(["batch", "--workspace", ".", "--products", "1", "--runs", "1", "--out", "res"])
        .current_dir(dir.path())
        .env("REVBREW_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    quick_workspace(dir.path());

    let usage = revbrew(&["optimize", "--product"], dir.path());
    assert_eq!(usage.status.code(), Some(1));
    assert_eq!(revbrew(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(revbrew(&["batch", "--runs", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(revbrew(&["--help"], dir.path()).status.code(), Some(0));

    let unknown = revbrew(&["optimize", "--workspace", ".", "--product", "99"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("99"));

    fs::write(dir.path().join("bad.toml"), "target = \"2\"\n[uptake]\n\"Roasted Barley\" = 9.0\n").unwrap();
    let bad = revbrew(&["evaluate", "--workspace", ".", "--recipe", "bad.toml"], dir.path());
    assert_eq!(bad.status.code(), Some(2));

    let inv = fs::read_to_string(dir.path().join("inventory.toml")).unwrap();
    fs::write(dir.path().join("inventory.toml"), inv.replacen("max_weight = 0.1", "max_weight = -0.1", 1)).unwrap();
    let invalid = revbrew(&["optimize", "--workspace", ".", "--product", "1"], dir.path());
    assert_eq!(invalid.status.code(), Some(2));
    assert!(stderr(&invalid).contains("hop[0].max_weight"), "{}", stderr(&invalid));

    let missing = revbrew(&["analyze", "--results", "nowhere"], dir.path());
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn serve_answers_http() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::process::Stdio;

    let dir = tempfile::tempdir().unwrap();
    quick_workspace(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_revbrew"))
        .args(["serve", "--workspace", ".", "--port", "0"])
        .current_dir(dir.path())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().trim_start_matches("serving on http://").to_string();

    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /api/workspace HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("Guinness Extra Stout"));
}

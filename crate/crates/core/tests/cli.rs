use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use qusc::io::{CenterFile, Format};
use qusc::scattering::is_subsequence;
use serde_json::Value;

fn qusc(args: &[&str], stdin: Option<&str>, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qusc"));
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    if let Some(input) = stdin {
        child.stdin.as_mut().unwrap().write_all(input.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn run(args: &[&str]) -> Output {
    qusc(args, None, &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn load(path: &str) -> CenterFile {
    let f = std::fs::File::open(path).unwrap();
    CenterFile::read(std::io::BufReader::new(f), Format::from_path(&PathBuf::from(path))).unwrap()
}

#[test]
fn generate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate", "--lambda", "2,1,1", "--levels", "0", "--format", "jsonl", "-o", &p(dir.path(), "a.jsonl")]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(p(dir.path(), "a.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);

    let out = run(&["generate", "--lambda", "2,2,1,1", "--levels", "0", "-o", &p(dir.path(), "b.bin")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)[0]["count"], 35);

    let out = run(&["generate", "--lambda", "2,1,1", "--levels", "2", "-o", &p(dir.path(), "c.csv")]);
    assert_eq!(stdout_json(&out)[0]["per_level"], serde_json::json!([12, 30, 120]));
}

#[test]
fn generate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["generate", "--lambda", "1", "-o", &p(dir.path(), "x.bin")])), 2);
    assert_eq!(code(&run(&["generate", "--lambda", "1,2", "-o", &p(dir.path(), "x.bin")])), 2);
    assert_eq!(code(&run(&["generate", "--lambda", "2,1,1", "-o", "/nonexistent/dir/x.bin"])), 2);
    assert_eq!(code(&run(&["generate", "--lambda", "2,1,1", "--format", "xml", "-o", &p(dir.path(), "x")])), 2);
}

#[test]
fn rank_pads_with_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate", "--lambda", "2,1,1", "--rank", "4", "-o", &p(dir.path(), "r.bin")]);
    assert_eq!(code(&out), 0);
    let f = load(&p(dir.path(), "r.bin"));
    assert_eq!(f.lambda.rows(), &[2, 1, 1, 0, 0]);
}

#[test]
fn query_examples() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "s.bin");
    run(&["generate", "--lambda", "2,1,1", "--levels", "1", "-o", &file]);
    let centers = load(&file).centers;

    let c = &centers[17];
    let coords: Vec<String> = c.to_f64().iter().map(f64::to_string).collect();
    let out = run(&["query", "--centers", &file, "--point", &coords.join(",")]);
    assert_eq!(code(&out), 0);
    let rec = &stdout_json(&out)[0];
    assert_eq!(rec["neighbors"][0]["index"], 17);
    assert_eq!(rec["neighbors"][0]["distance"], 0.0);
    assert_eq!(rec["neighbors"][0]["exact"][0], serde_json::json!(c.exact_strings()[0]));

    let scaled: Vec<String> = c.to_f64().iter().map(|x| (5.0 * x).to_string()).collect();
    let out = run(&["query", "--centers", &file, "--metric", "cosine", "--point", &scaled.join(",")]);
    let rec = &stdout_json(&out)[0];
    assert_eq!(rec["neighbors"][0]["index"], 17);
    assert!(rec["neighbors"][0]["distance"].as_f64().unwrap() < 1e-12);
}

#[test]
fn query_stream_keeps_order_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "s.jsonl");
    run(&["generate", "--lambda", "3,2,1", "--levels", "2", "-o", &file]);
    let lines: Vec<String> = (0..300)
        .map(|i| {
            let t = i as f64 * 0.37;
            format!("{} {} {} {}", t.sin() * 3.0, t.cos() * 2.0, (2.0 * t).sin(), 1.5 - t.cos())
        })
        .collect();
    let input = lines.join("\n");
    let default = qusc(&["query", "--centers", &file, "-k", "4", "--verify"], Some(&input), &[]);
    assert_eq!(code(&default), 0);
    let single = qusc(&["query", "--centers", &file, "-k", "4"], Some(&input), &[("QUSC_THREADS", "1")]);
    assert_eq!(default.stdout, single.stdout);
    let recs = stdout_json(&default);
    assert_eq!(recs.len(), 300);
    let first: Vec<f64> = lines[0].split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(recs[0]["query"], serde_json::json!(first));
}

#[test]
fn query_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "s.bin");
    run(&["generate", "--lambda", "2,1,1", "-o", &file]);
    assert_eq!(code(&run(&["query", "--centers", &file, "--point", "1,2,3"])), 2);
    assert_eq!(code(&run(&["query", "--centers", &file, "--point", "1,2,x,4"])), 2);
    assert_eq!(code(&run(&["query", "--centers", &file, "--metric", "cosine", "--point", "0,0,0,0"])), 2);
    assert_eq!(code(&run(&["query", "--centers", &p(dir.path(), "missing.bin"), "--point", "1,1,1,1"])), 2);
}

#[test]
fn verify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let two = p(dir.path(), "two.bin");
    run(&["generate", "--lambda", "2,1,1", "--levels", "2", "-o", &two]);
    let out = run(&["verify", "--centers", &two]);
    assert_eq!(code(&out), 0);
    let rep = &stdout_json(&out)[0];
    assert!(rep["worst_euclidean_ratio"].as_f64().unwrap() <= 2.0 + 1e-9);

    let one = p(dir.path(), "one.jsonl");
    run(&["generate", "--lambda", "2,1,1", "--levels", "0", "-o", &one]);
    let out = run(&["verify", "--centers", &one, "--prefixes"]);
    let rep = &stdout_json(&out)[0];
    let last = rep["prefixes"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["len"], 12);
    assert_eq!(last["ratio"], 1.0);

    let mut f = load(&two);
    let dup = f.centers[20].clone();
    f.centers.push(dup);
    let bad = p(dir.path(), "dup.bin");
    f.write(std::fs::File::create(&bad).unwrap(), Format::Binary).unwrap();
    assert_eq!(code(&run(&["verify", "--centers", &bad])), 3);

    let garbage = p(dir.path(), "garbage.bin");
    std::fs::write(&garbage, b"QUSC\x01").unwrap();
    assert_eq!(code(&run(&["verify", "--centers", &garbage])), 2);
}

#[test]
fn embed_examples() {
    let dir = tempfile::tempdir().unwrap();
    let src = p(dir.path(), "src.bin");
    run(&["generate", "--lambda", "2,1,1", "--levels", "1", "-o", &src]);
    let once = p(dir.path(), "once.bin");
    assert_eq!(code(&run(&["embed", "--centers", &src, "-o", &once])), 0);
    let twice = p(dir.path(), "twice.bin");
    assert_eq!(code(&run(&["embed", "--centers", &once, "-o", &twice])), 0);

    let a = load(&src);
    let b = load(&once);
    let c = load(&twice);
    assert_eq!(b.lambda.rows(), &[2, 1, 1, 1, 0]);
    assert!(b.centers.iter().all(|x| *x.to_f64().last().unwrap() == 1.0));
    for (x, y) in a.centers.iter().zip(&c.centers) {
        let mut v = x.to_f64();
        v.extend([1.0, 1.0]);
        assert_eq!(y.to_f64(), v);
    }

    let target = p(dir.path(), "target.bin");
    run(&["generate", "--lambda", "2,1,1,1", "--levels", "1", "-o", &target]);
    assert!(is_subsequence(&b.centers, &load(&target).centers).unwrap());
}

#[test]
fn bench_emits_csv() {
    let out = run(&["bench", "--lambda", "3,2,1", "--levels", "1,2", "--queries", "20", "-k", "1,4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    assert_eq!(&header[0], "levels");
    assert!(header.iter().any(|h| h == "candidates"));
    assert_eq!(rows.records().count(), 4);
}

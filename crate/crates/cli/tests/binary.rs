use std::io::Write;
use std::process::{Command, Output, Stdio};

fn randlab(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_randlab"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(text) = stdin {
        child
            .stdin
            .take()
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
    }
    child.wait_with_output().unwrap()
}

#[test]
fn covering_from_stdin() {
    let out = randlab(
        &["covering", "--instance", "-", "--json"],
        Some(r#"{"class": [["0/1", "1/1"]], "epsilon": "1/2"}"#),
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["covering"]["u"], serde_json::json!([]));
}

#[test]
fn bad_rational_exits_two() {
    let out = randlab(
        &["covering", "--instance", "-"],
        Some(r#"{"class": [["0/1", "3/0"]], "epsilon": "1/2"}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("schema_error"));
}

#[test]
fn missing_file_exits_two() {
    let out = randlab(
        &["density", "--instance", "/nonexistent/instance.json"],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = randlab(&["porosity", "--seed", "11", "--json"], None);
    let b = randlab(&["porosity", "--seed", "11", "--json"], None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_to_file() {
    let dir = std::env::temp_dir().join(format!("randlab-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("density.csv");
    let out = randlab(&["density", "--csv", "-o", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("z,general,dyadic"));
    assert_eq!(rows.count(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_and_csv_conflict() {
    let out = randlab(&["density", "--json", "--csv"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_passes() {
    let out = randlab(&["verify-all"], None);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("PASS").count(), 10, "{text}");
    assert!(!text.contains("FAIL"));
}

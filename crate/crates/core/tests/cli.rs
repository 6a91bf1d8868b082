use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shift-periodic"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn temp_file(name: &str, body: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("shift-periodic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn solve_paper_example_json() {
    let (code, out) = run(&["solve", "--problem", "paper_example", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["residuals"]["differential"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["diagnostics"]["contraction_constant"].as_f64().unwrap(), 0.375);
}

#[test]
fn floquet_paper_example() {
    let (code, out) = run(&["floquet", "--problem", "paper_example"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["monodromy"], serde_json::json!([[2.0, 0.0], [0.0, 2.0]]));
}

#[test]
fn out_flag_writes_file() {
    let path = temp_file("check.json", "");
    let (code, out) = run(&["check", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["conditions"]["r"].as_f64().unwrap(), 1.0);
}

#[test]
fn exit_codes_are_stable() {
    let critical = temp_file(
        "critical.toml",
        r#"
dimension = 1
function_period = 2
delay = 0
A = [["-2"]]
Q = ["0"]
G = ["1"]

[timescale]
kind = "integers"
"#,
    );
    let bad_syntax = temp_file(
        "syntax.toml",
        r#"
dimension = 1
function_period = 2
delay = 0
A = [["-2 *"]]
Q = ["0"]
G = ["1"]

[timescale]
kind = "integers"
"#,
    );
    let off_scale = temp_file(
        "delay.toml",
        &shift_periodic::cli::problem_file::PAPER_EXAMPLE.replacen("delay = 2", "delay = 3", 1),
    );
    let p = |path: &std::path::Path| path.to_str().unwrap().to_string();
    assert_eq!(run(&["check", "--problem", &p(&critical)]).0, 4);
    assert_eq!(run(&["check", "--problem", &p(&bad_syntax)]).0, 2);
    assert_eq!(run(&["check", "--problem", &p(&off_scale)]).0, 3);
    assert_eq!(run(&["solve", "--problem", "coupled", "--max-iter", "3"]).0, 7);
    assert_eq!(run(&["frobnicate"]).0, 2);
    let noncontractive = temp_file(
        "noncontractive.toml",
        &shift_periodic::cli::problem_file::PAPER_EXAMPLE.replacen("E1 = \"1/8\"", "E1 = \"0.9\"", 1),
    );
    assert_eq!(run(&["solve", "--problem", &p(&noncontractive)]).0, 5);
    let floquet_branch = temp_file(
        "branch.toml",
        r#"
dimension = 1
function_period = 1
delay = 0
A = [["-3"]]
Q = ["0"]
G = ["1"]

[timescale]
kind = "integers"
"#,
    );
    assert_eq!(run(&["floquet", "--problem", &p(&floquet_branch)]).0, 6);
}

#[test]
fn report_is_byte_stable() {
    let a = run(&["report", "--problem", "coupled", "--seed", "9"]);
    let b = run(&["report", "--problem", "coupled", "--seed", "9"]);
    assert_eq!(a, b);
    assert_eq!(a.0, 0);
}

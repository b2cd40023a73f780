use std::path::PathBuf;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_estim"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("estim-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

const UNIFORM_X: &str = r#"{"variables":[{"name":"x","domain":["1","2","3"]}],
  "weights":[{"outcome":{"x":"1"},"w":"1/3"},{"outcome":{"x":"2"},"w":"1/3"},{"outcome":{"x":"3"},"w":"1/3"}]}"#;

const UNIFORM_AB: &str = r#"{"atoms":["A","B"],"weights":[
  {"outcome":{"A":false,"B":false},"w":"1/4"},{"outcome":{"A":false,"B":true},"w":"1/4"},
  {"outcome":{"A":true,"B":false},"w":"1/4"},{"outcome":{"A":true,"B":true},"w":"1/4"}]}"#;

const CORRELATED_AB: &str = r#"{"atoms":["A","B"],"weights":[
  {"outcome":{"A":false,"B":false},"w":"1/2"},{"outcome":{"A":true,"B":true},"w":"1/2"}]}"#;

const ONLY_A: &str = r#"{"atoms":["A"],"weights":[{"outcome":{"A":true},"w":"1"}]}"#;

#[test]
fn normalize_negation() {
    let s = Scratch::new("neg");
    let f = s.file("e.txt", "est(n(not A)|I)");
    let (code, out, _) = run(&["normalize", &f, "--prob"]);
    assert_eq!(code, 0);
    assert_eq!(out, "1 - est(n(A) | I)\n1 − P(A|I)\n");
}

#[test]
fn normalize_constant_has_empty_trace() {
    let s = Scratch::new("const");
    let f = s.file("e.txt", "5");
    let (code, out, _) = run(&["normalize", &f, "--trace"]);
    assert_eq!(code, 0);
    assert_eq!(out, "5\n");
    let (_, json, _) = run(&["normalize", &f, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn syntax_error_exits_1_with_caret() {
    let s = Scratch::new("syntax");
    let f = s.file("e.txt", "est((x + 1 | I)");
    let (code, _, err) = run(&["normalize", &f]);
    assert_eq!(code, 1);
    assert!(err.contains('^'), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn fuel_exhaustion_exits_2() {
    let s = Scratch::new("fuel");
    let f = s.file("e.txt", "est(n(A or B) | I)");
    let (code, _, err) = run(&["normalize", &f, "--fuel", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("within 1 steps"), "{err}");
    assert_eq!(run(&["normalize", &f, "--fuel", "0"]).0, 64);
}

#[test]
fn derive_product_and_negation() {
    let (code, out, _) = run(&["derive", "product"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.starts_with("step ")).count(), 4);
    assert!(out.contains("= est(n(A) | I) * est(n(B) | A, I)"));
    let (_, out, _) = run(&["derive", "negation"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("step ")).count(), 2);
}

#[test]
fn derive_expectation_needs_domain() {
    assert_eq!(run(&["derive", "expectation"]).0, 64);
    let (code, out, _) = run(&["derive", "expectation", "--domain", "1,2,3"]);
    assert_eq!(code, 0);
    assert!(out.contains(
        "est(x | I) = est(delta(1, x) | I) + 2 * est(delta(2, x) | I) + 3 * est(delta(3, x) | I)"
    ));
    assert!(out.contains("= 1\n"));
}

#[test]
fn derive_with_model_checks_states() {
    let s = Scratch::new("derive-model");
    let m = s.file("m.json", UNIFORM_AB);
    let (code, out, _) = run(&["derive", "product", "--model", &m]);
    assert_eq!(code, 0);
    assert!(out.contains("oracle product states: PASS"));
    let m = s.file("c.json", CORRELATED_AB);
    let (code, _, err) = run(&["derive", "product", "--model", &m, "--inject-fault", "two_valued"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn eval_values() {
    let s = Scratch::new("eval");
    let x = s.file("x.txt", "est(x | I)");
    let a = s.file("a.txt", "est(n(A) | I)");
    let mx = s.file("x.json", UNIFORM_X);
    let mab = s.file("ab.json", UNIFORM_AB);
    let (code, out, _) = run(&["eval", &x, "--model", &mx]);
    assert_eq!((code, out.lines().next().unwrap()), (0, "2"));
    let (code, out, _) = run(&["eval", &a, "--model", &mab]);
    assert_eq!((code, out.as_str()), (0, "1/2\n≈ 0.5\n"));
}

#[test]
fn eval_zero_weight_exits_3() {
    let s = Scratch::new("zero");
    let e = s.file("e.txt", "est(n(A) | not A, I)");
    let m = s.file("m.json", ONLY_A);
    let (code, _, err) = run(&["eval", &e, "--model", &m]);
    assert_eq!(code, 3);
    assert!(err.contains("not A"), "{err}");
}

#[test]
fn eval_schema_errors_exit_1() {
    let s = Scratch::new("schema");
    let x = s.file("x.txt", "est(x | I)");
    let m = s.file("m.json", ONLY_A);
    assert_eq!(run(&["eval", &x, "--model", &m]).0, 1);
    let bad = s.file("bad.json", r#"{"atoms":["A"],"weights":[{"outcome":{"A":true},"w":"1/2"}]}"#);
    assert_eq!(run(&["eval", &x, "--model", &bad]).0, 1);
}

#[test]
fn eval_grid_file() {
    let s = Scratch::new("grid");
    let densities = vec!["1.0"; 100].join(",");
    let g = s.file("g.json", &format!(r#"{{"grid":{{"a":0,"b":1,"n":100,"densities":[{densities}]}}}}"#));
    let x = s.file("x.txt", "est(x | I)");
    let (code, out, _) = run(&["eval", &x, "--model", &g]);
    assert_eq!(code, 0);
    let est: f64 = out.lines().next().unwrap().parse().unwrap();
    assert!((est - 0.5).abs() < 1e-9);
}

#[test]
fn check_usage_and_determinism() {
    assert_eq!(run(&["check", "--trials", "0"]).0, 64);
    let a = run(&["check", "--trials", "50", "--seed", "9"]);
    let b = run(&["check", "--trials", "50", "--seed", "9"]);
    assert_eq!(a.0, 0, "{}", a.1);
    assert_eq!(a.1, b.1);
    assert!(a.1.ends_with("all properties hold\n"));
}

#[test]
fn check_json_mirrors_text() {
    let (_, text, _) = run(&["check", "--trials", "30"]);
    let (_, json, _) = run(&["check", "--trials", "30", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let props = v["properties"].as_array().unwrap();
    let pass_lines = text.lines().filter(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).count();
    assert_eq!(props.len(), pass_lines);
}

#[test]
fn check_with_model_file() {
    let s = Scratch::new("check-model");
    let m = s.file("m.json", UNIFORM_AB);
    let (code, out, _) = run(&["check", "--model", &m, "--trials", "40"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn injected_fault_exits_4() {
    let (code, out, _) = run(&["check", "--trials", "60", "--inject-fault", "tower"]);
    assert_eq!(code, 4);
    assert!(out.contains("counterexample"));
    assert!(out.contains("model"));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["check", "--inject-fault", "nope"]).0, 64);
}

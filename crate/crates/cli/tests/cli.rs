use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    format!("{}/../core/corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn glpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glpt")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn machine(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "machine"]);
    let o = glpt(&a);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    assert_eq!(v["exit_code"], code(&o));
    (code(&o), v)
}

fn temp(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("glpt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn chan_answer() {
    let o = glpt(&["run", &corpus("chan.glp"), "--query", "\\+ p(X)."]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "X \\= a, X \\= b");
}

#[test]
fn failure_exits_one() {
    let (c, v) = machine(&["run", &corpus("chan.glp"), "-q", "p(c)"]);
    assert_eq!(c, 1);
    assert_eq!(v["status"], "failure");
}

#[test]
fn flounder_exits_six() {
    let o = glpt(&["run", &corpus("blocksworld.glp"), "-q", "holds(loc(a,p),[A])", "--mode", "naf"]);
    assert_eq!(code(&o), 6);
    let o = glpt(&["run", &corpus("blocksworld.glp"), "-q", "holds(loc(a,p),[A])"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("A \\= move(a,"), "{}", stdout(&o));
}

#[test]
fn budget_exits_five() {
    let p = temp("nat.glp", "nat(0).\nnat(s(X)) :- nat(X).\n");
    let (c, v) = machine(&["run", &p, "-q", "nat(X)", "--budget", "500"]);
    assert_eq!(c, 5);
    assert_eq!(v["status"], "budget_exceeded");
    let (c, v) = machine(&["run", &p, "-q", "nat(X)", "--max-answers", "3"]);
    assert_eq!(c, 0);
    assert_eq!(v["answers"].as_array().unwrap().len(), 3);
}

#[test]
fn parse_errors_exit_three() {
    let p = temp("bad.glp", "p(X :- q.\n");
    let (c, v) = machine(&["parse", &p]);
    assert_eq!(c, 3);
    assert_eq!(v["error"]["kind"], "parse");
    assert_eq!(v["error"]["line"], 1);
    let (c, _) = machine(&["run", &corpus("chan.glp"), "-q", "p(("]);
    assert_eq!(c, 3);
}

#[test]
fn missing_file_is_invalid_input() {
    let (c, v) = machine(&["parse", "/nonexistent/x.glp"]);
    assert_eq!(c, 2);
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn check_exit_codes() {
    let o = glpt(&["check", &corpus("blocksworld.glp"), &corpus("blocksworld.ann"), "--require-proof"]);
    assert_eq!(code(&o), 0);
    let o = glpt(&["check", &corpus("tras.glp"), &corpus("tras.ann")]);
    assert_eq!(code(&o), 0);
    let o = glpt(&["check", &corpus("tras.glp"), &corpus("tras.ann"), "--require-proof"]);
    assert_eq!(code(&o), 4);
    let (c, v) = machine(&["check", &corpus("specialize.glp"), &corpus("specialize-wrong-level.ann")]);
    assert_eq!(c, 1);
    assert_eq!(v["report"]["status"]["status"], "refuted");
    assert!(v["report"]["status"]["witness"]["instance"].as_str().unwrap().starts_with("spec("));
}

#[test]
fn invalid_annotation_exits_two() {
    let p = temp("pq.glp", "p :- q.\nq.\n");
    let a = temp("pq.ann", "method: acyclic\nlevel p/0 = 1\n");
    let (c, v) = machine(&["check", &p, &a]);
    assert_eq!(c, 2);
    assert_eq!(v["report"]["status"]["status"], "invalid");
    let a = temp("bad.ann", "method: sideways\n");
    let (c, _) = machine(&["check", &p, &a]);
    assert_eq!(c, 3);
}

#[test]
fn query_boundedness() {
    let (_, v) = machine(&["check", &corpus("specialize.glp"), &corpus("specialize.ann"), "-q", "spec(a,b,X,[[a,b],[b,c],[a,a]])"]);
    assert_eq!(v["query_bounds"]["bounded"], true);
}

#[test]
fn decompose_lists_splits() {
    let (c, v) = machine(&["decompose", &corpus("upper-lower.glp")]);
    assert_eq!(c, 0);
    let parts = v["partitions"].as_array().unwrap();
    assert_eq!(parts[0]["upper"], "1");
    assert_eq!(parts[0]["lower"], "2");
    assert_eq!(parts.last().unwrap()["lower"], "");
}

#[test]
fn corpus_passes() {
    let (c, v) = machine(&["corpus"]);
    assert_eq!(c, 0, "{v}");
    let o = glpt(&["corpus", "--filter", "reduce"]);
    assert!(stdout(&o).lines().filter(|l| l.starts_with("ok")).all(|l| l.contains("reduce")));
}

#[test]
fn flags_are_validated() {
    let o = glpt(&["run", &corpus("chan.glp"), "-q", "p(a)", "--mode", "sideways"]);
    assert_eq!(code(&o), 2);
    let o = glpt(&["run", &corpus("chan.glp"), "-q", "p(a)", "--budget", "-1"]);
    assert_eq!(code(&o), 2);
}

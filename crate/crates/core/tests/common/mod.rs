#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::time::Duration;

use loopinv::problem::parse_problem;
use loopinv::solver::SolverSession;
use loopinv::{Problem, State, Value};

pub const TREX1: &str = "\
(set-logic LIA)
(synth-inv inv-f ((x Int) (y Int)))
(declare-primed-var x Int)
(declare-primed-var y Int)
(define-fun pre-f ((x Int) (y Int)) Bool (= x 1))
(define-fun trans-f ((x Int) (y Int) (x! Int) (y! Int)) Bool (and (< x y) (= x! (+ x x))))
(define-fun post-f ((x Int) (y Int)) Bool (or (< x y) (>= x 1)))
(inv-constraint inv-f pre-f trans-f post-f)
(check-synth)
";

pub fn solver_path() -> PathBuf {
    loopinv::config::default_solver_path()
}

pub fn session(seed: u64) -> SolverSession {
    SolverSession::spawn(&solver_path(), Duration::from_millis(2000), seed).expect("solver starts")
}

pub fn trex1() -> Problem {
    parse_problem(TREX1).unwrap()
}

pub fn problem(src: &str) -> Problem {
    parse_problem(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Builds a single-loop problem over integer variables.
pub fn lia(vars: &[&str], pre: &str, trans: &str, post: &str) -> String {
    let params: String = vars.iter().map(|v| format!("({v} Int)")).collect::<Vec<_>>().join(" ");
    let tparams: String = vars
        .iter()
        .map(|v| format!("({v} Int)"))
        .chain(vars.iter().map(|v| format!("({v}! Int)")))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "(set-logic LIA)\n(synth-inv inv-f ({params}))\n\
         (define-fun pre-f ({params}) Bool {pre})\n\
         (define-fun trans-f ({tparams}) Bool {trans})\n\
         (define-fun post-f ({params}) Bool {post})\n\
         (inv-constraint inv-f pre-f trans-f post-f)\n(check-synth)\n"
    )
}

pub fn state(pairs: &[(&str, i64)]) -> State {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), Value::Int((*v).into())))
        .collect()
}

pub fn int(s: &State, name: &str) -> i64 {
    s.get(name)
        .and_then(Value::as_int)
        .map(|i| i.try_into().unwrap())
        .unwrap_or_else(|| panic!("{name} missing in {s}"))
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn fixture(name: &str) -> String {
    let path = fixtures_dir().join(format!("{name}.sl"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// All suite problems, sorted by name.
pub fn suite() -> Vec<(String, String)> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "sl").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

pub fn config() -> loopinv::Config {
    loopinv::Config {
        solver_path: solver_path(),
        ..loopinv::Config::default()
    }
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_loopinv"))
}

//! End-to-end solving of one problem.

use std::fmt;
use std::time::{Duration, Instant};

use log::info;

use crate::config::Config;
use crate::infer::{infer, InferOutcome, Witness};
use crate::preprocess::{analyze_usage, simplify};
use crate::problem::{parse_invariant, parse_problem, Problem};
use crate::record::record_parallel;
use crate::term::{Sort, State, Value};
use crate::verify::check_invariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    Infeasible,
    Unknown,
    InputError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Solved => 0,
            Status::Infeasible => 1,
            Status::Unknown => 2,
            Status::InputError => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Solved => "solved",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
            Status::InputError => "input-error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub name: &'static str,
    pub elapsed: Duration,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: Status,
    /// `define-fun` text of the invariant, over the original signature.
    pub invariant: Option<String>,
    pub witness: Option<Witness>,
    pub reason: Option<String>,
    pub phases: Vec<Phase>,
    pub seeds: Vec<u64>,
}

impl RunResult {
    fn new(cfg: &Config) -> Self {
        RunResult {
            status: Status::Unknown,
            invariant: None,
            witness: None,
            reason: None,
            phases: Vec::new(),
            seeds: (0..cfg.record_instances).map(|i| cfg.seed(i)).collect(),
        }
    }

    fn finish(mut self, status: Status, reason: impl Into<String>) -> Self {
        self.status = status;
        self.reason = Some(reason.into());
        self
    }

    fn phase(&mut self, name: &'static str, start: Instant, detail: String) {
        let elapsed = start.elapsed();
        info!("{name}: {} ms, {detail}", elapsed.as_millis());
        self.phases.push(Phase { name, elapsed, detail });
    }

    /// What goes to standard output.
    pub fn answer(&self) -> String {
        match self.status {
            Status::Solved => self.invariant.clone().unwrap_or_default(),
            Status::Infeasible => match &self.witness {
                Some(w) => format!("infeasible: {w}"),
                None => "infeasible".into(),
            },
            Status::Unknown => "unknown".into(),
            Status::InputError => "input-error".into(),
        }
    }

    /// One diagnostic line per phase, then the outcome.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .phases
            .iter()
            .map(|p| format!("[{}] {} ms, {}", p.name, p.elapsed.as_millis(), p.detail))
            .collect();
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let mut last = format!("[result] {}, seeds {seeds}", self.status);
        if let Some(r) = &self.reason {
            last.push_str(&format!(": {r}"));
        }
        out.push(last);
        out
    }
}

fn default_value(sort: Sort) -> Value {
    match sort {
        Sort::Int => Value::Int(0.into()),
        Sort::Bool => Value::Bool(false),
    }
}

/// Extends a witness over the reduced signature with the constants that
/// replaced the dropped variables.
fn complete(original: &Problem, s: &State) -> State {
    let mut out = s.clone();
    for (n, sort) in &original.inv_params {
        if !out.contains(n) {
            out.insert(n.clone(), default_value(*sort));
        }
    }
    out
}

fn complete_witness(original: &Problem, w: Witness) -> Witness {
    match w {
        Witness::PreNotPost(s) => Witness::PreNotPost(complete(original, &s)),
        Witness::ReachableBad(s) => Witness::ReachableBad(complete(original, &s)),
    }
}

/// Solves the problem given as SyGuS-INV text.
pub fn solve_source(src: &str, cfg: &Config) -> RunResult {
    let mut result = RunResult::new(cfg);
    let start = Instant::now();
    let deadline = Some(start + cfg.total_timeout);

    let t = Instant::now();
    let original = match parse_problem(src) {
        Ok(p) => p,
        Err(e) => return result.finish(Status::InputError, e.to_string()),
    };
    result.phase("parse", t, format!("{} variables", original.inv_params.len()));

    let t = Instant::now();
    let usage = analyze_usage(&original);
    let p = simplify(&original, &usage);
    result.phase(
        "preprocess",
        t,
        format!("{} of {} variables used", p.inv_params.len(), original.inv_params.len()),
    );

    let t = Instant::now();
    let record_deadline = Some((t + cfg.record_timeout).min(start + cfg.total_timeout));
    let (z, recordings) = match record_parallel(&p, cfg, record_deadline) {
        Ok(r) => r,
        Err(e) => return result.finish(Status::Unknown, format!("sampling failed: {e}")),
    };
    let runs: usize = recordings.iter().map(|r| r.runs.len()).sum();
    result.phase("record", t, format!("|Z| = {}, {runs} runs", z.len()));

    let t = Instant::now();
    let report = match infer(&p, z, cfg, deadline) {
        Ok(r) => r,
        Err(e) => return result.finish(Status::Unknown, format!("solver failure: {e}")),
    };
    let s = &report.stats;
    result.phase(
        "infer",
        t,
        format!(
            "|Z| = {}, {} features, {} rounds, {} restarts, {} counterexamples",
            s.positives, s.features, s.rounds, s.restarts, s.counterexamples
        ),
    );

    let inv = match report.outcome {
        InferOutcome::Solved(inv) => inv,
        InferOutcome::Infeasible(w) => {
            result.witness = Some(complete_witness(&original, w));
            result.status = Status::Infeasible;
            return result;
        }
        InferOutcome::Unknown(why) => return result.finish(Status::Unknown, why),
    };

    // Final check against the problem as written, from the printed text.
    let t = Instant::now();
    let text = original.render_invariant(&inv);
    let reparsed = match parse_invariant(&original, &text) {
        Ok(t) => t,
        Err(e) => return result.finish(Status::Unknown, format!("printed invariant does not parse: {e}")),
    };
    let verdict = check_invariant(&original, &reparsed, &cfg.solver_path, cfg.query_timeout, cfg.seed(0));
    match verdict {
        Ok(r) if r.overall => {
            result.phase("verify", t, "all conditions valid".into());
            result.invariant = Some(text);
            result.status = Status::Solved;
            result
        }
        Ok(r) => result.finish(Status::Unknown, format!("verification failed: {r}")),
        Err(e) => result.finish(Status::Unknown, format!("verification failed: {e}")),
    }
}

//! The strengthening loop.
//!
//! The candidate starts as the postcondition. Each round learns a
//! precondition `rho` under which the candidate is preserved by one
//! transition and conjoins it. A precondition-check failure yields a
//! reachable state the candidate wrongly excludes; its run is sampled, added
//! to the positives, and the loop starts over.

use std::fmt;
use std::time::Instant;

use log::{debug, info};

use crate::config::Config;
use crate::error::SolverError;
use crate::learner::{LearnError, Learner};
use crate::problem::Problem;
use crate::record::{prepare_session, record_states_from, transition_holds, StateSet};
use crate::solver::{CheckResult, SolverSession};
use crate::synth::Grammar;
use crate::term::{State, Term};
use crate::verify::{check_invariant, prime_term, split_pair};

/// A concrete reason the problem has no invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Satisfies the precondition but not the postcondition.
    PreNotPost(State),
    /// Reachable from the precondition, yet falsifies the postcondition.
    ReachableBad(State),
}

impl Witness {
    pub fn state(&self) -> &State {
        match self {
            Witness::PreNotPost(s) | Witness::ReachableBad(s) => s,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::PreNotPost(s) => write!(f, "{s} satisfies the precondition but not the postcondition"),
            Witness::ReachableBad(s) => write!(f, "{s} is reachable and violates the postcondition"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InferOutcome {
    Solved(Term),
    Infeasible(Witness),
    Unknown(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InferStats {
    pub rounds: usize,
    pub restarts: usize,
    pub features: usize,
    pub counterexamples: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferReport {
    pub outcome: InferOutcome,
    pub stats: InferStats,
}

/// Verdict of the unsolvability checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible(Witness),
}

/// Looks for a state of `states` falsifying the postcondition.
pub fn bad_recorded_state<'a>(p: &Problem, states: impl IntoIterator<Item = &'a State>) -> Option<Witness> {
    states
        .into_iter()
        .find(|s| p.post_call().holds(s, p) == Ok(false))
        .map(|s| Witness::ReachableBad(s.clone()))
}

/// Infeasible if `P and not Q` is satisfiable or a recorded state falsifies
/// `Q`. A solver `unknown` counts as feasible.
pub fn check_feasible(
    p: &Problem,
    z: &StateSet,
    session: &mut SolverSession,
) -> Result<Feasibility, SolverError> {
    let f = Term::implies(p.pre_call(), p.post_call());
    match session.check_valid(&f, &p.inv_params, p)? {
        CheckResult::Counterexample(s) => return Ok(Feasibility::Infeasible(Witness::PreNotPost(s))),
        CheckResult::Unknown(why) => debug!("precondition/postcondition check undecided: {why}"),
        CheckResult::Valid => {}
    }
    Ok(match bad_recorded_state(p, z) {
        Some(w) => Feasibility::Infeasible(w),
        None => Feasibility::Feasible,
    })
}

enum Step {
    Done(InferOutcome),
    Restart,
}

struct Run<'a> {
    p: &'a Problem,
    cfg: &'a Config,
    deadline: Option<Instant>,
    session: SolverSession,
    learner: Learner,
    z: StateSet,
    stats: InferStats,
}

/// Runs the strengthening loop on `p` starting from the positives `z`.
pub fn infer(p: &Problem, z: StateSet, cfg: &Config, deadline: Option<Instant>) -> Result<InferReport, SolverError> {
    let mut session = SolverSession::spawn(&cfg.solver_path, cfg.query_timeout, cfg.infer_seed())?;
    prepare_session(p, &mut session)?;
    let learner = Learner::new(Grammar::for_problem(p), cfg.conflict_group_size, cfg.max_feature_size);
    let mut run = Run {
        p,
        cfg,
        deadline,
        session,
        learner,
        z,
        stats: InferStats::default(),
    };
    let outcome = run.run()?;
    run.stats.features = run.learner.features.len();
    run.stats.positives = run.z.len();
    Ok(InferReport {
        outcome,
        stats: run.stats,
    })
}

fn unknown_from(e: SolverError) -> Result<InferOutcome, SolverError> {
    if e.is_unknown() {
        Ok(InferOutcome::Unknown(e.to_string()))
    } else {
        Err(e)
    }
}

impl Run<'_> {
    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run(&mut self) -> Result<InferOutcome, SolverError> {
        match check_feasible(self.p, &self.z, &mut self.session) {
            Ok(Feasibility::Infeasible(w)) => return Ok(InferOutcome::Infeasible(w)),
            Ok(Feasibility::Feasible) => {}
            Err(e) => return unknown_from(e),
        }
        loop {
            if self.timed_out() {
                return Ok(InferOutcome::Unknown("timeout".into()));
            }
            match self.epoch() {
                Ok(Step::Done(outcome)) => return self.gate(outcome),
                Ok(Step::Restart) => {
                    self.stats.restarts += 1;
                    if self.stats.restarts > self.cfg.max_restarts {
                        return Ok(InferOutcome::Unknown(format!(
                            "more than {} restarts",
                            self.cfg.max_restarts
                        )));
                    }
                    if let Some(w) = bad_recorded_state(self.p, &self.z) {
                        return Ok(InferOutcome::Infeasible(w));
                    }
                }
                Err(e) => return unknown_from(e),
            }
        }
    }

    /// Re-verifies a solution in a fresh session from its printed form.
    fn gate(&self, outcome: InferOutcome) -> Result<InferOutcome, SolverError> {
        let InferOutcome::Solved(inv) = outcome else {
            return Ok(outcome);
        };
        let text = self.p.render_invariant(&inv);
        let reparsed = match crate::problem::parse_invariant(self.p, &text) {
            Ok(t) => t,
            Err(e) => return Ok(InferOutcome::Unknown(format!("printed invariant does not parse: {e}"))),
        };
        let report = match check_invariant(
            self.p,
            &reparsed,
            &self.cfg.solver_path,
            self.cfg.query_timeout,
            self.cfg.infer_seed(),
        ) {
            Ok(r) => r,
            Err(e) => return unknown_from(e),
        };
        if report.overall {
            Ok(InferOutcome::Solved(reparsed))
        } else {
            Ok(InferOutcome::Unknown(format!("final verification failed:\n{report}")))
        }
    }

    /// One pass from `I = Q` until solved or a restart is needed.
    fn epoch(&mut self) -> Result<Step, SolverError> {
        let p = self.p;
        let post = p
            .post_call()
            .inline(p)
            .map_err(|e| SolverError::Protocol(format!("cannot inline postcondition: {e}")))?;
        let mut conjuncts = vec![post];
        loop {
            self.stats.rounds += 1;
            let inv = Term::and(conjuncts.clone());
            let inv_next = prime_term(&inv);
            let mut bad: Vec<State> = Vec::new();
            let rho = loop {
                if self.timed_out() {
                    return Ok(Step::Done(InferOutcome::Unknown("timeout".into())));
                }
                let rho = match self.learner.pie(self.z.as_slice(), &bad, self.deadline) {
                    Ok(r) => r,
                    Err(LearnError::Timeout) => return Ok(Step::Done(InferOutcome::Unknown("timeout".into()))),
                    Err(e) => return Ok(Step::Done(InferOutcome::Unknown(e.to_string()))),
                };
                let f = Term::implies(
                    Term::and(vec![rho.clone(), inv.clone(), p.trans_call()]),
                    inv_next.clone(),
                );
                match self.session.check_valid(&f, &p.trans_vars(), p)? {
                    CheckResult::Valid => break rho,
                    CheckResult::Unknown(why) => return Ok(Step::Done(InferOutcome::Unknown(why))),
                    CheckResult::Counterexample(c) => {
                        self.stats.counterexamples += 1;
                        let (s, t) = split_pair(p, &c);
                        debug!("not inductive: {s} -> {t}");
                        if self.z.contains(&s) {
                            // s is reachable, so t is too; the current conjuncts
                            // wrongly exclude it.
                            debug_assert!(transition_holds(p, &s, &t));
                            if p.post_call().holds(&t, p) == Ok(false) {
                                return Ok(Step::Done(InferOutcome::Infeasible(Witness::ReachableBad(t))));
                            }
                            self.z.insert(t);
                            return Ok(Step::Restart);
                        }
                        bad.push(s);
                    }
                }
            };
            let trivial = rho.is_true();
            if !trivial {
                conjuncts.push(rho);
            }
            let inv = Term::and(conjuncts.clone());
            let f = Term::implies(p.pre_call(), inv.clone());
            match self.session.check_valid(&f, &p.inv_params, p)? {
                CheckResult::Unknown(why) => return Ok(Step::Done(InferOutcome::Unknown(why))),
                CheckResult::Counterexample(c) => {
                    debug!("precondition state {c} excluded by {inv}");
                    let run = record_states_from(&c, self.cfg.num_steps_on_restart, p, &mut self.session, self.deadline)?;
                    let before = self.z.len();
                    for s in run {
                        self.z.insert(s);
                    }
                    info!("restart with {} new states", self.z.len() - before);
                    return Ok(Step::Restart);
                }
                CheckResult::Valid if trivial => return Ok(Step::Done(InferOutcome::Solved(inv))),
                CheckResult::Valid => {}
            }
        }
    }
}

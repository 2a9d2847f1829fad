//! Sampling of reachable loop-head states.
//!
//! A run starts from a previously unseen model of the precondition and
//! follows the transition relation one model at a time. Several runs with
//! different seeds can be executed in parallel and merged in instance order.

use std::collections::{BTreeSet, HashSet};
use std::thread;
use std::time::Instant;

use log::{debug, warn};

use crate::config::Config;
use crate::error::SolverError;
use crate::problem::{primed, Problem};
use crate::solver::SolverSession;
use crate::term::{Relations, State, Term};

/// Distinct states in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateSet {
    states: Vec<State>,
    seen: HashSet<State>,
}

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `s` unless present; returns whether it was new.
    pub fn insert(&mut self, s: State) -> bool {
        if self.seen.contains(&s) {
            return false;
        }
        self.seen.insert(s.clone());
        self.states.push(s);
        true
    }

    pub fn contains(&self, s: &State) -> bool {
        self.seen.contains(s)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, State> {
        self.states.iter()
    }

    pub fn as_slice(&self) -> &[State] {
        &self.states
    }
}

impl FromIterator<State> for StateSet {
    fn from_iter<T: IntoIterator<Item = State>>(iter: T) -> Self {
        let mut set = StateSet::new();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl<'a> IntoIterator for &'a StateSet {
    type Item = &'a State;
    type IntoIter = std::slice::Iter<'a, State>;
    fn into_iter(self) -> Self::IntoIter {
        self.states.iter()
    }
}

/// Result of one sampling instance: the distinct states plus the raw runs
/// (each a precondition model followed by its successors).
#[derive(Debug, Clone, Default)]
pub struct Recording {
    pub states: StateSet,
    pub runs: Vec<Vec<State>>,
}

fn deadline_passed(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Sends the problem's relation definitions to the session.
pub fn prepare_session(p: &Problem, session: &mut SolverSession) -> Result<(), SolverError> {
    session.define_relations(p.aux.iter().chain([&p.pre, &p.trans, &p.post]))
}

/// Follows the transition relation from `m` for at most `k` states in total.
///
/// The run also stops at the first exact repeat: from a repeated state the
/// solver would be asked the same question again.
pub fn record_states_from(
    m: &State,
    k: usize,
    p: &Problem,
    session: &mut SolverSession,
    deadline: Option<Instant>,
) -> Result<Vec<State>, SolverError> {
    let next_vars: Vec<_> = p.inv_params.iter().map(|(n, s)| (primed(n), *s)).collect();
    let mut run = vec![m.clone()];
    let mut current = m.clone();
    while run.len() < k && !deadline_passed(deadline) {
        let args = p
            .inv_params
            .iter()
            .map(|(n, _)| current.get(n).map(|v| v.to_term()))
            .chain(next_vars.iter().map(|(n, _)| Some(Term::var(n.as_str()))))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| SolverError::Protocol(format!("state {current} is not total")))?;
        let step = Term::Call(p.trans.name.clone(), args);
        let Some(succ) = session.get_model(&step, &next_vars, p)? else {
            break;
        };
        let next = succ.rename(|n| n.strip_suffix('!').unwrap_or(n).to_string());
        if run.contains(&next) {
            break;
        }
        run.push(next.clone());
        current = next;
    }
    Ok(run)
}

/// Collects up to `n` distinct reachable states.
///
/// Solver failures end sampling early; whatever was collected is returned.
pub fn record(
    p: &Problem,
    n: usize,
    session: &mut SolverSession,
    deadline: Option<Instant>,
) -> Recording {
    let mut rec = Recording::default();
    if let Err(e) = record_into(p, n, session, deadline, &mut rec) {
        warn!("sampling stopped early: {e}");
    }
    rec
}

fn record_into(
    p: &Problem,
    n: usize,
    session: &mut SolverSession,
    deadline: Option<Instant>,
    rec: &mut Recording,
) -> Result<(), SolverError> {
    prepare_session(p, session)?;
    let pre_vars: BTreeSet<String> = p
        .pre_call()
        .inline(p as &dyn Relations)
        .map(|t| t.free_vars())
        .unwrap_or_default();
    let projection: Vec<&str> = p.var_names().filter(|v| pre_vars.contains(*v)).collect();
    let mut excluded: Vec<State> = Vec::new();
    let mut excluded_seen: HashSet<State> = HashSet::new();

    while rec.states.len() < n && !deadline_passed(deadline) {
        for s in rec.states.iter() {
            let proj = s.project(projection.iter().copied());
            if excluded_seen.insert(proj.clone()) {
                excluded.push(proj);
            }
        }
        let unseen = excluded.iter().map(|s| Term::not(s.to_equalities()));
        let constraint = Term::and(std::iter::once(p.pre_call()).chain(unseen).collect());
        let Some(start) = session.get_model(&constraint, &p.inv_params, p)? else {
            break;
        };
        let budget = n - rec.states.len();
        let run = record_states_from(&start, budget, p, session, deadline)?;
        for s in &run {
            if rec.states.len() >= n {
                break;
            }
            rec.states.insert(s.clone());
        }
        rec.runs.push(run);
    }
    debug!("recorded {} states in {} runs", rec.states.len(), rec.runs.len());
    Ok(())
}

/// Concatenates runs in order, keeping the first occurrence of each state.
pub fn merge_parallel<'a>(runs: impl IntoIterator<Item = &'a StateSet>) -> StateSet {
    runs.into_iter().flat_map(|r| r.iter().cloned()).collect()
}

/// Runs `cfg.record_instances` samplers in parallel and merges them.
pub fn record_parallel(
    p: &Problem,
    cfg: &Config,
    deadline: Option<Instant>,
) -> Result<(StateSet, Vec<Recording>), SolverError> {
    let k = cfg.record_instances.max(1);
    let budgets: Vec<usize> = (0..k)
        .map(|i| cfg.num_states / k + usize::from(i < cfg.num_states % k))
        .collect();
    let results: Vec<Result<Recording, SolverError>> = thread::scope(|scope| {
        let handles: Vec<_> = budgets
            .iter()
            .enumerate()
            .map(|(i, &budget)| {
                scope.spawn(move || {
                    let mut session =
                        SolverSession::spawn(&cfg.solver_path, cfg.query_timeout, cfg.seed(i))?;
                    Ok(record(p, budget, &mut session, deadline))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling thread panicked"))
            .collect()
    });
    let recordings = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let merged = merge_parallel(recordings.iter().map(|r| &r.states));
    Ok((merged, recordings))
}

/// Checks a run by evaluation: the head satisfies P and each step satisfies T.
pub fn check_replay(p: &Problem, run: &[State]) -> Result<(), String> {
    let Some(head) = run.first() else {
        return Ok(());
    };
    match p.pre_call().holds(head, p) {
        Ok(true) => {}
        other => return Err(format!("head {head} does not satisfy the precondition ({other:?})")),
    }
    for pair in run.windows(2) {
        if !transition_holds(p, &pair[0], &pair[1]) {
            return Err(format!("{} -> {} is not a transition", pair[0], pair[1]));
        }
    }
    Ok(())
}

/// Whether `T(from, to)` holds under evaluation.
pub fn transition_holds(p: &Problem, from: &State, to: &State) -> bool {
    let mut both = from.clone();
    for (n, v) in to.iter() {
        both.insert(primed(n), v.clone());
    }
    p.trans_call().holds(&both, p).unwrap_or(false)
}

//! Independent check of the three sufficiency conditions of an invariant.

use std::fmt;
use std::path::Path;
use std::time::Duration;

use crate::error::SolverError;
use crate::problem::{primed, Problem};
use crate::solver::{CheckResult, SolverSession};
use crate::term::{State, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    /// `P(s) => I(s)`
    pub weaker_than_pre: CheckResult,
    /// `I(s) and T(s, t) => I(t)`; a counterexample holds `s` unprimed and `t` primed.
    pub inductive: CheckResult,
    /// `I(s) => Q(s)`
    pub stronger_than_post: CheckResult,
    pub overall: bool,
}

impl VerificationReport {
    pub fn conditions(&self) -> [(&'static str, &CheckResult); 3] {
        [
            ("weaker_than_pre", &self.weaker_than_pre),
            ("inductive", &self.inductive),
            ("stronger_than_post", &self.stronger_than_post),
        ]
    }

    /// Whether some condition could not be decided.
    pub fn has_unknown(&self) -> bool {
        self.conditions()
            .iter()
            .any(|(_, c)| matches!(c, CheckResult::Unknown(_)))
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, res) in self.conditions() {
            match res {
                CheckResult::Valid => writeln!(f, "{name}: valid")?,
                CheckResult::Counterexample(s) => writeln!(f, "{name}: counterexample {s}")?,
                CheckResult::Unknown(why) => writeln!(f, "{name}: unknown ({why})")?,
            }
        }
        write!(f, "overall: {}", if self.overall { "pass" } else { "fail" })
    }
}

/// `t` over the primed copies of its variables.
pub fn prime_term(t: &Term) -> Term {
    t.rename(|v| Some(primed(v)))
}

/// Splits a state over unprimed and primed variables into the pair `(s, t)`.
pub fn split_pair(p: &Problem, both: &State) -> (State, State) {
    let pre = both.project(p.var_names());
    let post = p
        .var_names()
        .filter_map(|n| both.get(&primed(n)).map(|v| (n.to_string(), v.clone())))
        .collect();
    (pre, post)
}

/// Re-checks a reported counterexample by evaluation; anything the
/// evaluator does not confirm is downgraded to unknown.
fn confirm(formula: &Term, res: CheckResult, p: &Problem) -> CheckResult {
    match res {
        CheckResult::Counterexample(s) => match formula.holds(&s, p) {
            Ok(false) => CheckResult::Counterexample(s),
            other => CheckResult::Unknown(format!(
                "solver counterexample {s} not confirmed by evaluation ({other:?})"
            )),
        },
        other => other,
    }
}

/// Checks `inv` against `p` in the given session.
pub fn check_invariant_in(
    p: &Problem,
    inv: &Term,
    session: &mut SolverSession,
) -> Result<VerificationReport, SolverError> {
    let inv = inv
        .inline(p)
        .map_err(|e| SolverError::Protocol(format!("cannot inline invariant: {e}")))?;
    let pre = p.pre_call();
    let post = p.post_call();
    let trans = p.trans_call();

    let vars = &p.inv_params;
    let f_pre = Term::implies(pre, inv.clone());
    let weaker_than_pre = confirm(&f_pre, session.check_valid(&f_pre, vars, p)?, p);

    let f_ind = Term::implies(Term::and(vec![inv.clone(), trans]), prime_term(&inv));
    let inductive = confirm(&f_ind, session.check_valid(&f_ind, &p.trans_vars(), p)?, p);

    let f_post = Term::implies(inv, post);
    let stronger_than_post = confirm(&f_post, session.check_valid(&f_post, vars, p)?, p);

    let overall = weaker_than_pre.is_valid() && inductive.is_valid() && stronger_than_post.is_valid();
    Ok(VerificationReport {
        weaker_than_pre,
        inductive,
        stronger_than_post,
        overall,
    })
}

/// Checks `inv` against `p` in a fresh solver session.
pub fn check_invariant(
    p: &Problem,
    inv: &Term,
    solver: &Path,
    timeout: Duration,
    seed: u64,
) -> Result<VerificationReport, SolverError> {
    let mut session = SolverSession::spawn(solver, timeout, seed)?;
    check_invariant_in(p, inv, &mut session)
}

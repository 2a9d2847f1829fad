//! SMT-LIB 2 solver subprocess with incremental scopes.
//!
//! Every command is answered (`:print-success true`), so requests and
//! responses stay in lockstep. A response that never arrives kills the
//! process and poisons the session.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use log::trace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::problem::render_params;
use crate::sexp::{self, Sexp, SexpKind};
use crate::term::{RelationDef, Relations, Sort, State, Term, Value};

/// Range for pseudo-random completion of unconstrained integers.
pub const RANDOM_INT_MIN: i64 = -1024;
pub const RANDOM_INT_MAX: i64 = 1023;

/// Slack on top of the solver-side timeout before the process is declared hung.
const WALL_SLACK: Duration = Duration::from_secs(3);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

/// Outcome of a validity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult {
    Valid,
    Counterexample(State),
    Unknown(String),
}

impl CheckResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, CheckResult::Valid)
    }

    pub fn counterexample(&self) -> Option<&State> {
        match self {
            CheckResult::Counterexample(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Scope {
    declared: Vec<(String, Sort)>,
    defined: Vec<String>,
}

pub struct SolverSession {
    path: PathBuf,
    child: Child,
    stdin: BufWriter<ChildStdin>,
    responses: Receiver<std::io::Result<String>>,
    /// `scopes[0]` is the base level; `scopes.len() - 1` is the push depth.
    scopes: Vec<Scope>,
    rng: ChaCha8Rng,
    timeout: Duration,
    poisoned: bool,
}

impl std::fmt::Debug for SolverSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverSession")
            .field("path", &self.path)
            .field("depth", &self.depth())
            .field("poisoned", &self.poisoned)
            .finish()
    }
}

fn solver_args(path: &Path) -> Vec<&'static str> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    if name.contains("cvc") {
        vec!["--incremental", "--lang=smt2"]
    } else {
        vec!["-in"]
    }
}

/// Splits the solver's output stream into top-level S-expressions.
fn read_responses(out: impl std::io::Read, tx: mpsc::Sender<std::io::Result<String>>) {
    let mut reader = BufReader::new(out);
    let mut buf = String::new();
    let mut depth = 0usize;
    let mut in_str = false;
    let mut in_quote = false;
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => return,
            Ok(_) => {}
            Err(e) => {
                let _ = tx.send(Err(e));
                return;
            }
        }
        for c in line.chars() {
            if in_str {
                buf.push(c);
                if c == '"' {
                    in_str = false;
                }
                continue;
            }
            if in_quote {
                buf.push(c);
                if c == '|' {
                    in_quote = false;
                }
                continue;
            }
            match c {
                '"' => {
                    in_str = true;
                    buf.push(c);
                }
                '|' => {
                    in_quote = true;
                    buf.push(c);
                }
                '(' => {
                    depth += 1;
                    buf.push(c);
                }
                ')' => {
                    depth = depth.saturating_sub(1);
                    buf.push(c);
                    if depth == 0 && tx.send(Ok(std::mem::take(&mut buf))).is_err() {
                        return;
                    }
                }
                c if c.is_whitespace() => {
                    if depth == 0 {
                        if !buf.trim().is_empty() && tx.send(Ok(std::mem::take(&mut buf))).is_err() {
                            return;
                        }
                        buf.clear();
                    } else {
                        buf.push(c);
                    }
                }
                c => buf.push(c),
            }
        }
    }
}

/// Parses a model value such as `3`, `(- 3)` or `true`.
pub fn parse_value(s: &Sexp) -> Option<Value> {
    match &s.kind {
        SexpKind::Atom(a) => match a.as_str() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            a => a.parse().ok().map(Value::Int),
        },
        SexpKind::List(items) => match items.as_slice() {
            [op, inner] if op.atom() == Some("-") => match parse_value(inner)? {
                Value::Int(i) => Some(Value::Int(-i)),
                Value::Bool(_) => None,
            },
            _ => None,
        },
        SexpKind::Str(_) => None,
    }
}

impl SolverSession {
    /// Starts a solver process and configures it for incremental model queries.
    pub fn spawn(path: &Path, timeout: Duration, seed: u64) -> Result<Self, SolverError> {
        let mut child = Command::new(path)
            .args(solver_args(path))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn {
                path: path.display().to_string(),
                source,
            })?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("solver-reader".into())
            .spawn(move || read_responses(stdout, tx))?;
        let mut session = SolverSession {
            path: path.to_path_buf(),
            child,
            stdin,
            responses: rx,
            scopes: vec![Scope::default()],
            rng: ChaCha8Rng::seed_from_u64(seed),
            timeout,
            poisoned: false,
        };
        session.command("(set-option :print-success true)")?;
        session.command("(set-option :produce-models true)")?;
        // Solver-side limit; not every solver understands this option.
        let _ = session.command(&format!("(set-option :timeout {})", timeout.as_millis()));
        session.command("(set-logic LIA)")?;
        Ok(session)
    }

    pub fn depth(&self) -> usize {
        self.scopes.len() - 1
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    pub fn declared(&self) -> BTreeSet<String> {
        self.scopes
            .iter()
            .flat_map(|s| s.declared.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    fn is_declared(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.declared.iter().any(|(n, _)| n == name))
    }

    fn is_defined(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.defined.iter().any(|n| n == name))
    }

    pub fn random_value(&mut self, sort: Sort) -> Value {
        match sort {
            Sort::Int => Value::Int(self.rng.gen_range(RANDOM_INT_MIN..=RANDOM_INT_MAX).into()),
            Sort::Bool => Value::Bool(self.rng.gen_bool(0.5)),
        }
    }

    fn send(&mut self, cmd: &str, wait: Duration) -> Result<Sexp, SolverError> {
        if self.poisoned {
            return Err(SolverError::Poisoned);
        }
        trace!("solver <- {cmd}");
        if let Err(e) = writeln!(self.stdin, "{cmd}").and_then(|_| self.stdin.flush()) {
            self.poisoned = true;
            return Err(e.into());
        }
        let text = match self.responses.recv_timeout(wait) {
            Ok(Ok(text)) => text,
            Ok(Err(e)) => {
                self.poisoned = true;
                return Err(e.into());
            }
            Err(RecvTimeoutError::Timeout) => {
                self.poisoned = true;
                let _ = self.child.kill();
                return Err(SolverError::Timeout(wait.as_millis() as u64));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.poisoned = true;
                return Err(SolverError::Protocol("solver exited".into()));
            }
        };
        trace!("solver -> {text}");
        let resp = sexp::parse_one(&text).map_err(|e| {
            self.poisoned = true;
            SolverError::Protocol(format!("unreadable response `{text}`: {e}"))
        })?;
        if resp.head() == Some("error") {
            let msg = resp.list().unwrap().get(1).map(|m| match &m.kind {
                SexpKind::Str(s) => s.clone(),
                _ => m.to_string(),
            });
            return Err(SolverError::Solver(msg.unwrap_or_default()));
        }
        Ok(resp)
    }

    fn command_wait(&self) -> Duration {
        self.timeout + WALL_SLACK
    }

    /// Sends a command that answers `success`.
    fn command(&mut self, cmd: &str) -> Result<(), SolverError> {
        let resp = self.send(cmd, self.command_wait())?;
        if resp.atom() == Some("success") {
            Ok(())
        } else {
            self.poisoned = true;
            Err(SolverError::Protocol(format!("expected `success`, got `{resp}`")))
        }
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        self.command("(push 1)")?;
        self.scopes.push(Scope::default());
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SolverError> {
        if self.depth() == 0 {
            return Err(SolverError::ScopeUnderflow);
        }
        self.command("(pop 1)")?;
        self.scopes.pop();
        Ok(())
    }

    /// Declares a constant unless it is already visible.
    pub fn declare(&mut self, name: &str, sort: Sort) -> Result<(), SolverError> {
        if self.is_declared(name) {
            return Ok(());
        }
        self.command(&format!("(declare-fun {} () {sort})", Term::var(name)))?;
        self.scopes.last_mut().unwrap().declared.push((name.to_string(), sort));
        Ok(())
    }

    /// Sends relation definitions at the current scope, callees first.
    pub fn define_relations<'a>(
        &mut self,
        defs: impl IntoIterator<Item = &'a RelationDef>,
    ) -> Result<(), SolverError> {
        let defs: Vec<&RelationDef> = defs.into_iter().collect();
        let mut done: BTreeSet<String> = BTreeSet::new();
        fn visit<'a>(
            d: &'a RelationDef,
            all: &[&'a RelationDef],
            done: &mut BTreeSet<String>,
            order: &mut Vec<&'a RelationDef>,
        ) {
            if !done.insert(d.name.clone()) {
                return;
            }
            let mut callees = BTreeSet::new();
            d.body.callees(&mut callees);
            for c in callees {
                if let Some(cd) = all.iter().find(|x| x.name == c) {
                    visit(cd, all, done, order);
                }
            }
            order.push(d);
        }
        let mut order = Vec::new();
        for d in &defs {
            visit(d, &defs, &mut done, &mut order);
        }
        for d in order {
            if self.is_defined(&d.name) {
                continue;
            }
            self.command(&format!(
                "(define-fun {} ({}) {} {})",
                Term::var(d.name.as_str()),
                render_params(&d.params),
                d.ret,
                d.body
            ))?;
            self.scopes.last_mut().unwrap().defined.push(d.name.clone());
        }
        Ok(())
    }

    /// Inlines calls the solver does not know about.
    fn prepare(&self, t: &Term, rels: &dyn Relations) -> Result<Term, SolverError> {
        let mut callees = BTreeSet::new();
        t.callees(&mut callees);
        if callees.iter().all(|c| self.is_defined(c)) {
            Ok(t.clone())
        } else {
            t.inline(rels)
                .map_err(|e| SolverError::Protocol(format!("cannot inline query: {e}")))
        }
    }

    pub fn assert(&mut self, t: &Term) -> Result<(), SolverError> {
        self.command(&format!("(assert {t})"))
    }

    pub fn check_sat(&mut self) -> Result<SatResult, SolverError> {
        let resp = self.send("(check-sat)", self.timeout + WALL_SLACK)?;
        match resp.atom() {
            Some("sat") => Ok(SatResult::Sat),
            Some("unsat") => Ok(SatResult::Unsat),
            Some("unknown") => Ok(SatResult::Unknown),
            _ => {
                self.poisoned = true;
                Err(SolverError::Protocol(format!("unexpected check-sat answer `{resp}`")))
            }
        }
    }

    /// Values of `terms` in the current model (after a `sat` answer).
    pub fn get_values(&mut self, terms: &[Term]) -> Result<Vec<Value>, SolverError> {
        if terms.is_empty() {
            return Ok(vec![]);
        }
        let list = terms.iter().map(Term::to_string).collect::<Vec<_>>().join(" ");
        let resp = self.send(&format!("(get-value ({list}))"), self.command_wait())?;
        let pairs = resp
            .list()
            .filter(|l| l.len() == terms.len())
            .ok_or_else(|| SolverError::Protocol(format!("malformed get-value answer `{resp}`")))?;
        pairs
            .iter()
            .map(|p| match p.list() {
                Some([_, v]) => parse_value(v),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                self.poisoned = true;
                SolverError::Protocol(format!("malformed get-value answer `{resp}`"))
            })
    }

    /// A total state over `vars` satisfying `constraint`, or `None` if unsatisfiable.
    ///
    /// Variables that do not occur in the (inlined) constraint are filled from
    /// the session's PRNG. A solver `unknown` is an error.
    pub fn get_model(
        &mut self,
        constraint: &Term,
        vars: &[(String, Sort)],
        rels: &dyn Relations,
    ) -> Result<Option<State>, SolverError> {
        let inlined = constraint
            .inline(rels)
            .map_err(|e| SolverError::Protocol(format!("cannot inline query: {e}")))?;
        let constrained = inlined.free_vars();
        for (n, s) in vars {
            self.declare(n, *s)?;
        }
        for v in &constrained {
            if !vars.iter().any(|(n, _)| n == v) && !self.is_declared(v) {
                return Err(SolverError::Protocol(format!("query mentions undeclared `{v}`")));
            }
        }
        let query = self.prepare(constraint, rels)?;
        self.push()?;
        let answer = self.solve_in_scope(&query, vars, &constrained);
        // The pop must happen even when the query failed, unless the process is gone.
        if !self.poisoned {
            self.pop()?;
        }
        let Some(solved) = answer? else {
            return Ok(None);
        };
        let mut state = State::new();
        for (n, s) in vars {
            match solved.get(n) {
                Some(v) => state.insert(n.clone(), v.clone()),
                None => {
                    let v = self.random_value(*s);
                    state.insert(n.clone(), v);
                }
            }
        }
        if let Ok(false) = inlined.holds(&state, &crate::term::NoRelations) {
            return Err(SolverError::Protocol(format!(
                "model {state} does not satisfy `{constraint}`"
            )));
        }
        Ok(Some(state))
    }

    fn solve_in_scope(
        &mut self,
        query: &Term,
        vars: &[(String, Sort)],
        constrained: &BTreeSet<String>,
    ) -> Result<Option<State>, SolverError> {
        self.assert(query)?;
        match self.check_sat()? {
            SatResult::Unsat => Ok(None),
            SatResult::Unknown => Err(SolverError::Unknown(format!("while solving `{query}`"))),
            SatResult::Sat => {
                let asked: Vec<&(String, Sort)> =
                    vars.iter().filter(|(n, _)| constrained.contains(n)).collect();
                let terms: Vec<Term> = asked.iter().map(|(n, _)| Term::var(n.as_str())).collect();
                let values = self.get_values(&terms)?;
                Ok(Some(
                    asked
                        .into_iter()
                        .zip(values)
                        .map(|((n, _), v)| (n.clone(), v))
                        .collect(),
                ))
            }
        }
    }

    /// Checks that `formula` holds for all values of `vars`.
    ///
    /// A counterexample is a total state over `vars` falsifying the formula.
    pub fn check_valid(
        &mut self,
        formula: &Term,
        vars: &[(String, Sort)],
        rels: &dyn Relations,
    ) -> Result<CheckResult, SolverError> {
        match self.get_model(&Term::not(formula.clone()), vars, rels) {
            Ok(None) => Ok(CheckResult::Valid),
            Ok(Some(s)) => Ok(CheckResult::Counterexample(s)),
            Err(e) if e.is_unknown() => Ok(CheckResult::Unknown(e.to_string())),
            Err(e) => Err(e),
        }
    }

    /// Evaluates ground `terms` under `state` using the solver.
    pub fn eval_under(
        &mut self,
        terms: &[Term],
        state: &State,
        rels: &dyn Relations,
    ) -> Result<Vec<Value>, SolverError> {
        for (n, v) in state.iter() {
            self.declare(n, v.sort())?;
        }
        let prepared = terms
            .iter()
            .map(|t| self.prepare(t, rels))
            .collect::<Result<Vec<_>, _>>()?;
        self.push()?;
        let res = (|| {
            self.assert(&state.to_equalities())?;
            match self.check_sat()? {
                SatResult::Sat => self.get_values(&prepared),
                other => Err(SolverError::Protocol(format!("ground assignment answered {other:?}"))),
            }
        })();
        if !self.poisoned {
            self.pop()?;
        }
        res
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        if !self.poisoned {
            let _ = writeln!(self.stdin, "(exit)").and_then(|_| self.stdin.flush());
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

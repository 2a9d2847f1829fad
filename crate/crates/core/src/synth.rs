//! Bottom-up enumerative synthesis of separating features.
//!
//! Integer terms are built by size from variables and constants with `+`,
//! `-` and multiplication by a constant. Terms that agree on every state of
//! the conflict group are merged (only the first, smallest one is kept), and
//! syntactically redundant shapes are dropped before evaluation. Boolean
//! features compare two integer terms, possibly under `not`.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::problem::Problem;
use crate::term::{Op, Sort, State, Term, Value};

/// Positive and negative states that the current features cannot tell apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGroup {
    pub positives: Vec<State>,
    pub negatives: Vec<State>,
}

/// Leaves of the feature language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub int_vars: Vec<String>,
    pub bool_vars: Vec<String>,
    /// Always starts with 0, 1, -1.
    pub constants: Vec<BigInt>,
}

impl Grammar {
    pub fn new(vars: &[(String, Sort)], extra_constants: impl IntoIterator<Item = BigInt>) -> Self {
        let mut constants = vec![BigInt::zero(), BigInt::one(), -BigInt::one()];
        let extra: BTreeSet<BigInt> = extra_constants.into_iter().collect();
        for c in extra {
            if !constants.contains(&c) {
                constants.push(c);
            }
        }
        Grammar {
            int_vars: vars
                .iter()
                .filter(|(_, s)| *s == Sort::Int)
                .map(|(n, _)| n.clone())
                .collect(),
            bool_vars: vars
                .iter()
                .filter(|(_, s)| *s == Sort::Bool)
                .map(|(n, _)| n.clone())
                .collect(),
            constants,
        }
    }

    /// Variables of the problem plus the constants appearing in its definitions.
    pub fn for_problem(p: &Problem) -> Self {
        Grammar::new(&p.inv_params, p.constants())
    }
}

const COMPARISONS: [Op; 5] = [Op::Eq, Op::Lt, Op::Le, Op::Gt, Op::Ge];

fn is_lit(t: &Term, v: i64) -> bool {
    matches!(t, Term::Int(i) if *i == BigInt::from(v))
}

/// A strictly smaller term equivalent to `t`, if the top of `t` has a
/// redundant shape.
fn reduce_top(t: &Term) -> Option<Term> {
    let Term::App(op, args) = t else {
        return None;
    };
    match (op, args.as_slice()) {
        (Op::Add, [a, b]) if is_lit(b, 0) => Some(a.clone()),
        (Op::Add, [a, b]) if is_lit(a, 0) => Some(b.clone()),
        // (e - x) + x  and  x + (e - x)
        (Op::Add, [Term::App(Op::Sub, inner), x]) | (Op::Add, [x, Term::App(Op::Sub, inner)])
            if inner.len() == 2 && inner[1] == *x =>
        {
            Some(inner[0].clone())
        }
        (Op::Sub, [a, b]) if is_lit(b, 0) => Some(a.clone()),
        (Op::Sub, [a, b]) if a == b => Some(Term::int(0)),
        // (e + x) - x  and  (x + e) - x
        (Op::Sub, [Term::App(Op::Add, inner), x]) if inner.len() == 2 && inner[1] == *x => {
            Some(inner[0].clone())
        }
        (Op::Sub, [Term::App(Op::Add, inner), x]) if inner.len() == 2 && inner[0] == *x => {
            Some(inner[1].clone())
        }
        (Op::Mul, [a, b]) if is_lit(a, 1) => Some(b.clone()),
        (Op::Mul, [a, b]) if is_lit(b, 1) => Some(a.clone()),
        (Op::Mul, [a, b]) if is_lit(a, 0) || is_lit(b, 0) => Some(Term::int(0)),
        (Op::Not, [Term::App(Op::Not, inner)]) if inner.len() == 1 => Some(inner[0].clone()),
        (Op::Eq | Op::Le | Op::Ge, [a, b]) if a == b => Some(Term::Bool(true)),
        (Op::Lt | Op::Gt, [a, b]) if a == b => Some(Term::Bool(false)),
        _ => None,
    }
}

/// Rewrites the first redundant subterm (pre-order) into its smaller equivalent.
pub fn reduce_redundant(t: &Term) -> Option<Term> {
    if let Some(r) = reduce_top(t) {
        return Some(r);
    }
    match t {
        Term::App(op, args) => args.iter().enumerate().find_map(|(i, a)| {
            reduce_redundant(a).map(|r| {
                let mut args = args.clone();
                args[i] = r;
                Term::App(*op, args)
            })
        }),
        _ => None,
    }
}

/// Whether `t` contains a redundant shape and can be skipped.
pub fn prune_redundant(t: &Term) -> bool {
    reduce_redundant(t).is_some()
}

struct Cand {
    term: Term,
    vals: Vec<BigInt>,
}

/// Finds a minimum-size feature true on all positives and false on all negatives.
///
/// Sizes count AST nodes of the whole feature; `None` means no feature of at
/// most `max_size` nodes exists (or the deadline passed).
pub fn synthesize_feature(
    group: &ConflictGroup,
    grammar: &Grammar,
    max_size: usize,
    deadline: Option<Instant>,
) -> Option<Term> {
    if group.positives.is_empty() || group.negatives.is_empty() {
        return None;
    }
    let states: Vec<&State> = group.positives.iter().chain(&group.negatives).collect();
    let target: Vec<bool> = (0..states.len()).map(|i| i < group.positives.len()).collect();
    // identical states on both sides cannot be separated
    let pos: HashSet<&State> = group.positives.iter().collect();
    if group.negatives.iter().any(|n| pos.contains(n)) {
        return None;
    }
    Enumerator {
        grammar,
        states,
        target,
        ints: vec![Vec::new()],
        seen: HashSet::new(),
        deadline,
    }
    .run(max_size)
}

struct Enumerator<'a> {
    grammar: &'a Grammar,
    states: Vec<&'a State>,
    target: Vec<bool>,
    /// `ints[s]` holds the kept integer terms of size `s`.
    ints: Vec<Vec<Cand>>,
    seen: HashSet<Vec<BigInt>>,
    deadline: Option<Instant>,
}

impl Enumerator<'_> {
    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run(&mut self, max_size: usize) -> Option<Term> {
        for size in 1..=max_size {
            if self.timed_out() {
                return None;
            }
            while self.ints.len() < size.saturating_sub(1) {
                let next = self.ints.len();
                self.grow_ints(next);
            }
            if let Some(t) = self.bools_of_size(size) {
                return Some(t);
            }
        }
        None
    }

    fn keep(&mut self, term: Term, vals: Vec<BigInt>, size: usize) {
        if self.seen.insert(vals.clone()) {
            self.ints[size].push(Cand { term, vals });
        }
    }

    /// Builds all kept integer terms of exactly `size` nodes.
    fn grow_ints(&mut self, size: usize) {
        self.ints.push(Vec::new());
        if size == 0 {
            return;
        }
        if size == 1 {
            for v in &self.grammar.int_vars {
                let vals: Option<Vec<BigInt>> = self
                    .states
                    .iter()
                    .map(|s| s.get(v).and_then(Value::as_int).cloned())
                    .collect();
                if let Some(vals) = vals {
                    self.keep(Term::var(v.as_str()), vals, 1);
                }
            }
            for c in self.grammar.constants.clone() {
                let vals = vec![c.clone(); self.states.len()];
                self.keep(Term::Int(c), vals, 1);
            }
            return;
        }
        let mut fresh: Vec<(Term, Vec<BigInt>)> = Vec::new();
        // a + b and a - b with |a| + |b| = size - 1
        for op in [Op::Add, Op::Sub] {
            for sa in 1..size - 1 {
                let sb = size - 1 - sa;
                if sb >= self.ints.len() - 1 || sa >= self.ints.len() - 1 {
                    continue;
                }
                for (ia, a) in self.ints[sa].iter().enumerate() {
                    for (ib, b) in self.ints[sb].iter().enumerate() {
                        if op == Op::Add && (sa, ia) > (sb, ib) {
                            continue;
                        }
                        let term = Term::app(op, vec![a.term.clone(), b.term.clone()]);
                        if prune_redundant(&term) {
                            continue;
                        }
                        let vals = a
                            .vals
                            .iter()
                            .zip(&b.vals)
                            .map(|(x, y)| if op == Op::Add { x + y } else { x - y })
                            .collect();
                        fresh.push((term, vals));
                    }
                }
            }
        }
        // c * e with |e| = size - 2
        if size >= 3 {
            for c in &self.grammar.constants {
                if c.is_zero() || c.is_one() {
                    continue;
                }
                for e in &self.ints[size - 2] {
                    let term = Term::app(Op::Mul, vec![Term::Int(c.clone()), e.term.clone()]);
                    if prune_redundant(&term) {
                        continue;
                    }
                    let vals = e.vals.iter().map(|x| c * x).collect();
                    fresh.push((term, vals));
                }
            }
        }
        for (term, vals) in fresh {
            self.keep(term, vals, size);
        }
    }

    fn matches(&self, f: impl Fn(usize) -> bool) -> bool {
        self.target.iter().enumerate().all(|(i, want)| f(i) == *want)
    }

    fn bools_of_size(&self, size: usize) -> Option<Term> {
        let bool_val = |v: &str, i: usize| {
            self.states[i]
                .get(v)
                .and_then(Value::as_bool)
                .unwrap_or(false)
        };
        if size == 1 {
            for v in &self.grammar.bool_vars {
                if self.matches(|i| bool_val(v, i)) {
                    return Some(Term::var(v.as_str()));
                }
            }
        }
        if size == 2 {
            for v in &self.grammar.bool_vars {
                if self.matches(|i| !bool_val(v, i)) {
                    return Some(Term::not(Term::var(v.as_str())));
                }
            }
        }
        if size >= 3 {
            if let Some(t) = self.comparisons(size - 1, false) {
                return Some(t);
            }
        }
        if size >= 4 {
            if let Some(t) = self.comparisons(size - 2, true) {
                return Some(t);
            }
        }
        None
    }

    /// Comparisons whose operands total `operand_size` nodes; `negated`
    /// searches `(not (= a b))` instead.
    fn comparisons(&self, operand_size: usize, negated: bool) -> Option<Term> {
        let ops: &[Op] = if negated { &[Op::Eq] } else { &COMPARISONS };
        for &op in ops {
            for sa in 1..operand_size {
                let sb = operand_size - sa;
                let (Some(la), Some(lb)) = (self.ints.get(sa), self.ints.get(sb)) else {
                    continue;
                };
                for a in la {
                    for b in lb {
                        if a.term == b.term {
                            continue;
                        }
                        let cmp = |i: usize| {
                            let (x, y) = (&a.vals[i], &b.vals[i]);
                            let r = match op {
                                Op::Eq => x == y,
                                Op::Lt => x < y,
                                Op::Le => x <= y,
                                Op::Gt => x > y,
                                _ => x >= y,
                            };
                            r != negated
                        };
                        if self.matches(cmp) {
                            let t = Term::app(op, vec![a.term.clone(), b.term.clone()]);
                            return Some(if negated { Term::not(t) } else { t });
                        }
                    }
                }
            }
        }
        None
    }
}

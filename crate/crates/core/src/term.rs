//! Terms over linear integer arithmetic and booleans.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
}

impl Sort {
    pub fn from_name(name: &str) -> Option<Sort> {
        match name {
            "Int" => Some(Sort::Int),
            "Bool" => Some(Sort::Bool),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Abs,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Implies,
    Ite,
}

impl Op {
    pub const ALL: [Op; 16] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Mod,
        Op::Abs,
        Op::Eq,
        Op::Lt,
        Op::Le,
        Op::Gt,
        Op::Ge,
        Op::And,
        Op::Or,
        Op::Not,
        Op::Implies,
        Op::Ite,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "div",
            Op::Mod => "mod",
            Op::Abs => "abs",
            Op::Eq => "=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
            Op::Implies => "=>",
            Op::Ite => "ite",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.iter().copied().find(|op| op.symbol() == s)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }

    /// Accepted argument counts as `(min, max)`.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Op::Add | Op::And | Op::Or | Op::Sub => (1, None),
            Op::Mul | Op::Eq | Op::Implies => (2, None),
            Op::Div | Op::Mod | Op::Lt | Op::Le | Op::Gt | Op::Ge => (2, Some(2)),
            Op::Abs | Op::Not => (1, Some(1)),
            Op::Ite => (3, Some(3)),
        }
    }
}

/// A concrete value of either sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(i) => Some(i),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(_) => None,
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Int(i) => Term::Int(i.clone()),
            Value::Bool(b) => Term::Bool(*b),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// A total assignment of values to variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State(BTreeMap<String, Value>);

impl State {
    pub fn new() -> Self {
        State(BTreeMap::new())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.0.insert(name.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    /// Restriction to the given names (absent names are skipped).
    pub fn project<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> State {
        State(
            names
                .into_iter()
                .filter_map(|n| self.0.get(n).map(|v| (n.to_string(), v.clone())))
                .collect(),
        )
    }

    /// Renames every binding through `f`, e.g. to move between primed and unprimed copies.
    pub fn rename(&self, f: impl Fn(&str) -> String) -> State {
        State(self.0.iter().map(|(k, v)| (f(k), v.clone())).collect())
    }

    /// Conjunction of `name = value` equalities, in name order.
    pub fn to_equalities(&self) -> Term {
        Term::and(
            self.0
                .iter()
                .map(|(k, v)| Term::app(Op::Eq, vec![Term::var(k), v.to_term()]))
                .collect(),
        )
    }
}

impl FromIterator<(String, Value)> for State {
    fn from_iter<T: IntoIterator<Item = (String, Value)>>(iter: T) -> Self {
        State(iter.into_iter().collect())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// A defined relation (or auxiliary function) from the problem file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

/// Access to relation definitions for evaluation and inlining.
pub trait Relations {
    fn relation(&self, name: &str) -> Option<&RelationDef>;
}

/// No relations in scope.
pub struct NoRelations;

impl Relations for NoRelations {
    fn relation(&self, _: &str) -> Option<&RelationDef> {
        None
    }
}

impl Relations for BTreeMap<String, RelationDef> {
    fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(BigInt),
    Bool(bool),
    Var(String),
    App(Op, Vec<Term>),
    /// Invocation of a defined relation; kept un-inlined until needed.
    Call(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(i: impl Into<BigInt>) -> Term {
        Term::Int(i.into())
    }

    pub fn app(op: Op, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        match t {
            Term::Bool(b) => Term::Bool(!b),
            t => Term::App(Op::Not, vec![t]),
        }
    }

    /// Conjunction; flattens the empty and singleton cases.
    pub fn and(mut args: Vec<Term>) -> Term {
        args.retain(|a| *a != Term::Bool(true));
        match args.len() {
            0 => Term::Bool(true),
            1 => args.pop().unwrap(),
            _ => Term::App(Op::And, args),
        }
    }

    /// Disjunction; flattens the empty and singleton cases.
    pub fn or(mut args: Vec<Term>) -> Term {
        args.retain(|a| *a != Term::Bool(false));
        match args.len() {
            0 => Term::Bool(false),
            1 => args.pop().unwrap(),
            _ => Term::App(Op::Or, args),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::App(Op::Implies, vec![a, b])
    }

    pub fn is_true(&self) -> bool {
        *self == Term::Bool(true)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Int(_) | Term::Bool(_) | Term::Var(_) => 1,
            Term::App(_, args) | Term::Call(_, args) => {
                1 + args.iter().map(Term::size).sum::<usize>()
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) | Term::Call(_, args) => {
                args.iter().for_each(|a| a.collect_vars(out));
            }
            _ => {}
        }
    }

    /// Integer literals occurring anywhere in the term.
    pub fn int_literals(&self, out: &mut BTreeSet<BigInt>) {
        match self {
            Term::Int(i) => {
                out.insert(i.clone());
            }
            Term::App(_, args) | Term::Call(_, args) => {
                args.iter().for_each(|a| a.int_literals(out));
            }
            _ => {}
        }
    }

    /// Names of relations called directly by this term.
    pub fn callees(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Call(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|a| a.callees(out));
            }
            Term::App(_, args) => args.iter().for_each(|a| a.callees(out)),
            _ => {}
        }
    }

    /// Simultaneous substitution of variables.
    pub fn substitute(&self, map: &HashMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(op, args) => Term::App(*op, args.iter().map(|a| a.substitute(map)).collect()),
            Term::Call(f, args) => {
                Term::Call(f.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            _ => self.clone(),
        }
    }

    /// Renames variables simultaneously.
    pub fn rename(&self, f: impl Fn(&str) -> Option<String>) -> Term {
        let mut map = HashMap::new();
        for v in self.free_vars() {
            if let Some(n) = f(&v) {
                map.insert(v, Term::Var(n));
            }
        }
        self.substitute(&map)
    }

    /// Replaces every relation call by its body, transitively.
    pub fn inline(&self, rels: &dyn Relations) -> Result<Term, EvalError> {
        match self {
            Term::App(op, args) => Ok(Term::App(
                *op,
                args.iter()
                    .map(|a| a.inline(rels))
                    .collect::<Result<_, _>>()?,
            )),
            Term::Call(f, args) => {
                let def = rels
                    .relation(f)
                    .ok_or_else(|| EvalError::UnknownRelation(f.clone()))?;
                if def.params.len() != args.len() {
                    return Err(EvalError::IllSorted(format!("arity mismatch calling `{f}`")));
                }
                let body = def.body.inline(rels)?;
                let map = def
                    .params
                    .iter()
                    .zip(args)
                    .map(|((p, _), a)| Ok((p.clone(), a.inline(rels)?)))
                    .collect::<Result<HashMap<_, _>, EvalError>>()?;
                Ok(body.substitute(&map))
            }
            _ => Ok(self.clone()),
        }
    }

    /// Computes the sort of a term, or reports why it is ill-sorted.
    pub fn sort(
        &self,
        vars: &dyn Fn(&str) -> Option<Sort>,
        rels: &dyn Relations,
    ) -> Result<Sort, SortError> {
        match self {
            Term::Int(_) => Ok(Sort::Int),
            Term::Bool(_) => Ok(Sort::Bool),
            Term::Var(v) => vars(v).ok_or_else(|| SortError::Unbound(v.clone())),
            Term::Call(f, args) => {
                let def = rels
                    .relation(f)
                    .ok_or_else(|| SortError::Unbound(f.clone()))?;
                if def.params.len() != args.len() {
                    return Err(SortError::Arity(format!(
                        "`{f}` expects {} arguments, got {}",
                        def.params.len(),
                        args.len()
                    )));
                }
                for ((p, s), a) in def.params.iter().zip(args) {
                    let got = a.sort(vars, rels)?;
                    if got != *s {
                        return Err(SortError::Mismatch(format!(
                            "argument `{p}` of `{f}` expects {s}, got {got}"
                        )));
                    }
                }
                Ok(def.ret)
            }
            Term::App(op, args) => {
                let sorts = args
                    .iter()
                    .map(|a| a.sort(vars, rels))
                    .collect::<Result<Vec<_>, _>>()?;
                check_app(*op, args, &sorts)
            }
        }
    }

    /// Evaluates under SMT-LIB semantics.
    pub fn eval(&self, state: &State, rels: &dyn Relations) -> Result<Value, EvalError> {
        match self {
            Term::Int(i) => Ok(Value::Int(i.clone())),
            Term::Bool(b) => Ok(Value::Bool(*b)),
            Term::Var(v) => state
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(v.clone())),
            Term::Call(f, args) => {
                let def = rels
                    .relation(f)
                    .ok_or_else(|| EvalError::UnknownRelation(f.clone()))?;
                if def.params.len() != args.len() {
                    return Err(EvalError::IllSorted(format!("arity mismatch calling `{f}`")));
                }
                let mut frame = State::new();
                for ((p, _), a) in def.params.iter().zip(args) {
                    frame.insert(p.clone(), a.eval(state, rels)?);
                }
                def.body.eval(&frame, rels)
            }
            Term::App(op, args) => eval_app(*op, args, state, rels),
        }
    }

    /// Evaluates a boolean-sorted term.
    pub fn holds(&self, state: &State, rels: &dyn Relations) -> Result<bool, EvalError> {
        self.eval(state, rels)?
            .as_bool()
            .ok_or_else(|| EvalError::IllSorted(format!("`{self}` is not boolean")))
    }
}

/// Why a term fails to sort-check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortError {
    Unbound(String),
    Arity(String),
    Mismatch(String),
    Nonlinear(String),
}

impl fmt::Display for SortError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortError::Unbound(name) => write!(f, "unbound symbol `{name}`"),
            SortError::Arity(m) | SortError::Mismatch(m) | SortError::Nonlinear(m) => f.write_str(m),
        }
    }
}

/// Sort of `(op args..)` given the argument sorts.
pub fn check_app(op: Op, args: &[Term], sorts: &[Sort]) -> Result<Sort, SortError> {
    let (min, max) = op.arity();
    if sorts.len() < min || max.is_some_and(|m| sorts.len() > m) {
        return Err(SortError::Arity(format!(
            "`{}` applied to {} argument(s)",
            op.symbol(),
            sorts.len()
        )));
    }
    let all = |s: Sort| sorts.iter().all(|x| *x == s);
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(SortError::Mismatch(format!("`{}` expects {what}", op.symbol())))
        }
    };
    match op {
        Op::Add | Op::Sub | Op::Abs => {
            need(all(Sort::Int), "Int arguments")?;
            Ok(Sort::Int)
        }
        Op::Mul => {
            need(all(Sort::Int), "Int arguments")?;
            let non_const = args.iter().filter(|a| !matches!(a, Term::Int(_))).count();
            if non_const > 1 {
                return Err(SortError::Nonlinear(
                    "`*` needs all but one argument to be a constant".into(),
                ));
            }
            Ok(Sort::Int)
        }
        Op::Div | Op::Mod => {
            need(all(Sort::Int), "Int arguments")?;
            if !matches!(args[1], Term::Int(_)) {
                return Err(SortError::Nonlinear(format!(
                    "divisor of `{}` must be a literal",
                    op.symbol()
                )));
            }
            Ok(Sort::Int)
        }
        Op::Lt | Op::Le | Op::Gt | Op::Ge => {
            need(all(Sort::Int), "Int arguments")?;
            Ok(Sort::Bool)
        }
        Op::Eq => {
            need(sorts.iter().all(|s| *s == sorts[0]), "arguments of one sort")?;
            Ok(Sort::Bool)
        }
        Op::And | Op::Or | Op::Not | Op::Implies => {
            need(all(Sort::Bool), "Bool arguments")?;
            Ok(Sort::Bool)
        }
        Op::Ite => {
            need(sorts[0] == Sort::Bool, "a Bool condition")?;
            need(sorts[1] == sorts[2], "branches of one sort")?;
            Ok(sorts[1])
        }
    }
}

fn eval_app(op: Op, args: &[Term], state: &State, rels: &dyn Relations) -> Result<Value, EvalError> {
    let ill = || EvalError::IllSorted(format!("bad arguments to `{}`", op.symbol()));
    let int = |t: &Term| -> Result<BigInt, EvalError> {
        match t.eval(state, rels)? {
            Value::Int(i) => Ok(i),
            Value::Bool(_) => Err(ill()),
        }
    };
    let boolean = |t: &Term| -> Result<bool, EvalError> {
        match t.eval(state, rels)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(ill()),
        }
    };
    match op {
        Op::Add => {
            let mut acc = BigInt::zero();
            for a in args {
                acc += int(a)?;
            }
            Ok(Value::Int(acc))
        }
        Op::Sub => {
            let first = int(&args[0])?;
            if args.len() == 1 {
                return Ok(Value::Int(-first));
            }
            let mut acc = first;
            for a in &args[1..] {
                acc -= int(a)?;
            }
            Ok(Value::Int(acc))
        }
        Op::Mul => {
            let mut acc = BigInt::one();
            for a in args {
                acc *= int(a)?;
            }
            Ok(Value::Int(acc))
        }
        Op::Div | Op::Mod => {
            let (m, n) = (int(&args[0])?, int(&args[1])?);
            let (q, r) = euclid_div_mod(&m, &n)?;
            Ok(Value::Int(if op == Op::Div { q } else { r }))
        }
        Op::Abs => Ok(Value::Int(int(&args[0])?.abs())),
        Op::Lt | Op::Le | Op::Gt | Op::Ge => {
            let (a, b) = (int(&args[0])?, int(&args[1])?);
            Ok(Value::Bool(match op {
                Op::Lt => a < b,
                Op::Le => a <= b,
                Op::Gt => a > b,
                _ => a >= b,
            }))
        }
        Op::Eq => {
            let first = args[0].eval(state, rels)?;
            let mut res = true;
            for a in &args[1..] {
                res &= a.eval(state, rels)? == first;
            }
            Ok(Value::Bool(res))
        }
        Op::And => {
            let mut res = true;
            for a in args {
                res &= boolean(a)?;
            }
            Ok(Value::Bool(res))
        }
        Op::Or => {
            let mut res = false;
            for a in args {
                res |= boolean(a)?;
            }
            Ok(Value::Bool(res))
        }
        Op::Not => Ok(Value::Bool(!boolean(&args[0])?)),
        Op::Implies => {
            // right-associative chain
            let mut res = boolean(args.last().unwrap())?;
            for a in args[..args.len() - 1].iter().rev() {
                res = !boolean(a)? || res;
            }
            Ok(Value::Bool(res))
        }
        Op::Ite => {
            if boolean(&args[0])? {
                args[1].eval(state, rels)
            } else {
                args[2].eval(state, rels)
            }
        }
    }
}

/// SMT-LIB integer division: `m = n*q + r` with `0 <= r < |n|`.
pub fn euclid_div_mod(m: &BigInt, n: &BigInt) -> Result<(BigInt, BigInt), EvalError> {
    if n.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    let r = m.mod_floor(&n.abs());
    let q = (m - &r) / n;
    Ok((q, r))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) if i.is_negative() => write!(f, "(- {})", -i),
            Term::Int(i) => write!(f, "{i}"),
            Term::Bool(b) => write!(f, "{b}"),
            Term::Var(v) => write_symbol(f, v),
            Term::App(op, args) => {
                write!(f, "({}", op.symbol())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Call(name, args) if args.is_empty() => write_symbol(f, name),
            Term::Call(name, args) => {
                f.write_str("(")?;
                write_symbol(f, name)?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_symbol(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let simple = !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars().all(|c| {
            c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
        });
    if simple {
        f.write_str(s)
    } else {
        write!(f, "|{s}|")
    }
}

/// Renders a term as SMT-LIB 2 text.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

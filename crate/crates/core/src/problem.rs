//! SyGuS-INV (v1) problems: parsing, validation and printing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::error::{ParseError, ParseErrorKind};
use crate::sexp::{self, Pos, Sexp, SexpKind};
use crate::term::{check_app, Op, RelationDef, Relations, Sort, SortError, Term};

/// Name of the post-transition copy of a variable.
pub fn primed(name: &str) -> String {
    format!("{name}!")
}

/// A parsed invariant-synthesis problem `<P, T, Q, aux>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub logic: String,
    pub inv_name: String,
    pub inv_params: Vec<(String, Sort)>,
    pub pre: RelationDef,
    pub trans: RelationDef,
    pub post: RelationDef,
    pub aux: Vec<RelationDef>,
}

impl Relations for Problem {
    fn relation(&self, name: &str) -> Option<&RelationDef> {
        [&self.pre, &self.trans, &self.post]
            .into_iter()
            .chain(self.aux.iter())
            .find(|r| r.name == name)
    }
}

impl Problem {
    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.inv_params.iter().map(|(n, _)| n.as_str())
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.inv_params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    /// State variables followed by their primed copies.
    pub fn trans_vars(&self) -> Vec<(String, Sort)> {
        self.inv_params
            .iter()
            .cloned()
            .chain(self.inv_params.iter().map(|(n, s)| (primed(n), *s)))
            .collect()
    }

    /// `P(x)` as a call over the state variables.
    pub fn pre_call(&self) -> Term {
        call_on(&self.pre, self.var_names())
    }

    pub fn post_call(&self) -> Term {
        call_on(&self.post, self.var_names())
    }

    /// `T(x, x!)` as a call.
    pub fn trans_call(&self) -> Term {
        let vars = self.trans_vars();
        call_on(&self.trans, vars.iter().map(|(n, _)| n.as_str()))
    }

    /// Integer literals appearing in any definition.
    pub fn constants(&self) -> BTreeSet<BigInt> {
        let mut out = BTreeSet::new();
        for r in [&self.pre, &self.trans, &self.post].into_iter().chain(&self.aux) {
            r.body.int_literals(&mut out);
        }
        out
    }

    /// Sort-checks `t` against the invariant signature.
    pub fn sort_check(&self, t: &Term) -> Result<Sort, SortError> {
        t.sort(&|v| self.sort_of(v), self)
    }

    /// `(define-fun <inv> (<params>) Bool <body>)`.
    pub fn render_invariant(&self, body: &Term) -> String {
        format!(
            "(define-fun {} ({}) Bool {})",
            self.inv_name,
            render_params(&self.inv_params),
            body
        )
    }

    /// Renders the problem back into SyGuS-INV text.
    pub fn to_sygus(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(set-logic {})", self.logic);
        let _ = writeln!(
            out,
            "(synth-inv {} ({}))",
            self.inv_name,
            render_params(&self.inv_params)
        );
        for (n, s) in &self.inv_params {
            let _ = writeln!(out, "(declare-primed-var {n} {s})");
        }
        for r in self.aux.iter().chain([&self.pre, &self.trans, &self.post]) {
            let _ = writeln!(out, "{}", render_def(r));
        }
        let _ = writeln!(
            out,
            "(inv-constraint {} {} {} {})",
            self.inv_name, self.pre.name, self.trans.name, self.post.name
        );
        out.push_str("(check-synth)\n");
        out
    }
}

fn call_on<'a>(def: &RelationDef, vars: impl Iterator<Item = &'a str>) -> Term {
    Term::Call(def.name.clone(), vars.map(Term::var).collect())
}

pub fn render_params(params: &[(String, Sort)]) -> String {
    params
        .iter()
        .map(|(n, s)| format!("({n} {s})"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_def(r: &RelationDef) -> String {
    format!(
        "(define-fun {} ({}) {} {})",
        r.name,
        render_params(&r.params),
        r.ret,
        r.body
    )
}

struct RawDef<'a> {
    name: String,
    params: Vec<(String, Sort)>,
    ret: Sort,
    body: &'a Sexp,
    pos: Pos,
}

fn err(pos: Pos, kind: ParseErrorKind, msg: impl Into<String>) -> ParseError {
    ParseError::with_kind(pos, kind, msg)
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    err(pos, ParseErrorKind::Syntax, msg)
}

fn expect_symbol(s: &Sexp, what: &str) -> Result<String, ParseError> {
    s.atom()
        .map(str::to_string)
        .ok_or_else(|| syntax(s.pos, format!("expected {what}")))
}

fn parse_sort(s: &Sexp) -> Result<Sort, ParseError> {
    let name = s
        .atom()
        .ok_or_else(|| err(s.pos, ParseErrorKind::Sort, format!("unsupported sort `{s}`")))?;
    Sort::from_name(name)
        .ok_or_else(|| err(s.pos, ParseErrorKind::Sort, format!("unsupported sort `{name}`")))
}

fn parse_params(s: &Sexp) -> Result<Vec<(String, Sort)>, ParseError> {
    let list = s
        .list()
        .ok_or_else(|| syntax(s.pos, "expected a parameter list"))?;
    let mut out: Vec<(String, Sort)> = Vec::new();
    for p in list {
        match p.list() {
            Some([name, sort]) => {
                let name = expect_symbol(name, "a parameter name")?;
                if out.iter().any(|(n, _)| *n == name) {
                    return Err(syntax(p.pos, format!("duplicate parameter `{name}`")));
                }
                out.push((name, parse_sort(sort)?));
            }
            _ => return Err(syntax(p.pos, "expected `(name Sort)`")),
        }
    }
    Ok(out)
}

/// Signature table used while converting S-expressions to terms.
struct Signatures {
    defs: BTreeMap<String, RelationDef>,
}

impl Relations for Signatures {
    fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.defs.get(name)
    }
}

fn sort_error(pos: Pos, e: SortError) -> ParseError {
    let kind = match e {
        SortError::Nonlinear(_) => ParseErrorKind::Nonlinear,
        SortError::Arity(_) => ParseErrorKind::Arity,
        SortError::Unbound(_) | SortError::Mismatch(_) => ParseErrorKind::Sort,
    };
    err(pos, kind, e.to_string())
}

fn parse_numeral(a: &str) -> Option<BigInt> {
    let digits = a.strip_prefix('-').unwrap_or(a);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    a.parse().ok()
}

/// Converts an S-expression into a well-sorted term.
fn to_term(
    s: &Sexp,
    vars: &dyn Fn(&str) -> Option<Sort>,
    sigs: &dyn Relations,
) -> Result<(Term, Sort), ParseError> {
    match &s.kind {
        SexpKind::Str(_) => Err(syntax(s.pos, "string literals are not supported")),
        SexpKind::Atom(a) => {
            if let Some(i) = parse_numeral(a) {
                return Ok((Term::Int(i), Sort::Int));
            }
            match a.as_str() {
                "true" => return Ok((Term::Bool(true), Sort::Bool)),
                "false" => return Ok((Term::Bool(false), Sort::Bool)),
                _ => {}
            }
            if let Some(sort) = vars(a) {
                return Ok((Term::Var(a.clone()), sort));
            }
            if let Some(def) = sigs.relation(a) {
                if def.params.is_empty() {
                    return Ok((Term::Call(a.clone(), vec![]), def.ret));
                }
                return Err(err(
                    s.pos,
                    ParseErrorKind::Arity,
                    format!("`{a}` expects {} arguments", def.params.len()),
                ));
            }
            Err(err(s.pos, ParseErrorKind::Sort, format!("unbound symbol `{a}`")))
        }
        SexpKind::List(items) => {
            let Some((head, rest)) = items.split_first() else {
                return Err(syntax(s.pos, "empty application"));
            };
            let Some(name) = head.atom() else {
                return Err(syntax(head.pos, "expected an operator"));
            };
            match name {
                "let" | "forall" | "exists" | "!" | "_" => {
                    return Err(err(
                        head.pos,
                        ParseErrorKind::Unsupported,
                        format!("`{name}` is not supported"),
                    ))
                }
                _ => {}
            }
            // `(- 5)` is the negative literal -5
            if name == "-" && rest.len() == 1 {
                if let Some(i) = rest[0].atom().and_then(parse_numeral) {
                    if i.sign() != num_bigint::Sign::Minus {
                        return Ok((Term::Int(-i), Sort::Int));
                    }
                }
            }
            let mut args = Vec::with_capacity(rest.len());
            let mut sorts = Vec::with_capacity(rest.len());
            for r in rest {
                let (t, srt) = to_term(r, vars, sigs)?;
                args.push(t);
                sorts.push(srt);
            }
            if vars(name).is_none() {
                if let Some(op) = Op::from_symbol(name) {
                    let sort = check_app(op, &args, &sorts).map_err(|e| sort_error(s.pos, e))?;
                    return Ok((Term::App(op, args), sort));
                }
            }
            if sigs.relation(name).is_some() {
                let t = Term::Call(name.to_string(), args);
                let sort = t.sort(vars, sigs).map_err(|e| sort_error(s.pos, e))?;
                return Ok((t, sort));
            }
            Err(err(
                head.pos,
                ParseErrorKind::Sort,
                format!("unknown function `{name}`"),
            ))
        }
    }
}

/// Parses a term against a variable environment and set of relations.
pub fn parse_term(
    src: &str,
    vars: &dyn Fn(&str) -> Option<Sort>,
    rels: &dyn Relations,
) -> Result<(Term, Sort), ParseError> {
    let s = sexp::parse_one(src)?;
    to_term(&s, vars, rels)
}

type Params = Vec<(String, Sort)>;

/// Parses and validates a SyGuS-INV problem.
pub fn parse_problem(source: &str) -> Result<Problem, ParseError> {
    let cmds = sexp::parse_all(source)?;
    let mut logic = None;
    let mut synth_inv: Option<(String, Params, Pos)> = None;
    let mut primed_decls: Vec<(String, Sort, Pos)> = Vec::new();
    let mut raw_defs: Vec<RawDef> = Vec::new();
    let mut constraint: Option<([String; 4], Pos)> = None;
    let mut saw_check = false;

    for cmd in &cmds {
        let items = cmd
            .list()
            .ok_or_else(|| syntax(cmd.pos, "expected a command"))?;
        let head = cmd
            .head()
            .ok_or_else(|| syntax(cmd.pos, "expected a command name"))?;
        if saw_check {
            return Err(syntax(cmd.pos, "`check-synth` must be the last command"));
        }
        let args = &items[1..];
        match head {
            "set-logic" => {
                let [l] = args else {
                    return Err(syntax(cmd.pos, "expected `(set-logic LIA)`"));
                };
                let l = expect_symbol(l, "a logic name")?;
                if l != "LIA" {
                    return Err(err(
                        cmd.pos,
                        ParseErrorKind::Unsupported,
                        format!("logic `{l}` is not supported (only LIA)"),
                    ));
                }
                logic = Some(l);
            }
            "synth-inv" => {
                let [name, params] = args else {
                    return Err(syntax(cmd.pos, "expected `(synth-inv <name> (<params>))`"));
                };
                if synth_inv.is_some() {
                    return Err(syntax(cmd.pos, "duplicate `synth-inv`"));
                }
                synth_inv = Some((expect_symbol(name, "an invariant name")?, parse_params(params)?, cmd.pos));
            }
            "declare-primed-var" => {
                let [v, s] = args else {
                    return Err(syntax(cmd.pos, "expected `(declare-primed-var <v> <Sort>)`"));
                };
                primed_decls.push((expect_symbol(v, "a variable name")?, parse_sort(s)?, cmd.pos));
            }
            "define-fun" => {
                let [name, params, ret, body] = args else {
                    return Err(syntax(cmd.pos, "expected `(define-fun <name> (<params>) <Sort> <body>)`"));
                };
                let name = expect_symbol(name, "a function name")?;
                if raw_defs.iter().any(|d| d.name == name) {
                    return Err(syntax(cmd.pos, format!("`{name}` defined twice")));
                }
                if Op::from_symbol(&name).is_some() || name == "true" || name == "false" {
                    return Err(syntax(cmd.pos, format!("cannot redefine `{name}`")));
                }
                raw_defs.push(RawDef {
                    name,
                    params: parse_params(params)?,
                    ret: parse_sort(ret)?,
                    body,
                    pos: cmd.pos,
                });
            }
            "inv-constraint" => {
                let [a, b, c, d] = args else {
                    return Err(syntax(cmd.pos, "expected `(inv-constraint <inv> <pre> <trans> <post>)`"));
                };
                if constraint.is_some() {
                    return Err(syntax(cmd.pos, "duplicate `inv-constraint`"));
                }
                constraint = Some((
                    [
                        expect_symbol(a, "a name")?,
                        expect_symbol(b, "a name")?,
                        expect_symbol(c, "a name")?,
                        expect_symbol(d, "a name")?,
                    ],
                    cmd.pos,
                ));
            }
            "check-synth" => {
                if !args.is_empty() {
                    return Err(syntax(cmd.pos, "`check-synth` takes no arguments"));
                }
                saw_check = true;
            }
            "synth-fun" | "declare-var" | "constraint" | "define-sort" => {
                return Err(err(
                    cmd.pos,
                    ParseErrorKind::Unsupported,
                    format!("`{head}` is outside the invariant-synthesis fragment"),
                ))
            }
            other => {
                return Err(err(
                    cmd.pos,
                    ParseErrorKind::UnknownCommand,
                    format!("unknown command `{other}`"),
                ))
            }
        }
    }

    let end = cmds.last().map(|c| c.pos).unwrap_or_default();
    let logic = logic.ok_or_else(|| err(end, ParseErrorKind::Missing, "missing `set-logic`"))?;
    let (inv_name, inv_params, inv_pos) =
        synth_inv.ok_or_else(|| err(end, ParseErrorKind::Missing, "missing `synth-inv`"))?;
    let (names, cpos) =
        constraint.ok_or_else(|| err(end, ParseErrorKind::Missing, "missing `inv-constraint`"))?;
    if !saw_check {
        return Err(err(end, ParseErrorKind::Missing, "missing `check-synth`"));
    }
    if names[0] != inv_name {
        return Err(syntax(
            cpos,
            format!("`inv-constraint` names `{}` but `synth-inv` declares `{inv_name}`", names[0]),
        ));
    }
    if raw_defs.iter().any(|d| d.name == inv_name) {
        return Err(syntax(inv_pos, format!("`{inv_name}` is both synthesized and defined")));
    }
    for (v, s, pos) in &primed_decls {
        match inv_params.iter().find(|(n, _)| n == v) {
            Some((_, ps)) if ps == s => {}
            Some(_) => return Err(err(*pos, ParseErrorKind::Sort, format!("`{v}` declared with a different sort"))),
            None => return Err(syntax(*pos, format!("primed variable `{v}` is not an invariant parameter"))),
        }
    }

    // Signatures first so bodies may call definitions in any order.
    let mut sigs = Signatures {
        defs: raw_defs
            .iter()
            .map(|d| {
                (
                    d.name.clone(),
                    RelationDef {
                        name: d.name.clone(),
                        params: d.params.clone(),
                        ret: d.ret,
                        body: Term::Bool(true),
                    },
                )
            })
            .collect(),
    };
    let mut bodies = BTreeMap::new();
    for d in &raw_defs {
        let params = d.params.clone();
        let env = move |v: &str| params.iter().find(|(n, _)| n == v).map(|(_, s)| *s);
        let (body, sort) = to_term(d.body, &env, &sigs)?;
        if sort != d.ret {
            return Err(err(
                d.body.pos,
                ParseErrorKind::Sort,
                format!("body of `{}` has sort {sort}, declared {}", d.name, d.ret),
            ));
        }
        bodies.insert(d.name.clone(), body);
    }
    for (name, body) in bodies {
        sigs.defs.get_mut(&name).unwrap().body = body;
    }
    check_acyclic(&raw_defs, &sigs.defs)?;

    let take = |name: &str, role: &str| -> Result<RelationDef, ParseError> {
        sigs.defs.get(name).cloned().ok_or_else(|| {
            err(cpos, ParseErrorKind::Missing, format!("{role} relation `{name}` is not defined"))
        })
    };
    let pre = take(&names[1], "pre")?;
    let trans = take(&names[2], "trans")?;
    let post = take(&names[3], "post")?;
    let pos_of = |name: &str| raw_defs.iter().find(|d| d.name == name).map(|d| d.pos).unwrap_or(cpos);

    let pre = normalize(pre, &inv_params, pos_of(&names[1]))?;
    let post = normalize(post, &inv_params, pos_of(&names[3]))?;
    let trans_sig: Vec<(String, Sort)> = inv_params
        .iter()
        .cloned()
        .chain(inv_params.iter().map(|(n, s)| (primed(n), *s)))
        .collect();
    let trans = normalize(trans, &trans_sig, pos_of(&names[2]))?;

    let role_names: BTreeSet<&str> = names[1..].iter().map(String::as_str).collect();
    let aux = raw_defs
        .iter()
        .filter(|d| !role_names.contains(d.name.as_str()))
        .map(|d| sigs.defs[&d.name].clone())
        .collect();

    Ok(Problem {
        logic,
        inv_name,
        inv_params,
        pre,
        trans,
        post,
        aux,
    })
}

/// Renames a role relation's parameters to the canonical signature.
fn normalize(mut def: RelationDef, sig: &[(String, Sort)], pos: Pos) -> Result<RelationDef, ParseError> {
    if def.ret != Sort::Bool {
        return Err(err(pos, ParseErrorKind::Sort, format!("`{}` must return Bool", def.name)));
    }
    if def.params.len() != sig.len() || def.params.iter().zip(sig).any(|((_, a), (_, b))| a != b) {
        return Err(err(
            pos,
            ParseErrorKind::Arity,
            format!(
                "`{}` must take ({}), found ({})",
                def.name,
                render_params(sig),
                render_params(&def.params)
            ),
        ));
    }
    if def.params.iter().zip(sig).any(|((a, _), (b, _))| a != b) {
        let map: HashMap<String, Term> = def
            .params
            .iter()
            .zip(sig)
            .map(|((a, _), (b, _))| (a.clone(), Term::var(b.as_str())))
            .collect();
        def.body = def.body.substitute(&map);
        def.params = sig.to_vec();
    }
    Ok(def)
}

fn check_acyclic(raw: &[RawDef], defs: &BTreeMap<String, RelationDef>) -> Result<(), ParseError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        name: &str,
        defs: &BTreeMap<String, RelationDef>,
        marks: &mut HashMap<String, Mark>,
    ) -> Result<(), String> {
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => return Err(name.to_string()),
            None => {}
        }
        marks.insert(name.to_string(), Mark::Active);
        let mut callees = BTreeSet::new();
        defs[name].body.callees(&mut callees);
        for c in callees {
            visit(&c, defs, marks)?;
        }
        marks.insert(name.to_string(), Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for d in raw {
        if let Err(culprit) = visit(&d.name, defs, &mut marks) {
            let pos = raw.iter().find(|r| r.name == culprit).map(|r| r.pos).unwrap_or(d.pos);
            return Err(err(
                pos,
                ParseErrorKind::Recursive,
                format!("`{culprit}` is defined recursively"),
            ));
        }
    }
    Ok(())
}

/// Parses an invariant, given as `(define-fun <inv> (<params>) Bool <body>)` or a bare term.
pub fn parse_invariant(problem: &Problem, source: &str) -> Result<Term, ParseError> {
    let s = sexp::parse_one(source)?;
    if s.head() == Some("define-fun") {
        let items = s.list().unwrap();
        let [_, _name, params, ret, body] = items else {
            return Err(syntax(s.pos, "expected `(define-fun <name> (<params>) Bool <body>)`"));
        };
        let params = parse_params(params)?;
        if parse_sort(ret)? != Sort::Bool {
            return Err(err(ret.pos, ParseErrorKind::Sort, "an invariant must return Bool"));
        }
        let env_params = params.clone();
        let env = move |v: &str| env_params.iter().find(|(n, _)| n == v).map(|(_, s)| *s);
        let (term, sort) = to_term(body, &env, problem)?;
        if sort != Sort::Bool {
            return Err(err(body.pos, ParseErrorKind::Sort, "invariant body is not Bool"));
        }
        let def = RelationDef {
            name: problem.inv_name.clone(),
            params,
            ret: Sort::Bool,
            body: term,
        };
        Ok(normalize(def, &problem.inv_params, s.pos)?.body)
    } else {
        let (term, sort) = to_term(&s, &|v| problem.sort_of(v), problem)?;
        if sort != Sort::Bool {
            return Err(err(s.pos, ParseErrorKind::Sort, "invariant is not Bool"));
        }
        Ok(term)
    }
}

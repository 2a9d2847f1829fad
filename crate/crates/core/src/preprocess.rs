//! Unused variable elimination.
//!
//! A formal parameter is *used* by a relation if it occurs in the body
//! outside any call, or inside an argument passed to a callee parameter that
//! is itself used. Labels are computed callee-first over the acyclic call
//! graph.

use std::collections::{BTreeSet, HashMap};

use crate::problem::{primed, Problem};
use crate::term::{RelationDef, Relations, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UsageAnalysis {
    /// Used parameters of the precondition.
    pub pre: BTreeSet<String>,
    /// Used parameters of the transition relation, primed names included.
    pub trans: BTreeSet<String>,
    pub post: BTreeSet<String>,
    /// Variables the invariant has to track.
    pub used: BTreeSet<String>,
}

struct Labeler<'a> {
    rels: &'a dyn Relations,
    memo: HashMap<String, Vec<bool>>,
}

impl Labeler<'_> {
    /// For each parameter of `def`, whether its value can reach the result.
    fn label(&mut self, def: &RelationDef) -> Vec<bool> {
        if let Some(l) = self.memo.get(&def.name) {
            return l.clone();
        }
        let used = self.used_vars(&def.body);
        let labels: Vec<bool> = def.params.iter().map(|(n, _)| used.contains(n)).collect();
        self.memo.insert(def.name.clone(), labels.clone());
        labels
    }

    fn used_vars(&mut self, t: &Term) -> BTreeSet<String> {
        match t {
            Term::Var(v) => BTreeSet::from([v.clone()]),
            Term::Int(_) | Term::Bool(_) => BTreeSet::new(),
            Term::App(_, args) => args.iter().flat_map(|a| self.used_vars(a)).collect(),
            Term::Call(f, args) => {
                let Some(def) = self.rels.relation(f) else {
                    // unknown callee: be conservative
                    return args.iter().flat_map(|a| self.used_vars(a)).collect();
                };
                let labels = self.label(def);
                args.iter()
                    .zip(labels)
                    .filter(|(_, used)| *used)
                    .flat_map(|(a, _)| self.used_vars(a))
                    .collect()
            }
        }
    }
}

pub fn analyze_usage(p: &Problem) -> UsageAnalysis {
    let mut labeler = Labeler {
        rels: p,
        memo: HashMap::new(),
    };
    let mut used_params = |def: &RelationDef| -> BTreeSet<String> {
        def.params
            .iter()
            .zip(labeler.label(def))
            .filter(|(_, u)| *u)
            .map(|((n, _), _)| n.clone())
            .collect()
    };
    let pre = used_params(&p.pre);
    let trans = used_params(&p.trans);
    let post = used_params(&p.post);
    let used = p
        .var_names()
        .filter(|v| pre.contains(*v) || post.contains(*v) || trans.contains(*v) || trans.contains(&primed(v)))
        .map(str::to_string)
        .collect();
    UsageAnalysis {
        pre,
        trans,
        post,
        used,
    }
}

fn default_value(sort: Sort) -> Term {
    match sort {
        Sort::Int => Term::int(0),
        Sort::Bool => Term::Bool(false),
    }
}

/// Restricts the problem's signatures to the used variables.
///
/// Dropped variables may still occur syntactically in arguments whose
/// callee parameter is unused; those occurrences are replaced by a constant.
pub fn simplify(p: &Problem, u: &UsageAnalysis) -> Problem {
    let dropped: Vec<(String, Sort)> = p
        .inv_params
        .iter()
        .filter(|(n, _)| !u.used.contains(n))
        .cloned()
        .collect();
    if dropped.is_empty() {
        return p.clone();
    }
    let mut subst: HashMap<String, Term> = HashMap::new();
    for (n, s) in &dropped {
        subst.insert(n.clone(), default_value(*s));
        subst.insert(primed(n), default_value(*s));
    }
    let keep = |params: &[(String, Sort)]| -> Vec<(String, Sort)> {
        params
            .iter()
            .filter(|(n, _)| !subst.contains_key(n))
            .cloned()
            .collect()
    };
    let restrict = |def: &RelationDef| RelationDef {
        name: def.name.clone(),
        params: keep(&def.params),
        ret: def.ret,
        body: def.body.substitute(&subst),
    };
    Problem {
        logic: p.logic.clone(),
        inv_name: p.inv_name.clone(),
        inv_params: keep(&p.inv_params),
        pre: restrict(&p.pre),
        trans: restrict(&p.trans),
        post: restrict(&p.post),
        aux: p.aux.clone(),
    }
}

//! Brute-force reference implementations used to cross-check the learner
//! and the feature synthesizer.

use loopinv::term::NoRelations;
use loopinv::{Op, State, Term, Value};
use rand::Rng;

/// Clauses of width 1..=k over `n` features as `(feature, polarity)` lists,
/// built by assigning each feature absent / positive / negative.
pub fn all_clauses(n: usize, k: usize) -> Vec<Vec<(usize, bool)>> {
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 1..total {
        let mut c = code;
        let mut lits = Vec::new();
        for f in 0..n {
            match c % 3 {
                1 => lits.push((f, true)),
                2 => lits.push((f, false)),
                _ => {}
            }
            c /= 3;
        }
        if lits.len() <= k {
            out.push(lits);
        }
    }
    out
}

fn clause_holds(c: &[(usize, bool)], row: &[bool]) -> bool {
    c.iter().any(|&(f, pol)| row[f] == pol)
}

/// Fewest clauses of width at most `k` that hold on every positive row and
/// jointly falsify every negative row, by breadth-first search over covered
/// subsets of negatives.
pub fn min_cnf_clauses(n: usize, pos: &[Vec<bool>], neg: &[Vec<bool>], k: usize) -> Option<usize> {
    assert!(neg.len() <= 20);
    let full: u32 = (1u32 << neg.len()) - 1;
    if neg.is_empty() {
        return Some(0);
    }
    let masks: Vec<u32> = all_clauses(n, k)
        .into_iter()
        .filter(|c| pos.iter().all(|r| clause_holds(c, r)))
        .map(|c| {
            neg.iter()
                .enumerate()
                .filter(|(_, r)| !clause_holds(&c, r))
                .fold(0u32, |m, (i, _)| m | (1 << i))
        })
        .filter(|&m| m != 0)
        .collect();
    let mut dist = vec![usize::MAX; (full + 1) as usize];
    dist[0] = 0;
    let mut frontier = vec![0u32];
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &m in &frontier {
            for &c in &masks {
                let nm = m | c;
                if dist[nm as usize] == usize::MAX {
                    dist[nm as usize] = depth;
                    if nm == full {
                        return Some(depth);
                    }
                    next.push(nm);
                }
            }
        }
        frontier = next;
    }
    None
}

/// Truth-vector search: is there a CNF of at most `max_clauses` clauses,
/// each of at most `width` literals over `vectors` (one bitmask per feature,
/// bit i = value on state i), true exactly on `pos_mask`?
pub fn cnf_exists(vectors: &[u64], n_states: usize, pos_mask: u64, max_clauses: usize, width: usize) -> bool {
    let all: u64 = if n_states == 64 { u64::MAX } else { (1u64 << n_states) - 1 };
    let neg_mask = all & !pos_mask;
    let mut lits: Vec<u64> = vectors.iter().flat_map(|&v| [v & all, !v & all]).collect();
    lits.sort_unstable();
    lits.dedup();
    let mut clauses: Vec<u64> = lits.clone();
    for _ in 1..width {
        let mut wider: Vec<u64> = clauses.iter().flat_map(|&c| lits.iter().map(move |&l| c | l)).collect();
        wider.extend(&clauses);
        wider.sort_unstable();
        wider.dedup();
        clauses = wider;
    }
    // a usable clause is true on every positive; it excludes the negatives it misses
    let excl: Vec<u64> = clauses
        .into_iter()
        .filter(|&c| c & pos_mask == pos_mask)
        .map(|c| neg_mask & !c)
        .filter(|&e| e != 0)
        .collect();
    if neg_mask == 0 {
        return true;
    }
    fn search(excl: &[u64], covered: u64, target: u64, left: usize) -> bool {
        if covered == target {
            return true;
        }
        if left == 0 {
            return false;
        }
        excl.iter().any(|&e| e & !covered != 0 && search(excl, covered | e, target, left - 1))
    }
    search(&excl, 0, neg_mask, max_clauses)
}

/// Every integer term over `vars` and `consts` of exactly each size up to
/// `max_size`: leaves, `(+ a b)`, `(- a b)`, `(* c e)`.
pub fn int_terms_by_size(vars: &[&str], consts: &[i64], max_size: usize) -> Vec<Vec<Term>> {
    let mut by: Vec<Vec<Term>> = vec![Vec::new(); max_size + 1];
    if max_size >= 1 {
        by[1] = vars.iter().map(|v| Term::var(*v)).chain(consts.iter().map(|&c| Term::int(c))).collect();
    }
    for size in 2..=max_size {
        let mut terms = Vec::new();
        for sa in 1..size - 1 {
            let sb = size - 1 - sa;
            for a in &by[sa] {
                for b in &by[sb] {
                    terms.push(Term::app(Op::Add, vec![a.clone(), b.clone()]));
                    terms.push(Term::app(Op::Sub, vec![a.clone(), b.clone()]));
                }
            }
        }
        if size >= 3 {
            for &c in consts {
                for e in &by[size - 2] {
                    terms.push(Term::app(Op::Mul, vec![Term::int(c), e.clone()]));
                }
            }
        }
        by[size] = terms;
    }
    by
}

fn int_value(t: &Term, s: &State) -> i64 {
    match t.eval(s, &NoRelations).unwrap() {
        Value::Int(i) => i.try_into().unwrap(),
        v => panic!("{t} is not an integer: {v}"),
    }
}

/// Size of the smallest comparison feature (or `(not (= a b))`) that is true
/// on `pos` and false on `neg`, by exhaustive enumeration without pruning.
pub fn min_separator_size(
    pos: &[State],
    neg: &[State],
    vars: &[&str],
    consts: &[i64],
    max_size: usize,
) -> Option<usize> {
    let by = int_terms_by_size(vars, consts, max_size.saturating_sub(2));
    let states: Vec<&State> = pos.iter().chain(neg).collect();
    let vals: Vec<Vec<Vec<i64>>> = by
        .iter()
        .map(|ts| ts.iter().map(|t| states.iter().map(|s| int_value(t, s)).collect()).collect())
        .collect();
    let want = |i: usize| i < pos.len();
    let cmps: [fn(i64, i64) -> bool; 5] = [|a, b| a == b, |a, b| a < b, |a, b| a <= b, |a, b| a > b, |a, b| a >= b];
    for size in 3..=max_size {
        for sa in 1..by.len() {
            for sb in 1..by.len() {
                let plain = sa + sb + 1 == size;
                let negated = sa + sb + 2 == size;
                if !plain && !negated {
                    continue;
                }
                for va in &vals[sa] {
                    for vb in &vals[sb] {
                        if plain {
                            for cmp in &cmps {
                                if (0..states.len()).all(|i| cmp(va[i], vb[i]) == want(i)) {
                                    return Some(size);
                                }
                            }
                        }
                        if negated && (0..states.len()).all(|i| (va[i] != vb[i]) == want(i)) {
                            return Some(size);
                        }
                    }
                }
            }
        }
    }
    None
}

/// A random integer term of at most `depth` operator levels.
pub fn random_int_term(rng: &mut impl Rng, vars: &[&str], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.6) {
            Term::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Term::int(rng.gen_range(-5i64..=5))
        };
    }
    match rng.gen_range(0..3) {
        0 => Term::app(Op::Add, vec![random_int_term(rng, vars, depth - 1), random_int_term(rng, vars, depth - 1)]),
        1 => Term::app(Op::Sub, vec![random_int_term(rng, vars, depth - 1), random_int_term(rng, vars, depth - 1)]),
        _ => Term::app(
            Op::Mul,
            vec![Term::int(rng.gen_range(-3i64..=3)), random_int_term(rng, vars, depth - 1)],
        ),
    }
}

/// A random comparison between two random integer terms.
pub fn random_comparison(rng: &mut impl Rng, vars: &[&str], depth: usize) -> Term {
    let ops = [Op::Eq, Op::Lt, Op::Le, Op::Gt, Op::Ge];
    Term::app(
        ops[rng.gen_range(0..ops.len())],
        vec![random_int_term(rng, vars, depth), random_int_term(rng, vars, depth)],
    )
}

/// Names of the redundancy shapes the enumerator skips.
pub const PRUNING_PATTERNS: [&str; 13] = [
    "(+ e 0)",
    "(+ 0 e)",
    "(+ (- e x) x)",
    "(+ x (- e x))",
    "(- e 0)",
    "(- e e)",
    "(- (+ e x) x)",
    "(- (+ x e) x)",
    "(* 1 e)",
    "(* e 1)",
    "(* 0 e)",
    "(not (not b))",
    "(cmp e e)",
];

/// A random instance of pattern `i` with random integer subterms.
pub fn instantiate_pattern(i: usize, rng: &mut impl Rng, vars: &[&str]) -> Term {
    let e = random_int_term(rng, vars, 2);
    let x = random_int_term(rng, vars, 1);
    let app = |op, args: Vec<Term>| Term::app(op, args);
    let zero = Term::int(0);
    let one = Term::int(1);
    match i {
        0 => app(Op::Add, vec![e, zero]),
        1 => app(Op::Add, vec![zero, e]),
        2 => app(Op::Add, vec![app(Op::Sub, vec![e, x.clone()]), x]),
        3 => app(Op::Add, vec![x.clone(), app(Op::Sub, vec![e, x])]),
        4 => app(Op::Sub, vec![e, zero]),
        5 => app(Op::Sub, vec![e.clone(), e]),
        6 => app(Op::Sub, vec![app(Op::Add, vec![e, x.clone()]), x]),
        7 => app(Op::Sub, vec![app(Op::Add, vec![x.clone(), e]), x]),
        8 => app(Op::Mul, vec![one, e]),
        9 => app(Op::Mul, vec![e, one]),
        10 => app(Op::Mul, vec![zero, e]),
        // built directly: Term::not would fold the double negation
        11 => Term::App(Op::Not, vec![Term::App(Op::Not, vec![random_comparison(rng, vars, 1)])]),
        12 => {
            let ops = [Op::Eq, Op::Lt, Op::Le, Op::Gt, Op::Ge];
            app(ops[rng.gen_range(0..ops.len())], vec![e.clone(), e])
        }
        _ => unreachable!(),
    }
}

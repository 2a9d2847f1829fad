//! Precondition learning from positive and negative states.
//!
//! States are mapped to boolean feature vectors. While some vector is shared
//! by a positive and a negative state, a new feature is synthesized for that
//! conflict group. Once the data is conflict-free, a small CNF over the
//! features is learned by greedy set cover.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use log::debug;
use thiserror::Error;

use crate::synth::{synthesize_feature, ConflictGroup, Grammar};
use crate::term::{NoRelations, Op, State, Term};

/// Above this many candidate clauses, k-escalation stops and uncovered
/// negatives are excluded row by row.
const MAX_CLAUSE_CANDIDATES: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnError {
    #[error("no feature of at most {max_size} nodes separates a conflict group of {positives}+{negatives} states")]
    Exhausted {
        max_size: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("learned precondition is inconsistent with the data: {0}")]
    Inconsistent(String),
    #[error("precondition learning ran out of time")]
    Timeout,
}

/// Labeled states and their feature vectors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub positives: Vec<State>,
    pub negatives: Vec<State>,
    pub features: Vec<Term>,
    pub pos_rows: Vec<Vec<bool>>,
    pub neg_rows: Vec<Vec<bool>>,
    /// Features that failed to evaluate on some state (counted as false there).
    pub flagged: BTreeSet<usize>,
}

impl Dataset {
    pub fn new(positives: Vec<State>, negatives: Vec<State>, features: Vec<Term>) -> Self {
        let mut d = Dataset {
            pos_rows: vec![Vec::new(); positives.len()],
            neg_rows: vec![Vec::new(); negatives.len()],
            positives,
            negatives,
            features: Vec::new(),
            flagged: BTreeSet::new(),
        };
        for f in features {
            d.add_feature(f);
        }
        d
    }

    /// Appends a feature column.
    pub fn add_feature(&mut self, f: Term) {
        let idx = self.features.len();
        let mut flagged = false;
        let mut eval = |s: &State| match f.holds(s, &NoRelations) {
            Ok(b) => b,
            Err(_) => {
                flagged = true;
                false
            }
        };
        for (row, s) in self.pos_rows.iter_mut().zip(&self.positives) {
            row.push(eval(s));
        }
        for (row, s) in self.neg_rows.iter_mut().zip(&self.negatives) {
            row.push(eval(s));
        }
        if flagged {
            self.flagged.insert(idx);
        }
        self.features.push(f);
    }
}

/// Groups of positive and negative states sharing a feature vector, in
/// order of first appearance; each side keeps at most `cap` earliest states.
pub fn find_conflicts(d: &Dataset, cap: usize) -> Vec<ConflictGroup> {
    let mut order: Vec<&Vec<bool>> = Vec::new();
    let mut by_row: HashMap<&Vec<bool>, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (i, row) in d.pos_rows.iter().enumerate() {
        by_row
            .entry(row)
            .or_insert_with(|| {
                order.push(row);
                (vec![], vec![])
            })
            .0
            .push(i);
    }
    for (i, row) in d.neg_rows.iter().enumerate() {
        if let Some(entry) = by_row.get_mut(row) {
            entry.1.push(i);
        }
    }
    order
        .into_iter()
        .filter_map(|row| {
            let (pos, neg) = &by_row[row];
            if neg.is_empty() {
                return None;
            }
            Some(ConflictGroup {
                positives: pos.iter().take(cap).map(|&i| d.positives[i].clone()).collect(),
                negatives: neg.iter().take(cap).map(|&i| d.negatives[i].clone()).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub feature: usize,
    pub positive: bool,
}

impl Literal {
    pub fn holds(&self, row: &[bool]) -> bool {
        row[self.feature] == self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause(pub Vec<Literal>);

impl Clause {
    pub fn holds(&self, row: &[bool]) -> bool {
        self.0.iter().any(|l| l.holds(row))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    pub clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn holds(&self, row: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.holds(row))
    }

    /// Largest clause width.
    pub fn width(&self) -> usize {
        self.clauses.iter().map(|c| c.0.len()).max().unwrap_or(0)
    }

    /// The formula as a term over `features`.
    pub fn to_term(&self, features: &[Term]) -> Term {
        Term::and(
            self.clauses
                .iter()
                .map(|c| {
                    Term::or(
                        c.0.iter()
                            .map(|l| {
                                let f = features[l.feature].clone();
                                if l.positive {
                                    f
                                } else {
                                    negate(f)
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn negate(f: Term) -> Term {
    match f {
        Term::App(Op::Not, mut args) if args.len() == 1 => args.pop().unwrap(),
        f => Term::not(f),
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of clauses of width at most `k` over `n` features.
fn clause_count(n: usize, k: usize) -> usize {
    (1..=k).fold(0usize, |acc, j| {
        acc.saturating_add(binomial(n, j).saturating_mul(1usize << j.min(63)))
    })
}

/// All clauses of width at most `k`, ordered by width, then feature indices,
/// then polarity (positive first), that hold on every positive row.
pub fn candidate_clauses(n: usize, k: usize, pos_rows: &[Vec<bool>]) -> Vec<Clause> {
    let mut out = Vec::new();
    for width in 1..=k.min(n) {
        let mut idx: Vec<usize> = (0..width).collect();
        loop {
            for mask in 0..(1u64 << width) {
                let lits: Vec<Literal> = idx
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| Literal {
                        feature: f,
                        positive: mask & (1 << (width - 1 - j)) == 0,
                    })
                    .collect();
                let clause = Clause(lits);
                if pos_rows.iter().all(|r| clause.holds(r)) {
                    out.push(clause);
                }
            }
            // next combination
            let mut i = width;
            while i > 0 && idx[i - 1] == n - width + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..width {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Greedy cover of the negatives by clauses from `pool`.
///
/// Picks the clause falsifying the most uncovered negatives; ties go to
/// fewer literals, then earlier position in the pool. `None` if some negative
/// cannot be covered.
fn greedy_cover(pool: &[Clause], neg_rows: &[Vec<bool>]) -> Option<CnfFormula> {
    let covers: Vec<Vec<usize>> = pool
        .iter()
        .map(|c| {
            neg_rows
                .iter()
                .enumerate()
                .filter(|(_, r)| !c.holds(r))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut uncovered = vec![true; neg_rows.len()];
    let mut remaining = neg_rows.len();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, usize)> = None;
        for (ci, cov) in covers.iter().enumerate() {
            let gain = cov.iter().filter(|&&i| uncovered[i]).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bgain)) => {
                    gain > bgain || (gain == bgain && pool[ci].0.len() < pool[bi].0.len())
                }
            };
            if better {
                best = Some((ci, gain));
            }
        }
        let (ci, gain) = best?;
        for &i in &covers[ci] {
            uncovered[i] = false;
        }
        remaining -= gain;
        chosen.push(pool[ci].clone());
    }
    Some(CnfFormula { clauses: chosen })
}

/// Learns a CNF of clauses with at most `k` literals, or `None` if the
/// level-`k` clauses cannot exclude every negative row.
pub fn learn_cnf_at(
    n_features: usize,
    pos_rows: &[Vec<bool>],
    neg_rows: &[Vec<bool>],
    k: usize,
) -> Option<CnfFormula> {
    if neg_rows.is_empty() {
        return Some(CnfFormula::default());
    }
    let pool = candidate_clauses(n_features, k, pos_rows);
    greedy_cover(&pool, neg_rows)
}

/// Learns a CNF consistent with conflict-free rows, escalating the clause
/// width from 1 until a cover exists. Returns the formula and the width
/// level that produced it.
pub fn learn_cnf(n_features: usize, pos_rows: &[Vec<bool>], neg_rows: &[Vec<bool>]) -> (CnfFormula, usize) {
    if neg_rows.is_empty() {
        return (CnfFormula::default(), 0);
    }
    let mut k = 1;
    while k <= n_features && clause_count(n_features, k) <= MAX_CLAUSE_CANDIDATES {
        if let Some(cnf) = learn_cnf_at(n_features, pos_rows, neg_rows, k) {
            return (cnf, k);
        }
        k += 1;
    }
    // Too many features for exhaustive widths: add one clause per negative
    // row that excludes exactly that row's vector.
    let k = (k - 1).max(1).min(n_features);
    let mut pool = candidate_clauses(n_features, k, pos_rows);
    for row in neg_rows {
        let clause = Clause(
            row.iter()
                .enumerate()
                .map(|(f, &v)| Literal {
                    feature: f,
                    positive: !v,
                })
                .collect(),
        );
        if pos_rows.iter().all(|r| clause.holds(r)) && !pool.contains(&clause) {
            pool.push(clause);
        }
    }
    let cnf = greedy_cover(&pool, neg_rows).expect("conflict-free rows always have a cover");
    let width = cnf.width();
    (cnf, width)
}

/// Learner state that persists across strengthening rounds.
#[derive(Debug, Clone)]
pub struct Learner {
    pub features: Vec<Term>,
    pub grammar: Grammar,
    pub conflict_group_size: usize,
    pub max_feature_size: usize,
}

/// Extra nodes allowed on the single retry after synthesis exhaustion.
const FEATURE_SIZE_ESCALATION: usize = 2;

impl Learner {
    pub fn new(grammar: Grammar, conflict_group_size: usize, max_feature_size: usize) -> Self {
        Learner {
            features: Vec::new(),
            grammar,
            conflict_group_size,
            max_feature_size,
        }
    }

    /// A feature separating `group`, or failing that, separating a prefix of
    /// it. Both sides are halved until a separator is found or a single
    /// pair remains; any separator splits the group's block of the
    /// partition, so repeated resolution terminates.
    fn resolve(&self, group: &ConflictGroup, deadline: Option<Instant>) -> Option<Term> {
        let bounds = [self.max_feature_size, self.max_feature_size + FEATURE_SIZE_ESCALATION];
        let (mut np, mut nn) = (group.positives.len(), group.negatives.len());
        loop {
            let sub = ConflictGroup {
                positives: group.positives[..np].to_vec(),
                negatives: group.negatives[..nn].to_vec(),
            };
            for bound in bounds {
                if let Some(f) = synthesize_feature(&sub, &self.grammar, bound, deadline) {
                    if np < group.positives.len() || nn < group.negatives.len() {
                        debug!("separated a {np}+{nn} part of a {}+{} conflict", group.positives.len(), group.negatives.len());
                    }
                    return Some(f);
                }
            }
            if (np == 1 && nn == 1) || deadline.is_some_and(|d| Instant::now() >= d) {
                return None;
            }
            np = np.div_ceil(2);
            nn = nn.div_ceil(2);
        }
    }

    /// Learns a predicate true on every state of `good` and false on every
    /// state of `bad`.
    pub fn pie(
        &mut self,
        good: &[State],
        bad: &[State],
        deadline: Option<Instant>,
    ) -> Result<Term, LearnError> {
        if bad.is_empty() {
            return Ok(Term::Bool(true));
        }
        let mut data = Dataset::new(good.to_vec(), bad.to_vec(), self.features.clone());
        loop {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(LearnError::Timeout);
            }
            let groups = find_conflicts(&data, self.conflict_group_size);
            let Some(group) = groups.first() else {
                break;
            };
            let Some(feature) = self.resolve(group, deadline) else {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(LearnError::Timeout);
                }
                return Err(LearnError::Exhausted {
                    max_size: self.max_feature_size + FEATURE_SIZE_ESCALATION,
                    positives: group.positives.len(),
                    negatives: group.negatives.len(),
                });
            };
            debug!("new feature {feature} for a conflict of {}+{}", group.positives.len(), group.negatives.len());
            self.features.push(feature.clone());
            data.add_feature(feature);
        }
        let (cnf, _) = learn_cnf(data.features.len(), &data.pos_rows, &data.neg_rows);
        let rho = cnf.to_term(&data.features);
        for s in good {
            if !rho.holds(s, &NoRelations).unwrap_or(false) {
                return Err(LearnError::Inconsistent(format!("{rho} is false on positive {s}")));
            }
        }
        for s in bad {
            if rho.holds(s, &NoRelations).unwrap_or(true) {
                return Err(LearnError::Inconsistent(format!("{rho} is true on negative {s}")));
            }
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Sort, Value};

    fn st(pairs: &[(&str, i64)]) -> State {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Value::Int((*v).into())))
            .collect()
    }

    fn lit(feature: usize, positive: bool) -> Literal {
        Literal { feature, positive }
    }

    #[test]
    fn single_feature_cnf() {
        let (cnf, k) = learn_cnf(1, &[vec![true]], &[vec![false]]);
        assert_eq!(k, 1);
        assert_eq!(cnf.clauses, vec![Clause(vec![lit(0, true)])]);
    }

    #[test]
    fn xor_needs_two_wide_clauses() {
        let pos = [vec![true, false], vec![false, true]];
        let neg = [vec![true, true], vec![false, false]];
        assert_eq!(learn_cnf_at(2, &pos, &neg, 1), None);
        let (cnf, k) = learn_cnf(2, &pos, &neg);
        assert_eq!(k, 2);
        let mut clauses = cnf.clauses.clone();
        clauses.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            clauses,
            vec![Clause(vec![lit(0, false), lit(1, false)]), Clause(vec![lit(0, true), lit(1, true)])]
        );
    }

    #[test]
    fn no_negatives_is_true() {
        let (cnf, _) = learn_cnf(3, &[vec![true, false, true]], &[]);
        assert!(cnf.clauses.is_empty());
        assert_eq!(cnf.to_term(&[]), Term::Bool(true));
    }

    #[test]
    fn empty_feature_set_conflicts() {
        let d = Dataset::new(vec![st(&[("x", 1)])], vec![st(&[("x", 0)])], vec![]);
        let groups = find_conflicts(&d, 64);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].positives, vec![st(&[("x", 1)])]);
        assert_eq!(groups[0].negatives, vec![st(&[("x", 0)])]);
    }

    #[test]
    fn separating_feature_removes_conflicts() {
        let ge1 = Term::app(Op::Ge, vec![Term::var("x"), Term::int(1)]);
        let d = Dataset::new(
            vec![st(&[("x", 1)]), st(&[("x", 5)])],
            vec![st(&[("x", 0)]), st(&[("x", -3)])],
            vec![ge1],
        );
        assert!(find_conflicts(&d, 64).is_empty());
    }

    #[test]
    fn conflict_groups_are_capped() {
        let pos: Vec<State> = (0..70).map(|i| st(&[("x", i)])).collect();
        let neg: Vec<State> = (100..170).map(|i| st(&[("x", i)])).collect();
        let d = Dataset::new(pos.clone(), neg.clone(), vec![]);
        let groups = find_conflicts(&d, 64);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].positives.len(), 64);
        assert_eq!(groups[0].negatives.len(), 64);
        assert_eq!(groups[0].positives[..], pos[..64]);
        assert_eq!(groups[0].negatives[..], neg[..64]);
    }

    #[test]
    fn division_by_zero_is_false_and_flagged() {
        let f = Term::app(
            Op::Eq,
            vec![Term::app(Op::Div, vec![Term::var("x"), Term::int(0)]), Term::int(0)],
        );
        let d = Dataset::new(vec![st(&[("x", 1)])], vec![], vec![f]);
        assert_eq!(d.pos_rows, vec![vec![false]]);
        assert!(d.flagged.contains(&0));
    }

    fn learner() -> Learner {
        let vars = vec![("x".to_string(), Sort::Int), ("y".to_string(), Sort::Int)];
        Learner::new(Grammar::new(&vars, []), 64, 7)
    }

    #[test]
    fn running_example_precondition() {
        let mut l = learner();
        let z = [st(&[("x", 1), ("y", 7)]), st(&[("x", 2), ("y", -2)])];
        let b = [st(&[("x", 0), ("y", 1)])];
        let rho = l.pie(&z, &b, None).unwrap();
        assert_eq!(rho.size(), 3, "{rho}");
        for s in &z {
            assert!(rho.holds(s, &NoRelations).unwrap());
        }
        assert!(!rho.holds(&b[0], &NoRelations).unwrap());
        // features persist for the next call
        assert_eq!(l.features.len(), 1);
        let again = l.pie(&z, &b, None).unwrap();
        assert_eq!(again, rho);
        assert_eq!(l.features.len(), 1);
    }

    #[test]
    fn no_negatives_gives_true() {
        let mut l = learner();
        assert_eq!(l.pie(&[st(&[("x", 1), ("y", 1)])], &[], None).unwrap(), Term::Bool(true));
    }

    #[test]
    fn parity_is_resolved_through_subgroups() {
        let vars = vec![("x".to_string(), Sort::Int)];
        let mut l = Learner::new(Grammar::new(&vars, []), 64, 7);
        let z: Vec<State> = [0, 2, 4].iter().map(|&v| st(&[("x", v)])).collect();
        let b: Vec<State> = [1, 3].iter().map(|&v| st(&[("x", v)])).collect();
        let rho = l.pie(&z, &b, None).unwrap();
        assert!(l.features.len() >= 2, "no single small feature separates parity");
        for s in &z {
            assert!(rho.holds(s, &NoRelations).unwrap(), "{rho}");
        }
        for s in &b {
            assert!(!rho.holds(s, &NoRelations).unwrap(), "{rho}");
        }
    }

    #[test]
    fn exhaustion_is_reported() {
        // with only 0, 1, -1 and three nodes, 5 and 6 look alike
        let vars = vec![("x".to_string(), Sort::Int)];
        let mut l = Learner::new(Grammar::new(&vars, []), 64, 1);
        assert_eq!(
            l.pie(&[st(&[("x", 5)])], &[st(&[("x", 6)])], None),
            Err(LearnError::Exhausted {
                max_size: 3,
                positives: 1,
                negatives: 1
            })
        );
    }
}

mod common;

use std::collections::BTreeSet;

use common::oracle::{cnf_exists, int_terms_by_size, min_cnf_clauses};
use common::*;
use loopinv::learner::{find_conflicts, learn_cnf, learn_cnf_at, Dataset, Learner};
use loopinv::synth::{synthesize_feature, Grammar};
use loopinv::term::NoRelations;
use loopinv::{Op, Sort, State, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xy() -> Vec<(String, Sort)> {
    vec![("x".to_string(), Sort::Int), ("y".to_string(), Sort::Int)]
}

fn grid() -> Vec<State> {
    (0..=3)
        .flat_map(|x| (0..=3).map(move |y| state(&[("x", x), ("y", y)])))
        .collect()
}

#[test]
fn running_example_learns_one_clause() {
    let z = [state(&[("x", 1), ("y", 7)]), state(&[("x", 2), ("y", -2)])];
    let b = [state(&[("x", 0), ("y", 1)])];
    let mut l = Learner::new(Grammar::new(&xy(), []), 64, 7);
    let rho = l.pie(&z, &b, None).unwrap();
    // a single size-3 comparison equivalent to x >= 1 on these states
    assert_eq!(rho.size(), 3, "{rho}");
    let d = Dataset::new(z.to_vec(), b.to_vec(), l.features.clone());
    let (cnf, k) = learn_cnf(d.features.len(), &d.pos_rows, &d.neg_rows);
    assert_eq!((cnf.clauses.len(), k), (1, 1));
    let ge1 = Term::app(Op::Ge, vec![Term::var("x"), Term::int(1)]);
    let eq = Term::app(Op::Eq, vec![rho.clone(), ge1]);
    // equivalent on the data, not necessarily everywhere
    for st in z.iter().chain(&b) {
        assert_eq!(eq.holds(st, &NoRelations), Ok(true));
    }
}

#[test]
fn random_labelings_are_learned_consistently() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let leaves = int_terms_by_size(&["x", "y"], &[0, 1, -1], 1);
    let ops = [Op::Eq, Op::Lt, Op::Le, Op::Gt, Op::Ge];
    let mut with_small_cnf = 0;
    for round in 0..60 {
        let mut states = grid();
        states.shuffle(&mut rng);
        states.truncate(6);
        let labels: Vec<bool> = (0..6).map(|_| rng.gen_bool(0.5)).collect();
        let z: Vec<State> = states.iter().zip(&labels).filter(|(_, l)| **l).map(|(s, _)| s.clone()).collect();
        let b: Vec<State> = states.iter().zip(&labels).filter(|(_, l)| !**l).map(|(s, _)| s.clone()).collect();

        let mut l = Learner::new(Grammar::new(&xy(), []), 64, 7);
        let rho = l.pie(&z, &b, None).unwrap_or_else(|e| panic!("round {round}: {e}"));
        for s in &z {
            assert_eq!(rho.holds(s, &NoRelations), Ok(true), "round {round}: {rho} on {s}");
        }
        for s in &b {
            assert_eq!(rho.holds(s, &NoRelations), Ok(false), "round {round}: {rho} on {s}");
        }

        // reference: CNFs of up to 3 clauses over all size-3 comparisons
        let mut vectors = Vec::new();
        for op in ops {
            for a in &leaves[1] {
                for c in &leaves[1] {
                    let f = Term::app(op, vec![a.clone(), c.clone()]);
                    let v = states
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| f.holds(s, &NoRelations).unwrap())
                        .fold(0u64, |m, (i, _)| m | (1 << i));
                    vectors.push(v);
                }
            }
        }
        let pos_mask = labels.iter().enumerate().filter(|(_, l)| **l).fold(0u64, |m, (i, _)| m | (1 << i));
        if cnf_exists(&vectors, 6, pos_mask, 3, 3) {
            with_small_cnf += 1;
        }
    }
    // most labelings of six grid points have a small CNF over size-3 features
    assert!(with_small_cnf > 30, "{with_small_cnf}");
}

#[test]
fn greedy_cover_against_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let mut rows: Vec<Vec<bool>> = (0..(1 << n))
            .map(|m: usize| (0..n).map(|f| m & (1 << f) != 0).collect())
            .collect();
        rows.shuffle(&mut rng);
        rows.truncate(rng.gen_range(1..=8));
        let (pos, neg): (Vec<_>, Vec<_>) = rows.into_iter().partition(|_| rng.gen_bool(0.5));
        let (cnf, k) = learn_cnf(n, &pos, &neg);
        for r in &pos {
            assert!(cnf.holds(r));
        }
        for r in &neg {
            assert!(!cnf.holds(r));
        }
        assert!(cnf.width() <= k);
        let best = min_cnf_clauses(n, &pos, &neg, k).expect("a cover exists at the level used");
        assert!(cnf.clauses.len() >= best);
        if k > 1 {
            assert_eq!(learn_cnf_at(n, &pos, &neg, k - 1), None);
            assert_eq!(min_cnf_clauses(n, &pos, &neg, k - 1), None);
        }
    }
}

#[test]
fn each_new_feature_refines_the_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let grammar = Grammar::new(&xy(), []);
    for _ in 0..20 {
        let mut states = grid();
        states.shuffle(&mut rng);
        states.truncate(8);
        let (z, b): (Vec<_>, Vec<_>) = states.into_iter().partition(|_| rng.gen_bool(0.5));
        let mut d = Dataset::new(z, b, vec![]);
        let classes = |d: &Dataset| d.pos_rows.iter().chain(&d.neg_rows).cloned().collect::<BTreeSet<_>>().len();
        loop {
            let groups = find_conflicts(&d, 64);
            let Some(g) = groups.first() else { break };
            let before = (groups.len(), classes(&d));
            // the whole group, else its first pair, as the learner falls back to
            let pair = loopinv::synth::ConflictGroup {
                positives: g.positives[..1].to_vec(),
                negatives: g.negatives[..1].to_vec(),
            };
            let whole = synthesize_feature(g, &grammar, 9, None);
            let separated_whole = whole.is_some();
            let f = whole
                .or_else(|| synthesize_feature(&pair, &grammar, 9, None))
                .expect("distinct grid points are separable");
            d.add_feature(f);
            let after = find_conflicts(&d, 64);
            let members = |gs: &[loopinv::synth::ConflictGroup]| -> usize {
                gs.iter().map(|g| g.positives.len() + g.negatives.len()).sum()
            };
            assert!(classes(&d) > before.1);
            if separated_whole {
                assert!(after.len() < before.0 || members(&after) < members(&groups));
            }
        }
    }
}

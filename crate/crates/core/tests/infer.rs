mod common;

use std::time::Duration;

use common::*;
use loopinv::infer::{check_feasible, infer, Feasibility, InferOutcome, Witness};
use loopinv::record::{check_replay, prepare_session, record, record_parallel, StateSet};
use loopinv::solver::CheckResult;
use loopinv::verify::check_invariant;
use loopinv::{Problem, Term};

fn equivalent(p: &Problem, a: &Term, b: &Term) -> bool {
    let mut s = session(0);
    let f = Term::app(loopinv::Op::Eq, vec![a.clone(), b.clone()]);
    s.check_valid(&f, &p.inv_params, p).unwrap() == CheckResult::Valid
}

fn solve(p: &Problem, z: StateSet) -> (InferOutcome, loopinv::infer::InferStats) {
    let r = infer(p, z, &config(), None).unwrap();
    (r.outcome, r.stats)
}

fn assert_sound(p: &Problem, inv: &Term) {
    let r = check_invariant(p, inv, &solver_path(), Duration::from_secs(5), 9).unwrap();
    assert!(r.overall, "{inv}\n{r}");
}

#[test]
fn running_example_converges_to_x_at_least_one() {
    let p = trex1();
    let (z, _) = record_parallel(&p, &config(), None).unwrap();
    let (outcome, stats) = solve(&p, z);
    let InferOutcome::Solved(inv) = outcome else {
        panic!("{outcome:?}");
    };
    let ge1 = Term::app(loopinv::Op::Ge, vec![Term::var("x"), Term::int(1)]);
    assert!(equivalent(&p, &inv, &ge1), "{inv}");
    assert_sound(&p, &inv);
    // Q is not inductive, so one strengthening round and one more to confirm
    assert_eq!(stats.rounds, 2);
    assert!(stats.counterexamples >= 1);
}

#[test]
fn trivial_postcondition_is_its_own_invariant() {
    let p = problem(&lia(&["x"], "(= x 0)", "(= x! (+ x 1))", "true"));
    let (outcome, stats) = solve(&p, StateSet::new());
    assert_eq!(outcome, InferOutcome::Solved(Term::Bool(true)));
    assert_eq!(stats.rounds, 1);
}

#[test]
fn three_state_loop_from_partial_data() {
    let p = problem(&lia(&["x"], "(= x 0)", "(and (< x 2) (= x! (+ x 1)))", "(<= x 2)"));
    // the positives miss x = 2
    let z: StateSet = [state(&[("x", 0)]), state(&[("x", 1)])].into_iter().collect();
    let (outcome, _) = solve(&p, z);
    let InferOutcome::Solved(inv) = outcome else {
        panic!("{outcome:?}");
    };
    assert_sound(&p, &inv);
    for x in 0..=2 {
        assert_eq!(inv.holds(&state(&[("x", x)]), &p), Ok(true), "{inv} at {x}");
    }
}

#[test]
fn restart_on_precondition_counterexample() {
    // states either stutter or climb while negative; only x = 0 is known,
    // so the first precondition (x = 0) is inductive but misses P
    let p = problem(&lia(
        &["x"],
        "(and (>= x 0) (<= x 100))",
        "(or (= x! x) (and (< x 0) (= x! (+ x 1))))",
        "(not (= x (- 1)))",
    ));
    let z: StateSet = [state(&[("x", 0)])].into_iter().collect();
    let (outcome, stats) = solve(&p, z);
    let InferOutcome::Solved(inv) = outcome else {
        panic!("{outcome:?}");
    };
    assert_sound(&p, &inv);
    assert!(stats.restarts >= 1, "{stats:?}");
    assert!(stats.positives > 1, "{stats:?}");
}

#[test]
fn precondition_violating_postcondition_is_infeasible() {
    let p = problem(&lia(&["x"], "(= x 0)", "(= x! (+ x 1))", "(>= x 1)"));
    let mut s = session(1);
    prepare_session(&p, &mut s).unwrap();
    assert_eq!(
        check_feasible(&p, &StateSet::new(), &mut s).unwrap(),
        Feasibility::Infeasible(Witness::PreNotPost(state(&[("x", 0)])))
    );
    let (outcome, _) = solve(&p, StateSet::new());
    assert_eq!(outcome, InferOutcome::Infeasible(Witness::PreNotPost(state(&[("x", 0)]))));
}

#[test]
fn running_example_is_feasible() {
    let p = trex1();
    let mut s = session(1);
    prepare_session(&p, &mut s).unwrap();
    let (z, _) = record_parallel(&p, &config(), None).unwrap();
    assert_eq!(check_feasible(&p, &z, &mut s).unwrap(), Feasibility::Feasible);
}

#[test]
fn recorded_bad_state_is_infeasible() {
    // P itself implies Q; the violation shows up two steps in
    let p = problem(&lia(&["x"], "(= x 2)", "(and (> x (- 5)) (= x! (- x 1)))", "(>= x 1)"));
    let mut s = session(4);
    let rec = record(&p, 16, &mut s, None);
    for run in &rec.runs {
        check_replay(&p, run).unwrap();
    }
    assert!(rec.states.contains(&state(&[("x", 0)])));
    let mut s = session(5);
    prepare_session(&p, &mut s).unwrap();
    let verdict = check_feasible(&p, &rec.states, &mut s).unwrap();
    assert_eq!(verdict, Feasibility::Infeasible(Witness::ReachableBad(state(&[("x", 0)]))));
    let (outcome, _) = solve(&p, rec.states);
    assert!(matches!(outcome, InferOutcome::Infeasible(Witness::ReachableBad(_))));
}

#[test]
fn reachable_violation_found_without_recorded_states() {
    // Z starts empty; the violation must come from restarts
    let p = problem(&lia(&["x"], "(= x 0)", "(and (< x 10) (= x! (+ x 1)))", "(< x 5)"));
    let (outcome, _) = solve(&p, StateSet::new());
    let InferOutcome::Infeasible(w) = outcome else {
        panic!("{outcome:?}");
    };
    let x = int(w.state(), "x");
    assert!((5..=10).contains(&x), "{w}");
}

#[test]
fn solved_results_are_sound_on_the_suite() {
    for (name, src) in suite() {
        let p = problem(&src);
        let (z, _) = record_parallel(&p, &config(), None).unwrap();
        let (outcome, _) = solve(&p, z);
        if let InferOutcome::Solved(inv) = &outcome {
            assert_sound(&p, inv);
        }
        eprintln!("{name}: {outcome:?}");
    }
}

mod common;

use common::*;
use loopinv::parse_invariant;
use loopinv::solver::CheckResult;
use loopinv::verify::{check_invariant, check_invariant_in, split_pair};
use loopinv::Term;
use std::time::Duration;

fn report(src: &str) -> loopinv::verify::VerificationReport {
    let p = trex1();
    let inv = parse_invariant(&p, src).unwrap();
    check_invariant(&p, &inv, &solver_path(), Duration::from_secs(2), 0).unwrap()
}

#[test]
fn final_invariant_passes() {
    let r = report("(define-fun inv-f ((x Int) (y Int)) Bool (>= x 1))");
    assert!(r.overall, "{r}");
    assert!(r.weaker_than_pre.is_valid() && r.inductive.is_valid() && r.stronger_than_post.is_valid());
}

#[test]
fn true_is_too_weak_for_the_postcondition() {
    let p = trex1();
    let r = report("true");
    assert!(!r.overall);
    assert!(r.weaker_than_pre.is_valid());
    assert!(r.inductive.is_valid());
    let cex = r.stronger_than_post.counterexample().expect("a counterexample");
    // the counterexample falsifies Q by evaluation
    assert_eq!(p.post_call().holds(cex, &p), Ok(false));
    assert!(int(cex, "x") <= 0 && int(cex, "x") >= int(cex, "y"));
}

#[test]
fn point_invariant_is_not_inductive() {
    let p = trex1();
    let r = report("(= x 1)");
    assert!(!r.overall);
    assert!(r.weaker_than_pre.is_valid());
    assert!(r.stronger_than_post.is_valid());
    let both = r.inductive.counterexample().expect("a pair");
    let (s, t) = split_pair(&p, both);
    assert_eq!(int(&s, "x"), 1);
    assert!(int(&s, "y") > 1);
    assert_eq!(int(&t, "x"), 2);
    assert!(loopinv::record::transition_holds(&p, &s, &t));
}

#[test]
fn false_fails_only_the_precondition() {
    let p = trex1();
    let r = report("false");
    let cex = r.weaker_than_pre.counterexample().expect("a counterexample");
    assert_eq!(p.pre_call().holds(cex, &p), Ok(true));
    assert!(r.inductive.is_valid() && r.stronger_than_post.is_valid());
}

#[test]
fn every_counterexample_is_concrete() {
    // candidates over a counter; each failed condition must carry a state
    // that falsifies it under evaluation
    let p = problem(&lia(&["x"], "(= x 0)", "(and (< x 10) (= x! (+ x 1)))", "(<= x 10)"));
    let mut s = session(3);
    for src in ["true", "false", "(= x 0)", "(<= x 5)", "(>= x 0)", "(and (>= x 0) (<= x 10))", "(< x 11)"] {
        let inv = parse_invariant(&p, src).unwrap();
        let r = check_invariant_in(&p, &inv, &mut s).unwrap();
        let pre = Term::implies(p.pre_call(), inv.clone());
        let post = Term::implies(inv.clone(), p.post_call());
        if let CheckResult::Counterexample(c) = &r.weaker_than_pre {
            assert_eq!(pre.holds(c, &p), Ok(false), "{src}");
        }
        if let CheckResult::Counterexample(c) = &r.stronger_than_post {
            assert_eq!(post.holds(c, &p), Ok(false), "{src}");
        }
        if let CheckResult::Counterexample(c) = &r.inductive {
            let (a, b) = split_pair(&p, c);
            assert!(inv.holds(&a, &p).unwrap() && !inv.holds(&b, &p).unwrap(), "{src}");
            assert!(loopinv::record::transition_holds(&p, &a, &b));
        }
        let expect = matches!(src, "(and (>= x 0) (<= x 10))" | "(< x 11)");
        assert_eq!(r.overall, expect, "{src}: {r}");
    }
}

#[test]
fn report_lists_each_condition() {
    let text = report("(>= x 1)").to_string();
    assert_eq!(
        text,
        "weaker_than_pre: valid\ninductive: valid\nstronger_than_post: valid\noverall: pass"
    );
}

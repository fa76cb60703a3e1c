//! Randomized cross-checks between the static analyses, the library's
//! enumeration oracle and the IR interpreter used by the test suite.

mod common;

use common::gen::{order_violation_exists, uninit_read_exists};
use common::*;
use ischeck::callorder::{enumerate_oracle, OracleBounds, OracleVerdict};

#[test]
fn enumeration_oracle_agrees_with_ir_interpreter() {
    let bounds = OracleBounds { max_schedule_len: SWEEP_SCHEDULE_LEN, max_unroll: SWEEP_UNROLL, max_paths: 1_000_000 };
    for seed in 50_000..50_300 {
        let (g, _dir, m, c) = generated(seed);
        let library = matches!(enumerate_oracle(&m, &c, bounds).unwrap(), OracleVerdict::Violation { .. });
        let ir = order_violation_exists(&g, SWEEP_SCHEDULE_LEN, SWEEP_UNROLL);
        assert_eq!(library, ir, "seed {seed}\n{}\n{}", g.source(), g.contract());
    }
}

#[test]
fn call_order_check_is_sound_on_fresh_seeds() {
    let s = t12_sweep(100_000, 300);
    println!("{}", s.summary());
    assert!(s.unsound.is_empty(), "{:?}", s.unsound);
}

#[test]
fn init_before_read_check_is_sound_on_fresh_seeds() {
    let s = t9_sweep(200_000, 300);
    println!("{}", s.summary());
    assert!(s.unsound.is_empty(), "{:?}", s.unsound);
}

#[test]
fn deeper_loops_do_not_change_the_static_verdicts() {
    // with one more unrolling the oracles still never contradict a static pass
    for seed in 300_000..300_100 {
        let (g, _dir, m, c) = generated(seed);
        if ischeck::dataflow::check_init_before_read(&m, &c).status == ischeck::rules::Status::Pass {
            assert!(!uninit_read_exists(&g, 3, 3), "seed {seed}");
        }
        if ischeck::callorder::check_call_order(&m, &c).status == ischeck::rules::Status::Pass {
            assert!(!order_violation_exists(&g, 3, 3), "seed {seed}");
        }
    }
}

#[test]
fn generated_modules_pass_the_structural_checks() {
    // the generator stays inside the rules it is not meant to exercise
    for seed in 0..40 {
        let (_g, dir, _m, _c) = generated(seed);
        let d = dir.path();
        let mut cfg = ischeck::run::RunConfig::new(d.join("m.h"), d.join("m.c"), Some(d.join("m.is")));
        cfg.checks = ["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T10", "CFR10", "DFR2-3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let r = ischeck::run::run_check(&cfg).unwrap();
        assert_eq!(r.verdict, ischeck::report::Verdict::Verified, "seed {seed}: {}", r.to_text(true));
    }
}

//! The acceptance suite: one pass/fail line per criterion.

mod common;

use common::*;

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 reference pass fixture", criterion_1),
        ("2 reference fail fixture", criterion_2),
        ("3 call order with oracle", criterion_3),
        ("4 per-rule corpus", criterion_4),
        ("5 call-order oracle sweep", criterion_5),
        ("6 init-before-read oracle sweep", criterion_6),
        ("7 contract language", criterion_7),
        ("8 determinism", criterion_8),
        ("9 critic gating", criterion_9),
        ("10 exit codes", criterion_10),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                println!("criterion {name}: FAIL ({why})");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#![allow(dead_code)]

pub mod gen;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ischeck::callorder::{check_call_order, enumerate_oracle, OracleBounds, OracleVerdict};
use ischeck::cfront::{parse_module, CModule, PreprocessConfig};
use ischeck::contract::{parse_contract, render_contract, validate_contract, ISContract};
use ischeck::dataflow::check_init_before_read;
use ischeck::report::Verdict;
use ischeck::rules::{CheckId, RuleConfig, RuleId, Status, TaskId};
use ischeck::run::{run_check, run_checks, RunConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn tmon(variant: char) -> RunConfig {
    let d = fixtures().join("tmon");
    RunConfig::new(d.join(format!("tmon_{variant}.h")), d.join(format!("tmon_{variant}.c")), Some(d.join("tmon.is")))
}

pub fn load(cfg: &RunConfig) -> (CModule, ISContract) {
    let m = parse_module(&cfg.header_path, &cfg.source_path, &PreprocessConfig::default()).unwrap();
    let text = std::fs::read_to_string(cfg.contract_path.as_ref().unwrap()).unwrap();
    (m, parse_contract(&text).unwrap())
}

pub fn t1_to_t11() -> Vec<CheckId> {
    TaskId::ALL[..11].iter().map(|&t| CheckId::Task(t)).collect()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ischeck")
}

pub type Outcome = Result<String, String>;

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {took:.2?}"))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Fig. 4a module with the Fig. 3 contract passes T1..T11.
pub fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (m, c) = load(&tmon('a'));
    let results = run_checks(&t1_to_t11(), &m, Some(&c), &RuleConfig::default());
    let bad: Vec<String> = results
        .iter()
        .filter(|r| r.status != Status::Pass || r.violations().next().is_some())
        .map(|r| format!("{} {:?}", r.task_id, r.status))
        .collect();
    ensure(bad.is_empty(), || format!("not passing: {bad:?}"))?;
    within(start, Duration::from_secs(1), "T1..T11 pass with zero violations".into())
}

/// Fig. 4b fails exactly T1, T5, T6, T7, T8, T9 among T1..T11.
pub fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (m, c) = load(&tmon('b'));
    let results = run_checks(&t1_to_t11(), &m, Some(&c), &RuleConfig::default());
    let failing: BTreeSet<String> = results.iter().filter(|r| r.status == Status::Fail).map(|r| r.task_id.to_string()).collect();
    let passing: BTreeSet<String> = results.iter().filter(|r| r.status == Status::Pass).map(|r| r.task_id.to_string()).collect();
    let want_fail: BTreeSet<String> = ["T1", "T5", "T6", "T7", "T8", "T9"].map(String::from).into();
    let want_pass: BTreeSet<String> = ["T2", "T3", "T4", "T10", "T11"].map(String::from).into();
    ensure(failing == want_fail && passing == want_pass, || format!("failing {failing:?}, passing {passing:?}"))?;
    within(start, Duration::from_secs(1), format!("failing {failing:?}"))
}

/// T12 on Fig. 4a/4b, each confirmed by the bounded enumeration.
pub fn criterion_3() -> Outcome {
    let start = Instant::now();
    let bounds = OracleBounds { max_schedule_len: 3, max_unroll: 2, max_paths: 100_000 };
    let (ma, c) = load(&tmon('a'));
    let (mb, _) = load(&tmon('b'));
    let sa = check_call_order(&ma, &c).status;
    let sb = check_call_order(&mb, &c).status;
    ensure(sa == Status::Pass && sb == Status::Fail, || format!("static: 4a {sa:?}, 4b {sb:?}"))?;
    let oa = enumerate_oracle(&ma, &c, bounds).map_err(|e| e.to_string())?;
    let ob = enumerate_oracle(&mb, &c, bounds).map_err(|e| e.to_string())?;
    ensure(oa == OracleVerdict::NoViolation, || format!("oracle on 4a: {oa:?}"))?;
    let OracleVerdict::Violation { trace, before, after, .. } = &ob else {
        return Err("oracle finds no violation on 4b".into());
    };
    let expected = ["tmon_sens_create", "tmon_sens_read", "tmon_warn_write"];
    ensure(
        *trace == expected && (before.as_str(), after.as_str()) == ("tmon_warn_create", "tmon_warn_write"),
        || format!("unexpected 4b trace {trace:?}"),
    )?;
    within(start, Duration::from_secs(5), format!("4a pass/no-violation, 4b fail/trace {trace:?}"))
}

pub const RULE_NAMES: [&str; 17] = [
    "CFR1", "CFR2", "CFR3", "CFR4", "CFR5", "CFR6", "CFR7", "CFR8", "CFR9", "CFR10", "CFR11", "DFR1", "DFR2", "DFR3", "DFR4",
    "DFR5", "DFR6",
];

pub fn corpus_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(dir.join("m.h"), dir.join("m.c"), Some(dir.join("m.is")));
    cfg.rules = RuleConfig { strict_advisory: true, null_macros: vec!["NULL".into()], ..Default::default() };
    cfg
}

/// Rule ids of all violations reported on a corpus fixture.
pub fn corpus_rules(dir: &Path) -> Result<BTreeSet<RuleId>, String> {
    let report = run_check(&corpus_config(dir)).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(report.tasks.iter().flat_map(|t| t.violations().map(|d| d.rule_id)).collect())
}

/// Every rule has a violating fixture yielding exactly that rule and a conforming one yielding none.
pub fn criterion_4() -> Outcome {
    let start = Instant::now();
    let root = fixtures().join("rules");
    let mut problems = Vec::new();
    for name in RULE_NAMES {
        let rule = RuleId::ALL.iter().copied().find(|r| format!("{r:?}") == name).expect("known rule");
        let bad = corpus_rules(&root.join(name).join("violating"))?;
        let good = corpus_rules(&root.join(name).join("conforming"))?;
        if bad != BTreeSet::from([rule]) {
            problems.push(format!("{name} violating -> {bad:?}"));
        }
        if !good.is_empty() {
            problems.push(format!("{name} conforming -> {good:?}"));
        }
    }
    ensure(problems.is_empty(), || problems.join("; "))?;
    within(start, Duration::from_secs(10), "17 rules x 2 fixtures".into())
}

pub struct SweepStats {
    pub modules: usize,
    pub static_fail: usize,
    pub oracle_violation: usize,
    pub unsound: Vec<u64>,
    pub false_positive: usize,
}

impl SweepStats {
    pub fn summary(&self) -> String {
        let fp_rate = if self.static_fail == 0 { 0.0 } else { self.false_positive as f64 / self.static_fail as f64 };
        format!(
            "{} modules, {} static failures, {} oracle violations, {} unsound, false-positive rate {:.1}% ({}/{})",
            self.modules,
            self.static_fail,
            self.oracle_violation,
            self.unsound.len(),
            100.0 * fp_rate,
            self.false_positive,
            self.static_fail
        )
    }
}

/// Generate, write and parse one random module.
pub fn generated(seed: u64) -> (gen::GenModule, tempfile::TempDir, CModule, ISContract) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gen::generate(&mut rng, gen::Family::default());
    let dir = tempfile::tempdir().unwrap();
    g.write_to(dir.path());
    let m = parse_module(&dir.path().join("m.h"), &dir.path().join("m.c"), &PreprocessConfig::default())
        .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", g.source()));
    let c = parse_contract(&g.contract()).unwrap();
    (g, dir, m, c)
}

pub const SWEEP_MODULES: u64 = 250;
pub const SWEEP_SCHEDULE_LEN: usize = 4;
pub const SWEEP_UNROLL: usize = 2;

pub fn t12_sweep(base_seed: u64, n: u64) -> SweepStats {
    let bounds = OracleBounds { max_schedule_len: SWEEP_SCHEDULE_LEN, max_unroll: SWEEP_UNROLL, max_paths: 1_000_000 };
    let mut s = SweepStats { modules: 0, static_fail: 0, oracle_violation: 0, unsound: vec![], false_positive: 0 };
    for seed in base_seed..base_seed + n {
        let (_g, _dir, m, c) = generated(seed);
        let fails = check_call_order(&m, &c).status == Status::Fail;
        let violation = matches!(enumerate_oracle(&m, &c, bounds).expect("within bounds"), OracleVerdict::Violation { .. });
        s.modules += 1;
        s.static_fail += usize::from(fails);
        s.oracle_violation += usize::from(violation);
        if !fails && violation {
            s.unsound.push(seed);
        }
        if fails && !violation {
            s.false_positive += 1;
        }
    }
    s
}

pub fn t9_sweep(base_seed: u64, n: u64) -> SweepStats {
    let mut s = SweepStats { modules: 0, static_fail: 0, oracle_violation: 0, unsound: vec![], false_positive: 0 };
    for seed in base_seed..base_seed + n {
        let (g, _dir, m, c) = generated(seed);
        let fails = check_init_before_read(&m, &c).status == Status::Fail;
        let violation = gen::uninit_read_exists(&g, SWEEP_SCHEDULE_LEN, SWEEP_UNROLL);
        s.modules += 1;
        s.static_fail += usize::from(fails);
        s.oracle_violation += usize::from(violation);
        if !fails && violation {
            s.unsound.push(seed);
        }
        if fails && !violation {
            s.false_positive += 1;
        }
    }
    s
}

fn sweep_outcome(s: SweepStats, start: Instant) -> Outcome {
    ensure(s.modules >= 200, || format!("only {} modules", s.modules))?;
    ensure(s.unsound.is_empty(), || format!("static pass with oracle violation for seeds {:?}", s.unsound))?;
    within(start, Duration::from_secs(300), s.summary())
}

pub fn criterion_5() -> Outcome {
    let start = Instant::now();
    sweep_outcome(t12_sweep(0, SWEEP_MODULES), start)
}

pub fn criterion_6() -> Outcome {
    let start = Instant::now();
    sweep_outcome(t9_sweep(10_000, SWEEP_MODULES), start)
}

/// Fig. 3 and the completed Fig. 7/8 contracts parse, validate and round-trip.
pub fn criterion_7() -> Outcome {
    let start = Instant::now();
    let files = [fixtures().join("tmon/tmon.is"), fixtures().join("contracts/sfld.is"), fixtures().join("contracts/sgmm.is")];
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let c = parse_contract(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        let issues = validate_contract(&c);
        ensure(issues.is_empty(), || format!("{}: {issues:?}", f.display()))?;
        let back = parse_contract(&render_contract(&c)).map_err(|e| format!("{}: reparse: {e}", f.display()))?;
        ensure(back == c, || format!("{}: round-trip changed the contract", f.display()))?;
    }
    within(start, Duration::from_secs(1), "tmon, sfld, sgmm".into())
}

pub fn cli(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("run ischeck")
}

fn tmon_args(variant: char) -> Vec<String> {
    let d = fixtures().join("tmon");
    vec![
        "--contract".into(),
        d.join("tmon.is").display().to_string(),
        "--header".into(),
        d.join(format!("tmon_{variant}.h")).display().to_string(),
        "--source".into(),
        d.join(format!("tmon_{variant}.c")).display().to_string(),
    ]
}

pub fn cli_tmon(variant: char, extra: &[&str]) -> std::process::Output {
    let mut args = tmon_args(variant);
    args.extend(extra.iter().map(|s| s.to_string()));
    Command::new(bin()).args(&args).output().expect("run ischeck")
}

/// Two runs on each reference fixture give byte-identical canonical reports.
pub fn criterion_8() -> Outcome {
    for v in ['a', 'b'] {
        let one = cli_tmon(v, &["--format", "json", "--canonical"]);
        let two = cli_tmon(v, &["--format", "json", "--canonical"]);
        ensure(!one.stdout.is_empty() && one.stdout == two.stdout, || format!("tmon_{v}: reports differ"))?;
    }
    Ok("tmon_a and tmon_b canonical JSON identical across runs".into())
}

/// A failing gate critic skips the rest and makes the verdict not-verified.
pub fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("critics.toml");
    std::fs::write(
        &config,
        r#"
[[critic]]
name = "compile"
command = ["sh", "-c", "echo 'error: does not compile' >&2; exit 1"]

[[critic]]
name = "deductive"
command = ["sh", "-c", "echo 'Proved goals: 86 / 86'"]
counters = { proven = 'Proved goals:\s*(\d+)' }

[[critic]]
name = "misra"
command = ["sh", "-c", "exit 0"]
"#,
    )
    .map_err(|e| e.to_string())?;
    let mut cfg = tmon('a');
    cfg.critics_config_path = Some(config);
    let report = run_check(&cfg).map_err(|e| e.to_string())?;
    let statuses: Vec<(String, Status)> = report.critics.iter().map(|c| (c.critic_name.clone(), c.status)).collect();
    ensure(
        statuses
            == vec![
                ("compile".to_string(), Status::Fail),
                ("deductive".to_string(), Status::Skipped),
                ("misra".to_string(), Status::Skipped),
            ],
        || format!("critics {statuses:?}"),
    )?;
    ensure(report.critics[1..].iter().all(|c| c.reason.as_deref() == Some("gate failed")), || "missing skip reason".into())?;
    ensure(report.verdict == Verdict::NotVerified, || format!("verdict {:?}", report.verdict))?;
    Ok("compile fails, deductive and misra skipped, not-verified".into())
}

/// Exit codes: 0 for tmon_a, 1 for tmon_b, 2 for a missing file.
pub fn criterion_10() -> Outcome {
    let a = cli_tmon('a', &[]).status.code();
    let b = cli_tmon('b', &[]).status.code();
    let d = fixtures().join("tmon");
    let missing = cli(&[
        "--contract",
        &d.join("no_such.is").display().to_string(),
        "--header",
        &d.join("tmon_a.h").display().to_string(),
        "--source",
        &d.join("tmon_a.c").display().to_string(),
    ])
    .status
    .code();
    ensure((a, b, missing) == (Some(0), Some(1), Some(2)), || format!("exit codes {a:?} {b:?} {missing:?}"))?;
    Ok("exit codes 0/1/2".into())
}

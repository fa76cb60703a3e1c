//! Running the selected checks and critics on one module.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::thread;

use thiserror::Error;

use crate::callorder::check_call_order;
use crate::cfront::{parse_module, CModule, FrontendError, PreprocessConfig};
use crate::contract::{parse_contract, validate_contract, ContractError, ContractIssue, ISContract};
use crate::critics::{load_critics, run_critics, CriticConfigError, CriticPaths};
use crate::dataflow::check_init_before_read;
use crate::report::{aggregate, Report};
use crate::rules::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub contract_path: Option<PathBuf>,
    pub header_path: PathBuf,
    pub source_path: PathBuf,
    pub include_dirs: Vec<PathBuf>,
    pub defines: BTreeMap<String, String>,
    /// Checks to run; empty means all of them.
    pub checks: Vec<CheckId>,
    pub format: Format,
    pub rules: RuleConfig,
    pub stub_missing_includes: bool,
    pub critics_config_path: Option<PathBuf>,
    /// Leave out the timestamp and durations so repeated runs render identically.
    pub canonical: bool,
}

impl RunConfig {
    pub fn new(header: impl Into<PathBuf>, source: impl Into<PathBuf>, contract: Option<PathBuf>) -> Self {
        RunConfig { header_path: header.into(), source_path: source.into(), contract_path: contract, ..Default::default() }
    }

    pub fn selected_checks(&self) -> Vec<CheckId> {
        let mut v = if self.checks.is_empty() { CheckId::ALL.to_vec() } else { self.checks.clone() };
        v.sort();
        v.dedup();
        v
    }

    pub fn render(&self, report: &Report) -> String {
        match self.format {
            Format::Text => report.to_text(self.canonical),
            Format::Json => report.to_json(self.canonical),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{what} file not found: {}", path.display())]
    MissingFile { what: &'static str, path: PathBuf },
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    ContractSyntax { path: PathBuf, source: ContractError },
    #[error("{}: invalid contract: {}", path.display(), join(issues))]
    ContractInvalid { path: PathBuf, issues: Vec<ContractIssue> },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Critics(#[from] CriticConfigError),
}

fn join(issues: &[ContractIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub fn load_contract(path: &Path) -> Result<ISContract, RunError> {
    if !path.is_file() {
        return Err(RunError::MissingFile { what: "contract", path: path.to_path_buf() });
    }
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let c = parse_contract(&text).map_err(|e| RunError::ContractSyntax { path: path.to_path_buf(), source: e })?;
    let issues = validate_contract(&c);
    if !issues.is_empty() {
        return Err(RunError::ContractInvalid { path: path.to_path_buf(), issues });
    }
    Ok(c)
}

/// Run one check. Checks that need a contract are skipped without one.
pub fn run_one(check: CheckId, m: &CModule, c: Option<&ISContract>, cfg: &RuleConfig) -> RuleResult {
    if check.needs_contract() && c.is_none() {
        return RuleResult::skipped(check, "requires the .is contract");
    }
    let need = || c.expect("contract presence checked above");
    match check {
        CheckId::Task(t) => match t {
            TaskId::T1 => check_call_permissions(m, need()),
            TaskId::T2 => check_no_function_pointers(m),
            TaskId::T3 => check_header_purity(m),
            TaskId::T4 => check_includes(m),
            TaskId::T5 => check_entry_declarations(m, need()),
            TaskId::T6 => check_entry_definitions(m, need()),
            TaskId::T7 => check_local_functions(m, need()),
            TaskId::T8 => check_globals_static(m),
            TaskId::T9 => check_init_before_read(m, need()),
            TaskId::T10 => check_no_pointer_literals(m, cfg),
            TaskId::T11 => check_typedef_usage(m, c, cfg),
            TaskId::T12 => check_call_order(m, need()),
        },
        CheckId::Cfr10 => check_no_extern(m, c),
        CheckId::Dfr2_3 => check_pointer_discipline(m, cfg),
    }
}

/// Run checks concurrently; results come back in the order given.
pub fn run_checks(checks: &[CheckId], m: &CModule, c: Option<&ISContract>, cfg: &RuleConfig) -> Vec<RuleResult> {
    thread::scope(|s| {
        let handles: Vec<_> = checks.iter().map(|&k| s.spawn(move || run_one(k, m, c, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("check thread")).collect()
    })
}

fn check_files(cfg: &RunConfig) -> Result<(), RunError> {
    for (what, p) in [("header", &cfg.header_path), ("source", &cfg.source_path)] {
        if !p.is_file() {
            return Err(RunError::MissingFile { what, path: p.clone() });
        }
    }
    Ok(())
}

pub fn run_check(cfg: &RunConfig) -> Result<Report, RunError> {
    check_files(cfg)?;
    let contract = cfg.contract_path.as_deref().map(load_contract).transpose()?;
    check_module(cfg, contract.as_ref())
}

/// Like [`run_check`] with an already loaded contract; `cfg.contract_path` is
/// only recorded in the report and passed to critics.
pub fn check_module(cfg: &RunConfig, contract: Option<&ISContract>) -> Result<Report, RunError> {
    check_files(cfg)?;
    let specs = cfg.critics_config_path.as_deref().map(load_critics).transpose()?;
    let pp = PreprocessConfig {
        include_dirs: cfg.include_dirs.clone(),
        defines: cfg.defines.clone(),
        stub_missing_includes: cfg.stub_missing_includes,
    };
    let m = parse_module(&cfg.header_path, &cfg.source_path, &pp)?;
    let tasks = run_checks(&cfg.selected_checks(), &m, contract, &cfg.rules);
    let module_name = contract.map_or_else(|| m.name.clone(), |c| c.module_name.clone());
    let critics = match &specs {
        Some(specs) => run_critics(
            specs,
            &CriticPaths {
                source: cfg.source_path.clone(),
                header: cfg.header_path.clone(),
                contract: cfg.contract_path.clone(),
                module: module_name.clone(),
            },
        ),
        None => Vec::new(),
    };
    Ok(aggregate(module_name, cfg.contract_path.clone(), tasks, critics))
}

pub fn exit_code(result: &Result<Report, RunError>) -> i32 {
    match result {
        Ok(r) => r.verdict.exit_code(),
        Err(e) => e.exit_code(),
    }
}

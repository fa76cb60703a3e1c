//! Rule identifiers, diagnostics and the structural checks.

mod checks;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::source::SourceLoc;

pub use checks::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    CFR1,
    CFR2,
    CFR3,
    CFR4,
    CFR5,
    CFR6,
    CFR7,
    CFR8,
    CFR9,
    CFR10,
    CFR11,
    DFR1,
    DFR2,
    DFR3,
    DFR4,
    DFR5,
    DFR6,
}

impl RuleId {
    pub const ALL: [RuleId; 17] = [
        RuleId::CFR1,
        RuleId::CFR2,
        RuleId::CFR3,
        RuleId::CFR4,
        RuleId::CFR5,
        RuleId::CFR6,
        RuleId::CFR7,
        RuleId::CFR8,
        RuleId::CFR9,
        RuleId::CFR10,
        RuleId::CFR11,
        RuleId::DFR1,
        RuleId::DFR2,
        RuleId::DFR3,
        RuleId::DFR4,
        RuleId::DFR5,
        RuleId::DFR6,
    ];

    /// The task that reports this rule, if any.
    pub fn task(self) -> Option<TaskId> {
        use RuleId::*;
        Some(match self {
            CFR1 => TaskId::T1,
            CFR2 => TaskId::T12,
            CFR3 => TaskId::T2,
            CFR4 => TaskId::T3,
            CFR5 => TaskId::T4,
            CFR6 | CFR11 => TaskId::T5,
            CFR7 => TaskId::T6,
            CFR8 | CFR9 => TaskId::T7,
            DFR1 => TaskId::T8,
            DFR4 => TaskId::T9,
            DFR5 => TaskId::T10,
            DFR6 => TaskId::T11,
            CFR10 | DFR2 | DFR3 => return None,
        })
    }

    /// The check that reports this rule.
    pub fn check(self) -> CheckId {
        match self {
            RuleId::CFR10 => CheckId::Cfr10,
            RuleId::DFR2 | RuleId::DFR3 => CheckId::Dfr2_3,
            r => CheckId::Task(r.task().expect("rule with a task")),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
}

impl TaskId {
    pub const ALL: [TaskId; 12] = [
        TaskId::T1,
        TaskId::T2,
        TaskId::T3,
        TaskId::T4,
        TaskId::T5,
        TaskId::T6,
        TaskId::T7,
        TaskId::T8,
        TaskId::T9,
        TaskId::T10,
        TaskId::T11,
        TaskId::T12,
    ];

    pub fn rules(self) -> &'static [RuleId] {
        use RuleId::*;
        match self {
            TaskId::T1 => &[CFR1],
            TaskId::T2 => &[CFR3],
            TaskId::T3 => &[CFR4],
            TaskId::T4 => &[CFR5],
            TaskId::T5 => &[CFR6, CFR11],
            TaskId::T6 => &[CFR7],
            TaskId::T7 => &[CFR8, CFR9],
            TaskId::T8 => &[DFR1],
            TaskId::T9 => &[DFR4],
            TaskId::T10 => &[DFR5],
            TaskId::T11 => &[DFR6],
            TaskId::T12 => &[CFR2],
        }
    }

    /// Whether the task reads the contract.
    pub fn needs_contract(self) -> bool {
        matches!(self, TaskId::T1 | TaskId::T5 | TaskId::T6 | TaskId::T7 | TaskId::T9 | TaskId::T12)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TaskId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown task `{s}` (expected T1..T12)"))
    }
}

/// A unit of checking: one task, or one of the rule groups without a task number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckId {
    Task(TaskId),
    /// CFR10, no `extern`.
    Cfr10,
    /// DFR2 and DFR3, pointer arithmetic and pointer casts.
    Dfr2_3,
}

impl CheckId {
    pub const ALL: [CheckId; 14] = [
        CheckId::Task(TaskId::T1),
        CheckId::Task(TaskId::T2),
        CheckId::Task(TaskId::T3),
        CheckId::Task(TaskId::T4),
        CheckId::Task(TaskId::T5),
        CheckId::Task(TaskId::T6),
        CheckId::Task(TaskId::T7),
        CheckId::Task(TaskId::T8),
        CheckId::Task(TaskId::T9),
        CheckId::Task(TaskId::T10),
        CheckId::Task(TaskId::T11),
        CheckId::Task(TaskId::T12),
        CheckId::Cfr10,
        CheckId::Dfr2_3,
    ];

    pub fn rules(self) -> &'static [RuleId] {
        match self {
            CheckId::Task(t) => t.rules(),
            CheckId::Cfr10 => &[RuleId::CFR10],
            CheckId::Dfr2_3 => &[RuleId::DFR2, RuleId::DFR3],
        }
    }

    pub fn task(self) -> Option<TaskId> {
        match self {
            CheckId::Task(t) => Some(t),
            _ => None,
        }
    }

    pub fn needs_contract(self) -> bool {
        self.task().is_some_and(TaskId::needs_contract)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckId::Task(t) => write!(f, "{t}"),
            CheckId::Cfr10 => f.write_str("CFR10"),
            CheckId::Dfr2_3 => f.write_str("DFR2-3"),
        }
    }
}

impl FromStr for CheckId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CFR10" => Ok(CheckId::Cfr10),
            "DFR2-3" | "DFR2" | "DFR3" => Ok(CheckId::Dfr2_3),
            _ => s.parse().map(CheckId::Task).map_err(|_| format!("unknown check `{s}` (expected T1..T12, CFR10 or DFR2-3)")),
        }
    }
}

impl Serialize for CheckId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CheckId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Violation,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule_id: RuleId,
    pub task_id: Option<TaskId>,
    pub severity: Severity,
    pub message: String,
    #[serde(flatten)]
    pub loc: SourceLoc,
    pub subject: String,
}

impl Diagnostic {
    pub fn violation(rule: RuleId, loc: &SourceLoc, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            rule_id: rule,
            task_id: rule.task(),
            severity: Severity::Violation,
            message: message.into(),
            loc: loc.clone(),
            subject: subject.into(),
        }
    }

    pub fn warning(rule: RuleId, loc: &SourceLoc, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, ..Diagnostic::violation(rule, loc, subject, message) }
    }

    fn sort_key(&self) -> (&SourceLoc, RuleId, &str, &str) {
        (&self.loc, self.rule_id, &self.subject, &self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Violation => "violation",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev} {}", self.loc, self.rule_id)?;
        if let Some(t) = self.task_id {
            write!(f, " ({t})")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Sort by file, line, column, then rule.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub task_id: CheckId,
    pub rules: Vec<RuleId>,
    pub status: Status,
    /// Why the check was skipped or errored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub duration_secs: f64,
}

impl RuleResult {
    pub fn from_diagnostics(check: CheckId, mut diagnostics: Vec<Diagnostic>, duration_secs: f64) -> Self {
        sort_diagnostics(&mut diagnostics);
        diagnostics.dedup();
        let failed = diagnostics.iter().any(|d| d.severity == Severity::Violation);
        RuleResult {
            task_id: check,
            rules: check.rules().to_vec(),
            status: if failed { Status::Fail } else { Status::Pass },
            reason: None,
            diagnostics,
            duration_secs,
        }
    }

    pub fn skipped(check: CheckId, reason: impl Into<String>) -> Self {
        RuleResult {
            task_id: check,
            rules: check.rules().to_vec(),
            status: Status::Skipped,
            reason: Some(reason.into()),
            diagnostics: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub fn error(check: CheckId, reason: impl Into<String>) -> Self {
        RuleResult { status: Status::Error, ..RuleResult::skipped(check, reason) }
    }

    pub fn violations(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Violation)
    }
}

/// Run a check body and time it.
pub fn timed(check: CheckId, body: impl FnOnce() -> Vec<Diagnostic>) -> RuleResult {
    let start = Instant::now();
    let diags = body();
    RuleResult::from_diagnostics(check, diags, start.elapsed().as_secs_f64())
}

/// Options for the configurable rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleConfig {
    /// Raw types (`int`) or keyword sequences (`unsigned int`) exempt from the typedef rule.
    pub typedef_allowlist: Vec<String>,
    /// Macro names whose expansion may stand for a null pointer.
    pub null_macros: Vec<String>,
    /// Treat typedef-rule warnings as violations.
    pub strict_advisory: bool,
}

//! Aggregation of check and critic results into a report and verdict.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::rules::{RuleResult, Severity, Status};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticOutcome {
    pub critic_name: String,
    pub status: Status,
    /// Errors of a critic that is not required are recorded but do not affect the verdict.
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Named counts extracted from the critic's output.
    pub detail: BTreeMap<String, u64>,
    pub raw_excerpt: String,
    pub duration_secs: f64,
}

impl CriticOutcome {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        CriticOutcome {
            critic_name: name.into(),
            status,
            required: true,
            reason: None,
            detail: BTreeMap::new(),
            raw_excerpt: String::new(),
            duration_secs: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    NotVerified,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::NotVerified => 1,
            Verdict::Error => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::NotVerified => "not-verified",
            Verdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub module_name: String,
    pub contract_path: Option<PathBuf>,
    /// RFC 3339; omitted in canonical output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub tool_version: String,
    pub tasks: Vec<RuleResult>,
    pub critics: Vec<CriticOutcome>,
    pub warnings: Vec<String>,
    pub verdict: Verdict,
}

pub fn verdict(tasks: &[RuleResult], critics: &[CriticOutcome]) -> Verdict {
    let critic_error = critics.iter().any(|c| c.status == Status::Error && c.required);
    if critic_error || tasks.iter().any(|t| t.status == Status::Error) {
        return Verdict::Error;
    }
    let tasks_ok = tasks.iter().all(|t| matches!(t.status, Status::Pass | Status::Skipped));
    let critics_ok = critics.iter().all(|c| match c.status {
        Status::Pass | Status::Skipped => true,
        Status::Error => !c.required,
        Status::Fail => false,
    });
    if tasks_ok && critics_ok {
        Verdict::Verified
    } else {
        Verdict::NotVerified
    }
}

/// Build a report. Tasks are ordered by id; critics keep their given order.
pub fn aggregate(
    module_name: impl Into<String>,
    contract_path: Option<PathBuf>,
    mut tasks: Vec<RuleResult>,
    critics: Vec<CriticOutcome>,
) -> Report {
    tasks.sort_by_key(|t| t.task_id);
    let mut warnings = Vec::new();
    let executed = tasks.iter().filter(|t| t.status != Status::Skipped).count()
        + critics.iter().filter(|c| c.status != Status::Skipped).count();
    if executed == 0 {
        warnings.push("no checks executed".to_string());
    }
    let verdict = verdict(&tasks, &critics);
    Report {
        schema_version: SCHEMA_VERSION,
        module_name: module_name.into(),
        contract_path,
        timestamp: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
        tool_version: TOOL_VERSION.to_string(),
        tasks,
        critics,
        warnings,
        verdict,
    }
}

impl Report {
    /// A copy without run-dependent fields: no timestamp and all durations zero.
    pub fn canonical(&self) -> Report {
        let mut r = self.clone();
        r.timestamp = None;
        r.tasks.iter_mut().for_each(|t| t.duration_secs = 0.0);
        r.critics.iter_mut().for_each(|c| c.duration_secs = 0.0);
        r
    }

    pub fn failing_tasks(&self) -> Vec<String> {
        self.tasks.iter().filter(|t| t.status == Status::Fail).map(|t| t.task_id.to_string()).collect()
    }

    pub fn to_json(&self, canonical: bool) -> String {
        let r = if canonical { self.canonical() } else { self.clone() };
        let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self, canonical: bool) -> String {
        let r = if canonical { self.canonical() } else { self.clone() };
        let mut out = String::new();
        let _ = writeln!(out, "module: {}", r.module_name);
        if let Some(p) = &r.contract_path {
            let _ = writeln!(out, "contract: {}", p.display());
        }
        if let Some(ts) = &r.timestamp {
            let _ = writeln!(out, "timestamp: {ts}");
        }
        let _ = writeln!(out, "tool version: {}", r.tool_version);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:<20} {:>9}", "check", "result", "time");
        for t in &r.tasks {
            let warnings = t.diagnostics.iter().filter(|d| d.severity == Severity::Warning).count();
            let mut result = match t.status {
                Status::Fail => format!("{} ({} viol.)", mark(t.status), t.violations().count()),
                s => mark(s).to_string(),
            };
            if warnings > 0 {
                let _ = write!(result, " ({warnings} warn.)");
            }
            let _ = writeln!(out, "{:<10} {:<20} {:>8.3}s", t.task_id.to_string(), result, t.duration_secs);
        }
        for c in &r.critics {
            let mut result = mark(c.status).to_string();
            if !c.detail.is_empty() {
                let counts: Vec<String> = c.detail.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = write!(result, " ({})", counts.join(", "));
            }
            let _ = writeln!(out, "{:<10} {:<20} {:>8.3}s", c.critic_name, result, c.duration_secs);
        }
        let mut notes: Vec<String> = Vec::new();
        for t in &r.tasks {
            if let Some(reason) = &t.reason {
                notes.push(format!("{}: {}: {reason}", t.task_id, status_word(t.status)));
            }
            notes.extend(t.diagnostics.iter().map(|d| d.to_string()));
        }
        for c in &r.critics {
            if let Some(reason) = &c.reason {
                notes.push(format!("{}: {}: {reason}", c.critic_name, status_word(c.status)));
            }
        }
        notes.extend(r.warnings.iter().map(|w| format!("warning: {w}")));
        if !notes.is_empty() {
            let _ = writeln!(out);
            for n in notes {
                let _ = writeln!(out, "{n}");
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "VERDICT: {}", r.verdict.as_str());
        out
    }
}

fn mark(s: Status) -> &'static str {
    match s {
        Status::Pass => "✓",
        Status::Fail => "✗",
        Status::Skipped => "skipped",
        Status::Error => "error",
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skipped => "skipped",
        Status::Error => "error",
    }
}

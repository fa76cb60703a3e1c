//! External critics: site-specific tools run as subprocesses and classified
//! by exit code and output patterns.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::report::CriticOutcome;
use crate::rules::Status;

/// Bytes of captured output kept in a critic outcome.
pub const EXCERPT_LIMIT: usize = 4096;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriticFile {
    #[serde(default)]
    critic: Vec<RawSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    command: Vec<String>,
    #[serde(default = "default_exit_codes")]
    pass_exit_codes: Vec<i32>,
    pass_pattern: Option<String>,
    fail_pattern: Option<String>,
    #[serde(default)]
    counters: BTreeMap<String, String>,
    #[serde(default)]
    fail_if_nonzero: Vec<String>,
    #[serde(default = "default_timeout")]
    timeout_secs: f64,
    #[serde(default = "default_required")]
    required: bool,
}

fn default_exit_codes() -> Vec<i32> {
    vec![0]
}

fn default_timeout() -> f64 {
    300.0
}

fn default_required() -> bool {
    true
}

#[derive(Debug, Clone)]
pub struct CriticSpec {
    pub name: String,
    /// Program and arguments; `{source}`, `{header}`, `{contract}` and `{module}` are substituted.
    pub command: Vec<String>,
    pub pass_exit_codes: BTreeSet<i32>,
    /// Must match the combined output for the critic to pass.
    pub pass_pattern: Option<Regex>,
    /// Fails the critic when it matches the combined output.
    pub fail_pattern: Option<Regex>,
    /// A pattern with a capture group yields the number captured by its last
    /// match; without a group it yields the number of matches.
    pub counters: BTreeMap<String, Regex>,
    /// Counters that fail the critic when positive.
    pub fail_if_nonzero: Vec<String>,
    pub timeout: Duration,
    pub required: bool,
}

#[derive(Debug, Error)]
pub enum CriticConfigError {
    #[error("cannot read critic config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid critic config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("critic `{name}`: {message}")]
    Invalid { name: String, message: String },
}

fn invalid(name: &str, message: impl Into<String>) -> CriticConfigError {
    CriticConfigError::Invalid { name: name.to_string(), message: message.into() }
}

fn compile(name: &str, what: &str, pattern: &str) -> Result<Regex, CriticConfigError> {
    Regex::new(pattern).map_err(|e| invalid(name, format!("bad {what} pattern: {e}")))
}

pub fn parse_critics(text: &str) -> Result<Vec<CriticSpec>, CriticConfigError> {
    let file: CriticFile = toml::from_str(text)?;
    let mut names = BTreeSet::new();
    let mut out = Vec::new();
    for raw in file.critic {
        let name = raw.name.as_str();
        if name.is_empty() {
            return Err(invalid(name, "empty name"));
        }
        if !names.insert(raw.name.clone()) {
            return Err(invalid(name, "duplicate name"));
        }
        if raw.command.first().map_or(true, |c| c.is_empty()) {
            return Err(invalid(name, "empty command"));
        }
        if !(raw.timeout_secs > 0.0 && raw.timeout_secs.is_finite()) {
            return Err(invalid(name, "timeout_secs must be positive"));
        }
        let mut counters = BTreeMap::new();
        for (k, p) in &raw.counters {
            counters.insert(k.clone(), compile(name, "counter", p)?);
        }
        if let Some(k) = raw.fail_if_nonzero.iter().find(|k| !counters.contains_key(*k)) {
            return Err(invalid(name, format!("fail_if_nonzero names unknown counter `{k}`")));
        }
        out.push(CriticSpec {
            name: raw.name.clone(),
            command: raw.command,
            pass_exit_codes: raw.pass_exit_codes.into_iter().collect(),
            pass_pattern: raw.pass_pattern.as_deref().map(|p| compile(name, "pass", p)).transpose()?,
            fail_pattern: raw.fail_pattern.as_deref().map(|p| compile(name, "fail", p)).transpose()?,
            counters,
            fail_if_nonzero: raw.fail_if_nonzero,
            timeout: Duration::from_secs_f64(raw.timeout_secs),
            required: raw.required,
        });
    }
    Ok(out)
}

pub fn load_critics(path: &Path) -> Result<Vec<CriticSpec>, CriticConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| CriticConfigError::Io { path: path.to_path_buf(), source: e })?;
    parse_critics(&text)
}

/// Paths substituted into critic commands.
#[derive(Debug, Clone, Default)]
pub struct CriticPaths {
    pub source: PathBuf,
    pub header: PathBuf,
    pub contract: Option<PathBuf>,
    pub module: String,
}

impl CriticPaths {
    fn expand(&self, arg: &str) -> String {
        let contract = self.contract.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
        arg.replace("{source}", &self.source.display().to_string())
            .replace("{header}", &self.header.display().to_string())
            .replace("{contract}", &contract)
            .replace("{module}", &self.module)
    }
}

/// Run critics in order. The first one gates the rest: unless it passes, the
/// others are skipped. The others run concurrently; outcomes keep config order.
pub fn run_critics(specs: &[CriticSpec], paths: &CriticPaths) -> Vec<CriticOutcome> {
    let Some((gate, rest)) = specs.split_first() else {
        return Vec::new();
    };
    let first = run_critic(gate, paths);
    let mut out = vec![first];
    if out[0].status != Status::Pass {
        out.extend(rest.iter().map(|s| CriticOutcome {
            required: s.required,
            reason: Some("gate failed".to_string()),
            ..CriticOutcome::new(&s.name, Status::Skipped)
        }));
        return out;
    }
    let results: Vec<CriticOutcome> = thread::scope(|scope| {
        let handles: Vec<_> = rest.iter().map(|s| scope.spawn(move || run_critic(s, paths))).collect();
        handles.into_iter().map(|h| h.join().expect("critic thread")).collect()
    });
    out.extend(results);
    out
}

struct Captured {
    exit_code: Option<i32>,
    output: String,
    timed_out: bool,
}

pub fn run_critic(spec: &CriticSpec, paths: &CriticPaths) -> CriticOutcome {
    let start = Instant::now();
    let mut outcome = CriticOutcome { required: spec.required, ..CriticOutcome::new(&spec.name, Status::Error) };
    let argv: Vec<String> = spec.command.iter().map(|a| paths.expand(a)).collect();
    match execute(&argv, spec.timeout) {
        Err(e) => {
            outcome.reason = Some(if e.kind() == std::io::ErrorKind::NotFound {
                format!("command not found: {}", argv[0])
            } else {
                format!("cannot run {}: {e}", argv[0])
            });
        }
        Ok(cap) => {
            outcome.raw_excerpt = excerpt(&cap.output);
            if cap.timed_out {
                outcome.reason = Some(format!("timed out after {:.1}s", spec.timeout.as_secs_f64()));
            } else {
                for (k, re) in &spec.counters {
                    if let Some(n) = count(re, &cap.output) {
                        outcome.detail.insert(k.clone(), n);
                    }
                }
                let exit_ok = cap.exit_code.is_some_and(|c| spec.pass_exit_codes.contains(&c));
                let pattern_ok = spec.pass_pattern.as_ref().map_or(true, |p| p.is_match(&cap.output));
                let fail_hit = spec.fail_pattern.as_ref().is_some_and(|p| p.is_match(&cap.output));
                let nonzero: Vec<&str> = spec
                    .fail_if_nonzero
                    .iter()
                    .filter(|k| outcome.detail.get(*k).is_some_and(|&n| n > 0))
                    .map(String::as_str)
                    .collect();
                if exit_ok && pattern_ok && !fail_hit && nonzero.is_empty() {
                    outcome.status = Status::Pass;
                } else {
                    outcome.status = Status::Fail;
                    outcome.reason = Some(if !exit_ok {
                        match cap.exit_code {
                            Some(c) => format!("exit code {c}"),
                            None => "terminated by signal".to_string(),
                        }
                    } else if !pattern_ok {
                        "pass pattern not found".to_string()
                    } else if fail_hit {
                        "fail pattern matched".to_string()
                    } else {
                        format!("nonzero counters: {}", nonzero.join(", "))
                    });
                }
            }
        }
    }
    outcome.duration_secs = start.elapsed().as_secs_f64();
    outcome
}

fn count(re: &Regex, text: &str) -> Option<u64> {
    if re.captures_len() > 1 {
        re.captures_iter(text).filter_map(|c| c.get(1)?.as_str().parse().ok()).last()
    } else {
        Some(re.find_iter(text).count() as u64)
    }
}

fn excerpt(s: &str) -> String {
    if s.len() <= EXCERPT_LIMIT {
        return s.to_string();
    }
    let mut cut = s.len() - EXCERPT_LIMIT;
    while !s.is_char_boundary(cut) {
        cut += 1;
    }
    format!("...{}", &s[cut..])
}

fn execute(argv: &[String], timeout: Duration) -> std::io::Result<Captured> {
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..]).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let (tx, rx) = mpsc::channel();
    for (i, pipe) in [
        child.stdout.take().map(|p| Box::new(p) as Box<dyn Read + Send>),
        child.stderr.take().map(|p| Box::new(p) as Box<dyn Read + Send>),
    ]
    .into_iter()
    .enumerate()
    {
        let tx = tx.clone();
        thread::spawn(move || {
            let mut buf = Vec::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_end(&mut buf);
            }
            let _ = tx.send((i, buf));
        });
    }
    drop(tx);
    let deadline = Instant::now() + timeout;
    let (status, timed_out) = loop {
        if let Some(st) = child.try_wait()? {
            break (Some(st), false);
        }
        if Instant::now() >= deadline {
            kill_tree(&mut child);
            break (None, true);
        }
        thread::sleep(Duration::from_millis(5));
    };
    let mut streams = [Vec::new(), Vec::new()];
    let grace = Instant::now() + Duration::from_millis(500);
    for _ in 0..2 {
        let left = grace.saturating_duration_since(Instant::now());
        match rx.recv_timeout(if timed_out { left } else { Duration::from_secs(3600) }) {
            Ok((i, buf)) => streams[i] = buf,
            Err(_) => break,
        }
    }
    let mut output = String::from_utf8_lossy(&streams[0]).into_owned();
    output.push_str(&String::from_utf8_lossy(&streams[1]));
    Ok(Captured { exit_code: status.and_then(|s| s.code()), output, timed_out })
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    // SAFETY: the child leads its own process group, so this signals only its tree.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

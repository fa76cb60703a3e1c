use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use ischeck::rules::{CheckId, RuleConfig};
use ischeck::run::{exit_code, run_check, Format, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

/// Check an embedded C module (.h/.c pair) against its interface contract.
#[derive(Debug, Parser)]
#[command(name = "ischeck", version)]
struct Cli {
    /// Interface contract (.is file)
    #[arg(long, value_name = "PATH")]
    contract: Option<PathBuf>,
    /// Module header
    #[arg(long, value_name = "PATH")]
    header: PathBuf,
    /// Module source
    #[arg(long, value_name = "PATH")]
    source: PathBuf,
    /// Check to run (T1..T12, CFR10, DFR2-3); repeatable. Default: all
    #[arg(long = "task", value_name = "Tn", conflicts_with = "all")]
    tasks: Vec<CheckId>,
    /// Run every check
    #[arg(long)]
    all: bool,
    /// Include search directory; repeatable
    #[arg(short = 'I', value_name = "DIR")]
    include_dirs: Vec<PathBuf>,
    /// Predefined macro; repeatable
    #[arg(short = 'D', value_name = "SYM[=VAL]")]
    defines: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Report typedef-rule findings as violations
    #[arg(long)]
    strict_advisory: bool,
    /// Critic configuration (TOML)
    #[arg(long, value_name = "FILE")]
    critics: Option<PathBuf>,
    /// Omit timestamp and durations from the report
    #[arg(long)]
    canonical: bool,
    /// Type allowed without a typedef (e.g. `int`, `unsigned char`); repeatable
    #[arg(long = "typedef-allow", value_name = "NAME")]
    typedef_allow: Vec<String>,
    /// Macro that may expand to a null pointer constant; repeatable
    #[arg(long = "null-macro", value_name = "NAME")]
    null_macros: Vec<String>,
    /// Ignore #include directives that cannot be resolved
    #[arg(long)]
    stub_missing_includes: bool,
}

fn parse_defines(defs: &[String]) -> BTreeMap<String, String> {
    defs.iter()
        .map(|d| match d.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (d.clone(), "1".to_string()),
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig {
        contract_path: cli.contract,
        header_path: cli.header,
        source_path: cli.source,
        include_dirs: cli.include_dirs,
        defines: parse_defines(&cli.defines),
        checks: if cli.all { Vec::new() } else { cli.tasks },
        format: match cli.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        },
        rules: RuleConfig {
            typedef_allowlist: cli.typedef_allow,
            null_macros: cli.null_macros,
            strict_advisory: cli.strict_advisory,
        },
        stub_missing_includes: cli.stub_missing_includes,
        critics_config_path: cli.critics,
        canonical: cli.canonical,
    };
    let result = run_check(&cfg);
    match &result {
        Ok(report) => print!("{}", cfg.render(report)),
        Err(e) => eprintln!("ischeck: error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}

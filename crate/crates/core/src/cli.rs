//! `xttc` command-line front end.
//!
//! Exit codes: 0 success, 1 model or semantic error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{check_reachability, Analyzer, DEFAULT_STATE_BOUND};
use crate::bpmn::{export_bpmn_rulelevel, export_bpmn_tablemap};
use crate::diagnostic::{has_errors, Diagnostic};
use crate::drools::export_drools;
use crate::format::parse_model;
use crate::infer::{run_forward, run_goal_driven, Valuation};
use crate::model::XttModel;
use crate::validate::validate_model;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides the analysis state-space bound.
pub const STATE_BOUND_ENV: &str = "XTTC_STATE_BOUND";

#[derive(Debug, Parser)]
#[command(
    name = "xttc",
    version,
    about = "Validate, run, analyze and export modular tabular rulebases"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// One task per table, gateways for splits and joins.
    TableMap,
    /// One table, one branch per rule.
    RuleLevel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model's structure and print its diagnostics.
    Validate { model: PathBuf },
    /// Run inference and print the final valuation.
    Run {
        model: PathBuf,
        /// Initial binding `attr=value`; repeatable.
        #[arg(long = "set", value_name = "ATTR=VALUE")]
        sets: Vec<String>,
        /// Goal-driven run restricted to the tables that can decide this attribute.
        #[arg(long)]
        goal: Option<String>,
        /// Print the inference trace after the valuation.
        #[arg(long)]
        trace: bool,
    },
    /// Completeness, overlap and reachability report.
    Analyze { model: PathBuf },
    /// Write `<model>.rf.xml`, `<model>.dtable.csv` and `Workspace.java`.
    ExportDrools {
        model: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write one `.bpmn` process file.
    ExportBpmn {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Scenario::TableMap)]
        scenario: Scenario,
        /// Table to draw (rule-level only).
        #[arg(long = "table", value_name = "NAME")]
        table: Option<String>,
        #[arg(long, conflicts_with = "out_file")]
        out: Option<PathBuf>,
        #[arg(long = "out-file")]
        out_file: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match CliConfig::try_parse_from(args) {
        Ok(config) => dispatch(&config, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

enum Failure {
    Usage(String),
    Diagnostics(Vec<Diagnostic>),
    Message(String),
}

impl From<Vec<Diagnostic>> for Failure {
    fn from(d: Vec<Diagnostic>) -> Self {
        Failure::Diagnostics(d)
    }
}

pub fn dispatch(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &config.command {
        Command::Validate { model } => validate_cmd(model, out, err),
        Command::Run {
            model,
            sets,
            goal,
            trace,
        } => run_cmd(model, sets, goal.as_deref(), *trace, out, err),
        Command::Analyze { model } => analyze_cmd(model, out),
        Command::ExportDrools { model, out: dir } => export_drools_cmd(model, dir, out, err),
        Command::ExportBpmn {
            model,
            scenario,
            table,
            out: dir,
            out_file,
        } => export_bpmn_cmd(
            model,
            *scenario,
            table.as_deref(),
            dir.as_deref(),
            out_file.as_deref(),
            out,
        ),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Diagnostics(diagnostics)) => {
            for d in &diagnostics {
                let _ = writeln!(err, "{d}");
            }
            EXIT_FAILURE
        }
        Err(Failure::Message(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn load(path: &Path) -> Result<XttModel, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Message(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        crate::format::ParseError::Invalid(d) => Failure::Diagnostics(d),
        other => Failure::Message(format!("{}: {other}", path.display())),
    })
}

/// Loads a model and refuses it if validation reports errors.
fn load_valid(path: &Path, err: &mut dyn Write) -> Result<XttModel, Failure> {
    let model = load(path)?;
    let diagnostics = validate_model(&model);
    if has_errors(&diagnostics) {
        return Err(diagnostics.into());
    }
    for d in &diagnostics {
        let _ = writeln!(err, "{d}");
    }
    Ok(model)
}

fn validate_cmd(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let model = load(path)?;
    let diagnostics = validate_model(&model);
    for d in &diagnostics {
        let _ = writeln!(out, "{d}");
    }
    if has_errors(&diagnostics) {
        let n = diagnostics.iter().filter(|d| d.is_error()).count();
        let _ = writeln!(err, "error: {} has {n} error(s)", model.name);
        Ok(EXIT_FAILURE)
    } else {
        if diagnostics.is_empty() {
            let _ = writeln!(out, "{}: ok", model.name);
        }
        Ok(EXIT_OK)
    }
}

fn run_cmd(
    path: &Path,
    sets: &[String],
    goal: Option<&str>,
    trace: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    if let Some(bad) = sets.iter().find(|s| !s.contains('=')) {
        return Err(Failure::Usage(format!("--set expects attr=value, got `{bad}`")));
    }
    let model = load_valid(path, err)?;
    let initial = Valuation::from_bindings(&model, sets)?;
    let outcome = match goal {
        Some(goal) => run_goal_driven(&model, goal, &initial),
        None => run_forward(&model, &initial),
    }
    .map_err(|e| Failure::Diagnostics(e.diagnostics()))?;
    let _ = write!(out, "{}", outcome.valuation.render());
    if trace {
        let _ = write!(out, "{}", outcome.trace.render());
    }
    for d in &outcome.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    Ok(if outcome.is_ok() { EXIT_OK } else { EXIT_FAILURE })
}

fn state_bound() -> Result<u64, Failure> {
    match std::env::var(STATE_BOUND_ENV) {
        Err(_) => Ok(DEFAULT_STATE_BOUND),
        Ok(text) => text.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "{STATE_BOUND_ENV} must be a non-negative integer, got `{text}`"
            ))
        }),
    }
}

fn analyze_cmd(path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let analyzer = Analyzer::with_bound(state_bound()?);
    let model = load_valid(path, &mut std::io::sink())?;
    let reports = analyzer.analyze_model(&model).map_err(|e| {
        let table = match &e {
            crate::analysis::AnalysisError::StateSpaceTooLarge { table, .. }
            | crate::analysis::AnalysisError::UnknownAttribute { table, .. } => table.clone(),
        };
        Failure::Diagnostics(vec![Diagnostic::error(
            e.code(),
            format!("tables[{table}]"),
            e.to_string(),
        )])
    })?;
    let mut defects = 0;
    for report in &reports {
        defects += report.completeness_witnesses.len() + report.overlaps.len();
        let _ = write!(out, "{}", report.render());
    }
    for table in check_reachability(&model) {
        defects += 1;
        let _ = writeln!(out, "{table} unreachable");
    }
    Ok(if defects == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn export_drools_cmd(path: &Path, dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let model = load(path)?;
    let bundle = export_drools(&model);
    if bundle.files.is_none() {
        return Err(bundle.diagnostics.into());
    }
    for d in &bundle.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    let written = bundle
        .write_to(dir)
        .map_err(|e| Failure::Message(format!("cannot write to {}: {e}", dir.display())))?;
    for p in written {
        let _ = writeln!(out, "{}", p.display());
    }
    Ok(EXIT_OK)
}

fn export_bpmn_cmd(
    path: &Path,
    scenario: Scenario,
    table: Option<&str>,
    dir: Option<&Path>,
    out_file: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if scenario == Scenario::RuleLevel && table.is_none() {
        return Err(Failure::Usage("--scenario rule-level requires --table NAME".into()));
    }
    let model = load_valid(path, &mut std::io::sink())?;
    let (doc, default_name) = match (scenario, table) {
        (Scenario::RuleLevel, Some(t)) => (
            export_bpmn_rulelevel(&model, t).map_err(|e| Failure::Diagnostics(vec![e.diagnostic()]))?,
            format!("{}.{t}.bpmn", model.name),
        ),
        _ => (export_bpmn_tablemap(&model), format!("{}.bpmn", model.name)),
    };
    let integrity = doc.check_integrity();
    if !integrity.is_empty() {
        return Err(integrity.into());
    }
    let target = match out_file {
        Some(f) => f.to_path_buf(),
        None => dir.unwrap_or(Path::new(".")).join(default_name),
    };
    if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Message(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(&target, doc.to_xml())
        .map_err(|e| Failure::Message(format!("cannot write {}: {e}", target.display())))?;
    let _ = writeln!(out, "{}", target.display());
    Ok(EXIT_OK)
}

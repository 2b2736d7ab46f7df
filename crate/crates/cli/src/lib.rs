//! Batch front-end: pick a variant and scenario, explore, report, export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nrpcheck::analysis::{
    check_no_dual_primary, export_graph, extract_trace, format_trace, stats, AnalysisError,
    ExportMeta, GraphFormat, NrpResult,
};
use nrpcheck::kernel::{Interleaving, Verdict};
use nrpcheck::protocol::Variant;
use nrpcheck::scenarios::{
    build_reference_topology, expected_verdicts, load_config, preset_case_for, ConfigError,
    ScenarioConfig, System, CASE_DESCRIPTIONS,
};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Satisfied = 0,
    Violated = 1,
    LimitExceeded = 2,
    ConfigError = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    fn of(verdict: Verdict) -> Self {
        match verdict {
            Verdict::Satisfied => ExitStatus::Satisfied,
            Verdict::Violated => ExitStatus::Violated,
            Verdict::Unknown(_) => ExitStatus::LimitExceeded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scenario {
    Case(u32),
    Config(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRequest {
    /// `None` means the config file's variant, or baseline.
    pub variant: Option<Variant>,
    pub scenario: Scenario,
    pub export_dot: Option<PathBuf>,
    pub export_xml: Option<PathBuf>,
    pub export_trace: Option<PathBuf>,
    pub interleaving: Option<Interleaving>,
    pub max_states: Option<usize>,
    pub max_depth: Option<usize>,
    pub quiet: bool,
    pub workers: usize,
}

impl RunRequest {
    pub fn case(case: u32) -> Self {
        RunRequest {
            variant: None,
            scenario: Scenario::Case(case),
            export_dot: None,
            export_xml: None,
            export_trace: None,
            interleaving: None,
            max_states: None,
            max_depth: None,
            quiet: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("--variant {flag} conflicts with `variant = {file}` in the config file")]
    VariantConflict { flag: Variant, file: Variant },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn resolve_config(req: &RunRequest) -> Result<(ScenarioConfig, String), CliError> {
    let (mut cfg, label) = match &req.scenario {
        Scenario::Case(k) => (
            preset_case_for(req.variant.unwrap_or(Variant::Baseline), *k)?,
            k.to_string(),
        ),
        Scenario::Config(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let declares_variant = text.lines().any(|l| {
                l.split('#')
                    .next()
                    .and_then(|l| l.split_once('='))
                    .is_some_and(|(k, _)| k.trim() == "variant")
            });
            let cfg = match req.variant {
                Some(flag) if !declares_variant => {
                    load_config(&format!("variant = {flag}\n{text}"))?
                }
                Some(flag) => {
                    let cfg = load_config(&text)?;
                    if cfg.variant != flag {
                        return Err(CliError::VariantConflict {
                            flag,
                            file: cfg.variant,
                        });
                    }
                    cfg
                }
                None => load_config(&text)?,
            };
            (cfg, path.display().to_string())
        }
    };
    if let Some(i) = req.interleaving {
        cfg.interleaving = i;
    }
    if let Some(n) = req.max_states {
        cfg.limits.max_states = n;
    }
    if let Some(n) = req.max_depth {
        cfg.limits.max_depth = n;
    }
    cfg.validate()?;
    Ok((cfg, label))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn explore_config(cfg: &ScenarioConfig, workers: usize) -> Result<(System, NrpResult), CliError> {
    let system = build_reference_topology(cfg)?;
    let result = check_no_dual_primary(&system, &cfg.explore_options(workers))?;
    Ok((system, result))
}

/// Runs one exploration and writes the report to `out`. Diagnostics go to
/// `err`; failures are reported only through the returned status.
pub fn run(req: &RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match try_run(req, out) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::ConfigError
        }
    }
}

fn try_run(req: &RunRequest, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let (cfg, label) = resolve_config(req)?;
    let (system, result) = explore_config(&cfg, req.workers)?;
    let st = stats(&result);
    let meta = ExportMeta {
        variant: cfg.variant,
        case: label.clone(),
        names: &system.names,
    };
    if let Some(path) = &req.export_dot {
        write_file(path, &export_graph(&result, GraphFormat::Dot, &meta))?;
    }
    if let Some(path) = &req.export_xml {
        write_file(path, &export_graph(&result, GraphFormat::Xml, &meta))?;
    }
    let trace = match result.verdict {
        Verdict::Violated => Some(extract_trace(&system.model, &system.initial, &result)?),
        _ => None,
    };
    if let (Some(path), Some(trace)) = (&req.export_trace, &trace) {
        write_file(path, &format_trace(trace, &system.names))?;
    }

    let w = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    if req.quiet {
        w(out, format!("verdict: {}", st.verdict));
        return Ok(ExitStatus::of(st.verdict));
    }
    let scenario = match &req.scenario {
        Scenario::Case(k) => format!("case {k} ({})", CASE_DESCRIPTIONS[*k as usize - 1]),
        Scenario::Config(_) => format!("config {label}"),
    };
    w(out, format!("variant: {}", cfg.variant));
    w(out, format!("scenario: {scenario}"));
    w(out, format!("interleaving: {}", cfg.interleaving));
    w(out, "assertion: NoDualPrimary".to_string());
    w(out, format!("verdict: {}", st.verdict));
    w(out, format!("states: {}", st.states));
    w(out, format!("transitions: {}", st.transitions));
    w(out, format!("elapsed: {:.3?}", st.elapsed));
    if let Some(trace) = &trace {
        let last = trace.violating_state();
        w(
            out,
            format!(
                "counterexample: {} steps, dual primary @{}",
                trace.steps.len(),
                last.now
            ),
        );
        match &req.export_trace {
            Some(path) => w(out, format!("trace written to {}", path.display())),
            None => {
                let _ = out.write_all(format_trace(trace, &system.names).as_bytes());
            }
        }
    }
    Ok(ExitStatus::of(st.verdict))
}

/// Settings shared by every preset of a suite run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteRequest {
    pub variant: Variant,
    pub interleaving: Option<Interleaving>,
    pub max_states: Option<usize>,
    pub max_depth: Option<usize>,
    pub workers: usize,
}

fn mark(v: Verdict) -> &'static str {
    match v {
        Verdict::Satisfied => "✓",
        Verdict::Violated => "✗",
        Verdict::Unknown(_) => "?",
    }
}

/// Runs presets 1..=8 and prints a table. Exits 0 iff every verdict matches
/// the expected vector for the variant.
pub fn run_suite(req: &SuiteRequest, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match try_suite(req, out) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::ConfigError
        }
    }
}

fn try_suite(req: &SuiteRequest, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let expected = expected_verdicts(req.variant);
    let _ = writeln!(out, "variant: {}", req.variant);
    let _ = writeln!(
        out,
        "{:<5} {:<55} {:<7} {:>8} {:>12}",
        "case", "configuration", "result", "states", "transitions"
    );
    let (mut got, mut want) = (String::new(), String::new());
    let (mut mismatch, mut unknown) = (false, false);
    for k in 1..=8u32 {
        let single = RunRequest {
            variant: Some(req.variant),
            interleaving: req.interleaving,
            max_states: req.max_states,
            max_depth: req.max_depth,
            workers: req.workers,
            ..RunRequest::case(k)
        };
        let (cfg, _) = resolve_config(&single)?;
        let (_, result) = explore_config(&cfg, req.workers)?;
        let st = stats(&result);
        let _ = writeln!(
            out,
            "{:<5} {:<55} {:<7} {:>8} {:>12}",
            k,
            CASE_DESCRIPTIONS[k as usize - 1],
            mark(st.verdict),
            st.states,
            st.transitions
        );
        got.push_str(mark(st.verdict));
        let exp = if expected[k as usize - 1] {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        };
        want.push_str(mark(exp));
        unknown |= matches!(st.verdict, Verdict::Unknown(_));
        mismatch |= st.verdict != exp;
    }
    let _ = writeln!(
        out,
        "expected {want}, got {got}: {}",
        if mismatch { "MISMATCH" } else { "match" }
    );
    Ok(if unknown {
        ExitStatus::LimitExceeded
    } else if mismatch {
        ExitStatus::Violated
    } else {
        ExitStatus::Satisfied
    })
}

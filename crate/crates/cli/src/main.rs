use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use nrpcheck::kernel::Interleaving;
use nrpcheck::protocol::Variant;
use nrpcheck_cli::{run, run_suite, ExitStatus, RunRequest, Scenario, SuiteRequest};

/// Model-check NoDualPrimary for the NRP FD failover protocol.
///
/// Exit codes: 0 satisfied, 1 violated, 2 exploration limit reached,
/// 3 configuration error.
#[derive(Debug, Parser)]
#[command(name = "nrpcheck", version)]
#[command(group = clap::ArgGroup::new("scenario").required(true).args(["case", "config", "suite"]))]
struct Cli {
    /// baseline, baseline-noopt or leasing
    #[arg(long)]
    variant: Option<Variant>,

    /// Preset scenario 1..=8
    #[arg(long)]
    case: Option<u32>,

    /// key = value scenario file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run all eight presets and compare with the expected verdicts
    #[arg(long)]
    suite: bool,

    #[arg(long, value_name = "PATH")]
    export_dot: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    export_xml: Option<PathBuf>,

    /// Counterexample file, written only on a violation
    #[arg(long, value_name = "PATH")]
    export_trace: Option<PathBuf>,

    /// priority or full
    #[arg(long)]
    interleaving: Option<Interleaving>,

    #[arg(long)]
    max_states: Option<usize>,

    #[arg(long)]
    max_depth: Option<usize>,

    /// Print only the verdict
    #[arg(long)]
    quiet: bool,

    /// Threads used to expand each BFS level
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(ExitStatus::ConfigError.code()),
            };
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());

    let status = if cli.suite {
        let req = SuiteRequest {
            variant: cli.variant.unwrap_or(Variant::Baseline),
            interleaving: cli.interleaving,
            max_states: cli.max_states,
            max_depth: cli.max_depth,
            workers: cli.workers,
        };
        run_suite(&req, &mut out, &mut err)
    } else {
        let scenario = match (cli.case, cli.config) {
            (Some(k), _) => Scenario::Case(k),
            (None, Some(path)) => Scenario::Config(path),
            (None, None) => unreachable!("clap requires a scenario"),
        };
        let req = RunRequest {
            variant: cli.variant,
            scenario,
            export_dot: cli.export_dot,
            export_xml: cli.export_xml,
            export_trace: cli.export_trace,
            interleaving: cli.interleaving,
            max_states: cli.max_states,
            max_depth: cli.max_depth,
            quiet: cli.quiet,
            workers: cli.workers,
        };
        run(&req, &mut out, &mut err)
    };
    ExitCode::from(status.code())
}

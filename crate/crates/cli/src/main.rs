use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conc_ai::*;
use conc_ai_core::analyses::Analysis;

#[derive(Parser)]
#[command(name = "conc-ai", version, about = "Thread-modular value analyses for a small concurrent language")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one analysis and report the values read at each site.
    Run {
        program: PathBuf,
        #[arg(long, default_value = "protection", value_parser = analysis)]
        analysis: Analysis,
        /// Print every solver step as `unknown deps changed` to stderr.
        #[arg(long)]
        trace_solver: bool,
        /// Include all solved unknowns.
        #[arg(long)]
        dump_states: bool,
        /// Include wall time.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the precision of several analyses site by site.
    Compare {
        program: PathBuf,
        /// Comma-separated; all analyses by default.
        #[arg(long, value_delimiter = ',', value_parser = analysis)]
        analysis: Vec<Analysis>,
        #[command(flatten)]
        common: Common,
    },
    /// Check analyses against the bounded concrete semantics.
    Oracle {
        program: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = analysis)]
        analysis: Vec<Analysis>,
        /// Write one DOT file per enumerated trace into this directory.
        #[arg(long, value_name = "DIR")]
        dump_traces: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Maximum number of events per thread in the concrete semantics.
    #[arg(long, default_value_t = conc_ai_core::traces::DEFAULT_TRACE_BOUND)]
    bound: usize,
    /// Values produced by `input()`, e.g. "0,1".
    #[arg(long, default_value = "0,1", value_parser = input_set)]
    input_set: InputSet,
}

#[derive(Clone)]
struct InputSet(Vec<i64>);

fn input_set(s: &str) -> Result<InputSet, String> {
    parse_input_set(s).map(InputSet)
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Dot,
}

fn analysis(s: &str) -> Result<Analysis, String> {
    Analysis::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Analysis::ALL.iter().map(|a| a.name()).collect();
        format!("unknown analysis `{s}`; expected one of {}", names.join(", "))
    })
}

fn settings(c: &Common) -> Result<Settings, CliError> {
    let mut s = Settings::from_env()?;
    s.trace.bound = c.bound;
    s.trace.inputs = c.input_set.0.clone();
    Ok(s)
}

fn all_if_empty(v: Vec<Analysis>) -> Vec<Analysis> {
    if v.is_empty() {
        Analysis::ALL.to_vec()
    } else {
        v
    }
}

fn main_inner(cli: Cli) -> Result<(String, i32), CliError> {
    match cli.cmd {
        Cmd::Run { program, analysis, trace_solver, dump_states, timing, common } => {
            let p = load(&program)?;
            let st = settings(&common)?;
            if common.format == Format::Dot {
                return Ok((p.cfg.to_dot(), EXIT_OK));
            }
            let mut err = std::io::stderr().lock();
            let trace: Option<&mut dyn Write> = if trace_solver { Some(&mut err) } else { None };
            let (rep, res) = cmd_run(&p, analysis, &st, RunFlags { dump_states, timing }, trace)?;
            let out = match common.format {
                Format::Json => to_json(&rep),
                _ => {
                    let mut s = report_table(&rep);
                    if dump_states {
                        for line in state_listing(&p.cfg, &res) {
                            s.push_str(&line);
                            s.push('\n');
                        }
                    }
                    s
                }
            };
            Ok((out, EXIT_OK))
        }
        Cmd::Compare { program, analysis, common } => {
            let p = load(&program)?;
            let c = cmd_compare(&p, &all_if_empty(analysis), &settings(&common)?)?;
            let out = match common.format {
                Format::Json => to_json(&c),
                _ => comparison_table(&c),
            };
            Ok((out, EXIT_OK))
        }
        Cmd::Oracle { program, analysis, dump_traces, common } => {
            let p = load(&program)?;
            let st = settings(&common)?;
            if common.format == Format::Dot {
                return Ok((traces_dot(&p, &st)?, EXIT_OK));
            }
            let r = cmd_oracle(&p, &all_if_empty(analysis), &st, dump_traces.as_deref())?;
            let out = match common.format {
                Format::Json => to_json(&r),
                _ => oracle_table(&r),
            };
            Ok((out, verdict_exit(r.verdict)))
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is the budget code here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { EXIT_OK as u8 });
        }
    };
    match main_inner(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

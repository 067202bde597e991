//! The `chorc` command line.
//!
//! Exit codes: 0 success, 1 well-formedness or projection errors, 2 usage
//! or parse errors, 3 property failures from `verify`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::ast::{Choreography, Network, State};
use crate::conc::{all_traces, run_conc};
use crate::epp::project;
use crate::net::{run_net, NetConfig};
use crate::seq::{run_seq, SeqConfig};
use crate::syntax::{parse_chor, parse_network, parse_state, print_network, print_state, ParseError};
use crate::trace::{traces_to_json, Trace};
use crate::verify::checks::{Bounds, Instance};
use crate::verify::gen::{gen_state, GenConfig};
use crate::verify::{gen_corpus, run_property, CheckReport, Property};
use crate::wf::{check_chor, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chorc", version, about = "Choreographic programs: check, project, run and verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sem {
    Seq,
    Conc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report well-formedness violations of a choreography.
    Check {
        file: PathBuf,
        /// Emit diagnostics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Project a choreography to a network.
    Project {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a choreography.
    Run {
        file: PathBuf,
        #[arg(long, value_enum)]
        sem: Sem,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        /// Write the trace as JSON to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Execute a network.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Enumerate every concurrent execution up to a step bound.
    Traces {
        file: PathBuf,
        #[arg(long)]
        max_steps: usize,
        #[arg(long, value_enum, default_value = "conc")]
        sem: TraceSem,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check the semantic properties on random and given choreographies.
    Verify {
        /// Number of generated choreographies (default 100 without FILES).
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of progress,confluence,seq-conc,epp.
        #[arg(long, value_delimiter = ',')]
        props: Vec<Property>,
        #[arg(long)]
        json: bool,
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceSem {
    Conc,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

struct Out<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Out<'_> {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", s.as_ref());
    }

    fn error(&mut self, s: impl AsRef<str>) {
        let tag = self.paint("31", "error");
        let _ = writeln!(self.err, "{tag}: {}", s.as_ref());
    }
}

/// Resolves `CHORC_COLOR` (auto, always or never).
pub fn color_choice(var: Option<&str>) -> Result<bool, String> {
    match var {
        None | Some("auto") => Ok(io::stdout().is_terminal()),
        Some("always") => Ok(true),
        Some("never") => Ok(false),
        Some(other) => Err(format!("CHORC_COLOR must be auto, always or never, not `{other}`")),
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let color = match color_choice(std::env::var("CHORC_COLOR").ok().as_deref()) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut o = Out { out, err, color };
    match execute(cli.command, &mut o) {
        Ok(code) => code,
        Err(e) => {
            o.error(e.to_string());
            e.code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_chor(path: &Path) -> Result<Choreography, CliError> {
    parse_chor(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    parse_network(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn load_state(path: Option<&Path>) -> Result<State, CliError> {
    match path {
        None => Ok(State::new()),
        Some(p) => parse_state(&read(p)?).map_err(|source| CliError::Parse {
            path: p.to_path_buf(),
            source,
        }),
    }
}

fn render_violations(path: &Path, vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| format!("{}: {v}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Loads a choreography and rejects it if ill-formed.
fn load_well_formed(path: &Path) -> Result<Choreography, CliError> {
    let c = load_chor(path)?;
    let vs = check_chor(&c);
    if vs.is_empty() {
        Ok(c)
    } else {
        Err(CliError::Invalid(format!(
            "{} is not well-formed\n{}",
            path.display(),
            render_violations(path, &vs)
        )))
    }
}

fn report_run(o: &mut Out, trace: &Trace, state: &State, out: Option<&Path>) -> Result<i32, CliError> {
    for (i, step) in trace.steps.iter().enumerate() {
        o.line(format!("{:>4}  {step}", i + 1));
    }
    o.line(format!("status: {}", trace.status));
    let st = print_state(state);
    if !st.is_empty() {
        o.line(st.trim_end());
    }
    if let Some(path) = out {
        write_file(path, &trace.to_json())?;
    }
    Ok(EXIT_OK)
}

fn execute(cmd: Command, o: &mut Out) -> Result<i32, CliError> {
    match cmd {
        Command::Check { file, json } => {
            let c = load_chor(&file)?;
            let vs = check_chor(&c);
            if json {
                o.line(serde_json::to_string_pretty(&vs).expect("diagnostics serialize"));
            } else if vs.is_empty() {
                o.line(format!("{}: {}", file.display(), o.paint("32", "well-formed")));
            } else {
                o.line(render_violations(&file, &vs));
            }
            Ok(if vs.is_empty() { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Project { file, output } => {
            let c = load_well_formed(&file)?;
            let net = project(&c).map_err(|e| CliError::Invalid(format!("{}: {e}", file.display())))?;
            let text = print_network(&net);
            match output {
                Some(path) => write_file(&path, &text)?,
                None => o.line(text.trim_end()),
            }
            Ok(EXIT_OK)
        }
        Command::Run {
            file,
            sem,
            state,
            seed,
            fuel,
            trace,
        } => {
            let c = load_well_formed(&file)?;
            let cfg = SeqConfig::new(c, load_state(state.as_deref())?);
            let (t, end) = match sem {
                Sem::Seq => run_seq(&cfg, fuel),
                Sem::Conc => run_conc(&cfg, seed, fuel),
            };
            report_run(o, &t, &end.state, trace.as_deref())
        }
        Command::Simulate {
            file,
            state,
            seed,
            fuel,
            trace,
        } => {
            let net = load_network(&file)?;
            let cfg = NetConfig::new(net, load_state(state.as_deref())?);
            let (t, end) = run_net(&cfg, seed, fuel);
            report_run(o, &t, &end.state, trace.as_deref())
        }
        Command::Traces {
            file,
            max_steps,
            sem: TraceSem::Conc,
            state,
            json,
        } => {
            let c = load_well_formed(&file)?;
            let cfg = SeqConfig::new(c, load_state(state.as_deref())?);
            let traces = all_traces(&cfg, max_steps);
            if json {
                o.line(traces_to_json(&traces));
            } else {
                for t in &traces {
                    let steps: Vec<String> = t.steps.iter().map(|s| s.to_string()).collect();
                    o.line(format!("[{}] {}", t.status, steps.join("; ")));
                }
                o.line(format!("{} traces", traces.len()));
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            random,
            depth,
            seed,
            props,
            json,
            files,
        } => verify(o, random, depth, seed, props, json, files),
    }
}

fn verify(
    o: &mut Out,
    random: Option<usize>,
    depth: usize,
    seed: u64,
    props: Vec<Property>,
    json: bool,
    files: Vec<PathBuf>,
) -> Result<i32, CliError> {
    let mut corpus = Vec::new();
    for f in &files {
        let chor = load_well_formed(f)?;
        let state = gen_state(&chor, 0);
        corpus.push(Instance { seed: 0, chor, state });
    }
    let n = random.unwrap_or(if files.is_empty() { 100 } else { 0 });
    let base = GenConfig {
        seed,
        max_depth: depth,
        ..GenConfig::default()
    };
    corpus.extend(gen_corpus(n, &base).map_err(|e| CliError::Usage(e.to_string()))?);
    let props = if props.is_empty() {
        Property::ALL.to_vec()
    } else {
        props
    };
    let bounds = Bounds::default();
    let reports: Vec<CheckReport> = props.iter().map(|p| run_property(*p, &corpus, &bounds)).collect();
    if json {
        o.line(serde_json::to_string_pretty(&reports).expect("reports serialize"));
    } else {
        for r in &reports {
            let text = r.to_string();
            let (head, rest) = text.split_once('\n').map_or((text.as_str(), None), |(h, t)| (h, Some(t)));
            let head = if r.passed() {
                head.to_string()
            } else {
                o.paint("31", head)
            };
            o.line(head);
            if let Some(rest) = rest {
                o.line(rest);
            }
        }
    }
    let failed = reports.iter().any(|r| !r.failures.is_empty());
    Ok(if failed { EXIT_PROPERTY } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["chorc"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(call(&["check", "x.chor", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_usage_error() {
        let (code, _, err) = call(&["check", "/nonexistent/x.chor"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("/nonexistent/x.chor"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("verify"));
    }

    #[test]
    fn color_values() {
        assert_eq!(color_choice(Some("always")), Ok(true));
        assert_eq!(color_choice(Some("never")), Ok(false));
        assert!(color_choice(Some("sometimes")).is_err());
    }

    #[test]
    fn props_parse() {
        let cli = Cli::try_parse_from(["chorc", "verify", "--props", "epp,progress"]).unwrap();
        match cli.command {
            Command::Verify { props, .. } => assert_eq!(props, vec![Property::Epp, Property::Progress]),
            _ => panic!("wrong command"),
        }
        assert!(Cli::try_parse_from(["chorc", "verify", "--props", "liveness"]).is_err());
    }
}

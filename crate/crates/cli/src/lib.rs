//! Command-line front end of litproc.

pub mod args;

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use litproc_core::docparse::{self, print_regexp, GrammarConfig};
use litproc_core::evaluator::{self, detect_exception, format_result, process_document, ReaderArgs, ReaderCommand, Sessions};
use litproc_core::class::DEFAULT_INTERRUPT_SIGNAL;
use litproc_core::session;
use litproc_core::{ClassName, Error, ExitPolicy, InterpreterClassConfig, SourceFormat, Timeouts};

use args::{Cli, Command, FileType};

/// Process-wide inputs of a run, kept apart so tests can inject them.
#[derive(Debug, Clone)]
pub struct Context {
    pub env: HashMap<String, String>,
    pub cwd: PathBuf,
    /// How to launch response readers; normally this very executable.
    pub reader: ReaderCommand,
}

impl Context {
    pub fn from_process() -> std::io::Result<Self> {
        let exe = std::env::current_exe()?;
        Ok(Context {
            env: std::env::vars().collect(),
            cwd: std::env::current_dir()?,
            reader: ReaderCommand::new(exe, ["__reader"]),
        })
    }

    fn var(&self, name: &str) -> Option<&str> {
        self.env.get(name).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn workdir(&self) -> PathBuf {
        match self.var("LITREPL_WORKDIR") {
            Some(w) => self.cwd.join(w),
            None => self.cwd.clone(),
        }
    }
}

fn env_key(class: ClassName, what: &str) -> String {
    format!("LITREPL_{}_{what}", class.as_str().to_uppercase())
}

/// Fully resolved settings: flags first, then environment, then defaults.
struct Settings {
    cli: Cli,
    timeouts: Timeouts,
    policy: ExitPolicy,
    workdir: PathBuf,
}

impl Settings {
    fn new(cli: Cli, ctx: &Context) -> Result<Self, Error> {
        let timeout = cli
            .timeout
            .clone()
            .or_else(|| ctx.var("LITREPL_TIMEOUT").map(str::to_string));
        let timeouts = match timeout {
            Some(t) => Timeouts::parse(&t)?,
            None => Timeouts::default(),
        };
        let policy = ExitPolicy {
            pending_exitcode: cli.pending_exitcode,
            exception_exitcode: cli.exception_exitcode,
            irreproducible_exitcode: cli.irreproducible_exitcode,
        };
        Ok(Settings {
            cli,
            timeouts,
            policy,
            workdir: ctx.workdir(),
        })
    }

    fn interpreter(&self, ctx: &Context, class: ClassName) -> Result<InterpreterClassConfig, Error> {
        let command = self
            .cli
            .interpreter_flag(class)
            .or_else(|| ctx.var(&env_key(class, "INTERPRETER")));
        InterpreterClassConfig::new(class, command)
    }

    fn auxdir(&self, ctx: &Context, class: ClassName) -> Result<PathBuf, Error> {
        let over = self
            .cli
            .auxdir_flag(class)
            .cloned()
            .or_else(|| ctx.var(&env_key(class, "AUXDIR")).map(PathBuf::from))
            .map(|p| ctx.cwd.join(p));
        session::auxdir_for(&self.workdir, class, over.as_deref())
    }

    fn grammar(&self, format: SourceFormat) -> Result<GrammarConfig, Error> {
        if ClassName::ALL.iter().all(|c| self.cli.markers_flag(*c).is_none()) {
            return Ok(GrammarConfig::new(format));
        }
        let mut markers = Vec::new();
        for class in ClassName::ALL {
            match self.cli.markers_flag(class) {
                Some(list) => markers.extend(
                    list.split(',')
                        .map(str::trim)
                        .filter(|m| !m.is_empty())
                        .map(|m| (m.to_string(), class)),
                ),
                None => markers.extend(class.default_markers().iter().map(|m| (m.to_string(), class))),
            }
        }
        GrammarConfig::with_markers(format, markers)
    }

    fn sessions(&self, ctx: &Context) -> Result<Sessions, Error> {
        let mut sessions = Sessions::new(ctx.reader.clone());
        for class in ClassName::ALL {
            match self.interpreter(ctx, class) {
                Ok(cfg) => sessions.configure(cfg, self.auxdir(ctx, class)?),
                Err(Error::Unconfigured(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(sessions)
    }
}

/// Run the CLI with explicit streams; returns the process exit code.
pub fn run(
    argv: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    ctx: &Context,
    stdin: &mut (dyn Read + Send),
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
            };
            return code;
        }
    };
    let settings = match Settings::new(cli, ctx) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "litproc: {e}");
            return 2;
        }
    };
    match dispatch(&settings, ctx, stdin, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "litproc: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn read_stdin(stdin: &mut (dyn Read + Send)) -> Result<String, Error> {
    let mut text = String::new();
    stdin.read_to_string(&mut text).map_err(|source| Error::Io {
        context: "reading standard input".into(),
        source,
    })?;
    Ok(text)
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), Error> {
    stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
        .map_err(|source| Error::Io {
            context: "writing standard output".into(),
            source,
        })
}

fn dispatch(
    s: &Settings,
    ctx: &Context,
    stdin: &mut (dyn Read + Send),
    stdout: &mut dyn Write,
) -> Result<i32, Error> {
    let classes = |c: Option<args::ClassArg>| match c {
        Some(c) => vec![ClassName::from(c)],
        None => ClassName::ALL.to_vec(),
    };
    match &s.cli.command {
        None => {
            let text = read_stdin(stdin)?;
            let format = match s.cli.filetype {
                FileType::Auto => docparse::detect_filetype(&text),
                FileType::Latex => SourceFormat::Latex,
                FileType::Markdown => SourceFormat::Markdown,
            };
            let doc = docparse::parse(&text, &s.grammar(format)?)?;
            let (doc, code) = process_document(&doc, &s.sessions(ctx)?, &s.policy, s.timeouts)?;
            write_out(stdout, &doc.render())?;
            Ok(code)
        }
        Some(Command::EvalCode { class }) => {
            let class = ClassName::from(*class);
            let code = read_stdin(stdin)?;
            let outcome = s.sessions(ctx)?.eval(&code, class, s.timeouts)?;
            write_out(stdout, &format_result(&outcome))?;
            let findings = evaluator::Findings {
                exception: detect_exception(outcome.text(), class),
                pending: outcome.is_partial(),
                irreproducible: false,
            };
            Ok(s.policy.exit_code(findings))
        }
        Some(Command::Start { class }) => {
            let class = ClassName::from(*class);
            session::start(&s.interpreter(ctx, class)?, &s.auxdir(ctx, class)?)?;
            Ok(0)
        }
        Some(Command::Restart { class }) => {
            let class = ClassName::from(*class);
            session::restart(&s.interpreter(ctx, class)?, &s.auxdir(ctx, class)?)?;
            Ok(0)
        }
        Some(Command::Stop { class }) => {
            for class in classes(*class) {
                session::stop(&s.auxdir(ctx, class)?)?;
            }
            Ok(0)
        }
        Some(Command::Status { class }) => {
            let mut out = String::new();
            for class in classes(*class) {
                let st = session::status(&s.auxdir(ctx, class)?);
                out.push_str(&format!(
                    "{class} {} {} {}\n",
                    if st.running { "running" } else { "stopped" },
                    st.pid.map_or("-".to_string(), |p| p.to_string()),
                    st.auxdir.display()
                ));
            }
            write_out(stdout, &out)?;
            Ok(0)
        }
        Some(Command::Interrupt { class }) => {
            let class = ClassName::from(*class);
            let signal = s
                .interpreter(ctx, class)
                .map_or(DEFAULT_INTERRUPT_SIGNAL, |cfg| cfg.interrupt_signal);
            session::interrupt(&s.auxdir(ctx, class)?, signal)?;
            Ok(0)
        }
        Some(Command::Repl { class }) => {
            let class = ClassName::from(*class);
            let cfg = s.interpreter(ctx, class)?;
            let handle = session::SessionHandle::new(&s.auxdir(ctx, class)?, class);
            session::attach_repl(&handle, &cfg, stdin, stdout)
        }
        Some(Command::PrintRegexp { format, flavor }) => {
            let format = match (format, s.cli.filetype) {
                (Some(f), _) => SourceFormat::from(*f),
                (None, FileType::Markdown) => SourceFormat::Markdown,
                (None, _) => SourceFormat::Latex,
            };
            let mut out = String::new();
            for re in print_regexp(&s.grammar(format)?, (*flavor).into()) {
                out.push_str(&re);
                out.push('\n');
            }
            write_out(stdout, &out)?;
            Ok(0)
        }
        Some(Command::Reader { args }) => {
            evaluator::run_reader(&ReaderArgs::from_args(args)?)?;
            Ok(0)
        }
    }
}


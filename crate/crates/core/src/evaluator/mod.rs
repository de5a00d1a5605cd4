//! Evaluating code against sessions and writing responses into documents.
//!
//! One evaluation:
//!
//! 1. hash the code (hash B) to name `partial_<hash>.txt` in the auxdir;
//! 2. take the soft lock, send the code followed by an echo of a fresh token;
//! 3. start a detached reader copying the output pipe into the response file
//!    until the token arrives, then marking the file done and unlocking;
//! 4. wait up to the foreground timeout and report the response as complete,
//!    or as partial with the response file path.
//!
//! A partial result keeps an `[LR:<path>]` line; the next run polls that file
//! instead of sending the code again.

mod exception;
mod pending;
pub mod reader;

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use crate::class::{ClassName, InterpreterClassConfig};
use crate::docparse::{Document, SpanKind};
use crate::error::{Error, IoContext, Result};
use crate::hash::code_hash;
use crate::probe::new_token;
use crate::session::{self, lock, SessionHandle};

pub use exception::detect_exception;
pub use pending::{format_result, parse_pending, PendingTag};
pub use reader::{done_marker, run_reader, ReaderArgs, ReaderCommand};

const POLL_INTERVAL: Duration = Duration::from_millis(10);
/// How long a finished reader may take to release the lock.
const RELEASE_GRACE: Duration = Duration::from_secs(2);

/// Foreground and background time limits; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Timeouts {
    /// How long the caller waits before settling for a partial result.
    pub fg: Option<Duration>,
    /// How long the response reader keeps copying in the background.
    pub bg: Option<Duration>,
}

impl Timeouts {
    pub fn new(fg: Option<Duration>, bg: Option<Duration>) -> Result<Self> {
        match (fg, bg) {
            (None, Some(_)) => Err(Error::Config("foreground timeout exceeds background timeout".into())),
            (Some(f), Some(b)) if f > b => {
                Err(Error::Config("foreground timeout exceeds background timeout".into()))
            }
            _ => Ok(Timeouts { fg, bg }),
        }
    }

    /// `A,B`, `A` (both), with `inf` for unbounded.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(',') {
            Some((fg, bg)) => Timeouts::new(Self::parse_secs(fg)?, Self::parse_secs(bg)?),
            None => {
                let t = Self::parse_secs(s)?;
                Timeouts::new(t, t)
            }
        }
    }

    pub fn parse_secs(s: &str) -> Result<Option<Duration>> {
        let s = s.trim();
        if s == "inf" {
            return Ok(None);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .map(|v| Some(Duration::from_secs_f64(v)))
            .ok_or_else(|| Error::Config(format!("bad timeout `{s}`: expected seconds or `inf`")))
    }

    pub fn format_secs(d: Option<Duration>) -> String {
        match d {
            None => "inf".to_string(),
            Some(d) => d.as_secs_f64().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalRequest {
    pub code: String,
    pub class_name: ClassName,
    pub timeouts: Timeouts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Complete { text: String },
    Partial { text: String, path: PathBuf },
}

impl EvalOutcome {
    pub fn text(&self) -> &str {
        match self {
            EvalOutcome::Complete { text } | EvalOutcome::Partial { text, .. } => text,
        }
    }

    pub fn is_partial(&self) -> bool {
        matches!(self, EvalOutcome::Partial { .. })
    }
}

/// Exit codes for conditions found while processing a document; 0 disables
/// a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExitPolicy {
    pub pending_exitcode: i32,
    pub exception_exitcode: i32,
    pub irreproducible_exitcode: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Findings {
    pub exception: bool,
    pub pending: bool,
    pub irreproducible: bool,
}

impl ExitPolicy {
    /// Most severe enabled condition wins: exception, pending, irreproducible.
    pub fn exit_code(&self, f: Findings) -> i32 {
        [
            (f.exception, self.exception_exitcode),
            (f.pending, self.pending_exitcode),
            (f.irreproducible, self.irreproducible_exitcode),
        ]
        .into_iter()
        .find(|&(hit, code)| hit && code != 0)
        .map_or(0, |(_, code)| code)
    }
}

pub fn response_path(auxdir: &Path, hash: &str) -> PathBuf {
    auxdir.join(format!("partial_{hash}.txt"))
}

fn read_response(path: &Path) -> Result<String> {
    match fs::read(path) {
        Ok(bytes) => Ok(String::from_utf8_lossy(&bytes).into_owned()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(Error::MissingResponseFile {
            path: path.to_path_buf(),
        }),
        Err(e) => Err(Error::Io {
            context: format!("reading {}", path.display()),
            source: e,
        }),
    }
}

/// Whether a reader is still working on `response`.
fn reader_active(response: &Path) -> bool {
    let Some(dir) = response.parent() else {
        return false;
    };
    let Some(hash) = response
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_prefix("partial_"))
        .and_then(|n| n.strip_suffix(".txt"))
    else {
        return false;
    };
    lock::holder(&dir.join(session::LOCK_DIR)).is_some_and(|info| info.hash.as_deref() == Some(hash))
}

/// Wait for the response file at `path` to be finished, without sending
/// anything to the interpreter.
pub fn poll_pending(tag: &PendingTag, fg: Option<Duration>) -> Result<EvalOutcome> {
    let path = &tag.path;
    if !path.exists() {
        return Err(Error::MissingResponseFile { path: path.clone() });
    }
    let done = done_marker(path);
    let deadline = fg.map(|d| Instant::now() + d);
    loop {
        if done.exists() {
            return Ok(EvalOutcome::Complete {
                text: read_response(path)?,
            });
        }
        if !reader_active(path) {
            // The reader died without marking the file; take what is there.
            if !done.exists() {
                log::warn!("response reader for {} is gone", path.display());
            }
            return Ok(EvalOutcome::Complete {
                text: read_response(path)?,
            });
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(EvalOutcome::Partial {
                text: read_response(path)?,
                path: path.clone(),
            });
        }
        thread::sleep(POLL_INTERVAL);
    }
}

/// Take the session lock. A reader marks its response done just before it
/// releases the lock, so a holder whose response is already done is waited
/// for rather than reported.
fn acquire(handle: &SessionHandle, hash: &str) -> Result<lock::Acquire> {
    let deadline = Instant::now() + RELEASE_GRACE;
    loop {
        let got = lock::try_acquire(&handle.lock_dir(), hash).context(|| "acquiring session lock".into())?;
        match &got {
            lock::Acquire::Held(info)
                if Instant::now() < deadline
                    && info
                        .hash
                        .as_deref()
                        .is_some_and(|h| done_marker(&response_path(&handle.auxdir, h)).exists()) =>
            {
                thread::sleep(POLL_INTERVAL)
            }
            _ => return Ok(got),
        }
    }
}

/// Evaluate `req.code` in a running session.
pub fn eval_code(
    req: &EvalRequest,
    handle: &SessionHandle,
    cfg: &InterpreterClassConfig,
    reader: &ReaderCommand,
) -> Result<EvalOutcome> {
    let Some(pid) = handle.pid().filter(|p| session::is_alive(*p)) else {
        return Err(Error::NotRunning {
            auxdir: handle.auxdir.clone(),
        });
    };
    let hash = code_hash(&req.code);
    let response = response_path(&handle.auxdir, &hash);

    let guard = match acquire(handle, &hash)? {
        lock::Acquire::Acquired(guard) => guard,
        lock::Acquire::Held(info) if info.hash.as_deref() == Some(hash.as_str()) && response.exists() => {
            // Same code already running: follow it instead of resending.
            return poll_pending(&PendingTag { path: response }, req.timeouts.fg);
        }
        lock::Acquire::Held(info) => {
            return Err(Error::LockHeld {
                auxdir: handle.auxdir.clone(),
                pid: info.pid,
            })
        }
    };

    let done = done_marker(&response);
    for p in [&response, &done] {
        match fs::remove_file(p) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => {
                return Err(Error::Io {
                    context: format!("removing {}", p.display()),
                    source: e,
                })
            }
            _ => {}
        }
    }
    fs::write(&response, b"").context(|| format!("creating {}", response.display()))?;

    let token = new_token();
    let reader_pid = reader.spawn(&ReaderArgs {
        out_pipe: handle.out_pipe.clone(),
        response: response.clone(),
        token: token.clone(),
        lock_dir: handle.lock_dir(),
        interpreter_pid: pid,
        lifetime: req.timeouts.bg,
    })?;
    guard.hand_over(reader_pid);

    let mut message = cfg.encode_code(&req.code);
    message.push_str(&cfg.echo_command(&token));
    if let Err(e) = handle.send(&message) {
        session::process::signal_group(reader_pid, libc::SIGTERM);
        lock::release(&handle.lock_dir());
        return Err(e);
    }
    poll_pending(&PendingTag { path: response }, req.timeouts.fg)
}

/// Interpreter sessions used while processing a document, started on demand.
#[derive(Debug, Clone)]
pub struct Sessions {
    configs: HashMap<ClassName, InterpreterClassConfig>,
    auxdirs: HashMap<ClassName, PathBuf>,
    pub reader: ReaderCommand,
}

impl Sessions {
    pub fn new(reader: ReaderCommand) -> Self {
        Sessions {
            configs: HashMap::new(),
            auxdirs: HashMap::new(),
            reader,
        }
    }

    pub fn configure(&mut self, cfg: InterpreterClassConfig, auxdir: PathBuf) {
        self.auxdirs.insert(cfg.class_name, auxdir);
        self.configs.insert(cfg.class_name, cfg);
    }

    pub fn config(&self, class: ClassName) -> Result<&InterpreterClassConfig> {
        self.configs
            .get(&class)
            .ok_or_else(|| Error::Unconfigured(class.to_string()))
    }

    pub fn auxdir(&self, class: ClassName) -> Result<&Path> {
        self.auxdirs
            .get(&class)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::Unconfigured(class.to_string()))
    }

    pub fn ensure_running(&self, class: ClassName) -> Result<SessionHandle> {
        let auxdir = self.auxdir(class)?;
        let handle = SessionHandle::new(auxdir, class);
        if handle.is_running() {
            return Ok(handle);
        }
        session::start(self.config(class)?, auxdir)
    }

    pub fn eval(&self, code: &str, class: ClassName, timeouts: Timeouts) -> Result<EvalOutcome> {
        let handle = self.ensure_running(class)?;
        let req = EvalRequest {
            code: code.to_string(),
            class_name: class,
            timeouts,
        };
        eval_code(&req, &handle, self.config(class)?, &self.reader)
    }
}

/// Normalized form used to decide whether a result changed.
fn comparable(body: &str) -> &str {
    body.strip_suffix('\n').unwrap_or(body)
}

/// Keep end tags on their own line.
fn as_body(mut text: String) -> String {
    if !text.is_empty() && !text.ends_with('\n') {
        text.push('\n');
    }
    text
}

/// Evaluate every code section of `doc` in order, updating result sections.
/// Returns the new document and the exit code chosen by `policy`.
pub fn process_document(
    doc: &Document,
    sessions: &Sessions,
    policy: &ExitPolicy,
    timeouts: Timeouts,
) -> Result<(Document, i32)> {
    let (doc, findings) = process_document_findings(doc, sessions, timeouts)?;
    Ok((doc, policy.exit_code(findings)))
}

pub fn process_document_findings(
    doc: &Document,
    sessions: &Sessions,
    timeouts: Timeouts,
) -> Result<(Document, Findings)> {
    let mut out = doc.clone();
    let mut findings = Findings::default();
    for pair in doc.pair_sections() {
        let code = &doc.spans[pair.code];
        debug_assert_eq!(code.kind, SpanKind::Code);
        let Some(class) = code.class else { continue };
        let original = pair.result.map(|r| doc.spans[r].body.as_str());

        let polled = match original.and_then(parse_pending) {
            Some(tag) => match poll_pending(&tag, timeouts.fg) {
                Ok(outcome) => Some(outcome),
                Err(Error::MissingResponseFile { .. }) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        let outcome = match polled {
            Some(o) => o,
            None => match sessions.eval(&code.body, class, timeouts) {
                Ok(o) => o,
                Err(e @ Error::LockHeld { .. }) => {
                    // An earlier section is still running; leave this one as is.
                    log::warn!("{e}; section left unchanged");
                    findings.pending = true;
                    continue;
                }
                Err(e) => return Err(e),
            },
        };

        findings.exception |= detect_exception(outcome.text(), class);
        findings.pending |= outcome.is_partial();
        if let (Some(r), Some(original)) = (pair.result, original) {
            let body = as_body(format_result(&outcome));
            findings.irreproducible |= comparable(&body) != comparable(original);
            out.spans[r].body = body;
        }
    }
    Ok((out, findings))
}

//! Background interpreter sessions.
//!
//! Every session lives in an auxiliary directory:
//!
//! ```text
//! <auxdir>/in.pipe               FIFO carrying text to the interpreter
//! <auxdir>/out.pipe              FIFO carrying interpreter stdout+stderr
//! <auxdir>/pid.txt               interpreter process ID
//! <auxdir>/lock/                 soft lock of the evaluation in progress
//! <auxdir>/partial_<hash>.txt    response files, see `evaluator`
//! ```
//!
//! The interpreter is started in its own session with both FIFOs opened
//! read-write, so it never sees EOF or EPIPE when the CLI goes away.

pub mod lock;
pub mod process;

use std::fs;
use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use crate::class::{ClassName, InterpreterClassConfig};
use crate::error::{Error, IoContext, Result};
use crate::hash::short_hash;
use crate::pipe::{self, PipeReader};
use crate::probe::{new_token, read_until_token, read_until_token_tail, ProbeEnd};

pub use process::is_alive;

pub const IN_PIPE: &str = "in.pipe";
pub const OUT_PIPE: &str = "out.pipe";
pub const PIDFILE: &str = "pid.txt";
pub const LOCK_DIR: &str = "lock";

/// Time allowed between SIGTERM and SIGKILL when stopping.
pub const STOP_GRACE: Duration = Duration::from_secs(1);

/// How long a freshly started interpreter may take to answer its first probe.
pub const STARTUP_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionHandle {
    pub auxdir: PathBuf,
    pub in_pipe: PathBuf,
    pub out_pipe: PathBuf,
    pub pidfile: PathBuf,
    pub class_name: ClassName,
}

impl SessionHandle {
    pub fn new(auxdir: &Path, class_name: ClassName) -> Self {
        SessionHandle {
            auxdir: auxdir.to_path_buf(),
            in_pipe: auxdir.join(IN_PIPE),
            out_pipe: auxdir.join(OUT_PIPE),
            pidfile: auxdir.join(PIDFILE),
            class_name,
        }
    }

    pub fn lock_dir(&self) -> PathBuf {
        self.auxdir.join(LOCK_DIR)
    }

    pub fn pid(&self) -> Option<u32> {
        read_pid(&self.auxdir)
    }

    pub fn is_running(&self) -> bool {
        self.pid().is_some_and(is_alive)
    }

    fn not_running(&self) -> Error {
        Error::NotRunning {
            auxdir: self.auxdir.clone(),
        }
    }

    /// Write raw text to the interpreter.
    pub fn send(&self, text: &str) -> Result<()> {
        let mut w = pipe::open_writer(&self.in_pipe).map_err(|e| match e.kind() {
            io::ErrorKind::NotConnected | io::ErrorKind::NotFound => self.not_running(),
            _ => Error::Io {
                context: format!("opening {}", self.in_pipe.display()),
                source: e,
            },
        })?;
        w.write_all(text.as_bytes())
            .context(|| format!("writing to {}", self.in_pipe.display()))
    }
}

/// Hash A: names the auxdir of a working directory.
pub fn workdir_hash(workdir: &Path) -> String {
    use std::os::unix::ffi::OsStrExt;
    short_hash(workdir.as_os_str().as_bytes())
}

fn user_name() -> String {
    match std::env::var("USER") {
        Ok(u) if !u.is_empty() && !u.contains('/') => u,
        // SAFETY: getuid cannot fail.
        _ => unsafe { libc::getuid() }.to_string(),
    }
}

/// Default auxdir location: `<tmp>/litrepl/<user>/<hash A>/<class>`.
pub fn default_auxdir(workdir: &Path, class_name: ClassName) -> PathBuf {
    std::env::temp_dir()
        .join("litrepl")
        .join(user_name())
        .join(workdir_hash(workdir))
        .join(class_name.as_str())
}

/// The auxdir a class would use, without touching the filesystem.
pub fn auxdir_for(workdir: &Path, class_name: ClassName, over: Option<&Path>) -> Result<PathBuf> {
    match over {
        Some(p) => Ok(p.to_path_buf()),
        None if workdir.is_absolute() => Ok(default_auxdir(workdir, class_name)),
        None => Err(Error::Config(format!(
            "working directory {} is not absolute",
            workdir.display()
        ))),
    }
}

/// Pick the auxdir for a class and make sure it exists.
pub fn resolve_auxdir(workdir: &Path, class_name: ClassName, over: Option<&Path>) -> Result<PathBuf> {
    let dir = auxdir_for(workdir, class_name, over)?;
    fs::create_dir_all(&dir).context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn read_pid(auxdir: &Path) -> Option<u32> {
    fs::read_to_string(auxdir.join(PIDFILE))
        .ok()
        .and_then(|s| s.trim().parse().ok())
}

fn remove_if_exists(path: &Path) -> Result<()> {
    match fs::remove_file(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::Io {
            context: format!("removing {}", path.display()),
            source: e,
        }),
    }
}

/// Launch the interpreter of `cfg` in the background, bound to the pipes of
/// `auxdir`.
pub fn start(cfg: &InterpreterClassConfig, auxdir: &Path) -> Result<SessionHandle> {
    let handle = SessionHandle::new(auxdir, cfg.class_name);
    fs::create_dir_all(auxdir).context(|| format!("creating {}", auxdir.display()))?;
    if let Some(pid) = handle.pid() {
        if is_alive(pid) {
            return Err(Error::AlreadyRunning {
                auxdir: auxdir.to_path_buf(),
                pid,
            });
        }
        log::info!("reclaiming stale session of pid {pid} in {}", auxdir.display());
    }
    remove_if_exists(&handle.pidfile)?;
    lock::release(&handle.lock_dir());
    for p in [&handle.in_pipe, &handle.out_pipe] {
        pipe::make_fifo(p).context(|| format!("creating fifo {}", p.display()))?;
    }

    let stdin = pipe::open_rdwr(&handle.in_pipe).context(|| "opening input pipe".into())?;
    let stdout = pipe::open_rdwr(&handle.out_pipe).context(|| "opening output pipe".into())?;
    let stderr = stdout.try_clone().context(|| "duplicating output pipe".into())?;
    let mut command = Command::new(&cfg.command[0]);
    command
        .args(&cfg.command[1..])
        .stdin(stdin)
        .stdout(stdout)
        .stderr(stderr);
    // SAFETY: only async-signal-safe calls between fork and exec.
    unsafe {
        command.pre_exec(|| {
            libc::setsid();
            libc::signal(libc::SIGINT, libc::SIG_DFL);
            libc::signal(libc::SIGPIPE, libc::SIG_DFL);
            Ok(())
        });
    }
    let child = command.spawn().map_err(|e| Error::SpawnFailure {
        command: cfg.command_line(),
        reason: e.to_string(),
    })?;
    // Dropping `command` closes our copies of the pipe descriptors.
    drop(command);
    let pid = child.id();
    fs::write(&handle.pidfile, format!("{pid}\n"))
        .context(|| format!("writing {}", handle.pidfile.display()))?;

    let startup = handle.send(&cfg.preamble).and_then(|()| {
        // The first probe swallows whatever the interpreter printed before
        // the preamble took effect. Anything after its token, and before the
        // second one, is a prompt the preamble failed to silence.
        let (_, tail) = probe_tail(&handle, cfg, STARTUP_TIMEOUT)?;
        let (noise, _) = probe_tail(&handle, cfg, STARTUP_TIMEOUT)?;
        Ok(tail + &noise)
    });
    match startup {
        Ok(noise) if noise.is_empty() => Ok(handle),
        Ok(noise) => {
            log::warn!(
                "{} interpreter still prints prompts after the preamble: {noise:?}",
                cfg.class_name
            );
            Ok(handle)
        }
        Err(e) => {
            let _ = stop(auxdir);
            Err(Error::SpawnFailure {
                command: cfg.command_line(),
                reason: e.to_string(),
            })
        }
    }
}

/// Send an echo probe and return everything the interpreter printed before
/// answering it. An idle, well-configured interpreter returns "".
pub fn probe(handle: &SessionHandle, cfg: &InterpreterClassConfig, timeout: Duration) -> Result<String> {
    probe_tail(handle, cfg, timeout).map(|(text, _)| text)
}

/// [`probe`], plus whatever was read past the token.
fn probe_tail(handle: &SessionHandle, cfg: &InterpreterClassConfig, timeout: Duration) -> Result<(String, String)> {
    let mut reader =
        PipeReader::open(&handle.out_pipe).context(|| format!("opening {}", handle.out_pipe.display()))?;
    let token = new_token();
    handle.send(&cfg.echo_command(&token))?;
    let mut got = Vec::new();
    let (end, tail) = read_until_token_tail(
        &mut reader,
        &token,
        Some(Instant::now() + timeout),
        || handle.is_running(),
        |b| {
            got.extend_from_slice(b);
            Ok(())
        },
    )
    .context(|| "reading probe response".into())?;
    let text = String::from_utf8_lossy(&got).into_owned();
    match end {
        ProbeEnd::Found => Ok((text, String::from_utf8_lossy(&tail).into_owned())),
        ProbeEnd::Eof | ProbeEnd::Abandoned => Err(Error::SpawnFailure {
            command: cfg.command_line(),
            reason: format!("interpreter exited; output was {text:?}"),
        }),
        ProbeEnd::Timeout => Err(Error::Io {
            context: "waiting for probe".into(),
            source: io::Error::new(io::ErrorKind::TimedOut, format!("no answer; output was {text:?}")),
        }),
    }
}

/// Terminate the session's interpreter. Returns whether one was running.
pub fn stop(auxdir: &Path) -> Result<bool> {
    let pidfile = auxdir.join(PIDFILE);
    let Some(pid) = read_pid(auxdir) else {
        remove_if_exists(&pidfile)?;
        return Ok(false);
    };
    let was_running = is_alive(pid);
    if was_running {
        process::signal_group(pid, libc::SIGTERM);
        if !process::wait_gone(pid, STOP_GRACE) {
            process::signal_group(pid, libc::SIGKILL);
            process::wait_gone(pid, STOP_GRACE);
        }
    }
    remove_if_exists(&pidfile)?;
    Ok(was_running)
}

pub fn restart(cfg: &InterpreterClassConfig, auxdir: &Path) -> Result<SessionHandle> {
    stop(auxdir)?;
    start(cfg, auxdir)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Status {
    pub running: bool,
    pub pid: Option<u32>,
    pub auxdir: PathBuf,
}

pub fn status(auxdir: &Path) -> Status {
    let pid = read_pid(auxdir).filter(|p| is_alive(*p));
    Status {
        running: pid.is_some(),
        pid,
        auxdir: auxdir.to_path_buf(),
    }
}

/// Deliver `signal` to the interpreter's process group.
pub fn interrupt(auxdir: &Path, signal: i32) -> Result<bool> {
    match read_pid(auxdir).filter(|p| is_alive(*p)) {
        Some(pid) => Ok(process::signal_group(pid, signal)),
        None => Err(Error::NotRunning {
            auxdir: auxdir.to_path_buf(),
        }),
    }
}

/// Connect `input` and `output` directly to the interpreter.
///
/// Input is forwarded until it ends; then an echo probe is sent and output is
/// relayed until the probe comes back, so nothing the session printed leaks
/// into later evaluations. Returns the exit status for the CLI.
pub fn attach_repl(
    handle: &SessionHandle,
    cfg: &InterpreterClassConfig,
    mut input: impl Read + Send,
    mut output: impl Write,
) -> Result<i32> {
    if !handle.is_running() {
        return Err(handle.not_running());
    }
    let guard = match lock::try_acquire(&handle.lock_dir(), "repl")
        .context(|| "acquiring session lock".into())?
    {
        lock::Acquire::Acquired(guard) => guard,
        lock::Acquire::Held(info) => {
            return Err(Error::LockHeld {
                auxdir: handle.auxdir.clone(),
                pid: info.pid,
            })
        }
    };
    guard
        .set_pid(std::process::id())
        .context(|| "writing lock pid".into())?;

    let mut reader =
        PipeReader::open(&handle.out_pipe).context(|| format!("opening {}", handle.out_pipe.display()))?;
    let mut writer = pipe::open_writer(&handle.in_pipe).map_err(|_| handle.not_running())?;
    let token = new_token();
    let echo = cfg.echo_command(&token);

    let end = std::thread::scope(|scope| {
        let forward = scope.spawn(move || -> io::Result<()> {
            io::copy(&mut input, &mut writer)?;
            writer.write_all(echo.as_bytes())
        });
        let end = read_until_token(
            &mut reader,
            &token,
            None,
            || handle.is_running(),
            |b| {
                output.write_all(b)?;
                output.flush()
            },
        );
        let forwarded = forward.join().expect("input forwarding thread panicked");
        end.and_then(|end| forwarded.map(|()| end))
    })
    .context(|| "relaying repl streams".into())?;
    drop(guard);
    match end {
        ProbeEnd::Found => Ok(0),
        _ => Ok(1),
    }
}

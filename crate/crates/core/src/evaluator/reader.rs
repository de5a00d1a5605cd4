//! The response reader: a detached process copying interpreter output into a
//! response file until the probe token shows up.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::error::{Error, IoContext, Result};
use crate::pipe::PipeReader;
use crate::probe::read_until_token;
use crate::session::{is_alive, lock};

use super::Timeouts;

/// Marker created next to a response file once it is final.
pub fn done_marker(response: &Path) -> PathBuf {
    let mut name = response.as_os_str().to_os_string();
    name.push(".done");
    PathBuf::from(name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReaderArgs {
    pub out_pipe: PathBuf,
    pub response: PathBuf,
    pub token: String,
    pub lock_dir: PathBuf,
    pub interpreter_pid: u32,
    pub lifetime: Option<Duration>,
}

impl ReaderArgs {
    pub fn to_args(&self) -> Vec<OsString> {
        vec![
            self.out_pipe.clone().into(),
            self.response.clone().into(),
            self.token.clone().into(),
            self.lock_dir.clone().into(),
            self.interpreter_pid.to_string().into(),
            Timeouts::format_secs(self.lifetime).into(),
        ]
    }

    pub fn from_args(args: &[OsString]) -> Result<Self> {
        let [out_pipe, response, token, lock_dir, pid, lifetime] = args else {
            return Err(Error::Config(format!(
                "response reader expects 6 arguments, got {}",
                args.len()
            )));
        };
        let text = |s: &OsString| {
            s.to_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Config("non UTF-8 reader argument".into()))
        };
        Ok(ReaderArgs {
            out_pipe: out_pipe.into(),
            response: response.into(),
            token: text(token)?,
            lock_dir: lock_dir.into(),
            interpreter_pid: text(pid)?
                .parse()
                .map_err(|_| Error::Config("bad interpreter pid".into()))?,
            lifetime: Timeouts::parse_secs(&text(lifetime)?)?,
        })
    }
}

/// How to launch a response reader: a program that ends up calling
/// [`run_reader`] with the arguments appended to `args`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReaderCommand {
    pub program: PathBuf,
    pub args: Vec<OsString>,
}

impl ReaderCommand {
    pub fn new(program: impl Into<PathBuf>, args: impl IntoIterator<Item = impl Into<OsString>>) -> Self {
        ReaderCommand {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Start a detached reader and return its process ID.
    pub fn spawn(&self, reader: &ReaderArgs) -> Result<u32> {
        let mut command = Command::new(&self.program);
        command
            .args(&self.args)
            .args(reader.to_args())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null());
        // SAFETY: setsid is async-signal-safe.
        unsafe {
            command.pre_exec(|| {
                libc::setsid();
                Ok(())
            });
        }
        let child = command.spawn().context(|| {
            format!("starting response reader {}", self.program.display())
        })?;
        Ok(child.id())
    }
}

/// Body of the response reader process.
///
/// Always leaves the done marker behind and releases the lock, whether the
/// token arrived, the interpreter died, or the lifetime ran out.
pub fn run_reader(args: &ReaderArgs) -> Result<()> {
    let result = copy_response(args);
    let _ = fs::write(done_marker(&args.response), b"");
    let own = lock::read_info(&args.lock_dir).and_then(|i| i.pid);
    if own.is_none() || own == Some(std::process::id()) {
        lock::release(&args.lock_dir);
    }
    result
}

fn copy_response(args: &ReaderArgs) -> Result<()> {
    let mut reader =
        PipeReader::open(&args.out_pipe).context(|| format!("opening {}", args.out_pipe.display()))?;
    let mut file = OpenOptions::new()
        .append(true)
        .create(true)
        .open(&args.response)
        .context(|| format!("opening {}", args.response.display()))?;
    let deadline = args.lifetime.map(|d| Instant::now() + d);
    let end = read_until_token(
        &mut reader,
        &args.token,
        deadline,
        || is_alive(args.interpreter_pid),
        |bytes| file.write_all(bytes),
    )
    .context(|| "copying interpreter output".into())?;
    log::debug!("response reader finished: {end:?}");
    Ok(())
}

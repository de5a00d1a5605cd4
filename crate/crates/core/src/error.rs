use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{line}:{column}: unbalanced section: `{tag}` has no matching end tag")]
    UnbalancedSection {
        line: usize,
        column: usize,
        tag: String,
    },

    #[error("session in {} is already running (pid {pid})", auxdir.display())]
    AlreadyRunning { auxdir: PathBuf, pid: u32 },

    #[error("no running session in {}", auxdir.display())]
    NotRunning { auxdir: PathBuf },

    #[error("failed to start interpreter `{command}`: {reason}")]
    SpawnFailure { command: String, reason: String },

    #[error("session in {} is locked by another evaluation (reader pid {pid:?})", auxdir.display())]
    LockHeld { auxdir: PathBuf, pid: Option<u32> },

    #[error("response file {} is missing", path.display())]
    MissingResponseFile { path: PathBuf },

    #[error("interpreter class `{0}` has no interpreter command configured")]
    Unconfigured(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

pub(crate) trait IoContext<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| Error::Io {
            context: f(),
            source,
        })
    }
}

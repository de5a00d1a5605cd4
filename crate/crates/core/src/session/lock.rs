//! Soft lock: a directory created atomically inside the auxdir.
//!
//! It holds `hash` (the hash of the code being evaluated, or `repl`) and
//! `pid` (the process that will release it). A second evaluation of the same
//! code may find the lock and poll the running evaluation instead of failing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

use super::process::is_alive;

/// A lock directory with no `pid` older than this is considered abandoned.
const PIDLESS_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockInfo {
    pub hash: Option<String>,
    pub pid: Option<u32>,
}

#[derive(Debug)]
pub enum Acquire {
    Acquired(LockGuard),
    Held(LockInfo),
}

pub fn read_info(dir: &Path) -> Option<LockInfo> {
    if !dir.is_dir() {
        return None;
    }
    let read = |name: &str| fs::read_to_string(dir.join(name)).ok().map(|s| s.trim().to_string());
    Some(LockInfo {
        hash: read("hash"),
        pid: read("pid").and_then(|p| p.parse().ok()),
    })
}

fn is_stale(dir: &Path, info: &LockInfo) -> bool {
    match info.pid {
        Some(pid) => !is_alive(pid),
        None => fs::metadata(dir)
            .and_then(|m| m.modified())
            .ok()
            .and_then(|t| SystemTime::now().duration_since(t).ok())
            .is_some_and(|age| age > PIDLESS_GRACE),
    }
}

/// The lock holder, if the lock is held by a live process.
pub fn holder(dir: &Path) -> Option<LockInfo> {
    read_info(dir).filter(|info| !is_stale(dir, info))
}

/// A fresh sibling of `dir` for building or tearing down a lock, so the lock
/// itself appears and disappears with a single rename.
fn scratch(dir: &Path, what: &str) -> PathBuf {
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("lock");
    dir.with_file_name(format!(".{name}.{what}.{}.{:016x}", std::process::id(), rand::random::<u64>()))
}

fn is_taken(e: &io::Error) -> bool {
    e.kind() == io::ErrorKind::AlreadyExists || matches!(e.raw_os_error(), Some(libc::ENOTEMPTY) | Some(libc::EEXIST))
}

pub fn try_acquire(dir: &Path, hash: &str) -> io::Result<Acquire> {
    let new = scratch(dir, "new");
    fs::create_dir(&new)?;
    let built = fs::write(new.join("hash"), format!("{hash}\n"));
    if let Err(e) = built {
        let _ = fs::remove_dir_all(&new);
        return Err(e);
    }
    for _ in 0..2 {
        match fs::rename(&new, dir) {
            Ok(()) => {
                return Ok(Acquire::Acquired(LockGuard {
                    dir: dir.to_path_buf(),
                    armed: true,
                }))
            }
            Err(e) if is_taken(&e) => {
                let info = read_info(dir).unwrap_or(LockInfo { hash: None, pid: None });
                if !is_stale(dir, &info) {
                    let _ = fs::remove_dir_all(&new);
                    return Ok(Acquire::Held(info));
                }
                release(dir);
            }
            Err(e) => {
                let _ = fs::remove_dir_all(&new);
                return Err(e);
            }
        }
    }
    let _ = fs::remove_dir_all(&new);
    Ok(Acquire::Held(read_info(dir).unwrap_or(LockInfo { hash: None, pid: None })))
}

pub fn release(dir: &Path) {
    let old = scratch(dir, "old");
    if fs::rename(dir, &old).is_ok() {
        let _ = fs::remove_dir_all(&old);
    }
}

/// Releases the lock on drop unless handed over with [`LockGuard::hand_over`].
#[derive(Debug)]
pub struct LockGuard {
    dir: PathBuf,
    armed: bool,
}

impl LockGuard {
    pub fn set_pid(&self, pid: u32) -> io::Result<()> {
        fs::write(self.dir.join("pid"), format!("{pid}\n"))
    }

    /// Leave the lock in place for process `pid`, which releases it itself.
    pub fn hand_over(mut self, pid: u32) {
        // The new owner may already have finished and removed the directory.
        let _ = self.set_pid(pid);
        self.armed = false;
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        if self.armed {
            release(&self.dir);
        }
    }
}

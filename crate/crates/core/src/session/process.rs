//! Process-table queries and signals.

use std::time::{Duration, Instant};

/// Whether `pid` names a live (non-zombie) process.
pub fn is_alive(pid: u32) -> bool {
    let Ok(raw) = i32::try_from(pid) else {
        return false;
    };
    if raw <= 0 {
        return false;
    }
    // Reap it if it happens to be our own exited child.
    // SAFETY: waitpid with WNOHANG never blocks; a null status is allowed.
    if unsafe { libc::waitpid(raw, std::ptr::null_mut(), libc::WNOHANG) } == raw {
        return false;
    }
    // SAFETY: signal 0 only checks for existence and permission.
    let exists = unsafe { libc::kill(raw, 0) } == 0
        || std::io::Error::last_os_error().raw_os_error() == Some(libc::EPERM);
    exists && !is_zombie(pid)
}

fn is_zombie(pid: u32) -> bool {
    let Ok(stat) = std::fs::read_to_string(format!("/proc/{pid}/stat")) else {
        return false;
    };
    // The state follows the parenthesized command name, which may itself
    // contain parentheses.
    stat.rfind(')')
        .and_then(|i| stat[i + 1..].trim_start().chars().next())
        .is_some_and(|state| state == 'Z' || state == 'X')
}

/// Send `signal` to the process group led by `pid`, falling back to the
/// process alone.
pub fn signal_group(pid: u32, signal: i32) -> bool {
    let raw = pid as i32;
    // SAFETY: plain signal delivery.
    unsafe { libc::killpg(raw, signal) == 0 || libc::kill(raw, signal) == 0 }
}

/// Wait until `pid` is gone or `timeout` elapses. Returns whether it is gone.
pub fn wait_gone(pid: u32, timeout: Duration) -> bool {
    let deadline = Instant::now() + timeout;
    loop {
        if !is_alive(pid) {
            return true;
        }
        if Instant::now() >= deadline {
            return false;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

/// Executable of a running process, when the OS exposes it.
pub fn executable(pid: u32) -> Option<std::path::PathBuf> {
    std::fs::read_link(format!("/proc/{pid}/exe")).ok()
}

//! The echo probe: after each request a unique token is echoed by the
//! interpreter, and its appearance on the output stream ends the response.

use std::io;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::pipe::{PipeReader, ReadEvent};

pub const TOKEN_PREFIX: &str = "LITREPL-PROBE-";

/// A fresh token carrying 128 random bits.
pub fn new_token() -> String {
    let bits: u128 = rand::thread_rng().gen();
    format!("{TOKEN_PREFIX}{bits:032x}")
}

/// Splits an output stream into the response proper and the token line.
///
/// Complete lines are released as soon as they arrive. A line ending with
/// the token finishes the response; the text before the token on that line
/// belongs to the response (it was printed without a trailing newline).
#[derive(Debug)]
pub struct ProbeScanner {
    token: Vec<u8>,
    line: Vec<u8>,
    found: bool,
}

impl ProbeScanner {
    pub fn new(token: &str) -> Self {
        ProbeScanner {
            token: token.as_bytes().to_vec(),
            line: Vec::new(),
            found: false,
        }
    }

    pub fn found(&self) -> bool {
        self.found
    }

    /// Feed a chunk, returning the bytes that are definitely part of the
    /// response. Input after the token is kept aside, see [`Self::take_rest`].
    pub fn feed(&mut self, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        if self.found {
            self.line.extend_from_slice(data);
            return out;
        }
        for (i, &b) in data.iter().enumerate() {
            if b != b'\n' {
                self.line.push(b);
                continue;
            }
            let content = self.line.strip_suffix(b"\r").unwrap_or(&self.line);
            if let Some(prefix) = content.strip_suffix(self.token.as_slice()) {
                out.extend_from_slice(prefix);
                self.line.clear();
                self.line.extend_from_slice(&data[i + 1..]);
                self.found = true;
                return out;
            }
            out.append(&mut self.line);
            out.push(b'\n');
        }
        out
    }

    /// The unterminated tail once the stream has ended, or whatever was read
    /// past the token line.
    pub fn take_rest(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeEnd {
    Found,
    Eof,
    Timeout,
    /// `keep_going` returned false.
    Abandoned,
}

/// Copy `reader` into `sink` until the token line arrives.
///
/// `keep_going` is consulted about every 200 ms while no data flows; it lets
/// callers give up when the interpreter process has died.
pub fn read_until_token(
    reader: &mut PipeReader,
    token: &str,
    deadline: Option<Instant>,
    keep_going: impl FnMut() -> bool,
    sink: impl FnMut(&[u8]) -> io::Result<()>,
) -> io::Result<ProbeEnd> {
    read_until_token_tail(reader, token, deadline, keep_going, sink).map(|(end, _)| end)
}

/// Like [`read_until_token`], also returning bytes that happened to be read
/// past the token line.
pub fn read_until_token_tail(
    reader: &mut PipeReader,
    token: &str,
    deadline: Option<Instant>,
    mut keep_going: impl FnMut() -> bool,
    mut sink: impl FnMut(&[u8]) -> io::Result<()>,
) -> io::Result<(ProbeEnd, Vec<u8>)> {
    const TICK: Duration = Duration::from_millis(200);
    let mut scanner = ProbeScanner::new(token);
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let wait = match deadline {
            None => TICK,
            Some(d) => {
                let left = d.saturating_duration_since(Instant::now());
                if left.is_zero() {
                    sink(&scanner.take_rest())?;
                    return Ok((ProbeEnd::Timeout, Vec::new()));
                }
                left.min(TICK)
            }
        };
        match reader.read_timeout(&mut buf, Some(wait))? {
            ReadEvent::Data(n) => {
                let out = scanner.feed(&buf[..n]);
                if !out.is_empty() {
                    sink(&out)?;
                }
                if scanner.found() {
                    return Ok((ProbeEnd::Found, scanner.take_rest()));
                }
            }
            ReadEvent::Eof => {
                sink(&scanner.take_rest())?;
                return Ok((ProbeEnd::Eof, Vec::new()));
            }
            ReadEvent::Timeout => {
                if !keep_going() {
                    sink(&scanner.take_rest())?;
                    return Ok((ProbeEnd::Abandoned, Vec::new()));
                }
            }
        }
    }
}

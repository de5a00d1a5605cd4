//! A scripted fake interpreter for exercising the session protocol.
//!
//! Script format, one rule per line:
//!
//! ```text
//! # comment
//! #!echo echo          keyword that echoes its argument (default `echo`)
//! #!prompt noisy       print `mock> ` before reading each line
//! PATTERN<TAB>DELAY<TAB>RESPONSE
//! ```
//!
//! `PATTERN` is a regex that must match the whole input line, `DELAY` is in
//! seconds, and `RESPONSE` understands `\n`, `\t`, `\r` and `\\`.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use regex::Regex;

use crate::error::{Error, Result};

pub const NOISY_PROMPT: &str = "mock> ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PromptMode {
    #[default]
    Off,
    Noisy,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub pattern: Regex,
    pub delay: Duration,
    pub response: String,
}

#[derive(Debug, Clone)]
pub struct MockScript {
    pub rules: Vec<Rule>,
    pub echo_keyword: String,
    pub prompt_mode: PromptMode,
}

impl Default for MockScript {
    fn default() -> Self {
        MockScript {
            rules: Vec::new(),
            echo_keyword: "echo".to_string(),
            prompt_mode: PromptMode::Off,
        }
    }
}

pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Inverse of [`unescape`], for writing scripts.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

impl MockScript {
    pub fn parse(text: &str) -> Result<Self> {
        let mut script = MockScript::default();
        for (n, line) in text.lines().enumerate() {
            let bad = |what: &str| Error::Config(format!("mock script line {}: {what}", n + 1));
            if let Some(directive) = line.strip_prefix("#!") {
                match directive.split_once(' ') {
                    Some(("echo", kw)) if !kw.trim().is_empty() => script.echo_keyword = kw.trim().to_string(),
                    Some(("prompt", "noisy")) => script.prompt_mode = PromptMode::Noisy,
                    Some(("prompt", "off")) => script.prompt_mode = PromptMode::Off,
                    _ => return Err(bad("unknown directive")),
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(pattern), Some(delay), Some(response)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected PATTERN<TAB>DELAY<TAB>RESPONSE"));
            };
            let pattern = Regex::new(&format!("^(?:{pattern})$")).map_err(|e| bad(&e.to_string()))?;
            let delay: f64 = delay
                .trim()
                .parse()
                .ok()
                .filter(|d: &f64| d.is_finite() && *d >= 0.0)
                .ok_or_else(|| bad("bad delay"))?;
            script.rules.push(Rule {
                pattern,
                delay: Duration::from_secs_f64(delay),
                response: unescape(response),
            });
        }
        Ok(script)
    }

    /// Output for one input line, and the delay before producing it.
    pub fn respond(&self, line: &str) -> Option<(Duration, String)> {
        if let Some(rest) = line.strip_prefix(self.echo_keyword.as_str()) {
            if rest.is_empty() {
                return Some((Duration::ZERO, "\n".to_string()));
            }
            if let Some(arg) = rest.strip_prefix(' ') {
                return Some((Duration::ZERO, format!("{arg}\n")));
            }
        }
        self.rules
            .iter()
            .find(|r| r.pattern.is_match(line))
            .map(|r| (r.delay, r.response.clone()))
    }
}

/// Serve `script` over the given streams until end of input.
pub fn run_mock(script: &MockScript, mut input: impl BufRead, mut output: impl Write) -> io::Result<i32> {
    let mut line = String::new();
    loop {
        if script.prompt_mode == PromptMode::Noisy {
            output.write_all(NOISY_PROMPT.as_bytes())?;
            output.flush()?;
        }
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(0);
        }
        let request = line.strip_suffix('\n').unwrap_or(&line);
        let request = request.strip_suffix('\r').unwrap_or(request);
        if let Some((delay, response)) = script.respond(request) {
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
            output.write_all(response.as_bytes())?;
            output.flush()?;
        }
    }
}

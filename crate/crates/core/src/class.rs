//! Interpreter classes: families of interpreters sharing the same prompt
//! suppression and echo conventions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassName {
    Python,
    Sh,
    Ai,
}

impl ClassName {
    pub const ALL: [ClassName; 3] = [ClassName::Python, ClassName::Sh, ClassName::Ai];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassName::Python => "python",
            ClassName::Sh => "sh",
            ClassName::Ai => "ai",
        }
    }

    /// Section labels recognized for this class when none are configured.
    pub fn default_markers(self) -> &'static [&'static str] {
        match self {
            ClassName::Python => &["python"],
            ClassName::Sh => &["sh", "bash"],
            ClassName::Ai => &["ai"],
        }
    }

    pub fn default_command(self) -> Option<&'static str> {
        match self {
            ClassName::Python => Some("python3"),
            ClassName::Sh => Some("sh"),
            ClassName::Ai => None,
        }
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown interpreter class `{s}`")))
    }
}

/// How to launch and talk to one interpreter class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpreterClassConfig {
    pub class_name: ClassName,
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Sent once, right after the interpreter starts.
    pub preamble: String,
    /// Echo command with `{token}` standing for the token to echo.
    pub echo_template: String,
    pub interrupt_signal: i32,
}

pub const DEFAULT_INTERRUPT_SIGNAL: i32 = libc::SIGINT;

/// Flags making CPython read stdin line by line without a banner or buffering.
const PYTHON_INTERACTIVE_FLAGS: [&str; 3] = ["-q", "-u", "-i"];

/// Runs every top-level statement in `single` mode, so expression values are
/// echoed and compound statements need no trailing blank line.
const PYTHON_RUNNER: &str = "\
def _litproc_run(src):
    import ast, sys
    g = sys.modules['__main__'].__dict__
    for node in ast.parse(src, '<litproc>').body:
        exec(compile(ast.Interactive([node]), '<litproc>', 'single'), g)
";

impl InterpreterClassConfig {
    /// Configuration for `class` using `command` (a shell-style word list) or
    /// the class default.
    pub fn new(class: ClassName, command: Option<&str>) -> Result<Self> {
        let command = match command.or(class.default_command()) {
            Some(c) => c,
            None => return Err(Error::Unconfigured(class.to_string())),
        };
        let mut argv = shell_words::split(command)
            .map_err(|e| Error::Config(format!("bad {class} interpreter command: {e}")))?;
        if argv.is_empty() {
            return Err(Error::Unconfigured(class.to_string()));
        }
        let (preamble, echo_template) = match class {
            ClassName::Python => {
                if argv.len() == 1 {
                    argv.extend(PYTHON_INTERACTIVE_FLAGS.iter().map(|s| s.to_string()));
                }
                let preamble = format!(
                    "import sys; sys.ps1 = ''; sys.ps2 = ''\nexec({})\n",
                    python_str_literal(PYTHON_RUNNER)
                );
                (preamble, "print('{token}')\n".to_string())
            }
            // `trap : INT` keeps the shell alive when an interrupt kills the
            // foreground job.
            ClassName::Sh => (
                "unset PS1 PS2 PS4\ntrap : INT\n".to_string(),
                "echo {token}\n".to_string(),
            ),
            ClassName::Ai => (String::new(), "echo {token}\n".to_string()),
        };
        Ok(InterpreterClassConfig {
            class_name: class,
            command: argv,
            preamble,
            echo_template,
            interrupt_signal: DEFAULT_INTERRUPT_SIGNAL,
        })
    }

    pub fn echo_command(&self, token: &str) -> String {
        self.echo_template.replace("{token}", token)
    }

    /// Text written to the interpreter to evaluate `code`.
    ///
    /// Shell-like classes receive the code verbatim. Python code is wrapped in
    /// a single call to the runner installed by the preamble, because the
    /// interactive reader otherwise needs blank lines to close compound
    /// statements.
    pub fn encode_code(&self, code: &str) -> String {
        let mut code = code.to_string();
        if !code.ends_with('\n') {
            code.push('\n');
        }
        match self.class_name {
            ClassName::Python => format!("_litproc_run({})\n", python_str_literal(&code)),
            ClassName::Sh | ClassName::Ai => code,
        }
    }

    pub fn command_line(&self) -> String {
        shell_words::join(&self.command)
    }
}

/// Quote `s` as an ASCII-only Python string literal.
pub fn python_str_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            ' '..='~' => out.push(c),
            c if (c as u32) < 0x100 => out.push_str(&format!("\\x{:02x}", c as u32)),
            c if (c as u32) < 0x10000 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push_str(&format!("\\U{:08x}", c as u32)),
        }
    }
    out.push('\'');
    out
}

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use litproc_core::docparse::Flavor;
use litproc_core::{ClassName, SourceFormat};

const ABOUT: &str = "Evaluate code sections of LaTeX and Markdown documents.";

const LONG_ABOUT: &str = "\
Evaluate code sections of LaTeX and Markdown documents.

Without a command, litproc reads a document from standard input, sends each
code section to a background interpreter session, writes the responses into
the result sections that follow, and prints the document to standard output.

Sessions are kept per interpreter class (python, sh, ai) in an auxiliary
directory holding two named pipes (in.pipe, out.pipe), the interpreter pid
(pid.txt), a soft lock (lock/) and response files (partial_<hash>.txt).
A response slower than the foreground timeout is written as a partial result
ending with a `[LR:<response file>]` line; later runs pick it up from there.

LaTeX sections:    \\begin{python} ... \\end{python}, \\begin{result} ... \\end{result}
                   %lcode{python} ... %lnocode, %lresult ... %lnoresult
                   %lignore ... %lnoignore
Markdown sections: ```python fences, ```result fences, either one optionally
                   wrapped in lines `<!--` and `-->`;
                   <!--litrepl:ignore--> ... <!--litrepl:noignore-->

Environment: LITREPL_<CLASS>_INTERPRETER, LITREPL_<CLASS>_AUXDIR,
LITREPL_TIMEOUT and LITREPL_WORKDIR provide defaults for the matching flags
(CLASS is PYTHON, SH or AI).

Exit status: 0 on success, 1 on runtime errors, 2 on usage errors, or the
code chosen with --exception-exitcode, --pending-exitcode or
--irreproducible-exitcode (checked in that order).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileType {
    Auto,
    Latex,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Python,
    Sh,
    Ai,
}

impl From<ClassArg> for ClassName {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Python => ClassName::Python,
            ClassArg::Sh => ClassName::Sh,
            ClassArg::Ai => ClassName::Ai,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Latex,
    Markdown,
}

impl From<FormatArg> for SourceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Latex => SourceFormat::Latex,
            FormatArg::Markdown => SourceFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Ere,
    Bre,
    Vim,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Ere => Flavor::Ere,
            FlavorArg::Bre => Flavor::Bre,
            FlavorArg::Vim => Flavor::Vim,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "litproc", version, about = ABOUT, long_about = LONG_ABOUT)]
pub struct Cli {
    /// Document dialect; `auto` picks LaTeX when a `\begin{` or `%l...` delimiter
    /// line precedes any code fence.
    #[arg(long, global = true, value_enum, default_value = "auto")]
    pub filetype: FileType,

    /// Timeouts `FG,BG` in seconds (`inf` for none): how long to wait before
    /// emitting a partial result, and how long the background reader lives.
    /// A single value sets both. Default `inf`.
    #[arg(long, global = true, value_name = "FG,BG")]
    pub timeout: Option<String>,

    /// Exit code when some section is still pending after the timeout (0 = off).
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(i32).range(0..=255))]
    pub pending_exitcode: i32,

    /// Exit code when a Python section raised an exception (0 = off).
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(i32).range(0..=255))]
    pub exception_exitcode: i32,

    /// Exit code when some result differs from what the document held (0 = off).
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(i32).range(0..=255))]
    pub irreproducible_exitcode: i32,

    /// Command starting the python interpreter [default: python3 -q -u -i].
    #[arg(long, global = true, value_name = "CMD")]
    pub python_interpreter: Option<String>,

    /// Command starting the sh interpreter [default: sh].
    #[arg(long, global = true, value_name = "CMD")]
    pub sh_interpreter: Option<String>,

    /// Command starting the ai interpreter (no default).
    #[arg(long, global = true, value_name = "CMD")]
    pub ai_interpreter: Option<String>,

    /// Auxiliary directory of the python session.
    #[arg(long, global = true, value_name = "DIR")]
    pub python_auxdir: Option<PathBuf>,

    /// Auxiliary directory of the sh session.
    #[arg(long, global = true, value_name = "DIR")]
    pub sh_auxdir: Option<PathBuf>,

    /// Auxiliary directory of the ai session.
    #[arg(long, global = true, value_name = "DIR")]
    pub ai_auxdir: Option<PathBuf>,

    /// Comma-separated section labels evaluated by python [default: python].
    #[arg(long, global = true, value_name = "LABELS")]
    pub python_markers: Option<String>,

    /// Comma-separated section labels evaluated by sh [default: sh,bash].
    #[arg(long, global = true, value_name = "LABELS")]
    pub sh_markers: Option<String>,

    /// Comma-separated section labels evaluated by ai [default: ai].
    #[arg(long, global = true, value_name = "LABELS")]
    pub ai_markers: Option<String>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

impl Cli {
    pub fn interpreter_flag(&self, class: ClassName) -> Option<&str> {
        match class {
            ClassName::Python => self.python_interpreter.as_deref(),
            ClassName::Sh => self.sh_interpreter.as_deref(),
            ClassName::Ai => self.ai_interpreter.as_deref(),
        }
    }

    pub fn auxdir_flag(&self, class: ClassName) -> Option<&PathBuf> {
        match class {
            ClassName::Python => self.python_auxdir.as_ref(),
            ClassName::Sh => self.sh_auxdir.as_ref(),
            ClassName::Ai => self.ai_auxdir.as_ref(),
        }
    }

    pub fn markers_flag(&self, class: ClassName) -> Option<&str> {
        match class {
            ClassName::Python => self.python_markers.as_deref(),
            ClassName::Sh => self.sh_markers.as_deref(),
            ClassName::Ai => self.ai_markers.as_deref(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start the session of an interpreter class.
    Start { class: ClassArg },
    /// Stop the session of a class, or of every class.
    Stop { class: Option<ClassArg> },
    /// Stop the session if it runs, then start a fresh one.
    Restart { class: ClassArg },
    /// Print `<class> <running|stopped> <pid|-> <auxdir>` per class.
    Status { class: Option<ClassArg> },
    /// Send the interrupt signal to the interpreter.
    Interrupt { class: ClassArg },
    /// Connect standard input and output to the interpreter until input ends.
    Repl { class: ClassArg },
    /// Evaluate code read from standard input and print the response.
    ///
    /// A response slower than the foreground timeout is printed as far as it
    /// got, followed by its `[LR:<file>]` continuation line.
    EvalCode { class: ClassArg },
    /// Print regexps matching the section delimiter lines, one per line.
    PrintRegexp {
        /// Defaults to --filetype, or latex when that is `auto`.
        #[arg(value_enum)]
        format: Option<FormatArg>,
        #[arg(value_enum, default_value = "ere")]
        flavor: FlavorArg,
    },
    /// Internal: background response reader.
    #[command(name = "__reader", hide = true)]
    Reader {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<OsString>,
    },
}

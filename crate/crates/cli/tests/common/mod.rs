#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

pub const LITPROC: &str = env!("CARGO_BIN_EXE_litproc");
pub const MOCK: &str = env!("CARGO_BIN_EXE_litproc-mock");

pub const INPUT_TEX: &str = "\\begin{python}\nimport sys\nprint(f\"I use {sys.platform} btw!\")\n\\end{python}\n\\begin{result}\n\\end{result}\n";
pub const OUTPUT_TEX: &str = "\\begin{python}\nimport sys\nprint(f\"I use {sys.platform} btw!\")\n\\end{python}\n\\begin{result}\nI use linux btw!\n\\end{result}\n";

#[derive(Debug)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

/// A scratch directory with private auxdirs, HOME and TMPDIR. Sessions are
/// stopped on drop.
pub struct Sandbox {
    pub root: tempfile::TempDir,
    pub extra_args: Vec<String>,
}

impl Sandbox {
    pub fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        for d in ["work", "home", "tmp"] {
            fs::create_dir_all(root.path().join(d)).unwrap();
        }
        Sandbox {
            root,
            extra_args: Vec::new(),
        }
    }

    /// Sandbox whose `sh` class is the mock interpreter serving `script`.
    pub fn with_mock(script: &str) -> Self {
        let mut sb = Sandbox::new();
        let path = sb.path().join("mock.script");
        fs::write(&path, script).unwrap();
        sb.extra_args.push(format!("--sh-interpreter={MOCK} {}", path.display()));
        sb
    }

    pub fn path(&self) -> &Path {
        self.root.path()
    }

    pub fn workdir(&self) -> PathBuf {
        self.path().join("work")
    }

    pub fn auxdir(&self, class: &str) -> PathBuf {
        self.path().join("aux").join(class)
    }

    fn base_args(&self) -> Vec<String> {
        let mut args: Vec<String> = ["python", "sh", "ai"]
            .iter()
            .map(|c| format!("--{c}-auxdir={}", self.auxdir(c).display()))
            .collect();
        args.extend(self.extra_args.iter().cloned());
        args
    }

    pub fn command(&self, args: &[&str]) -> Command {
        let mut cmd = Command::new(LITPROC);
        cmd.args(self.base_args())
            .args(args)
            .current_dir(self.workdir())
            .env("HOME", self.path().join("home"))
            .env("TMPDIR", self.path().join("tmp"));
        for (k, _) in std::env::vars() {
            if k.starts_with("LITREPL_") {
                cmd.env_remove(k);
            }
        }
        cmd
    }

    pub fn run(&self, args: &[&str], stdin: &str) -> Output {
        run_command(self.command(args), stdin)
    }

    pub fn run_ok(&self, args: &[&str], stdin: &str) -> String {
        let out = self.run(args, stdin);
        assert_eq!(out.code, 0, "litproc {args:?} failed: {out:?}");
        out.stdout
    }

    pub fn pid(&self, class: &str) -> Option<u32> {
        fs::read_to_string(self.auxdir(class).join("pid.txt"))
            .ok()
            .and_then(|s| s.trim().parse().ok())
    }

    pub fn response_files(&self, class: &str) -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(self.auxdir(class))
            .map(|rd| {
                rd.filter_map(|e| e.ok()?.file_name().into_string().ok())
                    .filter(|n| n.starts_with("partial_") && n.ends_with(".txt"))
                    .collect()
            })
            .unwrap_or_default();
        names.sort();
        names
    }
}

impl Drop for Sandbox {
    fn drop(&mut self) {
        let _ = self.command(&["stop"]).stdout(Stdio::null()).stderr(Stdio::null()).status();
    }
}

pub fn run_command(mut cmd: Command, stdin: &str) -> Output {
    let t0 = Instant::now();
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    let input = stdin.to_string();
    let writer = std::thread::spawn(move || {
        let _ = pipe.write_all(input.as_bytes());
    });
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        elapsed: t0.elapsed(),
    }
}

/// Body of the `n`-th LaTeX result section of `doc`.
pub fn latex_result(doc: &str, n: usize) -> String {
    let mut rest = doc;
    for _ in 0..n {
        rest = &rest[rest.find("\\end{result}").unwrap() + 1..];
    }
    let start = rest.find("\\begin{result}\n").unwrap() + "\\begin{result}\n".len();
    let end = rest[start..].find("\\end{result}").unwrap();
    rest[start..start + end].to_string()
}

/// Markdown document with one `sh` section and an empty result.
pub fn sh_doc(code: &str) -> String {
    format!("```sh\n{code}```\n```result\n```\n")
}

/// Body of the first Markdown result fence.
pub fn md_result(doc: &str) -> String {
    let start = doc.find("```result\n").unwrap() + "```result\n".len();
    let end = doc[start..].rfind("```\n").unwrap();
    doc[start..start + end].to_string()
}

//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]`
//! line; run with `--nocapture` to see them inline.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use litproc_core::docparse::{self, print_regexp, Flavor, GrammarConfig};
use litproc_core::hash::code_hash;
use litproc_core::mockinterp::escape;
use litproc_core::{SourceFormat, SpanKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use regex::Regex;

use common::*;

fn criterion(n: u32, name: &str, check: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(check));
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{verdict}] {n} {name}");
    if let Err(panic) = result {
        resume_unwind(panic);
    }
}

fn fixture(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

/// Interrupt the python session and wait until no evaluation holds its lock.
fn settle(sb: &Sandbox, class: &str) {
    sb.run_ok(&["interrupt", class], "");
    let lock = sb.auxdir(class).join("lock");
    let t0 = Instant::now();
    while lock.exists() {
        assert!(t0.elapsed() < Duration::from_secs(10), "session did not settle");
        std::thread::sleep(Duration::from_millis(50));
    }
}

#[test]
fn c1_example_document_round_trip() {
    criterion(1, "example document round-trip", || {
        let sb = Sandbox::new();
        let input = fixture("input.tex");
        let t0 = Instant::now();
        sb.run_ok(&["restart", "python"], "");
        sb.run_ok(&["repl", "python"], "sys.platform='linux'\n");
        let out = sb.run(&[], &input);
        let elapsed = t0.elapsed();
        assert_eq!(out.code, 0, "{out:?}");
        assert_eq!(out.stdout, fixture("output.tex"));
        assert_eq!(out.stdout, OUTPUT_TEX);
        assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    });
}

#[test]
fn c2_partial_result_protocol() {
    criterion(2, "partial-result protocol", || {
        let sb = Sandbox::new();
        sb.run_ok(&["restart", "python"], "");
        let doc = "\\begin{python}\nimport time\nprint('... some output ...')\ntime.sleep(9999)\n\\end{python}\n\\begin{result}\n\\end{result}\n";
        let out = sb.run(&["--timeout=1,inf"], doc);
        assert_eq!(out.code, 0, "{out:?}");
        let fg = out.elapsed.as_secs_f64();
        assert!((0.5..=1.5).contains(&fg), "foreground wait {fg:.3}s");
        let body = latex_result(&out.stdout, 0);
        let tag = Regex::new(r"^\[LR:.*/partial_[0-9a-f]{7}\.txt\]$").unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.first(), Some(&"... some output ..."), "{body:?}");
        assert!(tag.is_match(lines.last().unwrap()), "{body:?}");

        settle(&sb, "python");
        let again = sb.run(&["--timeout=10,inf"], &out.stdout);
        assert_eq!(again.code, 0, "{again:?}");
        let body = latex_result(&again.stdout, 0);
        assert!(!body.contains("[LR:"), "{body:?}");
        assert!(body.starts_with("... some output ...\n"), "{body:?}");
        assert!(body.contains("KeyboardInterrupt"), "{body:?}");
    });
}

/// Independent oracle for response file names.
fn python_code_hash(code: &str) -> String {
    let script = "import hashlib,sys\n\
                  c=sys.stdin.read()\n\
                  n='\\n'.join(l.rstrip() for l in c.split('\\n')).rstrip('\\n')\n\
                  print(hashlib.sha256(n.encode()).hexdigest()[:7])";
    let mut cmd = Command::new("python3");
    cmd.args(["-c", script]);
    run_command(cmd, code).stdout.trim().to_string()
}

#[test]
fn c3_hash_stability() {
    criterion(3, "hash stability", || {
        let sb = Sandbox::new();
        let snippet = "echo stable\n";
        for _ in 0..100 {
            assert_eq!(sb.run_ok(&["eval-code", "sh"], snippet), "stable\n");
        }
        let names = sb.response_files("sh");
        assert_eq!(names.len(), 1, "{names:?}");
        assert_eq!(names[0], format!("partial_{}.txt", python_code_hash(snippet)));
        sb.run_ok(&["eval-code", "sh"], "echo stablE\n");
        let names = sb.response_files("sh");
        assert_eq!(names.len(), 2, "{names:?}");

        let mut rng = StdRng::seed_from_u64(3);
        let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz0123456789 =+()'\n".chars().collect();
        let mut seen = HashSet::new();
        for i in 0..10_000 {
            let len = rng.gen_range(8..60);
            let code: String = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
            // Mutate one non-whitespace character into a different one.
            let mut chars: Vec<char> = code.chars().collect();
            let Some(pos) = (0..chars.len()).filter(|&j| !chars[j].is_whitespace()).collect::<Vec<_>>().choose(&mut rng).copied()
            else {
                continue;
            };
            let old = chars[pos];
            chars[pos] = if old == 'x' { 'y' } else { 'x' };
            let mutant: String = chars.into_iter().collect();
            let (a, b) = (code_hash(&code), code_hash(&mutant));
            assert_ne!(a, b, "collision between {code:?} and {mutant:?}");
            if i < 20 {
                assert_eq!(a, python_code_hash(&code), "{code:?}");
            }
            seen.insert(code);
        }
        let hashes: HashSet<String> = seen.iter().map(|c| code_hash(c)).collect();
        assert_eq!(hashes.len(), seen.len(), "collision in the random corpus");
    });
}

// Document generators for the parser properties. Each returns the text and
// the number of live code sections it contains.

const PROSE: &[&str] = &[
    "Some prose.",
    "",
    "   ",
    "% a comment",
    "inline \\begin{python} is not a tag",
    "\\begin{pythonic}",
    "\\section{Intro}",
    "%lcodex",
    "``two ticks",
    "`` `sh",
    "<!-- note -->",
    "unicode: naïve ∑ €",
    "tab\tseparated",
];

const BODY: &[&str] = &["x = 1", "print(x)", "", "  indented", "echo $HOME", "for i in range(3): pass", "é"];

fn pad(rng: &mut StdRng) -> &'static str {
    ["", "", " ", "\t", "  ", " \t"].choose(rng).unwrap()
}

fn eol(rng: &mut StdRng) -> &'static str {
    if rng.gen_bool(0.1) {
        "\r\n"
    } else {
        "\n"
    }
}

fn body(rng: &mut StdRng, out: &mut String) {
    for _ in 0..rng.gen_range(0..4) {
        out.push_str(BODY.choose(rng).unwrap());
        out.push_str(eol(rng));
    }
}

fn gen_latex(rng: &mut StdRng) -> (String, usize) {
    let mut doc = String::new();
    let mut code = 0;
    for _ in 0..rng.gen_range(0..12) {
        match rng.gen_range(0..6) {
            0 | 1 => {
                doc.push_str(PROSE.choose(rng).unwrap());
                doc.push_str(eol(rng));
            }
            2 => {
                let m = *["python", "sh", "bash", "ai"].choose(rng).unwrap();
                if rng.gen_bool(0.5) {
                    doc.push_str(&format!("{}\\begin{{{m}}}{}{}", pad(rng), pad(rng), eol(rng)));
                    body(rng, &mut doc);
                    doc.push_str(&format!("{}\\end{{{m}}}{}{}", pad(rng), pad(rng), eol(rng)));
                } else {
                    doc.push_str(&format!("%lcode{{{m}}}{}", eol(rng)));
                    body(rng, &mut doc);
                    doc.push_str(&format!("%lnocode{}", eol(rng)));
                }
                code += 1;
            }
            3 => {
                let (b, e) = if rng.gen_bool(0.5) {
                    ("\\begin{result}", "\\end{result}")
                } else {
                    ("%lresult", "%lnoresult")
                };
                doc.push_str(&format!("{}{b}{}{}", pad(rng), pad(rng), eol(rng)));
                body(rng, &mut doc);
                doc.push_str(&format!("{e}{}", eol(rng)));
            }
            4 => {
                doc.push_str(&format!("%lignore{}", eol(rng)));
                doc.push_str(&format!("\\begin{{python}}{}ignored{}\\end{{python}}{}", eol(rng), eol(rng), eol(rng)));
                doc.push_str(&format!("%lnoignore{}", eol(rng)));
            }
            _ => {
                doc.push_str("\\begin{verbatim}\nverbatim text\n\\end{verbatim}");
                doc.push_str(eol(rng));
            }
        }
    }
    if rng.gen_bool(0.2) {
        doc.push_str("no final newline");
    }
    (doc, code)
}

fn gen_markdown(rng: &mut StdRng) -> (String, usize) {
    let mut doc = String::new();
    let mut code = 0;
    for _ in 0..rng.gen_range(0..12) {
        let fence = ["```", "````", "~~~"].choose(rng).unwrap().to_string();
        match rng.gen_range(0..6) {
            0 | 1 => {
                doc.push_str(PROSE.choose(rng).unwrap());
                doc.push_str(eol(rng));
            }
            2 | 3 => {
                let is_code = rng.gen_bool(0.6);
                let label = if is_code {
                    *["python", "sh", "bash", "ai"].choose(rng).unwrap()
                } else {
                    "result"
                };
                let wrapped = rng.gen_bool(0.3);
                if wrapped {
                    doc.push_str(&format!("<!--{}", eol(rng)));
                }
                doc.push_str(&format!("{}{fence}{}{label}{}{}", pad(rng), pad(rng), pad(rng), eol(rng)));
                body(rng, &mut doc);
                doc.push_str(&format!("{fence}{}{}", pad(rng), eol(rng)));
                if wrapped {
                    doc.push_str(&format!("-->{}", eol(rng)));
                }
                code += is_code as usize;
            }
            4 => {
                doc.push_str(&format!("<!--litrepl:ignore-->{}", eol(rng)));
                doc.push_str(&format!("```python{}ignored{}```{}", eol(rng), eol(rng), eol(rng)));
                doc.push_str(&format!("<!--litrepl:noignore-->{}", eol(rng)));
            }
            _ => {
                // Foreign fences hide what looks like sections.
                doc.push_str(&format!("{fence}rust{}```python{}", eol(rng), eol(rng)));
                doc.push_str(&format!("{fence}{}", eol(rng)));
            }
        }
    }
    (doc, code)
}

fn check_partition(text: &str, format: SourceFormat) -> usize {
    let doc = docparse::parse(text, &GrammarConfig::new(format)).unwrap_or_else(|e| panic!("{e}: {text:?}"));
    assert_eq!(doc.render(), text);
    let mut at = 0;
    for span in &doc.spans {
        assert_eq!(span.offset, at, "spans must tile the input: {text:?}");
        at += span.len();
    }
    assert_eq!(at, text.len());
    doc.spans.iter().filter(|s| s.kind == SpanKind::Code).count()
}

#[test]
fn c4_parser_properties() {
    criterion(4, "parser properties", || {
        let t0 = Instant::now();
        for name in ["input.tex", "output.tex", "listing.tex", "partial.tex", "corpus.tex"] {
            check_partition(&fixture(name), SourceFormat::Latex);
        }
        check_partition(&fixture("corpus.md"), SourceFormat::Markdown);
        assert_eq!(check_partition(INPUT_TEX, SourceFormat::Latex), 1);
        assert_eq!(check_partition(&fixture("listing.tex"), SourceFormat::Latex), 2);

        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..1000 {
            let (text, code) = gen_latex(&mut rng);
            assert_eq!(check_partition(&text, SourceFormat::Latex), code, "{text:?}");
            let (text, code) = gen_markdown(&mut rng);
            assert_eq!(check_partition(&text, SourceFormat::Markdown), code, "{text:?}");
        }
        assert!(t0.elapsed() < Duration::from_secs(30), "took {:?}", t0.elapsed());
    });
}

struct MockCase {
    script: String,
    /// (request lines, expected response bytes) per evaluation.
    evals: Vec<(String, String)>,
    via_document: bool,
}

fn random_response(rng: &mut StdRng) -> String {
    let alphabet: Vec<char> = "abcXYZ019 .,:;!?=+-_/()[]{}'\"#$%&*é€\t\\".chars().collect();
    let lines = rng.gen_range(0..4);
    let mut out = String::new();
    for i in 0..lines {
        let len = rng.gen_range(0..30);
        out.extend((0..len).map(|_| *alphabet.choose(rng).unwrap()));
        if i + 1 < lines || rng.gen_bool(0.7) {
            out.push('\n');
        }
    }
    out
}

fn random_mock_case(seed: u64) -> MockCase {
    let mut rng = StdRng::seed_from_u64(seed);
    let rules = rng.gen_range(1..=6);
    let mut budget_ms: u64 = 2000;
    let mut script = String::new();
    let mut requests = Vec::new();
    for k in 0..rules {
        let delay = rng.gen_range(0..=budget_ms.min(800)) / 50 * 50;
        budget_ms -= delay;
        let response = random_response(&mut rng);
        let request = format!("REQ{seed}_{k}");
        script.push_str(&format!("{request}\t{:.2}\t{}\n", delay as f64 / 1000.0, escape(&response)));
        requests.push((request, response));
    }
    requests.shuffle(&mut rng);
    let mut evals = Vec::new();
    let mut rest = &requests[..];
    while !rest.is_empty() {
        let take = rng.gen_range(1..=rest.len().min(3));
        let (now, later) = rest.split_at(take);
        let code: String = now.iter().map(|(r, _)| format!("{r}\n")).collect();
        let expected: String = now.iter().map(|(_, resp)| resp.as_str()).collect();
        evals.push((code, expected));
        rest = later;
    }
    MockCase {
        script,
        evals,
        via_document: seed % 2 == 1,
    }
}

fn run_mock_case(seed: u64) -> Result<(), String> {
    let case = random_mock_case(seed);
    let sb = Sandbox::with_mock(&case.script);
    let token = "LITREPL-PROBE-";
    if case.via_document {
        let mut doc = String::new();
        let mut expected = String::new();
        for (i, (code, response)) in case.evals.iter().enumerate() {
            let section = format!("Section {i}\n\n```sh\n{code}```\n");
            doc.push_str(&section);
            doc.push_str("```result\n```\n");
            expected.push_str(&section);
            let mut body = response.clone();
            if !body.is_empty() && !body.ends_with('\n') {
                body.push('\n');
            }
            expected.push_str(&format!("```result\n{body}```\n"));
        }
        let out = sb.run(&[], &doc);
        if out.code != 0 || out.stdout != expected || out.stdout.contains(token) {
            return Err(format!("seed {seed}: document mismatch\n{out:?}\nexpected {expected:?}"));
        }
    } else {
        for (code, expected) in &case.evals {
            let out = sb.run(&["eval-code", "sh"], code);
            if out.code != 0 || &out.stdout != expected || out.stdout.contains(token) {
                return Err(format!("seed {seed}: {code:?} gave {out:?}, expected {expected:?}"));
            }
        }
    }
    Ok(())
}

#[test]
fn c5_echo_probe_soundness() {
    criterion(5, "echo-probe soundness vs mock interpreter", || {
        const SCRIPTS: usize = 200;
        let next = AtomicUsize::new(0);
        let failures = Mutex::new(Vec::new());
        std::thread::scope(|s| {
            for _ in 0..20 {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= SCRIPTS {
                        break;
                    }
                    if let Err(e) = run_mock_case(i as u64) {
                        failures.lock().unwrap().push(e);
                    }
                });
            }
        });
        let failures = failures.into_inner().unwrap();
        assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
    });
}

#[test]
fn c6_exit_code_policies() {
    criterion(6, "exit-code policies", || {
        let sb = Sandbox::new();
        sb.run_ok(&["restart", "python"], "");

        let raising = "\\begin{python}\n1/0\n\\end{python}\n\\begin{result}\n\\end{result}\n";
        let out = sb.run(&["--exception-exitcode=200"], raising);
        assert_eq!(out.code, 200, "{out:?}");
        assert!(latex_result(&out.stdout, 0).contains("ZeroDivisionError"));
        assert_eq!(sb.run(&[], raising).code, 0, "checks are off by default");

        let slow = "\\begin{python}\nimport time; time.sleep(30)\n\\end{python}\n\\begin{result}\n\\end{result}\n";
        let out = sb.run(&["--timeout=0.5,inf", "--pending-exitcode=100"], slow);
        assert_eq!(out.code, 100, "{out:?}");
        settle(&sb, "python");

        let probe = "\\begin{python}\nimport sys\nprint(getattr(sys, 'tag', 'untagged'))\n\\end{python}\n\\begin{result}\n\\end{result}\n";
        let first = sb.run_ok(&[], probe);
        assert_eq!(latex_result(&first, 0), "untagged\n");
        let out = sb.run(&["--irreproducible-exitcode=3"], &first);
        assert_eq!(out.code, 0, "{out:?}");
        assert_eq!(out.stdout, first);
        sb.run_ok(&["repl", "python"], "sys.tag = 'mutated'\n");
        let out = sb.run(&["--irreproducible-exitcode=3"], &first);
        assert_eq!(out.code, 3, "{out:?}");
        assert_eq!(latex_result(&out.stdout, 0), "mutated\n");

        // Exception, mismatch and pending in one document.
        let all = "\\begin{python}\n1/0\n\\end{python}\n\\begin{result}\n\\end{result}\n\
                   \\begin{python}\nprint(2)\n\\end{python}\n\\begin{result}\n1\n\\end{result}\n\
                   \\begin{python}\nimport time; time.sleep(30)\n\\end{python}\n\\begin{result}\n\\end{result}\n";
        let flags = |e: &str, p: &str| {
            vec![
                "--timeout=0.5,inf".to_string(),
                format!("--exception-exitcode={e}"),
                format!("--pending-exitcode={p}"),
                "--irreproducible-exitcode=3".to_string(),
            ]
        };
        for ((e, p), want) in [(("200", "100"), 200), (("0", "100"), 100), (("0", "0"), 3)] {
            let args = flags(e, p);
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = sb.run(&args, all);
            assert_eq!(out.code, want, "flags {args:?}: {out:?}");
            settle(&sb, "python");
        }
    });
}

/// Exited, or a zombie nobody reaped yet.
fn gone(pid: u32) -> bool {
    if unsafe { libc::kill(pid as i32, 0) } != 0 {
        return true;
    }
    let stat = fs::read_to_string(format!("/proc/{pid}/stat")).unwrap_or_default();
    let state = stat.rsplit_once(") ").and_then(|(_, rest)| rest.chars().next());
    matches!(state, None | Some('Z') | Some('X'))
}

#[test]
fn c7_session_lifecycle() {
    criterion(7, "session lifecycle", || {
        let t0 = Instant::now();
        let sb = Sandbox::new();
        let aux = sb.auxdir("python");
        let status = |sb: &Sandbox| sb.run_ok(&["status", "python"], "");
        assert!(status(&sb).starts_with("python stopped -"));

        sb.run_ok(&["start", "python"], "");
        let pid = sb.pid("python").unwrap();
        // Every command is a new process; the session outlives them.
        for _ in 0..2 {
            assert_eq!(status(&sb), format!("python running {pid} {}\n", aux.display()));
        }
        assert_eq!(sb.run(&["start", "python"], "").code, 1, "double start must fail");

        sb.run_ok(&["restart", "python"], "");
        let pid2 = sb.pid("python").unwrap();
        assert_ne!(pid, pid2);
        assert!(status(&sb).starts_with(&format!("python running {pid2} ")));
        assert!(gone(pid), "old interpreter must be gone");

        sb.run_ok(&["stop", "python"], "");
        assert!(status(&sb).starts_with("python stopped "));
        assert!(gone(pid2));

        // Stale pidfile: a process that has already exited.
        let mut child = Command::new("true").spawn().unwrap();
        let dead = child.id();
        child.wait().unwrap();
        let stale = sb.auxdir("sh");
        fs::create_dir_all(&stale).unwrap();
        fs::write(stale.join("pid.txt"), format!("{dead}\n")).unwrap();
        assert!(sb.run_ok(&["status", "sh"], "").starts_with("sh stopped "));
        sb.run_ok(&["start", "sh"], "");
        assert!(sb.run_ok(&["status", "sh"], "").starts_with("sh running "));

        assert!(t0.elapsed() < Duration::from_secs(10), "took {:?}", t0.elapsed());
    });
}

/// Translate a vim `magic` pattern into Rust regex syntax.
fn vim_to_rust(vim: &str) -> String {
    let mut out = String::new();
    let mut chars = vim.chars().peekable();
    let mut in_class = 0usize;
    while let Some(c) = chars.next() {
        if in_class > 0 {
            out.push(c);
            match c {
                '[' => in_class += 1,
                ']' => in_class -= 1,
                _ => {}
            }
            continue;
        }
        match c {
            '\\' => match chars.next().unwrap() {
                '(' => out.push('('),
                ')' => out.push(')'),
                '|' => out.push('|'),
                '{' => {
                    out.push('{');
                    for q in chars.by_ref() {
                        out.push(q);
                        if q == '}' {
                            break;
                        }
                    }
                }
                '~' => out.push('~'),
                other => {
                    out.push('\\');
                    out.push(other);
                }
            },
            '[' => {
                in_class = 1;
                out.push('[');
            }
            '{' | '}' | '(' | ')' | '|' | '+' | '?' => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

/// 1-based numbers of the lines holding section delimiters, per the parser.
fn parser_delimiters(text: &str, format: SourceFormat) -> BTreeSet<usize> {
    let doc = docparse::parse(text, &GrammarConfig::new(format)).unwrap();
    let line_of = |offset: usize| text[..offset].matches('\n').count() + 1;
    let mut lines = BTreeSet::new();
    for span in doc.spans.iter().filter(|s| s.kind != SpanKind::Text) {
        let tag_lines = |start: usize, tag: &str| (0..tag.matches('\n').count().max(1)).map(move |k| line_of(start) + k);
        lines.extend(tag_lines(span.offset, &span.begin_tag));
        let end_at = span.offset + span.begin_tag.len() + span.body.len();
        lines.extend(tag_lines(end_at, &span.end_tag));
    }
    lines
}

fn grep_matches(mode: &str, patterns: &[String], file: &Path) -> BTreeSet<usize> {
    let mut cmd = Command::new("grep");
    cmd.env("LC_ALL", "C.UTF-8").arg(mode).arg("-n");
    for p in patterns {
        cmd.arg("-e").arg(p);
    }
    let out = cmd.arg(file).output().unwrap();
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1), "grep failed: {out:?}");
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split(':').next().unwrap().parse().unwrap())
        .collect()
}

fn regex_matches(patterns: &[String], text: &str) -> BTreeSet<usize> {
    let res: Vec<Regex> = patterns.iter().map(|p| Regex::new(p).unwrap()).collect();
    text.split_inclusive('\n')
        .enumerate()
        .filter(|(_, l)| {
            let l = l.strip_suffix('\n').unwrap_or(l);
            res.iter().any(|r| r.is_match(l))
        })
        .map(|(i, _)| i + 1)
        .collect()
}

#[test]
fn c8_regexp_parser_agreement() {
    criterion(8, "regexp/parser agreement", || {
        let golden: BTreeMap<&str, (SourceFormat, Vec<usize>)> = BTreeMap::from([
            (
                "corpus.tex",
                (
                    SourceFormat::Latex,
                    vec![3, 5, 6, 8, 12, 14, 15, 16, 18, 20, 21, 23, 25, 27, 28, 30, 31, 33, 35, 37],
                ),
            ),
            (
                "corpus.md",
                (
                    SourceFormat::Markdown,
                    vec![3, 5, 7, 9, 10, 12, 13, 15, 18, 19, 21, 22, 24, 26, 28, 30],
                ),
            ),
        ]);
        let sb = Sandbox::new();
        for (name, (format, expected)) in golden {
            let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
            let text = fs::read_to_string(&path).unwrap();
            let expected: BTreeSet<usize> = expected.into_iter().collect();
            assert_eq!(parser_delimiters(&text, format), expected, "{name}: parser");

            let fmt = match format {
                SourceFormat::Latex => "latex",
                SourceFormat::Markdown => "markdown",
            };
            for flavor in Flavor::ALL {
                let printed = sb.run_ok(&["print-regexp", fmt, &flavor.to_string()], "");
                let patterns: Vec<String> = printed.lines().map(str::to_string).collect();
                assert_eq!(patterns, print_regexp(&GrammarConfig::new(format), flavor));
                let mut found = Vec::new();
                match flavor {
                    Flavor::Ere => {
                        found.push(("rust", regex_matches(&patterns, &text)));
                        found.push(("grep -E", grep_matches("-E", &patterns, &path)));
                    }
                    Flavor::Bre => found.push(("grep -G", grep_matches("-G", &patterns, &path))),
                    Flavor::Vim => {
                        let translated: Vec<String> = patterns.iter().map(|p| vim_to_rust(p)).collect();
                        found.push(("vim", regex_matches(&translated, &text)));
                    }
                }
                for (engine, lines) in found {
                    assert_eq!(lines, expected, "{name} {flavor} via {engine}");
                }
            }
        }
    });
}

/// Every file and directory under `root` with its size and modification time.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, (u64, Option<std::time::SystemTime>)> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            let Ok(meta) = fs::symlink_metadata(&path) else { continue };
            if meta.is_dir() {
                stack.push(path.clone());
            }
            let size = if meta.is_file() { meta.len() } else { 0 };
            out.insert(path, (size, meta.modified().ok()));
        }
    }
    out
}

fn changed(
    before: &BTreeMap<PathBuf, (u64, Option<std::time::SystemTime>)>,
    after: &BTreeMap<PathBuf, (u64, Option<std::time::SystemTime>)>,
) -> Vec<PathBuf> {
    let keys: BTreeSet<&PathBuf> = before.keys().chain(after.keys()).collect();
    keys.into_iter()
        .filter(|k| before.get(*k) != after.get(*k))
        .cloned()
        .collect()
}

#[test]
fn c9_single_hidden_state() {
    criterion(9, "single hidden state", || {
        let sb = Sandbox::new();
        let doc = "\\begin{python}\nx = 6 * 7\nprint(x)\n\\end{python}\n\\begin{result}\n\\end{result}\n\
                   \\begin{sh}\necho shell $((1 + 2))\n\\end{sh}\n\\begin{result}\n\\end{result}\n";
        let output_file = sb.workdir().join("out.tex");
        // No auxdir flags: state must land in the default place under TMPDIR.
        let run = || {
            let mut cmd = Command::new(LITPROC);
            cmd.current_dir(sb.workdir())
                .env("HOME", sb.path().join("home"))
                .env("TMPDIR", sb.path().join("tmp"))
                .env_remove("LITREPL_PYTHON_AUXDIR")
                .env_remove("LITREPL_SH_AUXDIR");
            let out = run_command(cmd, doc);
            assert_eq!(out.code, 0, "{out:?}");
            fs::write(&output_file, &out.stdout).unwrap();
            out.stdout
        };
        let stop = || {
            let mut cmd = Command::new(LITPROC);
            cmd.arg("stop").current_dir(sb.workdir()).env("TMPDIR", sb.path().join("tmp"));
            assert_eq!(run_command(cmd, "").code, 0);
        };
        let state_root = sb.path().join("tmp").join("litrepl");

        let system_tmp = std::env::temp_dir();
        let tmp_before: BTreeSet<_> = fs::read_dir(&system_tmp).unwrap().flatten().map(|e| e.file_name()).collect();
        let before = snapshot(sb.path());
        let first = run();
        let after = snapshot(sb.path());
        // Parents of new entries get a fresh mtime; that is not a change.
        let allowed = |p: &PathBuf| {
            p.starts_with(&state_root) || p == &output_file || state_root.starts_with(p) || output_file.starts_with(p)
        };
        let unexpected: Vec<_> = changed(&before, &after).into_iter().filter(|p| !allowed(p)).collect();
        assert!(unexpected.is_empty(), "changes outside the auxdir: {unexpected:?}");
        let tmp_after: BTreeSet<_> = fs::read_dir(&system_tmp).unwrap().flatten().map(|e| e.file_name()).collect();
        let leaked: Vec<_> = tmp_after
            .difference(&tmp_before)
            .filter(|n| !n.to_string_lossy().starts_with(".tmp"))
            .collect();
        assert!(leaked.is_empty(), "new entries in {}: {leaked:?}", system_tmp.display());
        assert_eq!(latex_result(&first, 0), "42\n");
        assert_eq!(latex_result(&first, 1), "shell 3\n");

        // Between runs nothing changes except the auxdir.
        let before = snapshot(sb.path());
        assert_eq!(run(), first);
        let after = snapshot(sb.path());
        let unexpected: Vec<_> = changed(&before, &after).into_iter().filter(|p| !allowed(p)).collect();
        assert!(unexpected.is_empty(), "changes outside the auxdir: {unexpected:?}");

        stop();
        fs::remove_dir_all(&state_root).unwrap();
        assert_eq!(run(), first);
        stop();
    });
}

#[test]
fn large_document_performance() {
    criterion(10, "5,000-line document under 10 s", || {
        let sb = Sandbox::new();
        let mut doc = String::new();
        let mut expected = String::new();
        for i in 0..50 {
            let mut text = String::new();
            for j in 0..96 {
                text.push_str(&format!("Paragraph {i} line {j} of filler text.\n"));
            }
            let code = format!("```sh\necho section {i}\n```\n");
            doc.push_str(&text);
            doc.push_str(&code);
            doc.push_str("```result\n```\n");
            expected.push_str(&text);
            expected.push_str(&code);
            expected.push_str(&format!("```result\nsection {i}\n```\n"));
        }
        assert!(doc.lines().count() >= 5000);
        let out = sb.run(&[], &doc);
        assert_eq!(out.code, 0, "{out:?}");
        assert_eq!(out.stdout, expected);
        assert!(out.elapsed < Duration::from_secs(10), "took {:?}", out.elapsed);
    });
}

//! Splitting documents into text, code, result and ignore spans.
//!
//! Both dialects are scanned line by line. A delimiter is a line holding
//! nothing but a tag, optionally padded with whitespace. Sections do not
//! nest: once a section is open, only its own end tag is recognized.

mod latex;
mod markdown;
mod regexp;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::class::ClassName;
use crate::error::{Error, Result};

pub use regexp::{print_regexp, Flavor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceFormat {
    Latex,
    Markdown,
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFormat::Latex => "latex",
            SourceFormat::Markdown => "markdown",
        })
    }
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latex" | "tex" => Ok(SourceFormat::Latex),
            "markdown" | "md" => Ok(SourceFormat::Markdown),
            _ => Err(Error::Config(format!("unknown document format `{s}`"))),
        }
    }
}

/// Guess the dialect: LaTeX iff a `\begin{` shows up before any fence line.
pub fn detect_filetype(text: &str) -> SourceFormat {
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") || trimmed.starts_with("~~~") {
            return SourceFormat::Markdown;
        }
        if line.contains("\\begin{") {
            return SourceFormat::Latex;
        }
        let tag = trim_space(line);
        if tag.starts_with("%lcode{") || tag == "%lresult" || tag == "%lignore" {
            return SourceFormat::Latex;
        }
    }
    SourceFormat::Markdown
}

/// Which section labels exist and which interpreter class each one selects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarConfig {
    code_markers: BTreeMap<String, ClassName>,
    result_marker: String,
    pub format: SourceFormat,
}

impl GrammarConfig {
    /// Grammar with every class's default markers.
    pub fn new(format: SourceFormat) -> Self {
        let code_markers = ClassName::ALL
            .into_iter()
            .flat_map(|c| c.default_markers().iter().map(move |m| (m.to_string(), c)))
            .collect();
        GrammarConfig {
            code_markers,
            result_marker: "result".to_string(),
            format,
        }
    }

    pub fn with_markers<I, S>(format: SourceFormat, markers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, ClassName)>,
        S: Into<String>,
    {
        let mut code_markers = BTreeMap::new();
        for (marker, class) in markers {
            let marker = marker.into();
            check_marker(&marker)?;
            if marker == "result" {
                return Err(Error::Config("`result` cannot be a code marker".into()));
            }
            if code_markers.insert(marker.clone(), class).is_some() {
                return Err(Error::Config(format!("marker `{marker}` given twice")));
            }
        }
        if code_markers.is_empty() {
            return Err(Error::Config("no code markers configured".into()));
        }
        Ok(GrammarConfig {
            code_markers,
            result_marker: "result".to_string(),
            format,
        })
    }

    pub fn class_of(&self, marker: &str) -> Option<ClassName> {
        self.code_markers.get(marker).copied()
    }

    pub fn markers(&self) -> impl Iterator<Item = (&str, ClassName)> {
        self.code_markers.iter().map(|(m, c)| (m.as_str(), *c))
    }

    pub fn result_marker(&self) -> &str {
        &self.result_marker
    }
}

fn check_marker(marker: &str) -> Result<()> {
    let ok = !marker.is_empty()
        && marker
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "invalid marker `{marker}`: use letters, digits, `_` or `-`"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    Text,
    Code,
    Result,
    Ignore,
}

/// A contiguous slice of the document.
///
/// `begin_tag + body + end_tag` is the source text of the span. Text spans
/// keep everything in `body` and have empty tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub kind: SpanKind,
    /// Section label of a code span, e.g. `python`.
    pub label: Option<String>,
    pub class: Option<ClassName>,
    pub body: String,
    pub begin_tag: String,
    pub end_tag: String,
    pub offset: usize,
    pub commented: bool,
}

impl Span {
    fn text(body: String, offset: usize) -> Self {
        Span {
            kind: SpanKind::Text,
            label: None,
            class: None,
            body,
            begin_tag: String::new(),
            end_tag: String::new(),
            offset,
            commented: false,
        }
    }

    pub fn len(&self) -> usize {
        self.begin_tag.len() + self.body.len() + self.end_tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn render_into(&self, out: &mut String) {
        out.push_str(&self.begin_tag);
        out.push_str(&self.body);
        out.push_str(&self.end_tag);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub spans: Vec<Span>,
    pub source_format: SourceFormat,
}

/// A code span and the result span receiving its output, as span indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionPair {
    pub code: usize,
    pub result: Option<usize>,
}

impl Document {
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.spans.iter().map(Span::len).sum());
        for span in &self.spans {
            span.render_into(&mut out);
        }
        out
    }

    /// Pair every code span with the first following result span, provided
    /// no other code span comes in between.
    pub fn pair_sections(&self) -> Vec<SectionPair> {
        let mut pairs: Vec<SectionPair> = Vec::new();
        for (i, span) in self.spans.iter().enumerate() {
            match span.kind {
                SpanKind::Code => pairs.push(SectionPair {
                    code: i,
                    result: None,
                }),
                SpanKind::Result => {
                    if let Some(last) = pairs.last_mut() {
                        if last.result.is_none() {
                            last.result = Some(i);
                        }
                    }
                }
                SpanKind::Text | SpanKind::Ignore => {}
            }
        }
        pairs
    }

    pub fn code_spans(&self) -> impl Iterator<Item = &Span> {
        self.spans.iter().filter(|s| s.kind == SpanKind::Code)
    }
}

/// Parse `text` with the dialect selected by `cfg.format`.
pub fn parse(text: &str, cfg: &GrammarConfig) -> Result<Document> {
    let spans = match cfg.format {
        SourceFormat::Latex => latex::scan(text, cfg)?,
        SourceFormat::Markdown => markdown::scan(text, cfg)?,
    };
    Ok(Document {
        spans,
        source_format: cfg.format,
    })
}

/// Whitespace as understood by the POSIX `[[:space:]]` class.
pub(crate) fn is_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\x0b' | '\x0c' | '\r')
}

pub(crate) fn trim_space(s: &str) -> &str {
    s.trim_matches(is_space)
}

/// Lines of `text` with their terminators and byte offsets.
pub(crate) fn lines_with_offsets(text: &str) -> Vec<(usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n')
        .map(|line| {
            let start = offset;
            offset += line.len();
            (start, line)
        })
        .collect()
}

/// Accumulates spans, merging adjacent text lines into one text span.
pub(crate) struct SpanBuilder {
    spans: Vec<Span>,
    text_start: Option<usize>,
    text: String,
}

impl SpanBuilder {
    pub(crate) fn new() -> Self {
        SpanBuilder {
            spans: Vec::new(),
            text_start: None,
            text: String::new(),
        }
    }

    pub(crate) fn push_text(&mut self, offset: usize, line: &str) {
        self.text_start.get_or_insert(offset);
        self.text.push_str(line);
    }

    fn flush_text(&mut self) {
        if let Some(start) = self.text_start.take() {
            self.spans
                .push(Span::text(std::mem::take(&mut self.text), start));
        }
    }

    pub(crate) fn push_section(&mut self, span: Span) {
        self.flush_text();
        self.spans.push(span);
    }

    pub(crate) fn finish(mut self) -> Vec<Span> {
        self.flush_text();
        self.spans
    }
}

pub(crate) fn unbalanced(line_index: usize, line: &str) -> Error {
    let column = line.chars().take_while(|c| is_space(*c)).count() + 1;
    Error::UnbalancedSection {
        line: line_index + 1,
        column,
        tag: trim_space(line).to_string(),
    }
}

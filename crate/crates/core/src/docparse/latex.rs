use super::{lines_with_offsets, trim_space, unbalanced, GrammarConfig, Span, SpanBuilder, SpanKind};
use crate::error::Result;

/// What a LaTeX line opens, if anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Open {
    Code { marker: String, commented: bool },
    Result { commented: bool },
    Ignore,
}

pub(crate) fn classify_open(line: &str, cfg: &GrammarConfig) -> Option<Open> {
    let tag = trim_space(line);
    if let Some(name) = braced(tag, "\\begin") {
        if name == cfg.result_marker() {
            return Some(Open::Result { commented: false });
        }
        if cfg.class_of(name).is_some() {
            return Some(Open::Code {
                marker: name.to_string(),
                commented: false,
            });
        }
        return None;
    }
    if let Some(name) = braced(tag, "%lcode") {
        return cfg.class_of(name).map(|_| Open::Code {
            marker: name.to_string(),
            commented: true,
        });
    }
    match tag {
        "%lresult" => Some(Open::Result { commented: true }),
        "%lignore" => Some(Open::Ignore),
        _ => None,
    }
}

pub(crate) fn closes(open: &Open, line: &str, cfg: &GrammarConfig) -> bool {
    let tag = trim_space(line);
    match open {
        Open::Code {
            commented: false,
            marker,
        } => braced(tag, "\\end") == Some(marker.as_str()),
        Open::Result { commented: false } => braced(tag, "\\end") == Some(cfg.result_marker()),
        Open::Code { commented: true, .. } => tag == "%lnocode",
        Open::Result { commented: true } => tag == "%lnoresult",
        Open::Ignore => tag == "%lnoignore",
    }
}

/// `\begin{name}` → `name` for `command = "\begin"`.
fn braced<'a>(tag: &'a str, command: &str) -> Option<&'a str> {
    tag.strip_prefix(command)?
        .strip_prefix('{')?
        .strip_suffix('}')
        .filter(|name| !name.contains(['{', '}']))
}

pub(crate) fn scan(text: &str, cfg: &GrammarConfig) -> Result<Vec<Span>> {
    let lines = lines_with_offsets(text);
    let mut out = SpanBuilder::new();
    let mut i = 0;
    while i < lines.len() {
        let (offset, line) = lines[i];
        let Some(open) = classify_open(line, cfg) else {
            out.push_text(offset, line);
            i += 1;
            continue;
        };
        let end = (i + 1..lines.len())
            .find(|&j| closes(&open, lines[j].1, cfg))
            .ok_or_else(|| unbalanced(i, line))?;
        let body: String = lines[i + 1..end].iter().map(|(_, l)| *l).collect();
        let (kind, label, commented) = match open {
            Open::Code { marker, commented } => (SpanKind::Code, Some(marker), commented),
            Open::Result { commented } => (SpanKind::Result, None, commented),
            Open::Ignore => (SpanKind::Ignore, None, true),
        };
        out.push_section(Span {
            kind,
            class: label.as_deref().and_then(|m| cfg.class_of(m)),
            label,
            body,
            begin_tag: line.to_string(),
            end_tag: lines[end].1.to_string(),
            offset,
            commented,
        });
        i = end + 1;
    }
    Ok(out.finish())
}

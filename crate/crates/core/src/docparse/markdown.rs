use super::{lines_with_offsets, trim_space, unbalanced, GrammarConfig, Span, SpanBuilder, SpanKind};
use crate::error::Result;

pub(crate) const IGNORE_BEGIN: &str = "<!--litrepl:ignore-->";
pub(crate) const IGNORE_END: &str = "<!--litrepl:noignore-->";
pub(crate) const COMMENT_BEGIN: &str = "<!--";
pub(crate) const COMMENT_END: &str = "-->";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fence {
    ch: char,
    len: usize,
}

/// An opening fence and its info string.
pub(crate) fn fence_open(line: &str) -> Option<(Fence, &str)> {
    let tag = trim_space(line);
    let ch = tag.chars().next().filter(|c| *c == '`' || *c == '~')?;
    let len = tag.chars().take_while(|c| *c == ch).count();
    if len < 3 {
        return None;
    }
    let info = trim_space(&tag[len..]);
    if ch == '`' && info.contains('`') {
        return None;
    }
    Some((Fence { ch, len }, info))
}

pub(crate) fn fence_closes(fence: Fence, line: &str) -> bool {
    let tag = trim_space(line);
    let len = tag.chars().take_while(|c| *c == fence.ch).count();
    len >= fence.len && trim_space(&tag[len * fence.ch.len_utf8()..]).is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Section {
    Code(String),
    Result,
}

fn section_of(info: &str, cfg: &GrammarConfig) -> Option<Section> {
    if info == cfg.result_marker() {
        Some(Section::Result)
    } else if cfg.class_of(info).is_some() {
        Some(Section::Code(info.to_string()))
    } else {
        None
    }
}

pub(crate) fn scan(text: &str, cfg: &GrammarConfig) -> Result<Vec<Span>> {
    let lines = lines_with_offsets(text);
    let find_close = |fence: Fence, from: usize| (from..lines.len()).find(|&j| fence_closes(fence, lines[j].1));
    let mut out = SpanBuilder::new();
    let mut i = 0;
    while i < lines.len() {
        let (offset, line) = lines[i];
        let tag = trim_space(line);

        if tag == IGNORE_BEGIN {
            let end = (i + 1..lines.len())
                .find(|&j| trim_space(lines[j].1) == IGNORE_END)
                .ok_or_else(|| unbalanced(i, line))?;
            out.push_section(Span {
                kind: SpanKind::Ignore,
                label: None,
                class: None,
                body: lines[i + 1..end].iter().map(|(_, l)| *l).collect(),
                begin_tag: line.to_string(),
                end_tag: lines[end].1.to_string(),
                offset,
                commented: true,
            });
            i = end + 1;
            continue;
        }

        // `<!--` directly wrapping a section fence pair hides the section.
        if tag == COMMENT_BEGIN && i + 1 < lines.len() {
            if let Some((fence, info)) = fence_open(lines[i + 1].1) {
                if let Some(section) = section_of(info, cfg) {
                    if let Some(close) = find_close(fence, i + 2) {
                        if close + 1 < lines.len() && trim_space(lines[close + 1].1) == COMMENT_END {
                            out.push_section(section_span(
                                section,
                                cfg,
                                [line, lines[i + 1].1].concat(),
                                lines[i + 2..close].iter().map(|(_, l)| *l).collect(),
                                [lines[close].1, lines[close + 1].1].concat(),
                                offset,
                                true,
                            ));
                            i = close + 2;
                            continue;
                        }
                    }
                }
            }
        }

        if let Some((fence, info)) = fence_open(line) {
            let close = find_close(fence, i + 1);
            match section_of(info, cfg) {
                Some(section) => {
                    let close = close.ok_or_else(|| unbalanced(i, line))?;
                    out.push_section(section_span(
                        section,
                        cfg,
                        line.to_string(),
                        lines[i + 1..close].iter().map(|(_, l)| *l).collect(),
                        lines[close].1.to_string(),
                        offset,
                        false,
                    ));
                    i = close + 1;
                }
                None => {
                    // Foreign fences are opaque text; an unclosed one runs to
                    // the end of the document.
                    let last = close.unwrap_or(lines.len() - 1);
                    for &(o, l) in &lines[i..=last] {
                        out.push_text(o, l);
                    }
                    i = last + 1;
                }
            }
            continue;
        }

        out.push_text(offset, line);
        i += 1;
    }
    Ok(out.finish())
}

fn section_span(
    section: Section,
    cfg: &GrammarConfig,
    begin_tag: String,
    body: String,
    end_tag: String,
    offset: usize,
    commented: bool,
) -> Span {
    let (kind, label) = match section {
        Section::Code(marker) => (SpanKind::Code, Some(marker)),
        Section::Result => (SpanKind::Result, None),
    };
    Span {
        kind,
        class: label.as_deref().and_then(|m| cfg.class_of(m)),
        label,
        body,
        begin_tag,
        end_tag,
        offset,
        commented,
    }
}

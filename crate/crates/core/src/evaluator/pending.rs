use std::path::PathBuf;

use super::EvalOutcome;

/// Continuation tag left in a result body while an evaluation is running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingTag {
    pub path: PathBuf,
}

impl PendingTag {
    pub fn line(&self) -> String {
        format!("[LR:{}]", self.path.to_string_lossy())
    }
}

/// Body text for a result section.
pub fn format_result(outcome: &EvalOutcome) -> String {
    match outcome {
        EvalOutcome::Complete { text } => text.clone(),
        EvalOutcome::Partial { text, path } => {
            let mut body = text.clone();
            if !body.is_empty() && !body.ends_with('\n') {
                body.push('\n');
            }
            body.push_str(&PendingTag { path: path.clone() }.line());
            body.push('\n');
            body
        }
    }
}

/// The tag on the last non-empty line of `body`, if any.
pub fn parse_pending(body: &str) -> Option<PendingTag> {
    let last = body.lines().rev().find(|l| !l.trim().is_empty())?;
    let inner = last.trim().strip_prefix("[LR:")?.strip_suffix(']')?;
    if inner.is_empty() {
        return None;
    }
    Some(PendingTag {
        path: PathBuf::from(inner),
    })
}

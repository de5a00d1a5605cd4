use std::sync::OnceLock;

use regex::Regex;

use crate::class::ClassName;

/// Heuristic: does `response` look like it ends in an uncaught exception?
///
/// Only Python responses are inspected. A traceback header anywhere, or an
/// `SomethingError:`/`SomethingException:` line among the last few, counts.
pub fn detect_exception(response: &str, class: ClassName) -> bool {
    if class != ClassName::Python {
        return false;
    }
    static FINAL_LINE: OnceLock<Regex> = OnceLock::new();
    let final_line = FINAL_LINE.get_or_init(|| {
        Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*\.)*[A-Za-z_][A-Za-z0-9_]*(Error|Exception)(:.*)?$").unwrap()
    });
    if response
        .lines()
        .any(|l| l.starts_with("Traceback (most recent call last):"))
    {
        return true;
    }
    response
        .lines()
        .rev()
        .filter(|l| !l.trim().is_empty())
        .take(3)
        .any(|l| final_line.is_match(l.trim_end()))
}

//! Anchor regexps matching the delimiter lines the scanners recognize, for
//! editor integrations that locate sections themselves.

use std::fmt;
use std::str::FromStr;

use super::markdown::{COMMENT_BEGIN, COMMENT_END, IGNORE_BEGIN, IGNORE_END};
use super::{GrammarConfig, SourceFormat};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// POSIX extended (`grep -E`).
    Ere,
    /// POSIX basic with the GNU `\|` extension (`grep`).
    Bre,
    /// Vim `magic` patterns.
    Vim,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Ere, Flavor::Bre, Flavor::Vim];
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Ere => "ere",
            Flavor::Bre => "bre",
            Flavor::Vim => "vim",
        })
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ere" => Ok(Flavor::Ere),
            "bre" => Ok(Flavor::Bre),
            "vim" => Ok(Flavor::Vim),
            _ => Err(Error::Config(format!("unknown regexp flavor `{s}`"))),
        }
    }
}

enum Piece {
    Lit(String),
    Space,
    Alt(Vec<String>),
    Fence,
}

use Piece::*;

fn lit(s: &str) -> Piece {
    Lit(s.to_string())
}

fn escape(s: &str, flavor: Flavor) -> String {
    let special: &[char] = match flavor {
        Flavor::Ere => &['\\', '.', '[', ']', '(', ')', '*', '+', '?', '{', '}', '|', '^', '$'],
        Flavor::Bre => &['\\', '.', '[', ']', '*', '^', '$'],
        Flavor::Vim => &['\\', '.', '[', ']', '*', '~', '^', '$'],
    };
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if special.contains(&c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn render(pieces: &[Piece], flavor: Flavor) -> String {
    let (open, bar, close) = match flavor {
        Flavor::Ere => ("(", "|", ")"),
        Flavor::Bre | Flavor::Vim => ("\\(", "\\|", "\\)"),
    };
    let mut out = String::from("^");
    for piece in pieces {
        match piece {
            Lit(s) => out.push_str(&escape(s, flavor)),
            Space => out.push_str("[[:space:]]*"),
            Alt(options) => {
                let options: Vec<String> = options.iter().map(|o| escape(o, flavor)).collect();
                out.push_str(open);
                out.push_str(&options.join(bar));
                out.push_str(close);
            }
            Fence => {
                let at_least_3 = match flavor {
                    Flavor::Ere => "{3,}",
                    Flavor::Bre => "\\{3,\\}",
                    Flavor::Vim => "\\{3,}",
                };
                let tilde = escape("~", flavor);
                out.push_str(&format!("{open}`{at_least_3}{bar}{tilde}{at_least_3}{close}"));
            }
        }
    }
    out.push('$');
    out
}

/// One regexp per delimiter kind of `cfg.format`, in `flavor` syntax.
///
/// Patterns are meant to be matched against single lines without their
/// terminator.
pub fn print_regexp(cfg: &GrammarConfig, flavor: Flavor) -> Vec<String> {
    let markers: Vec<String> = cfg.markers().map(|(m, _)| m.to_string()).collect();
    let result = cfg.result_marker();
    let patterns: Vec<Vec<Piece>> = match cfg.format {
        SourceFormat::Latex => vec![
            vec![Space, lit("\\begin{"), Alt(markers.clone()), lit("}"), Space],
            vec![Space, lit("\\end{"), Alt(markers.clone()), lit("}"), Space],
            vec![Space, Lit(format!("\\begin{{{result}}}")), Space],
            vec![Space, Lit(format!("\\end{{{result}}}")), Space],
            vec![Space, lit("%lcode{"), Alt(markers), lit("}"), Space],
            vec![Space, lit("%lnocode"), Space],
            vec![Space, lit("%lresult"), Space],
            vec![Space, lit("%lnoresult"), Space],
            vec![Space, lit("%lignore"), Space],
            vec![Space, lit("%lnoignore"), Space],
        ],
        SourceFormat::Markdown => vec![
            vec![Space, Fence, Space, Alt(markers), Space],
            vec![Space, Fence, Space, Lit(result.to_string()), Space],
            vec![Space, Fence, Space],
            vec![Space, lit(COMMENT_BEGIN), Space],
            vec![Space, lit(COMMENT_END), Space],
            vec![Space, lit(IGNORE_BEGIN), Space],
            vec![Space, lit(IGNORE_END), Space],
        ],
    };
    patterns.iter().map(|p| render(p, flavor)).collect()
}

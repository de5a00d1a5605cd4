//! Core of `litproc`: a literate-document processor.
//!
//! Documents (LaTeX or Markdown) are split into text, code, result and ignore
//! spans by [`docparse`]. Code is sent to long-lived interpreter processes
//! managed by [`session`], which talk over two named pipes inside a per-class
//! auxiliary directory. [`evaluator`] drives the echo-probe protocol, keeps
//! response files keyed by a hash of the code and writes the responses back
//! into the result spans.

pub mod class;
pub mod docparse;
pub mod error;
pub mod evaluator;
pub mod hash;
pub mod mockinterp;
pub mod pipe;
pub mod probe;
pub mod session;

pub use class::{ClassName, InterpreterClassConfig};
pub use docparse::{Document, GrammarConfig, Span, SpanKind, SourceFormat};
pub use error::{Error, Result};
pub use evaluator::{EvalOutcome, EvalRequest, ExitPolicy, PendingTag, Timeouts};
pub use session::SessionHandle;

//! The SLEEC rule language: tokens, syntax tree, parser, name and type
//! checks, and the canonical formatter.

pub mod ast;
pub mod diagnostic;
pub mod format;
pub mod lexer;
pub mod names;
pub mod parser;
pub mod types;

pub use ast::*;
pub use diagnostic::{has_errors, Category, Diagnostic, Severity, Span};
pub use format::format;
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use names::analyze_names;
pub use parser::{parse, parse_partial, parse_rules};
pub use types::typecheck;

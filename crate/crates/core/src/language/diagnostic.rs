use std::fmt;

use serde::{Deserialize, Serialize};

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Self {
            start,
            end,
            line,
            col,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Syntax,
    Naming,
    Type,
    /// Checker configuration problems (deadline scaling, horizon too short).
    Config,
}

/// A problem found in a SLEEC document.
///
/// Serializes to `{severity, category, line, col, message, suggestion?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "DiagnosticRepr", into = "DiagnosticRepr")]
pub struct Diagnostic {
    pub severity: Severity,
    pub category: Category,
    pub span: Span,
    pub message: String,
    pub suggestion: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct DiagnosticRepr {
    severity: Severity,
    category: Category,
    line: u32,
    col: u32,
    message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    suggestion: Option<String>,
}

impl From<Diagnostic> for DiagnosticRepr {
    fn from(d: Diagnostic) -> Self {
        Self {
            severity: d.severity,
            category: d.category,
            line: d.span.line,
            col: d.span.col,
            message: d.message,
            suggestion: d.suggestion,
        }
    }
}

impl From<DiagnosticRepr> for Diagnostic {
    fn from(r: DiagnosticRepr) -> Self {
        Self {
            severity: r.severity,
            category: r.category,
            span: Span::new(0, 0, r.line, r.col),
            message: r.message,
            suggestion: r.suggestion,
        }
    }
}

impl Diagnostic {
    pub fn error(category: Category, span: Span, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            category,
            span,
            message: message.into(),
            suggestion: None,
        }
    }

    pub fn warning(category: Category, span: Span, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            category,
            span,
            message: message.into(),
            suggestion: None,
        }
    }

    pub fn with_suggestion(mut self, suggestion: impl Into<String>) -> Self {
        self.suggestion = Some(suggestion.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let cat = match self.category {
            Category::Syntax => "syntax",
            Category::Naming => "naming",
            Category::Type => "type",
            Category::Config => "config",
        };
        write!(
            f,
            "{}:{}: {sev}[{cat}]: {}",
            self.span.line, self.span.col, self.message
        )?;
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

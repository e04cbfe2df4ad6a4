//! Source spans and diagnostics shared by every pass.

use std::fmt;

use serde::Serialize;

/// A byte range in the source text together with the 1-based line and
/// column of its first byte.
///
/// Spans never participate in AST equality: two nodes that differ only in
/// where they came from compare equal. This is what makes
/// `parse(pretty(ast)) == ast` a meaningful roundtrip property.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span {
            start,
            end,
            line,
            col,
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.end <= self.start {
            return Span { ..other };
        }
        Span {
            start: self.start,
            end: other.end.max(self.end),
            line: self.line,
            col: self.col,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable short error codes. The string forms are part of the CLI contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Code {
    Lex,
    Parse,
    Consumed,
    Banks,
    WriteCap,
    Divides,
    Index,
    View,
    Type,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Lex => "E-LEX",
            Code::Parse => "E-PARSE",
            Code::Consumed => "E-CONSUMED",
            Code::Banks => "E-BANKS",
            Code::WriteCap => "E-WRITECAP",
            Code::Divides => "E-DIVIDES",
            Code::Index => "E-INDEX",
            Code::View => "E-VIEW",
            Code::Type => "E-TYPE",
        }
    }

    pub fn is_syntax(self) -> bool {
        matches!(self, Code::Lex | Code::Parse)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    /// Renders as `file:line:col: error[CODE]: message`.
    pub fn render(&self, file: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.span.line, self.span.col, sev, self.code, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: [{}] {}",
            self.span.line, self.span.col, self.code, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

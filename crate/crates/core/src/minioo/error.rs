use std::fmt;

use thiserror::Error;

use super::ast::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: syntax error: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError { pos, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: duplicate declaration of {what} `{name}`")]
    Duplicate { pos: Pos, what: &'static str, name: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax(e) => e.pos,
            ParseError::Duplicate { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagKind {
    UnresolvedName,
    TypeMismatch,
    Visibility,
    Arity,
    Reserved,
    Duplicate,
    Inheritance,
    Entry,
    Invalid,
}

impl DiagKind {
    pub fn label(self) -> &'static str {
        match self {
            DiagKind::UnresolvedName => "unresolved name",
            DiagKind::TypeMismatch => "type mismatch",
            DiagKind::Visibility => "visibility violation",
            DiagKind::Arity => "arity mismatch",
            DiagKind::Reserved => "reserved identifier",
            DiagKind::Duplicate => "duplicate declaration",
            DiagKind::Inheritance => "inheritance error",
            DiagKind::Entry => "invalid entry point",
            DiagKind::Invalid => "invalid construct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.pos, self.kind.label(), self.message)
    }
}

/// All diagnostics from one checker run, in discovery order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct CheckError {
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckError {
    pub fn has(&self, kind: DiagKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Either front-end stage failing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

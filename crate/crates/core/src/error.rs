use std::fmt;

use thiserror::Error;

use crate::sexp::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Malformed S-expression or command shape.
    Syntax,
    UnknownCommand,
    Sort,
    Arity,
    /// Multiplication of two non-constant terms, or a non-literal divisor.
    Nonlinear,
    Missing,
    Recursive,
    Unsupported,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownCommand => "unknown command",
            ParseErrorKind::Sort => "sort error",
            ParseErrorKind::Arity => "arity error",
            ParseErrorKind::Nonlinear => "nonlinear term",
            ParseErrorKind::Missing => "missing definition",
            ParseErrorKind::Recursive => "recursive definition",
            ParseErrorKind::Unsupported => "unsupported",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        Self::with_kind(pos, ParseErrorKind::Syntax, msg)
    }

    pub fn with_kind(pos: Pos, kind: ParseErrorKind, msg: impl Into<String>) -> Self {
        ParseError {
            pos,
            kind,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("ill-sorted term: {0}")]
    IllSorted(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("failed to start solver `{path}`: {source}")]
    Spawn {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver reported error: {0}")]
    Solver(String),
    #[error("solver returned unknown: {0}")]
    Unknown(String),
    #[error("solver did not answer within {0} ms")]
    Timeout(u64),
    #[error("solver session is unusable after an earlier failure")]
    Poisoned,
    #[error("cannot pop: no open scope")]
    ScopeUnderflow,
}

impl SolverError {
    /// Failures that mean "the solver could not decide", as opposed to a broken session.
    pub fn is_unknown(&self) -> bool {
        matches!(self, SolverError::Unknown(_) | SolverError::Timeout(_))
    }
}

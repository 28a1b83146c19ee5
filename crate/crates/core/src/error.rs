use std::fmt;

use thiserror::Error;

use crate::ir::Label;

/// A violated structural invariant of a [`ProgramCfg`](crate::ir::ProgramCfg).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    LabelMismatch(Label),
    MissingEntry(Label),
    MissingExit(Label),
    EntryIsExit,
    EntryNotNop,
    ExitNotNop,
    ExitHasSuccessors,
    EntryHasPredecessor(Label),
    UnknownSuccessor(Label),
    BranchArity(Label),
    SuccessorArity(Label),
}

impl Diagnostic {
    pub fn code(&self) -> &'static str {
        match self {
            Diagnostic::LabelMismatch(_) => "label-mismatch",
            Diagnostic::MissingEntry(_) => "missing-entry",
            Diagnostic::MissingExit(_) => "missing-exit",
            Diagnostic::EntryIsExit => "entry-is-exit",
            Diagnostic::EntryNotNop => "entry-not-nop",
            Diagnostic::ExitNotNop => "exit-not-nop",
            Diagnostic::ExitHasSuccessors => "exit-has-successors",
            Diagnostic::EntryHasPredecessor(_) => "entry-has-predecessor",
            Diagnostic::UnknownSuccessor(_) => "unknown-successor",
            Diagnostic::BranchArity(_) => "branch-arity",
            Diagnostic::SuccessorArity(_) => "successor-arity",
        }
    }

    fn subject(&self) -> Option<&Label> {
        match self {
            Diagnostic::LabelMismatch(l)
            | Diagnostic::MissingEntry(l)
            | Diagnostic::MissingExit(l)
            | Diagnostic::EntryHasPredecessor(l)
            | Diagnostic::UnknownSuccessor(l)
            | Diagnostic::BranchArity(l)
            | Diagnostic::SuccessorArity(l) => Some(l),
            Diagnostic::EntryIsExit
            | Diagnostic::EntryNotNop
            | Diagnostic::ExitNotNop
            | Diagnostic::ExitHasSuccessors => None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subject() {
            Some(l) => write!(f, "{} {}", self.code(), l),
            None => f.write_str(self.code()),
        }
    }
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { label: Label, line: usize },
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid program: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("cyclic-cfg")]
    CyclicCfg,
    #[error("unknown block `{0}`")]
    UnknownBlock(Label),
    #[error("block `{0}` is unreachable from entry")]
    Unreachable(Label),
}

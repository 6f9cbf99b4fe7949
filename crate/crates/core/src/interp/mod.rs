//! Reference interpreter. Runs original and transformed programs in one
//! address space; the ordered print trace is the observable behaviour.

pub mod builtins;
pub mod hooks;
pub mod machine;
pub mod value;

use std::sync::Arc;

use thiserror::Error;

use crate::minioo::ast::Pos;
use crate::minioo::typed::CheckedProgram;

pub use builtins::BuiltinTable;
pub use hooks::{LocalHooks, RuntimeHooks};
pub use machine::{Limits, Machine, DEFAULT_STEP_BUDGET};
pub use value::{ObjId, RemoteRef, Value};

pub type Trace = Vec<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    NullDeref,
    StepBudget,
    StackOverflow,
    FinalWrite,
    DivByZero,
    UnknownBuiltin,
    Builtin,
    /// The network failed; distinct from errors raised by remote code.
    Transport,
    Remote,
    Internal,
}

impl ErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::NullDeref => "null dereference",
            ErrorKind::StepBudget => "step budget exceeded",
            ErrorKind::StackOverflow => "stack overflow",
            ErrorKind::FinalWrite => "final field write",
            ErrorKind::DivByZero => "division by zero",
            ErrorKind::UnknownBuiltin => "unknown builtin",
            ErrorKind::Builtin => "builtin failure",
            ErrorKind::Transport => "transport failure",
            ErrorKind::Remote => "remote error",
            ErrorKind::Internal => "internal error",
        }
    }

    pub fn from_label(label: &str) -> Option<ErrorKind> {
        use ErrorKind::*;
        [NullDeref, StepBudget, StackOverflow, FinalWrite, DivByZero, UnknownBuiltin, Builtin, Transport, Remote, Internal]
            .into_iter()
            .find(|k| k.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: runtime error: {message}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        RuntimeError { kind, pos, message: message.into() }
    }
}

/// A failed run keeps the lines printed before the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: RuntimeError,
    pub trace: Trace,
}

/// Deep recursion in MiniOO recurses in the evaluator too.
pub const INTERP_STACK: usize = 256 << 20;

/// Runs the entry method on a dedicated thread with a large stack.
pub fn run_program(
    p: Arc<CheckedProgram>,
    hooks: &mut (dyn RuntimeHooks + Send),
    builtins: Arc<BuiltinTable>,
    limits: Limits,
) -> Result<Trace, RunFailure> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("moo-interp".into())
            .stack_size(INTERP_STACK)
            .spawn_scoped(s, move || {
                let mut m = Machine::new(p, builtins, limits).map_err(|error| RunFailure { error, trace: Vec::new() })?;
                match m.run_entry(hooks) {
                    Ok(()) => Ok(std::mem::take(&mut m.trace)),
                    Err(error) => Err(RunFailure { error, trace: std::mem::take(&mut m.trace) }),
                }
            })
            .expect("spawn interpreter thread")
            .join()
            .expect("interpreter thread panicked")
    })
}

/// Local run with the standard builtins and default limits.
pub fn run_local(p: &CheckedProgram) -> Result<Trace, RunFailure> {
    run_program(Arc::new(p.clone()), &mut LocalHooks, Arc::new(BuiltinTable::standard()), Limits::default())
}

pub fn trace_equal(a: &[String], b: &[String]) -> bool {
    a == b
}

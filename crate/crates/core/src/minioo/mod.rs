//! The MiniOO language: syntax, checking and canonical printing.

pub mod ast;
pub mod check;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typed;

pub use ast::{Program, ProgramKind};
pub use check::check_program;
pub use error::{CheckError, DiagKind, Diagnostic, FrontError, ParseError};
pub use parser::parse_program;
pub use pretty::pretty_print;
pub use typed::CheckedProgram;

/// Parses and checks in one step.
pub fn compile(source: &str) -> Result<CheckedProgram, FrontError> {
    let program = parse_program(source)?;
    Ok(check_program(&program)?)
}

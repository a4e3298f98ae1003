//! IMPX: a small imperative language with int scalars and int arrays,
//! `if`/`while` control flow, pre/post increment and decrement, and
//! call-by-value scalars / call-by-reference arrays.

mod ast;
mod check;
mod lexer;
mod parser;
mod print;

pub use ast::{
    expr_accesses, expr_reads, expr_writes, stmt_accesses, BinaryOp, Expr, Function, IncDecOp,
    Param, Program, Stmt, StmtKind, Type, UnaryOp, VarAccess,
};
pub use print::pretty_print;

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LangError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("error at line {line}: {msg}")]
    Static { line: u32, msg: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

/// Parses and statically checks IMPX source text.
pub fn parse(source: &str, source_path: &str) -> Result<Program, LangError> {
    let program = parser::parse(source, source_path)?;
    check::check_program(&program)?;
    Ok(program)
}

/// Parses without static checks; used by tooling that wants to inspect
/// ill-typed programs.
pub fn parse_unchecked(source: &str, source_path: &str) -> Result<Program, LangError> {
    parser::parse(source, source_path)
}

/// Exactly the lines carrying executable statements of `function`, ascending.
pub fn executable_lines(program: &Program, function: &str) -> Result<BTreeSet<u32>, LangError> {
    let func = program
        .function(function)
        .ok_or_else(|| LangError::UnknownFunction(function.to_string()))?;
    Ok(func.executable_lines())
}

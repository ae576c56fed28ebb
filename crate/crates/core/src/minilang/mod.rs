//! minilang: a small statically typed language for classes under test,
//! test cases, and the stub code injected into them.

pub mod ast;
pub mod check;
pub mod interp;
pub mod lexer;
mod parser;
pub mod value;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{ArrangeBlock, InstrId, Program, TestCase, Type};
pub use interp::{execute, AssertionOutcome, ExecOptions, ExecutionReport, Limits, Mutation, MutationOp, Outcome};
pub use value::{ExceptionValue, Heap, Value};

use lexer::{tokenize, Tok};
use parser::Parser;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("type error at line {line}: {msg}")]
    Type { line: u32, msg: String },
}

impl LangError {
    pub fn syntax(line: u32, col: u32, msg: impl Into<String>) -> Self {
        LangError::Syntax { line, col, msg: msg.into() }
    }
}

/// Parses and type-checks a program of record, exception, interface, and
/// class declarations. Instruction ids start at 0.
pub fn parse_program(src: &str) -> Result<Program, LangError> {
    let mut p = Parser::new(src, 0)?;
    let mut prog = p.program(src)?;
    check::check_program(&mut prog)?;
    Ok(prog)
}

/// Parses and type-checks a test case against `prog`. Instruction ids
/// continue after the program's.
pub fn parse_test(src: &str, prog: &Program) -> Result<TestCase, LangError> {
    let mut p = Parser::new(src, prog.instr_end)?;
    let raw = p.test()?;
    check::check_test(prog, raw, prog.instr_end, p.next_id(), src)
}

/// Parses and type-checks stub code for the `stub;` site of `test`.
/// Instruction ids continue after the test's.
pub fn parse_arrange(src: &str, prog: &Program, test: &TestCase) -> Result<ArrangeBlock, LangError> {
    let mut p = Parser::new(src, test.instr_end)?;
    let mut stmts = Vec::new();
    while !p.at_eof() {
        stmts.push(p.stmt()?);
    }
    check::check_arrange(prog, test, &mut stmts)?;
    Ok(ArrangeBlock { stmts, instr_start: test.instr_end, instr_end: p.next_id() })
}

/// A scalar literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
}

/// Literals in `src`, in order of appearance. Lines that do not lex are
/// skipped, so this also works on stub code that no longer compiles.
pub fn lex_literals(src: &str) -> Vec<Literal> {
    let toks = match tokenize(src) {
        Ok(t) => t,
        Err(_) => src.lines().filter_map(|l| tokenize(l).ok()).flatten().collect(),
    };
    let mut out = Vec::new();
    let mut neg = false;
    for t in toks {
        let is_minus = t.tok == Tok::Sym("-");
        match t.tok {
            Tok::Int(v) => out.push(Literal::Int(if neg { v.wrapping_neg() } else { v })),
            Tok::Real(v) => out.push(Literal::Real(if neg { -v } else { v })),
            Tok::True => out.push(Literal::Bool(true)),
            Tok::False => out.push(Literal::Bool(false)),
            Tok::Str(s) => out.push(Literal::Str(s)),
            _ => {}
        }
        neg = is_minus;
    }
    out
}

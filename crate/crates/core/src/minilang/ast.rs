//! Syntax tree for programs, test cases, and arrange blocks.
//!
//! Every statement, expression, and assertion carries an [`InstrId`]. Ids are
//! handed out by the parser in construction order, starting from a base
//! offset, so a program's ids are `0..program.instr_end`, the test that runs
//! against it continues from there, and arrange blocks continue after the test.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type InstrId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Real,
    Bool,
    Str,
    Void,
    /// Type of the `null` literal; assignable to every reference type.
    Null,
    Array(Box<Type>),
    /// Record, class, interface, or exception type.
    Named(String),
}

impl Type {
    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Int | Type::Real | Type::Bool | Type::Str)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Real)
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Type::Array(_) | Type::Named(_) | Type::Null)
    }

    /// `from` may flow into a slot of type `self` without coercion.
    pub fn accepts(&self, from: &Type) -> bool {
        if self == from {
            return true;
        }
        match (self, from) {
            (Type::Array(_) | Type::Named(_), Type::Null) => true,
            // empty array literal
            (Type::Array(_), Type::Array(inner)) => **inner == Type::Null,
            _ => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("Int"),
            Type::Real => f.write_str("Real"),
            Type::Bool => f.write_str("Bool"),
            Type::Str => f.write_str("Str"),
            Type::Void => f.write_str("Void"),
            Type::Null => f.write_str("Null"),
            Type::Array(t) => write!(f, "[{t}]"),
            Type::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: InstrId,
    pub line: u32,
    pub kind: ExprKind,
    /// Static type, filled in by the checker.
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    Null,
    Var(String),
    SelfRef,
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    /// Method call on a class instance or on an interface-typed value.
    Call { recv: Box<Expr>, method: String, args: Vec<Expr> },
    New { ty: String, args: Vec<Expr> },
    Builtin { name: String, args: Vec<Expr> },
    Array(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `mock T`; only legal inside arrange blocks.
    MockNew(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatcherExpr {
    Any,
    Eq(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReactionExpr {
    Return(Expr),
    Throw(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: InstrId,
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let { name: String, ty: Option<Type>, init: Expr },
    Assign { target: Expr, value: Expr },
    Expr(Expr),
    If { cond: Expr, then: Block, els: Option<Block> },
    While { cond: Expr, body: Block },
    Return(Option<Expr>),
    Throw(Expr),
    Try { body: Block, catches: Vec<Catch> },
    Break,
    Continue,
    /// Stub registration: `when m.f(any, eq(x)) thenReturn v;`
    When { mock: Expr, method: String, matchers: Vec<MatcherExpr>, reaction: ReactionExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catch {
    pub exception: String,
    pub var: String,
    pub body: Block,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSig {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnDecl {
    pub sig: MethodSig,
    pub body: Block,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDecl {
    pub name: String,
    pub fields: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub name: String,
    pub methods: Vec<MethodSig>,
}

impl InterfaceDecl {
    pub fn method(&self, name: &str) -> Option<&MethodSig> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<Param>,
    /// `None` means the implicit constructor taking every field in order.
    pub ctor: Option<FnDecl>,
    pub methods: Vec<FnDecl>,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&FnDecl> {
        self.methods.iter().find(|m| m.sig.name == name)
    }

    pub fn ctor_params(&self) -> Vec<Param> {
        match &self.ctor {
            Some(c) => c.sig.params.clone(),
            None => self.fields.clone(),
        }
    }
}

/// Exception types every program implicitly declares.
pub const BUILTIN_EXCEPTIONS: &[&str] = &["ArithmeticError", "NullError", "IndexError"];

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub records: Vec<RecordDecl>,
    /// Declared exception types, builtins first.
    pub exceptions: Vec<String>,
    pub interfaces: Vec<InterfaceDecl>,
    pub classes: Vec<ClassDecl>,
    /// One past the largest id in the program.
    pub instr_end: InstrId,
    pub source: String,
}

impl Program {
    pub fn record(&self, name: &str) -> Option<&RecordDecl> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn is_exception(&self, name: &str) -> bool {
        self.exceptions.iter().any(|e| e == name)
    }

    /// Exception types written by the program author (builtins excluded).
    pub fn declared_exceptions(&self) -> impl Iterator<Item = &String> {
        self.exceptions.iter().filter(|e| !BUILTIN_EXCEPTIONS.contains(&e.as_str()))
    }

    pub fn type_exists(&self, ty: &Type) -> bool {
        match ty {
            Type::Named(n) => {
                self.record(n).is_some()
                    || self.interface(n).is_some()
                    || self.class(n).is_some()
                    || self.is_exception(n)
            }
            Type::Array(inner) => self.type_exists(inner),
            _ => true,
        }
    }

    /// Fields of a record or class type, in declaration order.
    pub fn fields_of(&self, name: &str) -> Option<&[Param]> {
        if let Some(r) = self.record(name) {
            return Some(&r.fields);
        }
        self.class(name).map(|c| c.fields.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockDecl {
    pub name: String,
    pub iface: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub id: InstrId,
    pub line: u32,
    pub kind: AssertKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssertKind {
    Equals { expected: Expr, actual: Expr },
    True(Expr),
    NotNull(Expr),
    Same(Expr, Expr),
    Throws { exception: String, body: Block },
    Verify { mock: String, method: String, matchers: Vec<MatcherExpr>, times: u64 },
}

impl AssertKind {
    pub fn name(&self) -> &'static str {
        match self {
            AssertKind::Equals { .. } => "assertEquals",
            AssertKind::True(_) => "assertTrue",
            AssertKind::NotNull(_) => "assertNotNull",
            AssertKind::Same(..) => "assertSame",
            AssertKind::Throws { .. } => "assertThrows",
            AssertKind::Verify { .. } => "verify",
        }
    }
}

/// A test case: mocks, fixed setup statements, the stub site, the act block,
/// and the ordered oracle assertions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub mocks: Vec<MockDecl>,
    /// Statements between the mock declarations and the stub site.
    pub setup: Block,
    pub act: Block,
    pub asserts: Vec<Assertion>,
    /// Ids of every node syntactically inside the act block.
    pub act_ids: BTreeSet<InstrId>,
    /// Variables visible at the stub site, in declaration order.
    pub scope: Vec<(String, Type)>,
    pub instr_start: InstrId,
    pub instr_end: InstrId,
    pub source: String,
}

impl TestCase {
    pub fn scope_type(&self, name: &str) -> Option<&Type> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn is_mock(&self, name: &str) -> bool {
        self.mocks.iter().any(|m| m.name == name)
    }
}

/// A parsed and checked arrange block ready to run at a test's stub site.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrangeBlock {
    pub stmts: Block,
    pub instr_start: InstrId,
    pub instr_end: InstrId,
}

/// Visits every statement and expression id in a block.
pub fn collect_block_ids(block: &Block, out: &mut BTreeSet<InstrId>) {
    for s in block {
        collect_stmt_ids(s, out);
    }
}

pub fn collect_stmt_ids(s: &Stmt, out: &mut BTreeSet<InstrId>) {
    out.insert(s.id);
    match &s.kind {
        StmtKind::Let { init, .. } => collect_expr_ids(init, out),
        StmtKind::Assign { target, value } => {
            collect_expr_ids(target, out);
            collect_expr_ids(value, out);
        }
        StmtKind::Expr(e) | StmtKind::Throw(e) => collect_expr_ids(e, out),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                collect_expr_ids(e, out)
            }
        }
        StmtKind::If { cond, then, els } => {
            collect_expr_ids(cond, out);
            collect_block_ids(then, out);
            if let Some(b) = els {
                collect_block_ids(b, out);
            }
        }
        StmtKind::While { cond, body } => {
            collect_expr_ids(cond, out);
            collect_block_ids(body, out);
        }
        StmtKind::Try { body, catches } => {
            collect_block_ids(body, out);
            for c in catches {
                collect_block_ids(&c.body, out);
            }
        }
        StmtKind::Break | StmtKind::Continue => {}
        StmtKind::When { mock, matchers, reaction, .. } => {
            collect_expr_ids(mock, out);
            for m in matchers {
                if let MatcherExpr::Eq(e) = m {
                    collect_expr_ids(e, out);
                }
            }
            match reaction {
                ReactionExpr::Return(e) | ReactionExpr::Throw(e) => collect_expr_ids(e, out),
            }
        }
    }
}

pub fn collect_expr_ids(e: &Expr, out: &mut BTreeSet<InstrId>) {
    out.insert(e.id);
    match &e.kind {
        ExprKind::Field(r, _) => collect_expr_ids(r, out),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            collect_expr_ids(a, out);
            collect_expr_ids(b, out);
        }
        ExprKind::Call { recv, args, .. } => {
            collect_expr_ids(recv, out);
            args.iter().for_each(|a| collect_expr_ids(a, out));
        }
        ExprKind::New { args, .. } | ExprKind::Builtin { args, .. } | ExprKind::Array(args) => {
            args.iter().for_each(|a| collect_expr_ids(a, out));
        }
        ExprKind::Unary(_, a) => collect_expr_ids(a, out),
        _ => {}
    }
}

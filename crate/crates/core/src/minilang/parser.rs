//! Recursive-descent parser for programs, tests, and arrange blocks.
//!
//! The parser only builds syntax; names and types are resolved by
//! [`super::check`]. Ids are allocated as nodes are completed, so they are a
//! pure function of the source text and the starting offset.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

const KEYWORDS: &[&str] = &[
    "record", "exception", "interface", "class", "fn", "new", "let", "if", "else", "while", "return",
    "throw", "try", "catch", "break", "continue", "self", "test", "mock", "stub", "act", "assert",
    "when", "thenReturn", "thenThrow", "any", "eq", "verify", "Int", "Real", "Bool", "Str",
];

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: InstrId,
}

/// Unchecked test-case syntax.
pub(crate) struct RawTest {
    pub name: String,
    pub mocks: Vec<(MockDecl, u32)>,
    pub setup: Block,
    pub act: Block,
    pub asserts: Vec<Assertion>,
}

impl Parser {
    pub fn new(src: &str, first_id: InstrId) -> Result<Self, LangError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, next_id: first_id })
    }

    pub fn next_id(&self) -> InstrId {
        self.next_id
    }

    fn alloc(&mut self) -> InstrId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        let t = &self.toks[self.pos];
        Err(LangError::syntax(t.line, t.col, msg))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Real(v) => format!("`{v}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Null => "`null`".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // ---- types and declarations ------------------------------------------

    fn ty(&mut self) -> Result<Type, LangError> {
        if self.eat_sym("[") {
            let inner = self.ty()?;
            self.expect_sym("]")?;
            return Ok(Type::Array(Box::new(inner)));
        }
        for (kw, t) in [("Int", Type::Int), ("Real", Type::Real), ("Bool", Type::Bool), ("Str", Type::Str)] {
            if self.eat_kw(kw) {
                return Ok(t);
            }
        }
        Ok(Type::Named(self.ident()?))
    }

    fn params(&mut self) -> Result<Vec<Param>, LangError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                let name = self.ident()?;
                self.expect_sym(":")?;
                out.push(Param { name, ty: self.ty()? });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn ret_ty(&mut self) -> Result<Type, LangError> {
        if self.eat_sym("->") {
            self.ty()
        } else {
            Ok(Type::Void)
        }
    }

    pub fn program(&mut self, source: &str) -> Result<Program, LangError> {
        let mut prog = Program {
            records: vec![],
            exceptions: BUILTIN_EXCEPTIONS.iter().map(|s| s.to_string()).collect(),
            interfaces: vec![],
            classes: vec![],
            instr_end: 0,
            source: source.to_string(),
        };
        while !self.at_eof() {
            if self.eat_kw("record") {
                let name = self.ident()?;
                self.expect_sym("{")?;
                let mut fields = Vec::new();
                while !self.is_sym("}") {
                    let fname = self.ident()?;
                    self.expect_sym(":")?;
                    fields.push(Param { name: fname, ty: self.ty()? });
                    if !self.eat_sym(",") && !self.eat_sym(";") {
                        break;
                    }
                }
                self.expect_sym("}")?;
                prog.records.push(RecordDecl { name, fields });
            } else if self.eat_kw("exception") {
                let name = self.ident()?;
                self.expect_sym(";")?;
                prog.exceptions.push(name);
            } else if self.eat_kw("interface") {
                let name = self.ident()?;
                self.expect_sym("{")?;
                let mut methods = Vec::new();
                while !self.eat_sym("}") {
                    self.expect_kw("fn")?;
                    let mname = self.ident()?;
                    let params = self.params()?;
                    let ret = self.ret_ty()?;
                    self.expect_sym(";")?;
                    methods.push(MethodSig { name: mname, params, ret });
                }
                prog.interfaces.push(InterfaceDecl { name, methods });
            } else if self.eat_kw("class") {
                prog.classes.push(self.class_decl()?);
            } else {
                return self.err(format!("expected declaration, found {}", self.describe()));
            }
        }
        prog.instr_end = self.next_id;
        Ok(prog)
    }

    fn class_decl(&mut self) -> Result<ClassDecl, LangError> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut class = ClassDecl { name, fields: vec![], ctor: None, methods: vec![] };
        while !self.eat_sym("}") {
            let line = self.line();
            if self.eat_kw("new") {
                if class.ctor.is_some() {
                    return self.err("duplicate constructor");
                }
                let params = self.params()?;
                let body = self.block()?;
                class.ctor = Some(FnDecl { sig: MethodSig { name: "new".into(), params, ret: Type::Void }, body, line });
            } else if self.eat_kw("fn") {
                let mname = self.ident()?;
                let params = self.params()?;
                let ret = self.ret_ty()?;
                let body = self.block()?;
                class.methods.push(FnDecl { sig: MethodSig { name: mname, params, ret }, body, line });
            } else {
                let fname = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym(";")?;
                class.fields.push(Param { name: fname, ty });
            }
        }
        Ok(class)
    }

    // ---- statements ------------------------------------------------------

    pub fn block(&mut self) -> Result<Block, LangError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            if self.at_eof() {
                return self.err("unterminated block");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    pub fn stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        let kind = if self.eat_kw("let") {
            let name = self.ident()?;
            let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let init = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Let { name, ty, init }
        } else if self.eat_kw("if") {
            return self.if_rest(line);
        } else if self.eat_kw("while") {
            let cond = self.expr()?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.eat_kw("return") {
            let e = if self.is_sym(";") { None } else { Some(self.expr()?) };
            self.expect_sym(";")?;
            StmtKind::Return(e)
        } else if self.eat_kw("throw") {
            let e = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Throw(e)
        } else if self.eat_kw("try") {
            let body = self.block()?;
            let mut catches = Vec::new();
            while self.eat_kw("catch") {
                self.expect_sym("(")?;
                let exception = self.ident()?;
                let var = self.ident()?;
                self.expect_sym(")")?;
                catches.push(Catch { exception, var, body: self.block()? });
            }
            if catches.is_empty() {
                return self.err("`try` needs at least one `catch`");
            }
            StmtKind::Try { body, catches }
        } else if self.eat_kw("break") {
            self.expect_sym(";")?;
            StmtKind::Break
        } else if self.eat_kw("continue") {
            self.expect_sym(";")?;
            StmtKind::Continue
        } else if self.eat_kw("when") {
            let (mock, method, matchers) = self.mock_call()?;
            let reaction = if self.eat_kw("thenReturn") {
                ReactionExpr::Return(self.expr()?)
            } else if self.eat_kw("thenThrow") {
                ReactionExpr::Throw(self.expr()?)
            } else {
                return self.err(format!("expected `thenReturn` or `thenThrow`, found {}", self.describe()));
            };
            self.expect_sym(";")?;
            StmtKind::When { mock, method, matchers, reaction }
        } else {
            let e = self.expr()?;
            if self.eat_sym("=") {
                let value = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign { target: e, value }
            } else {
                self.expect_sym(";")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { id: self.alloc(), line, kind })
    }

    fn if_rest(&mut self, line: u32) -> Result<Stmt, LangError> {
        let cond = self.expr()?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.is_kw("if") {
                let l = self.line();
                self.advance();
                Some(vec![self.if_rest(l)?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt { id: self.alloc(), line, kind: StmtKind::If { cond, then, els } })
    }

    /// `target.method(matcher, ...)` where the target is a variable, `self`,
    /// or a field chain.
    fn mock_call(&mut self) -> Result<(Expr, String, Vec<MatcherExpr>), LangError> {
        let line = self.line();
        let mut target = if self.eat_kw("self") {
            self.mk(line, ExprKind::SelfRef)
        } else {
            let n = self.ident()?;
            self.mk(line, ExprKind::Var(n))
        };
        loop {
            self.expect_sym(".")?;
            let name = self.ident()?;
            if self.is_sym("(") {
                let matchers = self.matchers()?;
                return Ok((target, name, matchers));
            }
            target = self.mk(line, ExprKind::Field(Box::new(target), name));
        }
    }

    fn matchers(&mut self) -> Result<Vec<MatcherExpr>, LangError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                if self.eat_kw("any") {
                    out.push(MatcherExpr::Any);
                } else if self.eat_kw("eq") {
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    out.push(MatcherExpr::Eq(e));
                } else {
                    return self.err(format!("expected `any` or `eq(...)`, found {}", self.describe()));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    // ---- expressions -----------------------------------------------------

    fn mk(&mut self, line: u32, kind: ExprKind) -> Expr {
        Expr { id: self.alloc(), line, kind, ty: Type::Void }
    }

    pub fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(0)
    }

    fn binop(&self) -> Option<(BinOp, u8)> {
        let Tok::Sym(s) = self.peek() else { return None };
        let op = match *s {
            "||" => (BinOp::Or, 1),
            "&&" => (BinOp::And, 2),
            "==" => (BinOp::Eq, 3),
            "!=" => (BinOp::Ne, 3),
            "<" => (BinOp::Lt, 4),
            "<=" => (BinOp::Le, 4),
            ">" => (BinOp::Gt, 4),
            ">=" => (BinOp::Ge, 4),
            "+" => (BinOp::Add, 5),
            "-" => (BinOp::Sub, 5),
            "*" => (BinOp::Mul, 6),
            "/" => (BinOp::Div, 6),
            "%" => (BinOp::Rem, 6),
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec < min_prec {
                break;
            }
            let line = self.line();
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk(line, ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let line = self.line();
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(self.mk(line, ExprKind::Unary(UnOp::Neg, Box::new(e))));
        }
        if self.eat_sym("!") {
            let e = self.unary()?;
            return Ok(self.mk(line, ExprKind::Unary(UnOp::Not, Box::new(e))));
        }
        self.postfix()
    }

    fn args(&mut self) -> Result<Vec<Expr>, LangError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                out.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        loop {
            let line = self.line();
            if self.eat_sym(".") {
                let name = self.ident()?;
                if self.is_sym("(") {
                    let args = self.args()?;
                    e = self.mk(line, ExprKind::Call { recv: Box::new(e), method: name, args });
                } else {
                    e = self.mk(line, ExprKind::Field(Box::new(e), name));
                }
            } else if self.eat_sym("[") {
                let idx = self.expr()?;
                self.expect_sym("]")?;
                e = self.mk(line, ExprKind::Index(Box::new(e), Box::new(idx)));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let line = self.line();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Int(v)
            }
            Tok::Real(v) => {
                self.advance();
                ExprKind::Real(v)
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Tok::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            Tok::Null => {
                self.advance();
                ExprKind::Null
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Sym("[") => {
                self.advance();
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("]")?;
                ExprKind::Array(items)
            }
            Tok::Ident(kw) if kw == "self" => {
                self.advance();
                ExprKind::SelfRef
            }
            Tok::Ident(kw) if kw == "new" => {
                self.advance();
                let ty = self.ident()?;
                let args = self.args()?;
                ExprKind::New { ty, args }
            }
            Tok::Ident(kw) if kw == "mock" => {
                self.advance();
                ExprKind::MockNew(self.ident()?)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    let args = self.args()?;
                    ExprKind::Builtin { name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            _ => return self.err(format!("expected expression, found {}", self.describe())),
        };
        Ok(self.mk(line, kind))
    }

    // ---- tests -----------------------------------------------------------

    pub fn test(&mut self) -> Result<RawTest, LangError> {
        self.expect_kw("test")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut mocks = Vec::new();
        while self.is_kw("mock") && matches!(self.peek_at(2), Tok::Sym(":")) {
            let line = self.line();
            self.advance();
            let mname = self.ident()?;
            self.expect_sym(":")?;
            let iface = self.ident()?;
            self.expect_sym(";")?;
            mocks.push((MockDecl { name: mname, iface }, line));
        }
        let mut setup = Vec::new();
        while !self.is_kw("stub") {
            if self.at_eof() || self.is_kw("act") {
                return self.err("missing `stub;` site marker before `act`");
            }
            setup.push(self.stmt()?);
        }
        self.advance();
        self.expect_sym(";")?;
        self.expect_kw("act")?;
        let act = self.block()?;
        self.expect_kw("assert")?;
        self.expect_sym("{")?;
        let mut asserts = Vec::new();
        while !self.eat_sym("}") {
            asserts.push(self.assertion()?);
        }
        self.expect_sym("}")?;
        if !self.at_eof() {
            return self.err(format!("unexpected {} after test", self.describe()));
        }
        Ok(RawTest { name, mocks, setup, act, asserts })
    }

    fn assertion(&mut self) -> Result<Assertion, LangError> {
        let line = self.line();
        let Tok::Ident(name) = self.peek().clone() else {
            return self.err(format!("expected assertion, found {}", self.describe()));
        };
        self.advance();
        let kind = match name.as_str() {
            "assertEquals" => {
                let mut a = self.args()?;
                if a.len() != 2 {
                    return self.err("assertEquals takes (expected, actual)");
                }
                let actual = a.pop().unwrap();
                let expected = a.pop().unwrap();
                AssertKind::Equals { expected, actual }
            }
            "assertSame" => {
                let mut a = self.args()?;
                if a.len() != 2 {
                    return self.err("assertSame takes two arguments");
                }
                let y = a.pop().unwrap();
                AssertKind::Same(a.pop().unwrap(), y)
            }
            "assertTrue" | "assertNotNull" => {
                let mut a = self.args()?;
                if a.len() != 1 {
                    return self.err(format!("{name} takes one argument"));
                }
                let e = a.pop().unwrap();
                if name == "assertTrue" {
                    AssertKind::True(e)
                } else {
                    AssertKind::NotNull(e)
                }
            }
            "assertThrows" => {
                self.expect_sym("(")?;
                let exception = self.ident()?;
                self.expect_sym(")")?;
                let body = self.block()?;
                let a = Assertion { id: self.alloc(), line, kind: AssertKind::Throws { exception, body } };
                return Ok(a);
            }
            "verify" => {
                self.expect_sym("(")?;
                let mock = self.ident()?;
                self.expect_sym(".")?;
                let method = self.ident()?;
                let matchers = self.matchers()?;
                self.expect_sym(",")?;
                let times = match self.peek().clone() {
                    Tok::Int(n) if n >= 0 => {
                        self.advance();
                        n as u64
                    }
                    _ => return self.err("verify expects a non-negative call count"),
                };
                self.expect_sym(")")?;
                AssertKind::Verify { mock, method, matchers, times }
            }
            other => return self.err(format!("unknown assertion `{other}`")),
        };
        self.expect_sym(";")?;
        Ok(Assertion { id: self.alloc(), line, kind })
    }
}

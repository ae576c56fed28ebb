//! Stub-code genome: a bounded sequence of variable definitions and stub
//! calls, with validation, rendering to a minilang arrange block, parsing
//! back from that text, and backward slicing.
//!
//! ```text
//! Elem       ::= VarDef | StubCall
//! VarDef     ::= v = Expr
//! Expr       ::= Literal | ArrayOf(v*) | ApiCall(symbol, v*) | MockCreate(T)
//! StubCall   ::= <mock, method, ArgMatcher*> -> Reaction
//! ArgMatcher ::= Any | Eq(v)
//! Reaction   ::= Return(v) | Throw(v)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::ast::{ExprKind, MatcherExpr, Program, ReactionExpr, StmtKind, TestCase, Type};
use crate::minilang::check::{builtin_sig, is_stub_var_name, BUILTIN_NAMES};
use crate::minilang::lexer::quote_str;
use crate::minilang::{parse_arrange, LangError, Literal};

pub const MAX_LEN: usize = 50;

pub type VarId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarRef {
    /// A variable defined by the stub program itself (`v<id>`).
    Local(VarId),
    /// A variable of the test's scope at the stub site, mocks of V included.
    Scope(String),
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Local(id) => write!(f, "v{id}"),
            VarRef::Scope(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolKind {
    Constructor,
    /// Class method; the first parameter is the receiver.
    Method,
    /// Field read; the single parameter is the receiver.
    Field,
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApiSymbol {
    pub kind: SymbolKind,
    /// Declaring type; empty for builtins.
    pub owner: String,
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
}

impl ApiSymbol {
    /// Every symbol a stub may call in `prog`, in declaration order.
    pub fn all(prog: &Program) -> Vec<ApiSymbol> {
        let mut out = Vec::new();
        let sym = |kind, owner: &str, name: &str, params: Vec<Type>, ret: Type| ApiSymbol {
            kind,
            owner: owner.to_string(),
            name: name.to_string(),
            params,
            ret,
        };
        for r in &prog.records {
            let me = Type::Named(r.name.clone());
            out.push(sym(SymbolKind::Constructor, &r.name, &r.name, r.fields.iter().map(|p| p.ty.clone()).collect(), me.clone()));
            for f in &r.fields {
                out.push(sym(SymbolKind::Field, &r.name, &f.name, vec![me.clone()], f.ty.clone()));
            }
        }
        for c in &prog.classes {
            let me = Type::Named(c.name.clone());
            out.push(sym(SymbolKind::Constructor, &c.name, &c.name, c.ctor_params().into_iter().map(|p| p.ty).collect(), me.clone()));
            for f in &c.fields {
                out.push(sym(SymbolKind::Field, &c.name, &f.name, vec![me.clone()], f.ty.clone()));
            }
            for m in &c.methods {
                if m.sig.ret == Type::Void {
                    continue;
                }
                let mut params = vec![me.clone()];
                params.extend(m.sig.params.iter().map(|p| p.ty.clone()));
                out.push(sym(SymbolKind::Method, &c.name, &m.sig.name, params, m.sig.ret.clone()));
            }
        }
        for e in &prog.exceptions {
            out.push(sym(SymbolKind::Constructor, e, e, vec![], Type::Named(e.clone())));
            out.push(sym(SymbolKind::Constructor, e, e, vec![Type::Str], Type::Named(e.clone())));
        }
        for b in BUILTIN_NAMES {
            let (params, ret) = builtin_sig(b).expect("builtin has a signature");
            out.push(sym(SymbolKind::Builtin, "", b, params.to_vec(), ret));
        }
        out
    }

    /// The declaration-derived symbol this one claims to be, if any.
    fn resolve(&self, prog: &Program) -> Option<ApiSymbol> {
        ApiSymbol::all(prog).into_iter().find(|s| {
            s.kind == self.kind && s.owner == self.owner && s.name == self.name && s.params.len() == self.params.len()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Literal(Literal),
    ArrayOf { elem: Type, items: Vec<VarRef> },
    ApiCall { sym: ApiSymbol, args: Vec<VarRef> },
    MockCreate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArgMatcher {
    Any,
    Eq(VarRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reaction {
    Return(VarRef),
    Throw(VarRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Elem {
    VarDef { var: VarId, expr: Expr },
    StubCall { mock: VarRef, method: String, matchers: Vec<ArgMatcher>, reaction: Reaction },
}

impl Elem {
    pub fn is_stub_call(&self) -> bool {
        matches!(self, Elem::StubCall { .. })
    }

    pub fn defined(&self) -> Option<VarId> {
        match self {
            Elem::VarDef { var, .. } => Some(*var),
            Elem::StubCall { .. } => None,
        }
    }

    /// Every variable reference, in textual order.
    pub fn refs(&self) -> Vec<&VarRef> {
        match self {
            Elem::VarDef { expr, .. } => match expr {
                Expr::ArrayOf { items, .. } => items.iter().collect(),
                Expr::ApiCall { args, .. } => args.iter().collect(),
                Expr::Literal(_) | Expr::MockCreate(_) => vec![],
            },
            Elem::StubCall { mock, matchers, reaction, .. } => {
                let mut out = vec![mock];
                out.extend(matchers.iter().filter_map(|m| match m {
                    ArgMatcher::Eq(v) => Some(v),
                    ArgMatcher::Any => None,
                }));
                out.push(match reaction {
                    Reaction::Return(v) | Reaction::Throw(v) => v,
                });
                out
            }
        }
    }

    pub fn refs_mut(&mut self) -> Vec<&mut VarRef> {
        match self {
            Elem::VarDef { expr, .. } => match expr {
                Expr::ArrayOf { items, .. } => items.iter_mut().collect(),
                Expr::ApiCall { args, .. } => args.iter_mut().collect(),
                Expr::Literal(_) | Expr::MockCreate(_) => vec![],
            },
            Elem::StubCall { mock, matchers, reaction, .. } => {
                let mut out = vec![mock];
                out.extend(matchers.iter_mut().filter_map(|m| match m {
                    ArgMatcher::Eq(v) => Some(v),
                    ArgMatcher::Any => None,
                }));
                out.push(match reaction {
                    Reaction::Return(v) | Reaction::Throw(v) => v,
                });
                out
            }
        }
    }

    /// Local variables this element reads.
    pub fn uses(&self) -> Vec<VarId> {
        self.refs()
            .into_iter()
            .filter_map(|r| match r {
                VarRef::Local(id) => Some(*id),
                VarRef::Scope(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    TooLong { len: usize },
    Undefined { elem: usize, var: String },
    Redefined { elem: usize, var: VarId },
    TypeMismatch { elem: usize, msg: String },
    Arity { elem: usize, msg: String },
    Unknown { elem: usize, msg: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooLong { len } => write!(f, "stub has {len} elements, limit is {MAX_LEN}"),
            Violation::Undefined { elem, var } => write!(f, "element {elem}: `{var}` used before definition"),
            Violation::Redefined { elem, var } => write!(f, "element {elem}: `v{var}` defined twice"),
            Violation::TypeMismatch { elem, msg } | Violation::Arity { elem, msg } | Violation::Unknown { elem, msg } => {
                write!(f, "element {elem}: {msg}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum StubParseError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("line {line}: {msg}")]
    Unsupported { line: u32, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubProgram {
    pub elems: Vec<Elem>,
}

fn literal_type(l: &Literal) -> Type {
    match l {
        Literal::Int(_) => Type::Int,
        Literal::Real(_) => Type::Real,
        Literal::Bool(_) => Type::Bool,
        Literal::Str(_) => Type::Str,
    }
}

fn render_literal(l: &Literal) -> String {
    match l {
        Literal::Int(v) => v.to_string(),
        Literal::Real(v) => {
            let mut s = format!("{}", v.abs());
            if !s.contains('.') {
                s.push_str(".0");
            }
            if v.is_sign_negative() {
                s.insert(0, '-');
            }
            s
        }
        Literal::Bool(b) => b.to_string(),
        Literal::Str(s) => quote_str(s),
    }
}

impl StubProgram {
    pub fn new(elems: Vec<Elem>) -> Self {
        StubProgram { elems }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn stub_call_count(&self) -> usize {
        self.elems.iter().filter(|e| e.is_stub_call()).count()
    }

    /// Largest local id plus one.
    pub fn next_var(&self) -> VarId {
        self.elems.iter().filter_map(Elem::defined).map(|v| v + 1).max().unwrap_or(0)
    }

    pub fn def_index(&self, var: VarId) -> Option<usize> {
        self.elems.iter().position(|e| e.defined() == Some(var))
    }

    /// Static type of every local variable whose definition is well typed.
    pub fn var_types(&self) -> BTreeMap<VarId, Type> {
        let mut types = BTreeMap::new();
        for e in &self.elems {
            if let Elem::VarDef { var, expr } = e {
                let ty = match expr {
                    Expr::Literal(l) => literal_type(l),
                    Expr::ArrayOf { elem, .. } => Type::Array(Box::new(elem.clone())),
                    Expr::ApiCall { sym, .. } => sym.ret.clone(),
                    Expr::MockCreate(i) => Type::Named(i.clone()),
                };
                types.insert(*var, ty);
            }
        }
        types
    }

    /// Type of `r` given local types; `None` when it is undefined.
    pub fn ref_type(r: &VarRef, locals: &BTreeMap<VarId, Type>, test: &TestCase) -> Option<Type> {
        match r {
            VarRef::Local(id) => locals.get(id).cloned(),
            VarRef::Scope(n) => test.scope_type(n).cloned(),
        }
    }

    /// Checks length, def-before-use, symbol signatures, arity, and types.
    pub fn validate(&self, prog: &Program, test: &TestCase) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.elems.len() > MAX_LEN {
            out.push(Violation::TooLong { len: self.elems.len() });
        }
        let mut locals: BTreeMap<VarId, Type> = BTreeMap::new();
        let mut mock_locals: BTreeSet<VarId> = BTreeSet::new();
        for (i, e) in self.elems.iter().enumerate() {
            let mut ok = true;
            for r in e.refs() {
                let defined = match r {
                    VarRef::Local(id) => locals.contains_key(id),
                    VarRef::Scope(n) => !is_stub_var_name(n) && test.scope_type(n).is_some(),
                };
                if !defined {
                    out.push(Violation::Undefined { elem: i, var: r.to_string() });
                    ok = false;
                }
            }
            let ty_of = |r: &VarRef, locals: &BTreeMap<VarId, Type>| Self::ref_type(r, locals, test);
            let mismatch = |msg: String| Violation::TypeMismatch { elem: i, msg };
            match e {
                Elem::VarDef { var, expr } => {
                    if locals.contains_key(var) {
                        out.push(Violation::Redefined { elem: i, var: *var });
                    }
                    let ty = match expr {
                        Expr::Literal(l) => {
                            match l {
                                Literal::Int(i64::MIN) => out.push(mismatch("integer literal out of range".into())),
                                Literal::Real(v) if !v.is_finite() => out.push(mismatch("non-finite real literal".into())),
                                _ => {}
                            }
                            literal_type(l)
                        }
                        Expr::ArrayOf { elem, items } => {
                            if !prog.type_exists(elem) || matches!(elem, Type::Void | Type::Null) {
                                out.push(Violation::Unknown { elem: i, msg: format!("bad element type {elem}") });
                            }
                            if ok {
                                for it in items {
                                    let t = ty_of(it, &locals).expect("checked defined");
                                    if t != *elem {
                                        out.push(mismatch(format!("array of {elem} given {t}")));
                                    }
                                }
                            }
                            Type::Array(Box::new(elem.clone()))
                        }
                        Expr::ApiCall { sym, args } => {
                            match sym.resolve(prog) {
                                Some(decl) if decl == *sym => {}
                                _ => out.push(Violation::Unknown { elem: i, msg: format!("no such symbol `{}`", sym.name) }),
                            }
                            if sym.params.len() != args.len() {
                                out.push(Violation::Arity {
                                    elem: i,
                                    msg: format!("`{}` takes {} argument(s), got {}", sym.name, sym.params.len(), args.len()),
                                });
                            } else if ok {
                                for (p, a) in sym.params.iter().zip(args) {
                                    let t = ty_of(a, &locals).expect("checked defined");
                                    if t != *p {
                                        out.push(mismatch(format!("`{}` expects {p}, got {t}", sym.name)));
                                    }
                                }
                            }
                            if sym.ret == Type::Void {
                                out.push(mismatch(format!("`{}` returns nothing", sym.name)));
                            }
                            sym.ret.clone()
                        }
                        Expr::MockCreate(iface) => {
                            if prog.interface(iface).is_none() {
                                out.push(Violation::Unknown { elem: i, msg: format!("`{iface}` is not an interface") });
                            }
                            mock_locals.insert(*var);
                            Type::Named(iface.clone())
                        }
                    };
                    locals.insert(*var, ty);
                }
                Elem::StubCall { mock, method, matchers, reaction } => {
                    let is_mock = match mock {
                        VarRef::Local(id) => mock_locals.contains(id),
                        VarRef::Scope(n) => test.is_mock(n),
                    };
                    if !is_mock {
                        out.push(mismatch(format!("`{mock}` is not a mock")));
                        continue;
                    }
                    if !ok {
                        continue;
                    }
                    let Some(Type::Named(iface)) = ty_of(mock, &locals) else { continue };
                    let Some(sig) = prog.interface(&iface).and_then(|d| d.method(method)) else {
                        out.push(Violation::Unknown { elem: i, msg: format!("`{iface}` has no method `{method}`") });
                        continue;
                    };
                    if sig.params.len() != matchers.len() {
                        out.push(Violation::Arity {
                            elem: i,
                            msg: format!("`{method}` takes {} argument(s), got {} matcher(s)", sig.params.len(), matchers.len()),
                        });
                    } else {
                        for (p, m) in sig.params.iter().zip(matchers) {
                            if let ArgMatcher::Eq(v) = m {
                                let t = ty_of(v, &locals).expect("checked defined");
                                if t != p.ty {
                                    out.push(mismatch(format!("matcher for {} given {t}", p.ty)));
                                }
                            }
                        }
                    }
                    match reaction {
                        Reaction::Return(v) => {
                            let t = ty_of(v, &locals).expect("checked defined");
                            if sig.ret == Type::Void || t != sig.ret {
                                out.push(mismatch(format!("`{method}` returns {}, given {t}", sig.ret)));
                            }
                        }
                        Reaction::Throw(v) => {
                            let t = ty_of(v, &locals).expect("checked defined");
                            if !matches!(&t, Type::Named(n) if prog.is_exception(n)) {
                                out.push(mismatch(format!("cannot throw {t}")));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self, prog: &Program, test: &TestCase) -> bool {
        self.validate(prog, test).is_empty()
    }

    /// Minilang arrange-block text, one element per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.elems {
            match e {
                Elem::VarDef { var, expr } => {
                    let rhs = match expr {
                        Expr::Literal(l) => render_literal(l),
                        Expr::ArrayOf { elem, items } => {
                            let items: Vec<String> = items.iter().map(|v| v.to_string()).collect();
                            let _ = write!(s, "let v{var}: [{elem}] = [{}];\n", items.join(", "));
                            continue;
                        }
                        Expr::ApiCall { sym, args } => {
                            let a: Vec<String> = args.iter().map(|v| v.to_string()).collect();
                            match sym.kind {
                                SymbolKind::Constructor => format!("new {}({})", sym.owner, a.join(", ")),
                                SymbolKind::Builtin => format!("{}({})", sym.name, a.join(", ")),
                                SymbolKind::Field => format!("{}.{}", a.first().map(String::as_str).unwrap_or("null"), sym.name),
                                SymbolKind::Method => {
                                    let recv = a.first().map(String::as_str).unwrap_or("null");
                                    format!("{recv}.{}({})", sym.name, a.get(1..).unwrap_or_default().join(", "))
                                }
                            }
                        }
                        Expr::MockCreate(i) => format!("mock {i}"),
                    };
                    let _ = writeln!(s, "let v{var} = {rhs};");
                }
                Elem::StubCall { mock, method, matchers, reaction } => {
                    let ms: Vec<String> = matchers
                        .iter()
                        .map(|m| match m {
                            ArgMatcher::Any => "any".to_string(),
                            ArgMatcher::Eq(v) => format!("eq({v})"),
                        })
                        .collect();
                    let (kw, v) = match reaction {
                        Reaction::Return(v) => ("thenReturn", v),
                        Reaction::Throw(v) => ("thenThrow", v),
                    };
                    let _ = writeln!(s, "when {mock}.{method}({}) {kw} {v};", ms.join(", "));
                }
            }
        }
        s
    }

    /// Parses stub text (the [`render`](Self::render) form) back into a genome.
    pub fn parse(text: &str, prog: &Program, test: &TestCase) -> Result<StubProgram, StubParseError> {
        let block = parse_arrange(text, prog, test)?;
        let unsupported = |line: u32, msg: &str| StubParseError::Unsupported { line, msg: msg.to_string() };
        let var_ref = |e: &crate::minilang::ast::Expr| -> Result<VarRef, StubParseError> {
            match &e.kind {
                ExprKind::Var(n) if is_stub_var_name(n) => Ok(VarRef::Local(n[1..].parse().map_err(|_| unsupported(e.line, "bad variable"))?)),
                ExprKind::Var(n) => Ok(VarRef::Scope(n.clone())),
                _ => Err(unsupported(e.line, "operands must be variables")),
            }
        };
        let mut elems = Vec::new();
        for s in &block.stmts {
            match &s.kind {
                StmtKind::Let { name, ty, init } => {
                    if !is_stub_var_name(name) {
                        return Err(unsupported(s.line, "stub variables are named v<N>"));
                    }
                    let var: VarId = name[1..].parse().map_err(|_| unsupported(s.line, "bad variable"))?;
                    let expr = match &init.kind {
                        ExprKind::Int(v) => Expr::Literal(Literal::Int(*v)),
                        ExprKind::Real(v) => Expr::Literal(Literal::Real(*v)),
                        ExprKind::Bool(b) => Expr::Literal(Literal::Bool(*b)),
                        ExprKind::Str(v) => Expr::Literal(Literal::Str(v.clone())),
                        ExprKind::Unary(crate::minilang::ast::UnOp::Neg, inner) => match inner.kind {
                            ExprKind::Int(v) => Expr::Literal(Literal::Int(-v)),
                            ExprKind::Real(v) => Expr::Literal(Literal::Real(-v)),
                            _ => return Err(unsupported(s.line, "only literals may be negated")),
                        },
                        ExprKind::Array(items) => {
                            let Some(Type::Array(elem)) = ty else {
                                return Err(unsupported(s.line, "array definitions need a type annotation"));
                            };
                            Expr::ArrayOf { elem: (**elem).clone(), items: items.iter().map(var_ref).collect::<Result<_, _>>()? }
                        }
                        ExprKind::MockNew(i) => Expr::MockCreate(i.clone()),
                        ExprKind::New { ty, args } => Expr::ApiCall {
                            sym: ApiSymbol {
                                kind: SymbolKind::Constructor,
                                owner: ty.clone(),
                                name: ty.clone(),
                                params: args.iter().map(|a| a.ty.clone()).collect(),
                                ret: init.ty.clone(),
                            },
                            args: args.iter().map(var_ref).collect::<Result<_, _>>()?,
                        },
                        ExprKind::Builtin { name, args } => Expr::ApiCall {
                            sym: ApiSymbol {
                                kind: SymbolKind::Builtin,
                                owner: String::new(),
                                name: name.clone(),
                                params: args.iter().map(|a| a.ty.clone()).collect(),
                                ret: init.ty.clone(),
                            },
                            args: args.iter().map(var_ref).collect::<Result<_, _>>()?,
                        },
                        ExprKind::Field(recv, f) => {
                            let Type::Named(owner) = &recv.ty else { return Err(unsupported(s.line, "bad field receiver")) };
                            Expr::ApiCall {
                                sym: ApiSymbol {
                                    kind: SymbolKind::Field,
                                    owner: owner.clone(),
                                    name: f.clone(),
                                    params: vec![recv.ty.clone()],
                                    ret: init.ty.clone(),
                                },
                                args: vec![var_ref(recv)?],
                            }
                        }
                        ExprKind::Call { recv, method, args } => {
                            let Type::Named(owner) = &recv.ty else { return Err(unsupported(s.line, "bad method receiver")) };
                            if prog.class(owner).is_none() {
                                return Err(unsupported(s.line, "stub code may only call class methods"));
                            }
                            let mut params = vec![recv.ty.clone()];
                            params.extend(args.iter().map(|a| a.ty.clone()));
                            let mut refs = vec![var_ref(recv)?];
                            for a in args {
                                refs.push(var_ref(a)?);
                            }
                            Expr::ApiCall {
                                sym: ApiSymbol { kind: SymbolKind::Method, owner: owner.clone(), name: method.clone(), params, ret: init.ty.clone() },
                                args: refs,
                            }
                        }
                        _ => return Err(unsupported(s.line, "unsupported definition")),
                    };
                    let expr = match expr {
                        // restore declared parameter types where argument types are narrower
                        Expr::ApiCall { sym, args } => {
                            let sym = sym.resolve(prog).filter(|d| d.ret == sym.ret).unwrap_or(sym);
                            Expr::ApiCall { sym, args }
                        }
                        other => other,
                    };
                    elems.push(Elem::VarDef { var, expr });
                }
                StmtKind::When { mock, method, matchers, reaction } => {
                    let ms = matchers
                        .iter()
                        .map(|m| match m {
                            MatcherExpr::Any => Ok(ArgMatcher::Any),
                            MatcherExpr::Eq(e) => var_ref(e).map(ArgMatcher::Eq),
                        })
                        .collect::<Result<_, _>>()?;
                    let reaction = match reaction {
                        ReactionExpr::Return(e) => Reaction::Return(var_ref(e)?),
                        ReactionExpr::Throw(e) => Reaction::Throw(var_ref(e)?),
                    };
                    elems.push(Elem::StubCall { mock: var_ref(mock)?, method: method.clone(), matchers: ms, reaction });
                }
                _ => return Err(unsupported(s.line, "unsupported statement")),
            }
        }
        Ok(StubProgram { elems })
    }

    /// Indices of the backward slice of element `idx`, ascending.
    pub fn slice_indices(&self, idx: usize) -> Vec<usize> {
        let mut keep = BTreeSet::new();
        let mut work = vec![idx];
        while let Some(i) = work.pop() {
            if !keep.insert(i) {
                continue;
            }
            for v in self.elems[i].uses() {
                // the nearest earlier definition is the one in scope
                if let Some(d) = self.elems[..i].iter().rposition(|e| e.defined() == Some(v)) {
                    work.push(d);
                }
            }
        }
        keep.into_iter().collect()
    }

    /// Element `idx` and, transitively, every definition it depends on, in
    /// original order.
    pub fn backward_slice(&self, idx: usize) -> StubProgram {
        StubProgram { elems: self.slice_indices(idx).into_iter().map(|i| self.elems[i].clone()).collect() }
    }

    /// Renumbers locals `v0, v1, ...` in order of definition.
    pub fn canonical(&self) -> StubProgram {
        let mut map = BTreeMap::new();
        for e in &self.elems {
            if let Some(v) = e.defined() {
                let n = map.len() as VarId;
                map.entry(v).or_insert(n);
            }
        }
        let mut out = self.clone();
        for e in &mut out.elems {
            if let Elem::VarDef { var, .. } = e {
                *var = map[var];
            }
            for r in e.refs_mut() {
                if let VarRef::Local(id) = r {
                    if let Some(n) = map.get(id) {
                        *id = *n;
                    }
                }
            }
        }
        out
    }

    /// Locals defined but never read.
    pub fn unused_defs(&self) -> Vec<usize> {
        let used: BTreeSet<VarId> = self.elems.iter().flat_map(Elem::uses).collect();
        self.elems
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.defined(), Some(v) if !used.contains(&v)))
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for StubProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse_program, parse_test};

    pub(crate) const PROG: &str = r#"
        record User { name: Str, hash: Str }
        exception TimeoutException;
        interface UserDao { fn findUser(name: Str) -> User; }
        interface Account { fn getPasswordHash() -> Str; }
        interface Accounts { fn lookup(name: Str) -> Account; }
        class Svc { dao: UserDao; fn go(n: Str) -> Bool { let u = self.dao.findUser(n); return u != null; } }
    "#;
    const TEST: &str = r#"
        test T {
            mock dao: UserDao;
            mock accounts: Accounts;
            let svc = new Svc(dao);
            stub;
            act { let ok = svc.go("foo"); }
            assert { assertEquals(true, ok); }
        }
    "#;

    fn fixture() -> (Program, TestCase) {
        let p = parse_program(PROG).unwrap();
        let t = parse_test(TEST, &p).unwrap();
        (p, t)
    }

    fn sym(prog: &Program, kind: SymbolKind, owner: &str, name: &str, arity: usize) -> ApiSymbol {
        ApiSymbol::all(prog)
            .into_iter()
            .find(|s| s.kind == kind && s.owner == owner && s.name == name && s.params.len() == arity)
            .unwrap()
    }

    fn lit(v: VarId, l: Literal) -> Elem {
        Elem::VarDef { var: v, expr: Expr::Literal(l) }
    }

    /// Four definitions and three stub calls: throw, then return, on the
    /// same matcher, plus a stub on a freshly created mock.
    fn listing(prog: &Program) -> StubProgram {
        StubProgram::new(vec![
            lit(0, Literal::Str("foo".into())),
            Elem::VarDef { var: 1, expr: Expr::ApiCall { sym: sym(prog, SymbolKind::Constructor, "TimeoutException", "TimeoutException", 0), args: vec![] } },
            Elem::StubCall {
                mock: VarRef::Scope("dao".into()),
                method: "findUser".into(),
                matchers: vec![ArgMatcher::Eq(VarRef::Local(0))],
                reaction: Reaction::Throw(VarRef::Local(1)),
            },
            Elem::VarDef { var: 2, expr: Expr::MockCreate("Account".into()) },
            lit(3, Literal::Str("bar".into())),
            Elem::StubCall {
                mock: VarRef::Scope("accounts".into()),
                method: "lookup".into(),
                matchers: vec![ArgMatcher::Eq(VarRef::Local(0))],
                reaction: Reaction::Return(VarRef::Local(2)),
            },
            Elem::StubCall {
                mock: VarRef::Local(2),
                method: "getPasswordHash".into(),
                matchers: vec![],
                reaction: Reaction::Return(VarRef::Local(3)),
            },
        ])
    }

    #[test]
    fn listing_validates_and_round_trips() {
        let (p, t) = fixture();
        let sp = listing(&p);
        assert_eq!(sp.validate(&p, &t), vec![]);
        let text = sp.render();
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains("when dao.findUser(eq(v0)) thenThrow v1;"));
        assert!(text.contains("let v2 = mock Account;"));
        let back = StubProgram::parse(&text, &p, &t).unwrap();
        assert_eq!(back, sp);
    }

    #[test]
    fn render_of_hash_chain() {
        let (p, t) = fixture();
        let sp = StubProgram::new(vec![
            Elem::VarDef { var: 0, expr: Expr::MockCreate("Account".into()) },
            lit(2, Literal::Str("bar".into())),
            Elem::VarDef { var: 3, expr: Expr::ApiCall { sym: sym(&p, SymbolKind::Builtin, "", "sha1Hex", 1), args: vec![VarRef::Local(2)] } },
            Elem::StubCall { mock: VarRef::Local(0), method: "getPasswordHash".into(), matchers: vec![], reaction: Reaction::Return(VarRef::Local(3)) },
        ]);
        assert!(sp.is_valid(&p, &t));
        let text = sp.render();
        assert!(text.ends_with("let v2 = \"bar\";\nlet v3 = sha1Hex(v2);\nwhen v0.getPasswordHash() thenReturn v3;\n"));
        assert_eq!(StubProgram::default().render(), "");
    }

    #[test]
    fn violations_are_reported() {
        let (p, t) = fixture();
        let undefined = StubProgram::new(vec![Elem::StubCall {
            mock: VarRef::Scope("dao".into()),
            method: "findUser".into(),
            matchers: vec![ArgMatcher::Eq(VarRef::Local(9))],
            reaction: Reaction::Return(VarRef::Local(9)),
        }]);
        assert!(matches!(undefined.validate(&p, &t)[0], Violation::Undefined { elem: 0, .. }));

        let long = StubProgram::new((0..51).map(|i| lit(i, Literal::Int(i as i64))).collect());
        assert!(long.validate(&p, &t).contains(&Violation::TooLong { len: 51 }));
        let limit = StubProgram::new((0..50).map(|i| lit(i, Literal::Int(i as i64))).collect());
        assert!(limit.is_valid(&p, &t));

        let wrong_ty = StubProgram::new(vec![
            lit(0, Literal::Int(1)),
            Elem::StubCall {
                mock: VarRef::Scope("dao".into()),
                method: "findUser".into(),
                matchers: vec![ArgMatcher::Eq(VarRef::Local(0))],
                reaction: Reaction::Throw(VarRef::Local(0)),
            },
        ]);
        assert_eq!(wrong_ty.validate(&p, &t).len(), 2);

        let not_mock = StubProgram::new(vec![Elem::StubCall {
            mock: VarRef::Scope("svc".into()),
            method: "go".into(),
            matchers: vec![ArgMatcher::Any],
            reaction: Reaction::Return(VarRef::Scope("svc".into())),
        }]);
        assert!(!not_mock.is_valid(&p, &t));
    }

    #[test]
    fn slice_carries_dependencies() {
        let (p, _) = fixture();
        let sp = listing(&p);
        assert_eq!(sp.slice_indices(5), vec![0, 3, 5]);
        assert_eq!(sp.slice_indices(6), vec![3, 4, 6]);
        assert_eq!(sp.slice_indices(0), vec![0]);
        let s = sp.backward_slice(2);
        assert_eq!(s.backward_slice(s.len() - 1), s);
    }

    #[test]
    fn canonical_renumbers_in_definition_order() {
        let sp = StubProgram::new(vec![
            lit(7, Literal::Int(1)),
            lit(3, Literal::Int(2)),
            Elem::VarDef { var: 9, expr: Expr::ArrayOf { elem: Type::Int, items: vec![VarRef::Local(3), VarRef::Local(7)] } },
        ]);
        let c = sp.canonical();
        assert_eq!(c.elems[2], Elem::VarDef { var: 2, expr: Expr::ArrayOf { elem: Type::Int, items: vec![VarRef::Local(1), VarRef::Local(0)] } });
        assert_eq!(sp.unused_defs(), vec![2]);
    }

    #[test]
    fn literals_render_parseably() {
        let (p, t) = fixture();
        let sp = StubProgram::new(vec![
            lit(0, Literal::Int(-5)),
            lit(1, Literal::Real(-0.0)),
            lit(2, Literal::Real(1e20)),
            lit(3, Literal::Real(2.5e-7)),
            lit(4, Literal::Str("a\"b\\\n\u{7}".into())),
            lit(5, Literal::Int(i64::MAX)),
        ]);
        let back = StubProgram::parse(&sp.render(), &p, &t).unwrap();
        assert_eq!(back, sp);
        let Elem::VarDef { expr: Expr::Literal(Literal::Real(z)), .. } = &back.elems[1] else { panic!() };
        assert!(z.is_sign_negative());
    }
}

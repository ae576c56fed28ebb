//! Name resolution and static typing.

use std::collections::{BTreeSet, HashSet};

use super::ast::*;
use super::LangError;

/// Signature of a builtin function, `None` for the polymorphic `size`.
pub fn builtin_sig(name: &str) -> Option<(&'static [Type], Type)> {
    const STR1: &[Type] = &[Type::Str];
    const STR2: &[Type] = &[Type::Str, Type::Str];
    const INT1: &[Type] = &[Type::Int];
    Some(match name {
        "sha1Hex" => (STR1, Type::Str),
        "toStr" => (INT1, Type::Str),
        "len" => (STR1, Type::Int),
        "abs" => (INT1, Type::Int),
        "contains" => (STR2, Type::Bool),
        "upper" => (STR1, Type::Str),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: &[&str] = &["sha1Hex", "toStr", "len", "abs", "contains", "upper"];

/// `v` followed by digits; reserved for synthesized stub variables.
pub fn is_stub_var_name(name: &str) -> bool {
    name.len() > 1 && name.starts_with('v') && name[1..].bytes().all(|b| b.is_ascii_digit())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Program,
    Test,
    Act,
    Arrange,
}

pub(crate) struct Checker<'p> {
    prog: &'p Program,
    scopes: Vec<Vec<(String, Type)>>,
    class: Option<String>,
    ret: Option<Type>,
    loops: u32,
    ctx: Ctx,
}

fn terr<T>(line: u32, msg: impl Into<String>) -> Result<T, LangError> {
    Err(LangError::Type { line, msg: msg.into() })
}

impl<'p> Checker<'p> {
    fn new(prog: &'p Program, ctx: Ctx) -> Self {
        Checker { prog, scopes: vec![vec![]], class: None, ret: None, loops: 0, ctx }
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn declare(&mut self, line: u32, name: &str, ty: Type) -> Result<(), LangError> {
        if self.ctx != Ctx::Arrange && is_stub_var_name(name) {
            return terr(line, format!("identifier `{name}` is reserved for synthesized stub variables"));
        }
        if BUILTIN_NAMES.contains(&name) {
            return terr(line, format!("`{name}` shadows a builtin function"));
        }
        let top = self.scopes.last_mut().unwrap();
        if top.iter().any(|(n, _)| n == name) {
            return terr(line, format!("`{name}` is already declared in this scope"));
        }
        top.push((name.to_string(), ty));
        Ok(())
    }

    fn check_type_exists(&self, line: u32, ty: &Type) -> Result<(), LangError> {
        if ty == &Type::Null || !self.prog.type_exists(ty) {
            return terr(line, format!("unknown type `{ty}`"));
        }
        Ok(())
    }

    fn block(&mut self, b: &mut Block) -> Result<(), LangError> {
        self.scopes.push(vec![]);
        let r = b.iter_mut().try_for_each(|s| self.stmt(s));
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &mut Stmt) -> Result<(), LangError> {
        let line = s.line;
        if self.ctx == Ctx::Act
            && !matches!(s.kind, StmtKind::Let { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_))
        {
            return terr(line, "act block must be straight-line (let, assignment, or call statements only)");
        }
        match &mut s.kind {
            StmtKind::Let { name, ty, init } => {
                let it = self.expr(init)?;
                let decl = match ty {
                    Some(t) => {
                        self.check_type_exists(line, t)?;
                        if !t.accepts(&it) {
                            return terr(line, format!("cannot initialise `{name}: {t}` with {it}"));
                        }
                        t.clone()
                    }
                    None => {
                        if it == Type::Null {
                            return terr(line, format!("`let {name} = null` needs a type annotation"));
                        }
                        if matches!(&it, Type::Array(inner) if **inner == Type::Null) {
                            return terr(line, format!("empty array `{name}` needs a type annotation"));
                        }
                        it
                    }
                };
                if decl == Type::Void {
                    return terr(line, "cannot bind a void value");
                }
                let name = name.clone();
                self.declare(line, &name, decl)?;
            }
            StmtKind::Assign { target, value } => {
                if !matches!(target.kind, ExprKind::Var(_) | ExprKind::Field(..) | ExprKind::Index(..)) {
                    return terr(line, "left side of `=` is not assignable");
                }
                let tt = self.expr(target)?;
                let vt = self.expr(value)?;
                if !tt.accepts(&vt) {
                    return terr(line, format!("cannot assign {vt} to {tt}"));
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::If { cond, then, els } => {
                self.bool_expr(cond)?;
                self.block(then)?;
                if let Some(b) = els {
                    self.block(b)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.bool_expr(cond)?;
                self.loops += 1;
                let r = self.block(body);
                self.loops -= 1;
                r?;
            }
            StmtKind::Return(e) => {
                let Some(ret) = self.ret.clone() else {
                    return terr(line, "`return` outside of a method");
                };
                match e {
                    None if ret == Type::Void => {}
                    None => return terr(line, format!("missing return value of type {ret}")),
                    Some(e) => {
                        let t = self.expr(e)?;
                        if ret == Type::Void || !ret.accepts(&t) {
                            return terr(line, format!("cannot return {t} from a method returning {ret}"));
                        }
                    }
                }
            }
            StmtKind::Throw(e) => {
                let t = self.expr(e)?;
                if !matches!(&t, Type::Named(n) if self.prog.is_exception(n)) {
                    return terr(line, format!("cannot throw non-exception {t}"));
                }
            }
            StmtKind::Try { body, catches } => {
                self.block(body)?;
                for c in catches.iter_mut() {
                    if !self.prog.is_exception(&c.exception) {
                        return terr(line, format!("`{}` is not an exception type", c.exception));
                    }
                    self.scopes.push(vec![]);
                    let r = self
                        .declare(line, &c.var, Type::Named(c.exception.clone()))
                        .and_then(|_| c.body.iter_mut().try_for_each(|s| self.stmt(s)));
                    self.scopes.pop();
                    r?;
                }
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.loops == 0 {
                    return terr(line, "`break`/`continue` outside of a loop");
                }
            }
            StmtKind::When { mock, method, matchers, reaction } => {
                if self.ctx != Ctx::Arrange {
                    return terr(line, "stub registration is only allowed at the stub site");
                }
                let mt = self.expr(mock)?;
                let sig = match &mt {
                    Type::Named(n) => self.prog.interface(n).and_then(|i| i.method(method)).cloned(),
                    _ => None,
                };
                let Some(sig) = sig else {
                    return terr(line, format!("`{mt}` has no mockable method `{method}`"));
                };
                if matchers.len() != sig.params.len() {
                    return terr(
                        line,
                        format!("`{method}` takes {} argument(s), got {} matcher(s)", sig.params.len(), matchers.len()),
                    );
                }
                for (m, p) in matchers.iter_mut().zip(&sig.params) {
                    if let MatcherExpr::Eq(e) = m {
                        let t = self.expr(e)?;
                        if !p.ty.accepts(&t) {
                            return terr(line, format!("matcher for `{}` expects {}, got {t}", p.name, p.ty));
                        }
                    }
                }
                match reaction {
                    ReactionExpr::Return(e) => {
                        let t = self.expr(e)?;
                        if sig.ret == Type::Void || !sig.ret.accepts(&t) {
                            return terr(line, format!("`{method}` returns {}, cannot return {t}", sig.ret));
                        }
                    }
                    ReactionExpr::Throw(e) => {
                        let t = self.expr(e)?;
                        if !matches!(&t, Type::Named(n) if self.prog.is_exception(n)) {
                            return terr(line, format!("cannot throw non-exception {t}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn bool_expr(&mut self, e: &mut Expr) -> Result<(), LangError> {
        let t = self.expr(e)?;
        if t != Type::Bool {
            return terr(e.line, format!("condition must be Bool, got {t}"));
        }
        Ok(())
    }

    fn args_against(&mut self, line: u32, what: &str, params: &[Type], args: &mut [Expr]) -> Result<(), LangError> {
        if params.len() != args.len() {
            return terr(line, format!("{what} takes {} argument(s), got {}", params.len(), args.len()));
        }
        for (i, (p, a)) in params.iter().zip(args.iter_mut()).enumerate() {
            let t = self.expr(a)?;
            if !p.accepts(&t) {
                return terr(line, format!("argument {} of {what} expects {p}, got {t}", i + 1));
            }
        }
        Ok(())
    }

    pub(crate) fn expr(&mut self, e: &mut Expr) -> Result<Type, LangError> {
        let line = e.line;
        let ty = match &mut e.kind {
            ExprKind::Int(_) => Type::Int,
            ExprKind::Real(_) => Type::Real,
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Str(_) => Type::Str,
            ExprKind::Null => Type::Null,
            ExprKind::Var(n) => match self.lookup(n) {
                Some(t) => t.clone(),
                None => return terr(line, format!("undeclared variable `{n}`")),
            },
            ExprKind::SelfRef => match &self.class {
                Some(c) => Type::Named(c.clone()),
                None => return terr(line, "`self` outside of a class"),
            },
            ExprKind::Field(recv, f) => {
                let rt = self.expr(recv)?;
                let Type::Named(n) = &rt else {
                    return terr(line, format!("{rt} has no fields"));
                };
                if self.prog.is_exception(n) && f == "message" {
                    Type::Str
                } else {
                    match self.prog.fields_of(n).and_then(|fs| fs.iter().find(|p| p.name == *f)) {
                        Some(p) => p.ty.clone(),
                        None => return terr(line, format!("`{n}` has no field `{f}`")),
                    }
                }
            }
            ExprKind::Index(arr, idx) => {
                let at = self.expr(arr)?;
                let it = self.expr(idx)?;
                if it != Type::Int {
                    return terr(line, format!("array index must be Int, got {it}"));
                }
                match at {
                    Type::Array(inner) if *inner != Type::Null => *inner,
                    other => return terr(line, format!("cannot index into {other}")),
                }
            }
            ExprKind::Call { recv, method, args } => {
                let rt = self.expr(recv)?;
                let Type::Named(n) = &rt else {
                    return terr(line, format!("{rt} has no methods"));
                };
                let sig = if let Some(c) = self.prog.class(n) {
                    c.method(method).map(|m| m.sig.clone())
                } else if let Some(i) = self.prog.interface(n) {
                    i.method(method).cloned()
                } else {
                    None
                };
                let Some(sig) = sig else {
                    return terr(line, format!("`{n}` has no method `{method}`"));
                };
                let params: Vec<Type> = sig.params.iter().map(|p| p.ty.clone()).collect();
                self.args_against(line, &format!("`{n}.{method}`"), &params, args)?;
                sig.ret
            }
            ExprKind::New { ty, args } => {
                let params: Vec<Type> = if let Some(r) = self.prog.record(ty) {
                    r.fields.iter().map(|p| p.ty.clone()).collect()
                } else if let Some(c) = self.prog.class(ty) {
                    c.ctor_params().into_iter().map(|p| p.ty).collect()
                } else if self.prog.is_exception(ty) {
                    if args.is_empty() {
                        vec![]
                    } else {
                        vec![Type::Str]
                    }
                } else if self.prog.interface(ty).is_some() {
                    return terr(line, format!("cannot instantiate interface `{ty}`"));
                } else {
                    return terr(line, format!("unknown type `{ty}`"));
                };
                let ty = ty.clone();
                self.args_against(line, &format!("`new {ty}`"), &params, args)?;
                Type::Named(ty)
            }
            ExprKind::Builtin { name, args } => {
                if name == "size" {
                    if args.len() != 1 {
                        return terr(line, "size takes one argument");
                    }
                    match self.expr(&mut args[0])? {
                        Type::Array(_) => Type::Int,
                        other => return terr(line, format!("size expects an array, got {other}")),
                    }
                } else {
                    let Some((params, ret)) = builtin_sig(name) else {
                        return terr(line, format!("unknown function `{name}`"));
                    };
                    let name = name.clone();
                    self.args_against(line, &format!("`{name}`"), params, args)?;
                    ret
                }
            }
            ExprKind::Array(items) => {
                let mut elem = Type::Null;
                for it in items.iter_mut() {
                    let t = self.expr(it)?;
                    if t == Type::Void {
                        return terr(line, "array element cannot be void");
                    }
                    if elem == Type::Null {
                        elem = t;
                    } else if t != Type::Null && t != elem {
                        return terr(line, format!("array mixes {elem} and {t}"));
                    }
                }
                if elem == Type::Null && !items.is_empty() {
                    return terr(line, "array of only nulls needs a typed element");
                }
                Type::Array(Box::new(elem))
            }
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner)?;
                match op {
                    UnOp::Neg if t.is_numeric() => t,
                    UnOp::Not if t == Type::Bool => t,
                    _ => return terr(line, format!("bad operand {t} for unary operator")),
                }
            }
            ExprKind::Binary(op, l, r) => {
                if self.ctx == Ctx::Act && matches!(op, BinOp::And | BinOp::Or) {
                    return terr(line, "act block must be straight-line (no short-circuit operators)");
                }
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                let op = *op;
                binary_type(op, &lt, &rt).ok_or_else(|| LangError::Type {
                    line,
                    msg: format!("operator `{}` not defined for {lt} and {rt}", op.symbol()),
                })?
            }
            ExprKind::MockNew(iface) => {
                if self.ctx != Ctx::Arrange {
                    return terr(line, "`mock T` is only allowed at the stub site");
                }
                if self.prog.interface(iface).is_none() {
                    return terr(line, format!("`{iface}` is not an interface"));
                }
                Type::Named(iface.clone())
            }
        };
        e.ty = ty.clone();
        Ok(ty)
    }
}

pub fn binary_type(op: BinOp, lt: &Type, rt: &Type) -> Option<Type> {
    use BinOp::*;
    match op {
        Add if *lt == Type::Str && *rt == Type::Str => Some(Type::Str),
        Add | Sub | Mul | Div | Rem if lt == rt && lt.is_numeric() => Some(lt.clone()),
        Lt | Le | Gt | Ge if lt == rt && lt.is_numeric() => Some(Type::Bool),
        Eq | Ne if lt == rt || lt.accepts(rt) || rt.accepts(lt) => Some(Type::Bool),
        And | Or if *lt == Type::Bool && *rt == Type::Bool => Some(Type::Bool),
        _ => None,
    }
}

pub(crate) fn check_program(prog: &mut Program) -> Result<(), LangError> {
    let mut names = HashSet::new();
    let all_names = prog
        .records
        .iter()
        .map(|r| &r.name)
        .chain(prog.exceptions.iter())
        .chain(prog.interfaces.iter().map(|i| &i.name))
        .chain(prog.classes.iter().map(|c| &c.name));
    for n in all_names {
        if !names.insert(n.clone()) {
            return terr(0, format!("type `{n}` declared twice"));
        }
    }
    let view = prog.clone();
    let check_params = |ps: &[Param], what: &str| -> Result<(), LangError> {
        let mut seen = HashSet::new();
        for p in ps {
            if !seen.insert(&p.name) {
                return terr(0, format!("duplicate name `{}` in {what}", p.name));
            }
            if p.ty == Type::Void || p.ty == Type::Null || !view.type_exists(&p.ty) {
                return terr(0, format!("unknown type `{}` in {what}", p.ty));
            }
        }
        Ok(())
    };
    for r in &view.records {
        check_params(&r.fields, &format!("record `{}`", r.name))?;
    }
    for i in &view.interfaces {
        let mut seen = HashSet::new();
        for m in &i.methods {
            if !seen.insert(&m.name) {
                return terr(0, format!("duplicate method `{}.{}`", i.name, m.name));
            }
            check_params(&m.params, &format!("`{}.{}`", i.name, m.name))?;
            if m.ret != Type::Void && !view.type_exists(&m.ret) {
                return terr(0, format!("unknown return type `{}` in `{}.{}`", m.ret, i.name, m.name));
            }
        }
    }
    for c in &view.classes {
        check_params(&c.fields, &format!("class `{}`", c.name))?;
        let mut seen = HashSet::new();
        for m in &c.methods {
            if !seen.insert(&m.sig.name) {
                return terr(m.line, format!("duplicate method `{}.{}`", c.name, m.sig.name));
            }
            check_params(&m.sig.params, &format!("`{}.{}`", c.name, m.sig.name))?;
        }
    }

    for class in prog.classes.iter_mut() {
        let cname = class.name.clone();
        let bodies = class.ctor.iter_mut().chain(class.methods.iter_mut());
        for f in bodies {
            let mut ck = Checker::new(&view, Ctx::Program);
            ck.class = Some(cname.clone());
            ck.ret = Some(f.sig.ret.clone());
            if f.sig.ret != Type::Void && !view.type_exists(&f.sig.ret) {
                return terr(f.line, format!("unknown return type `{}`", f.sig.ret));
            }
            for p in &f.sig.params {
                ck.declare(f.line, &p.name, p.ty.clone())?;
            }
            ck.block(&mut f.body)?;
        }
    }
    Ok(())
}

pub(crate) fn check_test(
    prog: &Program,
    raw: super::parser::RawTest,
    instr_start: InstrId,
    instr_end: InstrId,
    source: &str,
) -> Result<TestCase, LangError> {
    let mut ck = Checker::new(prog, Ctx::Test);
    let mut mocks = Vec::new();
    for (m, line) in raw.mocks {
        if prog.interface(&m.iface).is_none() {
            return terr(line, format!("mock `{}` must have an interface type, `{}` is not one", m.name, m.iface));
        }
        ck.declare(line, &m.name, Type::Named(m.iface.clone()))?;
        mocks.push(m);
    }
    let mut setup = raw.setup;
    for s in setup.iter_mut() {
        if matches!(s.kind, StmtKind::Return(_)) {
            return terr(s.line, "`return` outside of a method");
        }
        ck.stmt(s)?;
    }
    let scope = ck.scopes[0].clone();

    let mut act = raw.act;
    if act.is_empty() {
        return terr(0, "act block is empty");
    }
    ck.ctx = Ctx::Act;
    for s in act.iter_mut() {
        ck.stmt(s)?;
    }
    ck.ctx = Ctx::Test;

    let mut asserts = raw.asserts;
    if asserts.is_empty() {
        return terr(0, "test has no assertions");
    }
    for a in asserts.iter_mut() {
        let line = a.line;
        match &mut a.kind {
            AssertKind::Equals { expected, actual } => {
                for e in [expected, actual] {
                    if ck.expr(e)? == Type::Void {
                        return terr(line, "assertEquals operand is void");
                    }
                }
            }
            AssertKind::True(e) => ck.bool_expr(e)?,
            AssertKind::NotNull(e) => {
                let t = ck.expr(e)?;
                if !t.is_reference() {
                    return terr(line, format!("assertNotNull expects a reference, got {t}"));
                }
            }
            AssertKind::Same(x, y) => {
                ck.expr(x)?;
                ck.expr(y)?;
            }
            AssertKind::Throws { exception, body } => {
                if !prog.is_exception(exception) {
                    return terr(line, format!("`{exception}` is not an exception type"));
                }
                ck.block(body)?;
            }
            AssertKind::Verify { mock, method, matchers, .. } => {
                let Some(decl) = mocks.iter().find(|m| m.name == *mock) else {
                    return terr(line, format!("verify target `{mock}` is not a declared mock"));
                };
                let sig = prog.interface(&decl.iface).and_then(|i| i.method(method)).cloned();
                let Some(sig) = sig else {
                    return terr(line, format!("`{}` has no method `{method}`", decl.iface));
                };
                if matchers.len() != sig.params.len() {
                    return terr(line, format!("verify of `{method}` needs {} matcher(s)", sig.params.len()));
                }
                for (m, p) in matchers.iter_mut().zip(&sig.params) {
                    if let MatcherExpr::Eq(e) = m {
                        let t = ck.expr(e)?;
                        if !p.ty.accepts(&t) {
                            return terr(line, format!("verify matcher expects {}, got {t}", p.ty));
                        }
                    }
                }
            }
        }
    }

    let mut act_ids = BTreeSet::new();
    collect_block_ids(&act, &mut act_ids);
    Ok(TestCase {
        name: raw.name,
        mocks,
        setup,
        act,
        asserts,
        act_ids,
        scope,
        instr_start,
        instr_end,
        source: source.to_string(),
    })
}

pub(crate) fn check_arrange(prog: &Program, test: &TestCase, stmts: &mut Block) -> Result<(), LangError> {
    let mut ck = Checker::new(prog, Ctx::Arrange);
    ck.scopes = vec![test.scope.clone(), vec![]];
    for s in stmts.iter_mut() {
        if !matches!(s.kind, StmtKind::Let { .. } | StmtKind::Expr(_) | StmtKind::When { .. }) {
            return terr(s.line, "stub code may only contain variable definitions and stub registrations");
        }
        ck.stmt(s)?;
    }
    Ok(())
}

//! Random construction of stub elements from the symbol pool.

use rand::seq::SliceRandom;
use rand::Rng;

use super::pool::{scope_vars, SymbolPool};
use super::{EngineRng, EvolveError};
use crate::minilang::ast::{Program, TestCase, Type};
use crate::minilang::Literal;
use crate::stubir::{ApiSymbol, ArgMatcher, Elem, Expr, Reaction, StubProgram, VarId, VarRef};

/// Nesting limit for generated definitions.
pub const MAX_DEPTH: u32 = 3;
/// Chance a non-void stub reaction throws.
pub const THROW_PROB: f64 = 0.25;

/// How a reference-typed value gets produced.
#[derive(Debug, Clone, PartialEq)]
pub enum MockChoice {
    Mock(String),
    Real(ApiSymbol),
}

/// Mocking decision for an object type. Types mocked by the test are
/// always mocks; other types pick between a fresh mock (interfaces only)
/// and a generator symbol with equal odds, or take the only option.
pub fn mock_or_real(pool: &SymbolPool, ty: &Type, rng: &mut EngineRng) -> Result<MockChoice, EvolveError> {
    let Type::Named(name) = ty else { return Err(EvolveError::NoGenerator(ty.clone())) };
    if pool.is_test_mocked(ty) {
        return Ok(MockChoice::Mock(name.clone()));
    }
    let gens: Vec<&ApiSymbol> = pool.generators(ty).collect();
    let mockable = pool.is_mockable(ty);
    match (mockable, gens.is_empty()) {
        (false, true) => Err(EvolveError::NoGenerator(ty.clone())),
        (true, true) => Ok(MockChoice::Mock(name.clone())),
        (false, false) => Ok(MockChoice::Real((*gens.choose(rng).expect("nonempty")).clone())),
        (true, false) => {
            if rng.gen_bool(0.5) {
                Ok(MockChoice::Mock(name.clone()))
            } else {
                Ok(MockChoice::Real((*gens.choose(rng).expect("nonempty")).clone()))
            }
        }
    }
}

fn random_literal(ty: &Type, rng: &mut EngineRng) -> Option<Literal> {
    Some(match ty {
        Type::Int => Literal::Int(rng.gen_range(-10..=100)),
        Type::Real => Literal::Real((rng.gen_range(-1000..=10000) as f64) / 100.0),
        Type::Bool => Literal::Bool(rng.gen_bool(0.5)),
        Type::Str => {
            let n = rng.gen_range(0..=5);
            Literal::Str((0..n).map(|_| rng.gen_range(b'a'..=b'z') as char).collect())
        }
        _ => return None,
    })
}

pub struct Gen<'a> {
    pub prog: &'a Program,
    pub test: &'a TestCase,
    pub pool: &'a SymbolPool,
    pub rng: &'a mut EngineRng,
    pub next_var: VarId,
}

impl<'a> Gen<'a> {
    pub fn new(prog: &'a Program, test: &'a TestCase, pool: &'a SymbolPool, rng: &'a mut EngineRng, next_var: VarId) -> Self {
        Gen { prog, test, pool, rng, next_var }
    }

    /// Variables of exactly type `ty` visible after the elements of `sp`.
    pub fn vars_of_type(&self, sp: &StubProgram, ty: &Type) -> Vec<VarRef> {
        let mut out: Vec<VarRef> =
            scope_vars(self.test).filter(|(_, t)| t == ty).map(|(n, _)| VarRef::Scope(n.clone())).collect();
        out.extend(sp.var_types().into_iter().filter(|(_, t)| t == ty).map(|(v, _)| VarRef::Local(v)));
        out
    }

    /// Mock variables visible after the elements of `sp`.
    pub fn mock_vars(&self, sp: &StubProgram) -> Vec<VarRef> {
        let mut out: Vec<VarRef> = self.test.mocks.iter().map(|m| VarRef::Scope(m.name.clone())).collect();
        out.extend(sp.elems.iter().filter_map(|e| match e {
            Elem::VarDef { var, expr: Expr::MockCreate(_) } => Some(VarRef::Local(*var)),
            _ => None,
        }));
        out
    }

    fn push_def(&mut self, sp: &mut StubProgram, expr: Expr) -> VarRef {
        let var = self.next_var;
        self.next_var += 1;
        sp.elems.push(Elem::VarDef { var, expr });
        VarRef::Local(var)
    }

    /// A variable of type `ty`: an existing one with probability 1/2,
    /// otherwise a new definition appended to `sp` along with whatever it
    /// needs. On failure `sp` is left unchanged.
    pub fn gen_var(&mut self, sp: &mut StubProgram, ty: &Type, depth: u32) -> Option<VarRef> {
        let existing = self.vars_of_type(sp, ty);
        if self.pool.is_test_mocked(ty) {
            return existing.choose(self.rng).cloned();
        }
        if !existing.is_empty() && self.rng.gen_bool(0.5) {
            return existing.choose(self.rng).cloned();
        }
        let mark = sp.elems.len();
        let r = self.new_var(sp, ty, depth);
        if r.is_none() {
            sp.elems.truncate(mark);
            return existing.choose(self.rng).cloned();
        }
        r
    }

    fn new_var(&mut self, sp: &mut StubProgram, ty: &Type, depth: u32) -> Option<VarRef> {
        match ty {
            Type::Int | Type::Real | Type::Bool | Type::Str => {
                if depth < MAX_DEPTH && self.rng.gen_bool(1.0 / 3.0) {
                    if let Some(sym) = self.pick_generator(ty, depth) {
                        return self.api_call(sp, sym, depth);
                    }
                }
                let lits: Vec<&Literal> = self.pool.literals_of(ty).collect();
                let lit = match lits.choose(self.rng) {
                    Some(l) => (*l).clone(),
                    None => random_literal(ty, self.rng)?,
                };
                Some(self.push_def(sp, Expr::Literal(lit)))
            }
            Type::Array(inner) => {
                if depth < MAX_DEPTH && self.rng.gen_bool(1.0 / 3.0) {
                    if let Some(sym) = self.pick_generator(ty, depth) {
                        return self.api_call(sp, sym, depth);
                    }
                }
                let n = if depth < MAX_DEPTH { self.rng.gen_range(0..=2) } else { 0 };
                let mut items = Vec::new();
                for _ in 0..n {
                    if let Some(v) = self.gen_var(sp, inner, depth + 1) {
                        items.push(v);
                    }
                }
                Some(self.push_def(sp, Expr::ArrayOf { elem: (**inner).clone(), items }))
            }
            Type::Named(n) if self.prog.is_exception(n) => {
                let sym = self.pick_generator(ty, depth)?;
                self.api_call(sp, sym, depth)
            }
            Type::Named(_) => {
                let choice = if depth < MAX_DEPTH {
                    mock_or_real(self.pool, ty, self.rng).ok()?
                } else if self.pool.is_mockable(ty) {
                    MockChoice::Mock(ty.to_string())
                } else {
                    MockChoice::Real(self.pick_generator(ty, depth)?)
                };
                match choice {
                    MockChoice::Mock(i) => Some(self.push_def(sp, Expr::MockCreate(i))),
                    MockChoice::Real(sym) => self.api_call(sp, sym, depth),
                }
            }
            Type::Void | Type::Null => None,
        }
    }

    fn pick_generator(&mut self, ty: &Type, depth: u32) -> Option<ApiSymbol> {
        let gens: Vec<&ApiSymbol> =
            self.pool.generators(ty).filter(|s| depth < MAX_DEPTH || s.params.is_empty()).collect();
        gens.choose(self.rng).map(|s| (*s).clone())
    }

    fn api_call(&mut self, sp: &mut StubProgram, sym: ApiSymbol, depth: u32) -> Option<VarRef> {
        let mut args = Vec::with_capacity(sym.params.len());
        for p in &sym.params {
            args.push(self.gen_var(sp, p, depth + 1)?);
        }
        Some(self.push_def(sp, Expr::ApiCall { sym, args }))
    }

    /// Appends a random stub call, on `target` if given, preceded by the
    /// definitions it needs. Returns false and leaves `sp` unchanged when no
    /// call could be built.
    pub fn gen_stub_call(&mut self, sp: &mut StubProgram, target: Option<VarRef>) -> bool {
        let mark = sp.elems.len();
        let ok = self.try_stub_call(sp, target).is_some();
        if !ok {
            sp.elems.truncate(mark);
        }
        ok
    }

    fn try_stub_call(&mut self, sp: &mut StubProgram, target: Option<VarRef>) -> Option<()> {
        let mock = match target {
            Some(t) => t,
            None => self.mock_vars(sp).choose(self.rng)?.clone(),
        };
        let Some(Type::Named(iface)) = StubProgram::ref_type(&mock, &sp.var_types(), self.test) else { return None };
        let prog = self.prog;
        let sig = prog.interface(&iface)?.methods.choose(self.rng)?;
        let mut matchers = Vec::with_capacity(sig.params.len());
        for p in &sig.params {
            let m = if self.rng.gen_bool(0.5) {
                ArgMatcher::Any
            } else {
                self.gen_var(sp, &p.ty, 1).map(ArgMatcher::Eq).unwrap_or(ArgMatcher::Any)
            };
            matchers.push(m);
        }
        let throw = sig.ret == Type::Void || self.rng.gen_bool(THROW_PROB);
        let reaction = if throw {
            let exc = self.pool.exceptions.choose(self.rng)?.clone();
            Reaction::Throw(self.gen_var(sp, &Type::Named(exc), 1)?)
        } else {
            Reaction::Return(self.gen_var(sp, &sig.ret, 1)?)
        };
        sp.elems.push(Elem::StubCall { mock, method: sig.name.clone(), matchers, reaction });
        Some(())
    }

    /// Random genome: 0 to `max_per_mock` stub calls for each test mock.
    pub fn initial(&mut self, max_per_mock: usize, max_len: usize) -> StubProgram {
        let mut sp = StubProgram::default();
        let test = self.test;
        for m in &test.mocks {
            let k = self.rng.gen_range(0..=max_per_mock);
            for _ in 0..k {
                self.gen_stub_call(&mut sp, Some(VarRef::Scope(m.name.clone())));
            }
        }
        sp.elems.truncate(max_len);
        sp.canonical()
    }
}

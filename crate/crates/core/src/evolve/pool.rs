//! Symbol pool: the literals, API symbols, and types genomes are built from.

use serde::{Deserialize, Serialize};

use crate::minilang::ast::{Program, TestCase, Type};
use crate::minilang::check::is_stub_var_name;
use crate::minilang::{lex_literals, Literal};
use crate::stubir::{ApiSymbol, SymbolKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolPool {
    /// Deduplicated literals: test source first, then the program, then the
    /// broken stub.
    pub literals: Vec<Literal>,
    pub symbols: Vec<ApiSymbol>,
    /// Interface types a stub may create fresh mocks of.
    pub mockable: Vec<String>,
    /// Interface types of the mocks declared by the test.
    pub test_mocks: Vec<String>,
    /// Exception types stub reactions may throw.
    pub exceptions: Vec<String>,
}

impl SymbolPool {
    pub fn construct(test: &TestCase, prog: &Program, broken: Option<&str>) -> SymbolPool {
        let mut literals: Vec<Literal> = Vec::new();
        let sources = [Some(test.source.as_str()), Some(prog.source.as_str()), broken];
        for lit in sources.into_iter().flatten().flat_map(lex_literals) {
            if !literals.contains(&lit) {
                literals.push(lit);
            }
        }
        let mut exceptions: Vec<String> = prog.declared_exceptions().cloned().collect();
        if exceptions.is_empty() {
            exceptions = prog.exceptions.clone();
        }
        let mut test_mocks: Vec<String> = Vec::new();
        for m in &test.mocks {
            if !test_mocks.contains(&m.iface) {
                test_mocks.push(m.iface.clone());
            }
        }
        SymbolPool {
            literals,
            symbols: ApiSymbol::all(prog),
            mockable: prog.interfaces.iter().map(|i| i.name.clone()).collect(),
            test_mocks,
            exceptions,
        }
    }

    pub fn literals_of<'a>(&'a self, ty: &'a Type) -> impl Iterator<Item = &'a Literal> + 'a {
        self.literals.iter().filter(move |l| match (l, ty) {
            (Literal::Int(_), Type::Int) | (Literal::Real(_), Type::Real) | (Literal::Bool(_), Type::Bool) => true,
            (Literal::Str(_), Type::Str) => true,
            _ => false,
        })
    }

    pub fn strings(&self) -> impl Iterator<Item = &str> {
        self.literals.iter().filter_map(|l| match l {
            Literal::Str(s) => Some(s.as_str()),
            _ => None,
        })
    }

    /// Symbols producing a value of type `ty`.
    pub fn generators<'a>(&'a self, ty: &'a Type) -> impl Iterator<Item = &'a ApiSymbol> + 'a {
        self.symbols.iter().filter(move |s| s.ret == *ty)
    }

    pub fn has_symbol(&self, kind: SymbolKind, name: &str) -> bool {
        self.symbols.iter().any(|s| s.kind == kind && s.name == name)
    }

    /// Mocked by a test declaration rather than decided by the search.
    pub fn is_test_mocked(&self, ty: &Type) -> bool {
        matches!(ty, Type::Named(n) if self.test_mocks.contains(n))
    }

    pub fn is_mockable(&self, ty: &Type) -> bool {
        matches!(ty, Type::Named(n) if self.mockable.contains(n))
    }
}

/// Test-scope variables a stub may reference, excluding reserved names.
pub(crate) fn scope_vars(test: &TestCase) -> impl Iterator<Item = &(String, Type)> {
    test.scope.iter().filter(|(n, _)| !is_stub_var_name(n))
}

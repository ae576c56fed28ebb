//! Mock-object runtime: stub registration, argument matching, ordered
//! reactions, invocation recording, and call-count verification.
//!
//! A runtime belongs to one interpreter execution. Calls that match no stub
//! entry degrade to the return type's default value instead of failing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::ast::{InterfaceDecl, MethodSig};
use crate::minilang::value::{default_value, ExceptionValue, Heap, MockId, Value};

/// Test phase a dispatch happened in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Arrange,
    Act,
    Assert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Matcher {
    Any,
    /// Snapshot of the referenced value, taken at registration time.
    Eq(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Reaction {
    Return(Value),
    Throw(ExceptionValue),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubEntry {
    pub mock: MockId,
    pub method: String,
    pub matchers: Vec<Matcher>,
    pub reaction: Reaction,
    /// Registration (appearance) order.
    pub index: usize,
    pub use_count: u64,
    /// Uses that happened while the act block was running.
    pub act_use_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub mock: MockId,
    pub method: String,
    pub args: Vec<Value>,
    /// Global sequence number within one execution.
    pub seq: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockObject {
    pub iface: String,
    pub label: String,
    methods: Vec<MethodSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MockError {
    #[error("no live mock with handle {0}")]
    UnknownMock(u32),
    #[error("interface `{iface}` has no method `{method}`")]
    UnknownMethod { iface: String, method: String },
    #[error("`{method}` takes {expected} argument(s), got {got} matcher(s)")]
    ArityMismatch { method: String, expected: usize, got: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockRuntime {
    mocks: Vec<MockObject>,
    entries: Vec<StubEntry>,
    log: Vec<Invocation>,
    #[serde(skip)]
    consumed: HashMap<(MockId, String, Vec<usize>), u64>,
}

impl MockRuntime {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_mock(&mut self, iface: &InterfaceDecl, label: impl Into<String>) -> MockId {
        self.mocks.push(MockObject { iface: iface.name.clone(), label: label.into(), methods: iface.methods.clone() });
        MockId((self.mocks.len() - 1) as u32)
    }

    pub fn mock(&self, id: MockId) -> Option<&MockObject> {
        self.mocks.get(id.0 as usize)
    }

    fn sig(&self, mock: MockId, method: &str) -> Result<&MethodSig, MockError> {
        let m = self.mock(mock).ok_or(MockError::UnknownMock(mock.0))?;
        m.methods
            .iter()
            .find(|s| s.name == method)
            .ok_or_else(|| MockError::UnknownMethod { iface: m.iface.clone(), method: method.to_string() })
    }

    /// Appends a stub entry; returns its registration index.
    pub fn register_stub(
        &mut self,
        mock: MockId,
        method: &str,
        matchers: Vec<Matcher>,
        reaction: Reaction,
    ) -> Result<usize, MockError> {
        let sig = self.sig(mock, method)?;
        if sig.params.len() != matchers.len() {
            return Err(MockError::ArityMismatch {
                method: method.to_string(),
                expected: sig.params.len(),
                got: matchers.len(),
            });
        }
        let index = self.entries.len();
        self.entries.push(StubEntry {
            mock,
            method: method.to_string(),
            matchers,
            reaction,
            index,
            use_count: 0,
            act_use_count: 0,
        });
        Ok(index)
    }

    fn matches(heap: &Heap, matchers: &[Matcher], args: &[Value]) -> bool {
        matchers.len() == args.len()
            && matchers.iter().zip(args).all(|(m, a)| match m {
                Matcher::Any => true,
                Matcher::Eq(v) => heap.deep_eq(v, a),
            })
    }

    /// Records the call and picks the reaction: the k-th call whose matching
    /// entry set is `L` fires `L[min(k, |L|) - 1]`.
    pub fn dispatch(
        &mut self,
        heap: &mut Heap,
        mock: MockId,
        method: &str,
        args: Vec<Value>,
        phase: Phase,
    ) -> Result<Reaction, MockError> {
        let ret = self.sig(mock, method)?.ret.clone();
        let matching: Vec<usize> = self
            .entries
            .iter()
            .filter(|e| e.mock == mock && e.method == method && Self::matches(heap, &e.matchers, &args))
            .map(|e| e.index)
            .collect();
        self.log.push(Invocation { mock, method: method.to_string(), args, seq: self.log.len() as u64, phase });
        if matching.is_empty() {
            return Ok(Reaction::Return(default_value(&ret, heap)));
        }
        let k = self.consumed.entry((mock, method.to_string(), matching.clone())).or_insert(0);
        *k += 1;
        let pick = matching[(*k as usize).min(matching.len()) - 1];
        let entry = &mut self.entries[pick];
        entry.use_count += 1;
        if phase == Phase::Act {
            entry.act_use_count += 1;
        }
        Ok(entry.reaction.clone())
    }

    /// True iff exactly `times` logged calls match `(mock, method, matchers)`.
    pub fn verify(&self, heap: &Heap, mock: MockId, method: &str, matchers: &[Matcher], times: u64) -> bool {
        self.count_matching(heap, mock, method, matchers) == times
    }

    pub fn count_matching(&self, heap: &Heap, mock: MockId, method: &str, matchers: &[Matcher]) -> u64 {
        self.log
            .iter()
            .filter(|i| i.mock == mock && i.method == method && Self::matches(heap, matchers, &i.args))
            .count() as u64
    }

    /// Number of distinct stub entries used at least once during the act phase.
    pub fn used_count(&self) -> usize {
        self.entries.iter().filter(|e| e.act_use_count >= 1).count()
    }

    pub fn entries(&self) -> &[StubEntry] {
        &self.entries
    }

    pub fn log(&self) -> &[Invocation] {
        &self.log
    }

    pub fn mocks(&self) -> &[MockObject] {
        &self.mocks
    }
}

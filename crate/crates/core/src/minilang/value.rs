//! Runtime values and the per-execution object heap.
//!
//! Records, class instances, and arrays live in a [`Heap`] owned by one
//! execution and are referred to by handle, which gives `assertSame` its
//! identity semantics and lets cyclic structures exist.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ast::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjRef(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MockId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExceptionValue {
    pub ty: String,
    pub message: String,
}

impl ExceptionValue {
    pub fn new(ty: impl Into<String>, message: impl Into<String>) -> Self {
        ExceptionValue { ty: ty.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    Null,
    Array(ObjRef),
    /// Record or class instance.
    Record(ObjRef),
    Exception(ExceptionValue),
    Mock(MockId),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Static type of a scalar literal value; `None` for heap values.
    pub fn scalar_type(&self) -> Option<Type> {
        match self {
            Value::Int(_) => Some(Type::Int),
            Value::Real(_) => Some(Type::Real),
            Value::Bool(_) => Some(Type::Bool),
            Value::Str(_) => Some(Type::Str),
            Value::Null => Some(Type::Null),
            _ => None,
        }
    }

    /// The `==` operator: value equality for scalars and exceptions, handle
    /// identity for everything on the heap and for mocks.
    pub fn shallow_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a == b,
            _ => self == other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Object {
    Record { ty: String, fields: Vec<(String, Value)> },
    Array(Vec<Value>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Heap {
    objects: Vec<Object>,
}

impl Heap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, obj: Object) -> ObjRef {
        self.objects.push(obj);
        ObjRef((self.objects.len() - 1) as u32)
    }

    pub fn get(&self, r: ObjRef) -> &Object {
        &self.objects[r.0 as usize]
    }

    pub fn get_mut(&mut self, r: ObjRef) -> &mut Object {
        &mut self.objects[r.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn record(&mut self, ty: &str, fields: Vec<(String, Value)>) -> Value {
        Value::Record(self.alloc(Object::Record { ty: ty.to_string(), fields }))
    }

    pub fn array(&mut self, items: Vec<Value>) -> Value {
        Value::Array(self.alloc(Object::Array(items)))
    }

    /// Structural equality; cycles are compared coinductively.
    pub fn deep_eq(&self, a: &Value, b: &Value) -> bool {
        let mut seen = HashSet::new();
        self.deep_eq_inner(a, b, &mut seen)
    }

    fn deep_eq_inner(&self, a: &Value, b: &Value, seen: &mut HashSet<(ObjRef, ObjRef)>) -> bool {
        match (a, b) {
            (Value::Array(x), Value::Array(y)) | (Value::Record(x), Value::Record(y)) => {
                if x == y || !seen.insert((*x, *y)) {
                    return true;
                }
                match (self.get(*x), self.get(*y)) {
                    (Object::Array(xs), Object::Array(ys)) => {
                        xs.len() == ys.len() && xs.iter().zip(ys).all(|(p, q)| self.deep_eq_inner(p, q, seen))
                    }
                    (Object::Record { ty: tx, fields: fx }, Object::Record { ty: ty_, fields: fy }) => {
                        tx == ty_
                            && fx.len() == fy.len()
                            && fx.iter().zip(fy).all(|((nx, vx), (ny, vy))| nx == ny && self.deep_eq_inner(vx, vy, seen))
                    }
                    _ => false,
                }
            }
            _ => a.shallow_eq(b),
        }
    }

    /// Deep copy of a value's object graph, preserving sharing and cycles.
    pub fn snapshot(&mut self, v: &Value) -> Value {
        let mut memo = HashMap::new();
        self.snapshot_inner(v, &mut memo)
    }

    fn snapshot_inner(&mut self, v: &Value, memo: &mut HashMap<ObjRef, ObjRef>) -> Value {
        let (r, is_array) = match v {
            Value::Array(r) => (*r, true),
            Value::Record(r) => (*r, false),
            other => return other.clone(),
        };
        if let Some(c) = memo.get(&r) {
            return if is_array { Value::Array(*c) } else { Value::Record(*c) };
        }
        let placeholder = self.alloc(Object::Array(vec![]));
        memo.insert(r, placeholder);
        let copied = match self.get(r).clone() {
            Object::Array(items) => Object::Array(items.iter().map(|x| self.snapshot_inner(x, memo)).collect()),
            Object::Record { ty, fields } => Object::Record {
                ty,
                fields: fields.into_iter().map(|(n, x)| (n, self.snapshot_inner(&x, memo))).collect(),
            },
        };
        *self.get_mut(placeholder) = copied;
        if is_array {
            Value::Array(placeholder)
        } else {
            Value::Record(placeholder)
        }
    }
}

/// Value an unstubbed call (or an uninitialised field) yields for a type.
pub fn default_value(ty: &Type, heap: &mut Heap) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Real => Value::Real(0.0),
        Type::Bool => Value::Bool(false),
        Type::Str => Value::Str(String::new()),
        Type::Array(_) => heap.array(vec![]),
        Type::Void | Type::Null | Type::Named(_) => Value::Null,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_eq_is_structural_and_identity_is_not() {
        let mut h = Heap::new();
        let a = h.record("User", vec![("name".into(), Value::Str("foo".into()))]);
        let b = h.record("User", vec![("name".into(), Value::Str("foo".into()))]);
        assert!(h.deep_eq(&a, &b));
        assert!(!a.shallow_eq(&b));
        let c = h.record("User", vec![("name".into(), Value::Str("bar".into()))]);
        assert!(!h.deep_eq(&a, &c));
    }

    #[test]
    fn deep_eq_terminates_on_cycles() {
        let mut h = Heap::new();
        let a = h.array(vec![]);
        let b = h.array(vec![]);
        let (Value::Array(ra), Value::Array(rb)) = (&a, &b) else { unreachable!() };
        *h.get_mut(*ra) = Object::Array(vec![a.clone()]);
        *h.get_mut(*rb) = Object::Array(vec![b.clone()]);
        assert!(h.deep_eq(&a, &b));
    }

    #[test]
    fn snapshot_is_detached_from_later_mutation() {
        let mut h = Heap::new();
        let a = h.array(vec![Value::Int(1)]);
        let snap = h.snapshot(&a);
        let Value::Array(ra) = a else { unreachable!() };
        *h.get_mut(ra) = Object::Array(vec![Value::Int(2)]);
        let Value::Array(rs) = snap else { unreachable!() };
        assert_eq!(h.get(rs), &Object::Array(vec![Value::Int(1)]));
    }
}

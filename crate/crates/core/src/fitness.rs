//! Three-objective fitness of a candidate stub: stub utilization (SU),
//! exercise coverage (EC), and assertion status (AS), with the dominance and
//! weighted-sum comparators.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit_distance::levenshtein_str;
use crate::minilang::interp::{AssertionOutcome, ExecutionReport};
use crate::minilang::lexer::quote_str;
use crate::minilang::value::{Heap, Object, ObjRef, Value};
use crate::minilang::InstrId;

/// Default saturation constant for SU.
pub const DEFAULT_C: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("act block has no instructions")]
    EmptyActBlock,
    #[error("test has no assertions")]
    EmptyOracle,
}

/// `tanh(used / c)`.
pub fn stub_utilization(used: usize, c: f64) -> f64 {
    (used as f64 / c).tanh()
}

/// Fraction of the act block's instructions that ran.
pub fn exercise_coverage(executed: &BTreeSet<InstrId>, act_ids: &BTreeSet<InstrId>) -> Result<f64, FitnessError> {
    if act_ids.is_empty() {
        return Err(FitnessError::EmptyActBlock);
    }
    Ok(executed.intersection(act_ids).count() as f64 / act_ids.len() as f64)
}

fn denominator(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x
    }
}

/// Distance between an expected value `x` and an actual value `y`, in
/// `[0, 1]`.
///
/// Numbers: `tanh(|x - y| / |x|)`. Strings: `tanh(lev(x, y) / len(x))`. In
/// both, a zero denominator becomes 1. Booleans and null mismatches are
/// `tanh(1)`. Anything else, including an `Int` against a `Real`, compares
/// the [`serialize_deep`] forms as strings. Undefined arithmetic (NaN,
/// infinities) yields 1.
pub fn distance(heap: &Heap, x: &Value, y: &Value) -> f64 {
    let d = match (x, y) {
        (Value::Int(a), Value::Int(b)) => {
            let diff = (*a as i128 - *b as i128).unsigned_abs() as f64;
            (diff / denominator((*a as i128).unsigned_abs() as f64)).tanh()
        }
        (Value::Real(a), Value::Real(b)) => {
            if a == b {
                0.0
            } else {
                ((a - b).abs() / denominator(a.abs())).tanh()
            }
        }
        (Value::Str(a), Value::Str(b)) => string_distance(a, b),
        (Value::Bool(a), Value::Bool(b)) => {
            if a == b {
                0.0
            } else {
                1f64.tanh()
            }
        }
        (Value::Null, Value::Null) => 0.0,
        (Value::Null, _) | (_, Value::Null) => 1f64.tanh(),
        _ => string_distance(&serialize_deep(heap, x), &serialize_deep(heap, y)),
    };
    if d.is_nan() {
        1.0
    } else {
        d
    }
}

fn string_distance(a: &str, b: &str) -> f64 {
    let lev = levenshtein_str(a, b) as f64;
    (lev / denominator(a.chars().count() as f64)).tanh()
}

/// Score of one assertion outcome: 1 when satisfied, `1 - d(expected,
/// actual)` for a failing `assertEquals`, 0 otherwise.
///
/// A failing `assertEquals` whose distance rounds to 0 scores one ulp below
/// 1, so a score of exactly 1 always means the assertion held.
pub fn assertion_score(heap: &Heap, outcome: &AssertionOutcome) -> f64 {
    match outcome {
        AssertionOutcome::Satisfied => 1.0,
        AssertionOutcome::Failed { expected, actual } => {
            (1.0 - distance(heap, expected, actual)).min(1.0 - f64::EPSILON).max(0.0)
        }
        AssertionOutcome::FailedNonEquals | AssertionOutcome::NotExecuted => 0.0,
    }
}

/// Mean of the per-assertion scores.
pub fn assertion_status(scores: &[f64]) -> Result<f64, FitnessError> {
    if scores.is_empty() {
        return Err(FitnessError::EmptyOracle);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Canonical deep text form of a value.
///
/// Records print as `Type{field=value,...}` in declaration order, arrays as
/// `[a,b]`, strings quoted, exceptions as `Type("message")`, and mocks as
/// `<mock N>`. A reference back to an object that is still being printed
/// prints as `<cycle>`.
pub fn serialize_deep(heap: &Heap, v: &Value) -> String {
    let mut out = String::new();
    let mut path = Vec::new();
    write_value(heap, v, &mut path, &mut out);
    out
}

fn write_value(heap: &Heap, v: &Value, path: &mut Vec<ObjRef>, out: &mut String) {
    match v {
        Value::Int(i) => out.push_str(&i.to_string()),
        Value::Real(r) => {
            let s = format!("{r}");
            out.push_str(&s);
            if r.is_finite() && !s.contains('.') {
                out.push_str(".0");
            }
        }
        Value::Bool(b) => out.push_str(&b.to_string()),
        Value::Str(s) => out.push_str(&quote_str(s)),
        Value::Null => out.push_str("null"),
        Value::Exception(x) => {
            out.push_str(&x.ty);
            out.push('(');
            out.push_str(&quote_str(&x.message));
            out.push(')');
        }
        Value::Mock(m) => out.push_str(&format!("<mock {}>", m.0)),
        Value::Array(r) | Value::Record(r) => {
            if path.contains(r) {
                out.push_str("<cycle>");
                return;
            }
            path.push(*r);
            match heap.get(*r) {
                Object::Array(items) => {
                    out.push('[');
                    for (i, x) in items.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        write_value(heap, x, path, out);
                    }
                    out.push(']');
                }
                Object::Record { ty, fields } => {
                    out.push_str(ty);
                    out.push('{');
                    for (i, (n, x)) in fields.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push_str(n);
                        out.push('=');
                        write_value(heap, x, path, out);
                    }
                    out.push('}');
                }
            }
            path.pop();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessTriple {
    pub su: f64,
    pub ec: f64,
    #[serde(rename = "as")]
    pub as_: f64,
    pub pass: bool,
}

impl FitnessTriple {
    pub fn new(su: f64, ec: f64, as_: f64) -> Self {
        FitnessTriple { su, ec, as_, pass: false }
    }

    /// Fitness of one execution. The act block and oracle of a checked test
    /// are never empty.
    pub fn from_report(report: &ExecutionReport, act_ids: &BTreeSet<InstrId>, c: f64) -> Self {
        let scores: Vec<f64> = report.assertions.iter().map(|a| assertion_score(&report.heap, a)).collect();
        FitnessTriple {
            su: stub_utilization(report.used_in_act, c),
            ec: exercise_coverage(&report.executed_in_act, act_ids).unwrap_or(0.0),
            as_: assertion_status(&scores).unwrap_or(0.0),
            pass: report.passed(),
        }
    }

    /// Lexicographic comparison on (AS, EC, SU).
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.as_
            .total_cmp(&other.as_)
            .then(self.ec.total_cmp(&other.ec))
            .then(self.su.total_cmp(&other.su))
    }
}

/// `f1` is strictly better than `f2`: higher AS, or equal AS and higher EC,
/// or equal AS and EC and higher SU.
pub fn dominates(f1: &FitnessTriple, f2: &FitnessTriple) -> bool {
    f1.as_ > f2.as_
        || (f1.as_ == f2.as_ && f1.ec > f2.ec)
        || (f1.as_ == f2.as_ && f1.ec == f2.ec && f1.su > f2.su)
}

/// `SU + 2·EC + 4·AS`.
pub fn weighted_sum(f: &FitnessTriple) -> f64 {
    f.su + 2.0 * f.ec + 4.0 * f.as_
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::value::ExceptionValue;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn su_values() {
        assert_eq!(stub_utilization(0, 10.0), 0.0);
        assert!(close(stub_utilization(10, 10.0), 0.761_594_155_955_764_9));
        assert!(stub_utilization(6, 10.0) > stub_utilization(5, 10.0));
    }

    #[test]
    fn ec_values() {
        let e: BTreeSet<InstrId> = (0..10).collect();
        assert_eq!(exercise_coverage(&(0..7).collect(), &e), Ok(0.7));
        assert_eq!(exercise_coverage(&BTreeSet::new(), &e), Ok(0.0));
        assert_eq!(exercise_coverage(&e, &e), Ok(1.0));
        assert_eq!(exercise_coverage(&e, &BTreeSet::new()), Err(FitnessError::EmptyActBlock));
    }

    #[test]
    fn distance_cases() {
        let h = Heap::new();
        let s = |x: &str| Value::Str(x.into());
        assert_eq!(distance(&h, &Value::Int(5), &Value::Int(5)), 0.0);
        assert!(close(distance(&h, &s("/actuator/health"), &s("/actuator/hea")), (3.0f64 / 16.0).tanh()));
        assert!(close(distance(&h, &Value::Int(0), &Value::Int(7)), 7f64.tanh()));
        assert!(close(distance(&h, &s(""), &s("ab")), 2f64.tanh()));
        assert!(close(distance(&h, &Value::Bool(true), &Value::Bool(false)), 1f64.tanh()));
        assert!(close(distance(&h, &Value::Null, &s("x")), 1f64.tanh()));
        assert_eq!(distance(&h, &Value::Real(f64::NAN), &Value::Real(1.0)), 1.0);
        // Int against Real: "1" vs "1.0"
        assert!(close(distance(&h, &Value::Int(1), &Value::Real(1.0)), 2f64.tanh()));
        assert_eq!(distance(&h, &Value::Int(i64::MIN), &Value::Int(i64::MIN)), 0.0);
    }

    #[test]
    fn scores_and_status() {
        let h = Heap::new();
        let failed = AssertionOutcome::Failed { expected: Value::Str("abc".into()), actual: Value::Str("abc!".into()) };
        assert!(close(assertion_score(&h, &failed), 1.0 - (1.0f64 / 3.0).tanh()));
        assert_eq!(assertion_score(&h, &AssertionOutcome::NotExecuted), 0.0);
        assert_eq!(assertion_score(&h, &AssertionOutcome::Satisfied), 1.0);
        let near = AssertionOutcome::Failed { expected: Value::Real(1e300), actual: Value::Real(1e300 * (1.0 + 1e-16)) };
        assert!(assertion_score(&h, &near) < 1.0);
        assert_eq!(assertion_status(&[1.0, 0.0]), Ok(0.5));
        assert!(close(assertion_status(&[0.2, 0.4, 0.6]).unwrap(), 0.4));
        assert_eq!(assertion_status(&[]), Err(FitnessError::EmptyOracle));
    }

    #[test]
    fn serialization_forms() {
        let mut h = Heap::new();
        let u = h.record("User", vec![("name".into(), Value::Str("foo".into()))]);
        assert_eq!(serialize_deep(&h, &u), "User{name=\"foo\"}");
        assert_eq!(serialize_deep(&h, &Value::Int(5)), "5");
        let arr = h.array(vec![Value::Real(2.0), Value::Null, Value::Exception(ExceptionValue::new("E", "m"))]);
        assert_eq!(serialize_deep(&h, &arr), "[2.0,null,E(\"m\")]");

        let a = h.record("Node", vec![("next".into(), Value::Null)]);
        let b = h.record("Node", vec![("next".into(), a.clone())]);
        let (Value::Record(ra), Value::Record(_)) = (&a, &b) else { unreachable!() };
        *h.get_mut(*ra) = Object::Record { ty: "Node".into(), fields: vec![("next".into(), b.clone())] };
        let s = serialize_deep(&h, &a);
        assert_eq!(s, "Node{next=Node{next=<cycle>}}");
        assert_eq!(s.matches("<cycle>").count(), 1);
    }

    #[test]
    fn dominance_clauses() {
        let f = FitnessTriple::new;
        assert!(dominates(&f(0.0, 0.1, 0.9), &f(1.0, 1.0, 0.8)));
        assert!(dominates(&f(0.0, 0.5, 0.3), &f(0.9, 0.4, 0.3)));
        assert!(dominates(&f(0.2, 0.5, 0.3), &f(0.1, 0.5, 0.3)));
        assert!(!dominates(&f(0.2, 0.5, 0.3), &f(0.2, 0.5, 0.3)));
        assert_eq!(weighted_sum(&f(1.0, 1.0, 1.0)), 7.0);
        assert_eq!(weighted_sum(&f(0.0, 0.0, 0.0)), 0.0);
        assert!(close(weighted_sum(&f(1f64.tanh(), 0.5, 0.25)), 1f64.tanh() + 2.0));
    }
}

//! Tree-walking interpreter with instruction tracing.
//!
//! Every statement, expression, and assertion node evaluated pushes its id
//! onto the trace and costs one step. Execution is bounded by a global step
//! budget, a per-loop iteration cap, and a call-depth limit; hitting any of
//! them ends the run with [`Outcome::BudgetExceeded`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use super::ast::*;
use super::value::{default_value, ExceptionValue, Heap, Object, Value};
use crate::mockrt::{Invocation, Matcher, MockRuntime, Phase, Reaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub step_budget: u64,
    pub loop_cap: u64,
    pub max_depth: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { step_budget: 1_000_000, loop_cap: 10_000, max_depth: 256 }
    }
}

/// A single-site fault seeded into the program at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    pub target: InstrId,
    pub op: MutationOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MutationOp {
    /// Evaluate the binary node at `target` with a different operator.
    ReplaceBinOp(BinOp),
    /// Negate the condition of the `if`/`while` statement at `target`.
    NegateCondition,
    /// Add a constant to the integer literal at `target`.
    AddConst(i64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecOptions {
    pub limits: Limits,
    pub mutation: Option<Mutation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    UncaughtException(ExceptionValue),
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AssertionOutcome {
    Satisfied,
    /// A failing `assertEquals` with its operands.
    Failed { expected: Value, actual: Value },
    /// Any other failing assertion.
    FailedNonEquals,
    NotExecuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubUsage {
    pub index: usize,
    pub uses: u64,
    pub act_uses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    /// Every instruction evaluated, in order.
    pub trace: Vec<InstrId>,
    /// Position in `trace` where the act phase begins; the trace length
    /// when arrangement aborted.
    pub act_start: usize,
    pub executed_in_act: BTreeSet<InstrId>,
    pub act_size: usize,
    pub outcome: Outcome,
    pub assertions: Vec<AssertionOutcome>,
    pub stub_usage: Vec<StubUsage>,
    /// Distinct stub entries used during the act phase.
    pub used_in_act: usize,
    pub invocations: Vec<Invocation>,
    pub steps: u64,
    /// Heap the values in `assertions` refer to.
    pub heap: Heap,
}

impl ExecutionReport {
    /// Completed with every assertion satisfied.
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Completed && self.assertions.iter().all(|a| *a == AssertionOutcome::Satisfied)
    }
}

enum Abort {
    Throw(ExceptionValue),
    Budget,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

type Res<T> = Result<T, Abort>;

fn throw<T>(ty: &str, msg: impl Into<String>) -> Res<T> {
    Err(Abort::Throw(ExceptionValue::new(ty, msg)))
}

struct Frame {
    vars: Vec<(String, Value)>,
    this: Option<Value>,
}

struct Interp<'a> {
    prog: &'a Program,
    heap: Heap,
    mocks: MockRuntime,
    trace: Vec<InstrId>,
    steps: u64,
    opts: &'a ExecOptions,
    phase: Phase,
    depth: u32,
    frames: Vec<Frame>,
}

impl<'a> Interp<'a> {
    fn step(&mut self, id: InstrId) -> Res<()> {
        self.trace.push(id);
        self.steps += 1;
        if self.steps > self.opts.limits.step_budget {
            return Err(Abort::Budget);
        }
        Ok(())
    }

    fn mutation_at(&self, id: InstrId) -> Option<MutationOp> {
        self.opts.mutation.filter(|m| m.target == id).map(|m| m.op)
    }

    fn frame(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("no active frame")
    }

    fn lookup(&self, name: &str) -> Value {
        let f = self.frames.last().expect("no active frame");
        f.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v.clone()).unwrap_or(Value::Null)
    }

    fn set_var(&mut self, name: &str, v: Value) {
        let f = self.frame();
        if let Some(slot) = f.vars.iter_mut().rev().find(|(n, _)| n == name) {
            slot.1 = v;
        }
    }

    fn exec_block(&mut self, b: &Block) -> Res<Flow> {
        let mark = self.frame().vars.len();
        let r = self.exec_stmts(b);
        self.frame().vars.truncate(mark);
        r
    }

    fn exec_stmts(&mut self, b: &Block) -> Res<Flow> {
        for s in b {
            match self.exec_stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn cond(&mut self, stmt: InstrId, e: &Expr) -> Res<bool> {
        let Value::Bool(b) = self.eval(e)? else { return throw("NullError", "condition is not a boolean") };
        Ok(if self.mutation_at(stmt) == Some(MutationOp::NegateCondition) { !b } else { b })
    }

    fn exec_stmt(&mut self, s: &Stmt) -> Res<Flow> {
        self.step(s.id)?;
        match &s.kind {
            StmtKind::Let { name, init, .. } => {
                let v = self.eval(init)?;
                self.frame().vars.push((name.clone(), v));
            }
            StmtKind::Assign { target, value } => {
                self.step(target.id)?;
                match &target.kind {
                    ExprKind::Var(n) => {
                        let v = self.eval(value)?;
                        self.set_var(n, v);
                    }
                    ExprKind::Field(recv, f) => {
                        let r = self.eval(recv)?;
                        let v = self.eval(value)?;
                        let Value::Record(obj) = r else { return throw("NullError", format!("write of `{f}` on null")) };
                        if let Object::Record { fields, .. } = self.heap.get_mut(obj) {
                            if let Some(slot) = fields.iter_mut().find(|(n, _)| n == f) {
                                slot.1 = v;
                            }
                        }
                    }
                    ExprKind::Index(arr, idx) => {
                        let a = self.eval(arr)?;
                        let i = self.eval(idx)?;
                        let v = self.eval(value)?;
                        let Value::Array(obj) = a else { return throw("NullError", "index write on null") };
                        let Value::Int(i) = i else { unreachable!("checked index type") };
                        let Object::Array(items) = self.heap.get_mut(obj) else { unreachable!() };
                        match usize::try_from(i).ok().filter(|i| *i < items.len()) {
                            Some(i) => items[i] = v,
                            None => return throw("IndexError", format!("index {i} out of bounds")),
                        }
                    }
                    _ => unreachable!("checked assignment target"),
                }
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::If { cond, then, els } => {
                if self.cond(s.id, cond)? {
                    return self.exec_block(then);
                } else if let Some(b) = els {
                    return self.exec_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                let mut iterations = 0u64;
                while self.cond(s.id, cond)? {
                    iterations += 1;
                    if iterations > self.opts.limits.loop_cap {
                        return Err(Abort::Budget);
                    }
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Throw(e) => {
                return match self.eval(e)? {
                    Value::Exception(x) => Err(Abort::Throw(x)),
                    _ => throw("NullError", "throw of null"),
                };
            }
            StmtKind::Try { body, catches } => match self.exec_block(body) {
                Err(Abort::Throw(x)) => {
                    let Some(c) = catches.iter().find(|c| c.exception == x.ty) else {
                        return Err(Abort::Throw(x));
                    };
                    let mark = self.frame().vars.len();
                    self.frame().vars.push((c.var.clone(), Value::Exception(x)));
                    let r = self.exec_stmts(&c.body);
                    self.frame().vars.truncate(mark);
                    return r;
                }
                other => return other,
            },
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::When { mock, method, matchers, reaction } => {
                let target = self.eval(mock)?;
                let mut ms = Vec::with_capacity(matchers.len());
                for m in matchers {
                    ms.push(match m {
                        MatcherExpr::Any => Matcher::Any,
                        MatcherExpr::Eq(e) => {
                            let v = self.eval(e)?;
                            Matcher::Eq(self.heap.snapshot(&v))
                        }
                    });
                }
                let r = match reaction {
                    ReactionExpr::Return(e) => Reaction::Return(self.eval(e)?),
                    ReactionExpr::Throw(e) => match self.eval(e)? {
                        Value::Exception(x) => Reaction::Throw(x),
                        _ => return throw("NullError", "thenThrow of null"),
                    },
                };
                let Value::Mock(id) = target else { return throw("NullError", format!("stubbing `{method}` on null")) };
                if let Err(e) = self.mocks.register_stub(id, method, ms, r) {
                    return throw("NullError", e.to_string());
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn eval_args(&mut self, args: &[Expr]) -> Res<Vec<Value>> {
        args.iter().map(|a| self.eval(a)).collect()
    }

    fn call_method(&mut self, class: &'a ClassDecl, f: &'a FnDecl, this: Value, args: Vec<Value>) -> Res<Value> {
        if self.depth >= self.opts.limits.max_depth {
            return Err(Abort::Budget);
        }
        self.depth += 1;
        let vars = f.sig.params.iter().map(|p| p.name.clone()).zip(args).collect();
        self.frames.push(Frame { vars, this: Some(this) });
        let r = self.exec_block(&f.body);
        self.frames.pop();
        self.depth -= 1;
        let _ = class;
        match r? {
            Flow::Return(v) => Ok(v),
            _ => Ok(default_value(&f.sig.ret, &mut self.heap)),
        }
    }

    fn eval(&mut self, e: &Expr) -> Res<Value> {
        self.step(e.id)?;
        Ok(match &e.kind {
            ExprKind::Int(v) => match self.mutation_at(e.id) {
                Some(MutationOp::AddConst(d)) => Value::Int(v.wrapping_add(d)),
                _ => Value::Int(*v),
            },
            ExprKind::Real(v) => Value::Real(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Null => Value::Null,
            ExprKind::Var(n) => self.lookup(n),
            ExprKind::SelfRef => self.frames.last().and_then(|f| f.this.clone()).unwrap_or(Value::Null),
            ExprKind::Field(recv, f) => match self.eval(recv)? {
                Value::Record(obj) => match self.heap.get(obj) {
                    Object::Record { fields, .. } => {
                        fields.iter().find(|(n, _)| n == f).map(|(_, v)| v.clone()).unwrap_or(Value::Null)
                    }
                    Object::Array(_) => Value::Null,
                },
                Value::Exception(x) => Value::Str(x.message),
                _ => return throw("NullError", format!("read of `{f}` on null")),
            },
            ExprKind::Index(arr, idx) => {
                let a = self.eval(arr)?;
                let i = self.eval(idx)?;
                let Value::Array(obj) = a else { return throw("NullError", "index on null") };
                let Value::Int(i) = i else { unreachable!("checked index type") };
                let Object::Array(items) = self.heap.get(obj) else { unreachable!() };
                match usize::try_from(i).ok().and_then(|i| items.get(i)) {
                    Some(v) => v.clone(),
                    None => return throw("IndexError", format!("index {i} out of bounds")),
                }
            }
            ExprKind::Call { recv, method, args } => {
                let r = self.eval(recv)?;
                let args = self.eval_args(args)?;
                match r {
                    Value::Mock(id) => {
                        let reaction = self.mocks.dispatch(&mut self.heap, id, method, args, self.phase);
                        match reaction {
                            Ok(Reaction::Return(v)) => v,
                            Ok(Reaction::Throw(x)) => return Err(Abort::Throw(x)),
                            Err(err) => return throw("NullError", err.to_string()),
                        }
                    }
                    Value::Record(obj) => {
                        let Object::Record { ty, .. } = self.heap.get(obj) else { unreachable!() };
                        let prog = self.prog;
                        let class = prog.class(ty).expect("checked receiver class");
                        let f = class.method(method).expect("checked method");
                        self.call_method(class, f, Value::Record(obj), args)?
                    }
                    _ => return throw("NullError", format!("call of `{method}` on null")),
                }
            }
            ExprKind::New { ty, args } => {
                let args = self.eval_args(args)?;
                let prog = self.prog;
                if let Some(r) = prog.record(ty) {
                    let fields = r.fields.iter().map(|p| p.name.clone()).zip(args).collect();
                    self.heap.record(ty, fields)
                } else if let Some(c) = prog.class(ty) {
                    let fields = c.fields.iter().map(|p| (p.name.clone(), default_value(&p.ty, &mut self.heap))).collect();
                    let obj = self.heap.record(ty, fields);
                    match &c.ctor {
                        Some(ctor) => {
                            self.call_method(c, ctor, obj.clone(), args)?;
                        }
                        None => {
                            let Value::Record(r) = obj else { unreachable!() };
                            if let Object::Record { fields, .. } = self.heap.get_mut(r) {
                                for (slot, v) in fields.iter_mut().zip(args) {
                                    slot.1 = v;
                                }
                            }
                        }
                    }
                    obj
                } else {
                    let msg = match args.into_iter().next() {
                        Some(Value::Str(s)) => s,
                        _ => String::new(),
                    };
                    Value::Exception(ExceptionValue::new(ty.clone(), msg))
                }
            }
            ExprKind::Builtin { name, args } => {
                let args = self.eval_args(args)?;
                self.builtin(name, args)?
            }
            ExprKind::Array(items) => {
                let vals = self.eval_args(items)?;
                self.heap.array(vals)
            }
            ExprKind::Unary(op, inner) => match (op, self.eval(inner)?) {
                (UnOp::Neg, Value::Int(v)) => Value::Int(v.wrapping_neg()),
                (UnOp::Neg, Value::Real(v)) => Value::Real(-v),
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                _ => unreachable!("checked unary operand"),
            },
            ExprKind::Binary(op, l, r) => {
                let op = match self.mutation_at(e.id) {
                    Some(MutationOp::ReplaceBinOp(m)) => m,
                    _ => *op,
                };
                self.binary(op, l, r)?
            }
            ExprKind::MockNew(iface) => {
                let prog = self.prog;
                let decl = prog.interface(iface).expect("checked interface");
                let label = format!("mock{}", self.mocks.mocks().len());
                Value::Mock(self.mocks.create_mock(decl, label))
            }
        })
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr) -> Res<Value> {
        if matches!(op, BinOp::And | BinOp::Or) {
            let Value::Bool(a) = self.eval(l)? else { unreachable!() };
            if (op == BinOp::And && !a) || (op == BinOp::Or && a) {
                return Ok(Value::Bool(a));
            }
            return self.eval(r);
        }
        let a = self.eval(l)?;
        let b = self.eval(r)?;
        use BinOp::*;
        Ok(match (op, a, b) {
            (Eq, a, b) => Value::Bool(a.shallow_eq(&b)),
            (Ne, a, b) => Value::Bool(!a.shallow_eq(&b)),
            (Add, Value::Str(x), Value::Str(y)) => Value::Str(x + &y),
            (op, Value::Int(x), Value::Int(y)) => match op {
                Add => Value::Int(x.wrapping_add(y)),
                Sub => Value::Int(x.wrapping_sub(y)),
                Mul => Value::Int(x.wrapping_mul(y)),
                Div | Rem if y == 0 => return throw("ArithmeticError", "division by zero"),
                Div => Value::Int(x.wrapping_div(y)),
                Rem => Value::Int(x.wrapping_rem(y)),
                Lt => Value::Bool(x < y),
                Le => Value::Bool(x <= y),
                Gt => Value::Bool(x > y),
                Ge => Value::Bool(x >= y),
                _ => unreachable!(),
            },
            (op, Value::Real(x), Value::Real(y)) => match op {
                Add => Value::Real(x + y),
                Sub => Value::Real(x - y),
                Mul => Value::Real(x * y),
                Div => Value::Real(x / y),
                Rem => Value::Real(x % y),
                Lt => Value::Bool(x < y),
                Le => Value::Bool(x <= y),
                Gt => Value::Bool(x > y),
                Ge => Value::Bool(x >= y),
                _ => unreachable!(),
            },
            // only reachable through a mutant that swapped in an operator
            // the operand types do not support
            _ => return throw("ArithmeticError", format!("operator `{}` not applicable", op.symbol())),
        })
    }

    fn builtin(&mut self, name: &str, args: Vec<Value>) -> Res<Value> {
        let mut it = args.into_iter();
        let a = it.next().unwrap_or(Value::Null);
        let b = it.next().unwrap_or(Value::Null);
        Ok(match (name, a, b) {
            ("sha1Hex", Value::Str(s), _) => {
                let digest = Sha1::digest(s.as_bytes());
                Value::Str(digest.iter().map(|b| format!("{b:02x}")).collect())
            }
            ("toStr", Value::Int(v), _) => Value::Str(v.to_string()),
            ("len", Value::Str(s), _) => Value::Int(s.chars().count() as i64),
            ("abs", Value::Int(v), _) => Value::Int(v.wrapping_abs()),
            ("contains", Value::Str(s), Value::Str(t)) => Value::Bool(s.contains(t.as_str())),
            ("upper", Value::Str(s), _) => Value::Str(s.to_uppercase()),
            ("size", Value::Array(r), _) => match self.heap.get(r) {
                Object::Array(items) => Value::Int(items.len() as i64),
                _ => unreachable!(),
            },
            (_, Value::Null, _) | (_, _, Value::Null) => return throw("NullError", format!("`{name}` on null")),
            _ => unreachable!("checked builtin arguments"),
        })
    }

    fn run_assertion(&mut self, a: &Assertion) -> Res<AssertionOutcome> {
        self.step(a.id)?;
        let ok = |b: bool| if b { AssertionOutcome::Satisfied } else { AssertionOutcome::FailedNonEquals };
        Ok(match &a.kind {
            AssertKind::Equals { expected, actual } => {
                let x = self.eval(expected)?;
                let y = self.eval(actual)?;
                if self.heap.deep_eq(&x, &y) {
                    AssertionOutcome::Satisfied
                } else {
                    AssertionOutcome::Failed { expected: x, actual: y }
                }
            }
            AssertKind::True(e) => ok(self.eval(e)? == Value::Bool(true)),
            AssertKind::NotNull(e) => ok(!self.eval(e)?.is_null()),
            AssertKind::Same(x, y) => {
                let x = self.eval(x)?;
                let y = self.eval(y)?;
                ok(x.shallow_eq(&y))
            }
            AssertKind::Throws { exception, body } => match self.exec_block(body) {
                Err(Abort::Throw(x)) => ok(x.ty == *exception),
                Err(Abort::Budget) => return Err(Abort::Budget),
                Ok(_) => AssertionOutcome::FailedNonEquals,
            },
            AssertKind::Verify { mock, method, matchers, times } => {
                let mut ms = Vec::with_capacity(matchers.len());
                for m in matchers {
                    ms.push(match m {
                        MatcherExpr::Any => Matcher::Any,
                        MatcherExpr::Eq(e) => Matcher::Eq(self.eval(e)?),
                    });
                }
                let Value::Mock(id) = self.lookup(mock) else { return throw("NullError", "verify on null") };
                ok(self.mocks.verify(&self.heap, id, method, &ms, *times))
            }
        })
    }
}

/// Runs setup, the arrange block, the act block, and every assertion.
///
/// All assertions are evaluated even after one fails; an uncaught exception
/// or budget exhaustion stops execution and leaves the remaining assertions
/// `NotExecuted`.
pub fn execute(prog: &Program, test: &TestCase, arrange: &ArrangeBlock, opts: &ExecOptions) -> ExecutionReport {
    let mut it = Interp {
        prog,
        heap: Heap::new(),
        mocks: MockRuntime::new(),
        trace: Vec::new(),
        steps: 0,
        opts,
        phase: Phase::Arrange,
        depth: 0,
        frames: vec![Frame { vars: vec![], this: None }],
    };
    for m in &test.mocks {
        let decl = prog.interface(&m.iface).expect("checked mock interface");
        let id = it.mocks.create_mock(decl, m.name.clone());
        it.frame().vars.push((m.name.clone(), Value::Mock(id)));
    }

    let mut assertions = vec![AssertionOutcome::NotExecuted; test.asserts.len()];
    let mut outcome = Outcome::Completed;
    let abort_outcome = |a: Abort| match a {
        Abort::Throw(x) => Outcome::UncaughtException(x),
        Abort::Budget => Outcome::BudgetExceeded,
    };

    let mut act_start = None;
    let arranged = it.exec_stmts(&test.setup).and_then(|_| it.exec_stmts(&arrange.stmts));
    let acted = arranged.and_then(|_| {
        it.phase = Phase::Act;
        act_start = Some(it.trace.len());
        it.exec_stmts(&test.act)
    });
    match acted {
        Err(a) => outcome = abort_outcome(a),
        Ok(_) => {
            it.phase = Phase::Assert;
            for (i, a) in test.asserts.iter().enumerate() {
                match it.run_assertion(a) {
                    Ok(o) => assertions[i] = o,
                    Err(Abort::Throw(x)) => {
                        assertions[i] = AssertionOutcome::FailedNonEquals;
                        outcome = Outcome::UncaughtException(x);
                        break;
                    }
                    Err(Abort::Budget) => {
                        outcome = Outcome::BudgetExceeded;
                        break;
                    }
                }
            }
        }
    }

    let executed_in_act = it.trace.iter().copied().filter(|id| test.act_ids.contains(id)).collect();
    let stub_usage = it
        .mocks
        .entries()
        .iter()
        .map(|e| StubUsage { index: e.index, uses: e.use_count, act_uses: e.act_use_count })
        .collect();
    ExecutionReport {
        executed_in_act,
        act_size: test.act_ids.len(),
        outcome,
        assertions,
        stub_usage,
        used_in_act: it.mocks.used_count(),
        invocations: it.mocks.log().to_vec(),
        steps: it.steps,
        act_start: act_start.unwrap_or(it.trace.len()),
        trace: it.trace,
        heap: it.heap,
    }
}

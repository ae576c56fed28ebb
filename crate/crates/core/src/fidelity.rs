//! Fidelity of a synthesized stub against a ground-truth stub: executed
//! program instructions, execution paths, and killed mutants.
//!
//! Instruction sets and paths only count program instructions (ids below
//! `program.instr_end`) executed from the act phase on. Test and stub
//! instructions, and program code the stub itself calls while arranging,
//! are left out because the two stubs are different code by construction.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::edit_distance::damerau_levenshtein;
use crate::minilang::ast::{BinOp, Block, Expr, ExprKind, FnDecl, MatcherExpr, Program, ReactionExpr, Stmt, StmtKind, TestCase, Type};
use crate::minilang::{execute, ArrangeBlock, ExecOptions, ExecutionReport, InstrId, Limits, Mutation, MutationOp, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FidelityError {
    #[error("both paths are empty")]
    BothEmpty,
    #[error("program has no class `{0}`")]
    UnknownClass(String),
    #[error("the {0} stub does not make the test pass on the original program")]
    BaselineFails(&'static str),
}

/// `|a ∩ b| / |a ∪ b|`, and 1 when both are empty.
pub fn instruction_jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `1 - dlev(p, q) / (|p| + |q|)`.
pub fn path_similarity<T: PartialEq>(p: &[T], q: &[T]) -> Result<f64, FidelityError> {
    if p.is_empty() && q.is_empty() {
        return Err(FidelityError::BothEmpty);
    }
    Ok(1.0 - damerau_levenshtein(p, q) as f64 / (p.len() + q.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: usize,
    pub mutation: Mutation,
    pub line: u32,
    pub description: String,
}

fn swapped(op: BinOp) -> Option<BinOp> {
    use BinOp::*;
    Some(match op {
        Add => Sub,
        Sub => Add,
        Mul => Div,
        Div => Mul,
        Lt => Le,
        Le => Lt,
        Gt => Ge,
        Ge => Gt,
        Eq => Ne,
        Ne => Eq,
        _ => return None,
    })
}

struct MutantCollector {
    out: Vec<Mutant>,
}

impl MutantCollector {
    fn push(&mut self, target: InstrId, op: MutationOp, line: u32, description: String) {
        let id = self.out.len();
        self.out.push(Mutant { id, mutation: Mutation { target, op }, line, description });
    }

    fn block(&mut self, b: &Block) {
        for s in b {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Let { init, .. } => self.expr(init),
            StmtKind::Assign { target, value } => {
                self.expr(target);
                self.expr(value);
            }
            StmtKind::Expr(e) | StmtKind::Throw(e) | StmtKind::Return(Some(e)) => self.expr(e),
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue => {}
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.push(s.id, MutationOp::NegateCondition, s.line, "negate if condition".into());
                self.block(then);
                if let Some(b) = els {
                    self.block(b);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.push(s.id, MutationOp::NegateCondition, s.line, "negate while condition".into());
                self.block(body);
            }
            StmtKind::Try { body, catches } => {
                self.block(body);
                for c in catches {
                    self.block(&c.body);
                }
            }
            StmtKind::When { mock, matchers, reaction, .. } => {
                self.expr(mock);
                for m in matchers {
                    if let MatcherExpr::Eq(e) = m {
                        self.expr(e);
                    }
                }
                match reaction {
                    ReactionExpr::Return(e) | ReactionExpr::Throw(e) => self.expr(e),
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int(v) => {
                self.push(e.id, MutationOp::AddConst(1), e.line, format!("{v} -> {}", v.wrapping_add(1)));
                self.push(e.id, MutationOp::AddConst(-1), e.line, format!("{v} -> {}", v.wrapping_sub(1)));
            }
            ExprKind::Binary(op, l, r) => {
                self.expr(l);
                self.expr(r);
                // string concatenation has no subtraction counterpart
                let concat = *op == BinOp::Add && e.ty == Type::Str;
                if let (Some(m), false) = (swapped(*op), concat) {
                    self.push(e.id, MutationOp::ReplaceBinOp(m), e.line, format!("`{}` -> `{}`", op.symbol(), m.symbol()));
                }
            }
            ExprKind::Unary(_, x) | ExprKind::Field(x, _) => self.expr(x),
            ExprKind::Index(a, i) => {
                self.expr(a);
                self.expr(i);
            }
            ExprKind::Call { recv, args, .. } => {
                self.expr(recv);
                args.iter().for_each(|a| self.expr(a));
            }
            ExprKind::New { args, .. } | ExprKind::Builtin { args, .. } | ExprKind::Array(args) => {
                args.iter().for_each(|a| self.expr(a));
            }
            ExprKind::Real(_)
            | ExprKind::Bool(_)
            | ExprKind::Str(_)
            | ExprKind::Null
            | ExprKind::Var(_)
            | ExprKind::SelfRef
            | ExprKind::MockNew(_) => {}
        }
    }
}

/// One mutant per applicable site of `class`'s constructor and methods, in
/// source order: arithmetic and relational operator replacement, condition
/// negation, and integer constants shifted by ±1.
pub fn generate_mutants(prog: &Program, class: &str) -> Result<Vec<Mutant>, FidelityError> {
    let c = prog.class(class).ok_or_else(|| FidelityError::UnknownClass(class.to_string()))?;
    let mut col = MutantCollector { out: Vec::new() };
    let fns: Vec<&FnDecl> = c.ctor.iter().chain(&c.methods).collect();
    for f in fns {
        col.block(&f.body);
    }
    Ok(col.out)
}

fn failed(r: &ExecutionReport) -> bool {
    !r.passed()
}

/// Ids of the mutants on which the test fails with `stub`. Running out of
/// budget counts as failing.
pub fn killed(
    prog: &Program,
    test: &TestCase,
    stub: &ArrangeBlock,
    mutants: &[Mutant],
    limits: Limits,
    which: &'static str,
) -> Result<BTreeSet<usize>, FidelityError> {
    let base = execute(prog, test, stub, &ExecOptions { limits, mutation: None });
    if failed(&base) {
        return Err(FidelityError::BaselineFails(which));
    }
    let dead: Vec<bool> = mutants
        .par_iter()
        .map(|m| failed(&execute(prog, test, stub, &ExecOptions { limits, mutation: Some(m.mutation) })))
        .collect();
    Ok(mutants.iter().zip(dead).filter(|(_, d)| *d).map(|(m, _)| m.id).collect())
}

fn budget_kills(prog: &Program, test: &TestCase, stub: &ArrangeBlock, mutants: &[Mutant], ids: &BTreeSet<usize>, limits: Limits) -> usize {
    ids.par_iter()
        .filter(|id| {
            let r = execute(prog, test, stub, &ExecOptions { limits, mutation: Some(mutants[**id].mutation) });
            r.outcome == Outcome::BudgetExceeded
        })
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub instructions_synth: BTreeSet<InstrId>,
    pub instructions_truth: BTreeSet<InstrId>,
    pub instruction_jaccard: f64,
    pub path_synth_len: usize,
    pub path_truth_len: usize,
    pub path_dlev: usize,
    pub path_similarity: f64,
    pub mutants: usize,
    pub killed_synth: BTreeSet<usize>,
    pub killed_truth: BTreeSet<usize>,
    pub killed_jaccard: f64,
    /// Kills that were budget exhaustion rather than a failed assertion or
    /// an uncaught exception.
    pub budget_kills_synth: usize,
    pub budget_kills_truth: usize,
}

/// Program-instruction path of one run, from the act phase on.
pub fn program_path(prog: &Program, r: &ExecutionReport) -> Vec<InstrId> {
    r.trace[r.act_start..].iter().copied().filter(|id| *id < prog.instr_end).collect()
}

/// Compares a synthesized stub with the ground truth on one test.
pub fn measure(
    prog: &Program,
    test: &TestCase,
    cut_class: &str,
    synth: &ArrangeBlock,
    truth: &ArrangeBlock,
    limits: Limits,
) -> Result<FidelityReport, FidelityError> {
    let opts = ExecOptions { limits, mutation: None };
    let rs = execute(prog, test, synth, &opts);
    let rt = execute(prog, test, truth, &opts);
    if failed(&rt) {
        return Err(FidelityError::BaselineFails("ground-truth"));
    }
    if failed(&rs) {
        return Err(FidelityError::BaselineFails("synthesized"));
    }
    let (ps, pt) = (program_path(prog, &rs), program_path(prog, &rt));
    let is: BTreeSet<InstrId> = ps.iter().copied().collect();
    let it: BTreeSet<InstrId> = pt.iter().copied().collect();
    let mutants = generate_mutants(prog, cut_class)?;
    let ks = killed(prog, test, synth, &mutants, limits, "synthesized")?;
    let kt = killed(prog, test, truth, &mutants, limits, "ground-truth")?;
    Ok(FidelityReport {
        instruction_jaccard: instruction_jaccard(&is, &it),
        instructions_synth: is,
        instructions_truth: it,
        path_synth_len: ps.len(),
        path_truth_len: pt.len(),
        path_dlev: damerau_levenshtein(&ps, &pt),
        path_similarity: path_similarity(&ps, &pt).unwrap_or(1.0),
        mutants: mutants.len(),
        killed_jaccard: instruction_jaccard(&ks, &kt),
        budget_kills_synth: budget_kills(prog, test, synth, &mutants, &ks, limits),
        budget_kills_truth: budget_kills(prog, test, truth, &mutants, &kt, limits),
        killed_synth: ks,
        killed_truth: kt,
    })
}

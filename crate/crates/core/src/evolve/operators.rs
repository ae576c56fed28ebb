//! Variation operators: slicing crossover and the five mutations.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gen::Gen;
use super::EngineRng;
use crate::minilang::ast::Type;
use crate::minilang::Literal;
use crate::stubir::{ArgMatcher, Elem, Expr, StubProgram, VarId, VarRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutationOp {
    Insert,
    AlterParams,
    AlterLiteral,
    Swap,
    Drop,
}

pub const MUTATION_OPS: [MutationOp; 5] =
    [MutationOp::Insert, MutationOp::AlterParams, MutationOp::AlterLiteral, MutationOp::Swap, MutationOp::Drop];

/// Each stub call of `p1`, then of `p2`, is copied into each offspring
/// independently with probability 1/2, together with its backward slice.
/// Definitions shared by several copied calls of the same parent appear
/// once; variables are renumbered in definition order and offspring are
/// cut to `max_len` elements.
pub fn crossover(p1: &StubProgram, p2: &StubProgram, rng: &mut EngineRng, max_len: usize) -> (StubProgram, StubProgram) {
    let parents = [p1, p2];
    let mut picks: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    for (pi, p) in parents.iter().enumerate() {
        for (idx, e) in p.elems.iter().enumerate() {
            if !e.is_stub_call() {
                continue;
            }
            for pick in picks.iter_mut() {
                if rng.gen_bool(0.5) {
                    pick.push((pi, idx));
                }
            }
        }
    }
    let [a, b] = picks;
    (assemble(&parents, &a, max_len), assemble(&parents, &b, max_len))
}

fn assemble(parents: &[&StubProgram; 2], picks: &[(usize, usize)], max_len: usize) -> StubProgram {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut rename: BTreeMap<(usize, VarId), VarId> = BTreeMap::new();
    let mut out = StubProgram::default();
    for &(pi, idx) in picks {
        let parent = parents[pi];
        for k in parent.slice_indices(idx) {
            if !seen.insert((pi, k)) {
                continue;
            }
            let mut e = parent.elems[k].clone();
            for r in e.refs_mut() {
                if let VarRef::Local(v) = r {
                    *v = rename[&(pi, *v)];
                }
            }
            if let Elem::VarDef { var, .. } = &mut e {
                let n = rename.len() as VarId;
                rename.insert((pi, *var), n);
                *var = n;
            }
            out.elems.push(e);
        }
    }
    out.elems.truncate(max_len);
    out
}

/// Applies one mutation operator chosen uniformly among those applicable.
/// Returns the genome unchanged (and `None`) when none applies.
pub fn mutate(sp: &StubProgram, gen: &mut Gen<'_>, max_len: usize) -> (StubProgram, Option<MutationOp>) {
    let mut ops: Vec<MutationOp> = MUTATION_OPS.to_vec();
    while !ops.is_empty() {
        let i = gen.rng.gen_range(0..ops.len());
        let op = ops[i];
        gen.next_var = sp.next_var();
        if let Some(mut out) = apply(op, sp, gen) {
            out.elems.truncate(max_len);
            return (out.canonical(), Some(op));
        }
        ops.remove(i);
    }
    (sp.clone(), None)
}

pub fn apply(op: MutationOp, sp: &StubProgram, gen: &mut Gen<'_>) -> Option<StubProgram> {
    match op {
        MutationOp::Insert => insert(sp, gen),
        MutationOp::AlterParams => alter_params(sp, gen),
        MutationOp::AlterLiteral => alter_literal(sp, gen),
        MutationOp::Swap => swap(sp, gen.rng),
        MutationOp::Drop => drop_elem(sp, gen.rng),
    }
}

/// Runs `f` on the first `pos` elements, then re-appends the rest.
fn gen_at<T>(
    sp: &StubProgram,
    pos: usize,
    gen: &mut Gen<'_>,
    f: impl FnOnce(&mut Gen<'_>, &mut StubProgram) -> Option<T>,
) -> Option<(StubProgram, usize, T)> {
    let mut prefix = StubProgram::new(sp.elems[..pos].to_vec());
    let r = f(gen, &mut prefix)?;
    let added = prefix.len() - pos;
    prefix.elems.extend(sp.elems[pos..].iter().cloned());
    Some((prefix, added, r))
}

fn insert(sp: &StubProgram, gen: &mut Gen<'_>) -> Option<StubProgram> {
    let pos = gen.rng.gen_range(0..=sp.len());
    gen_at(sp, pos, gen, |g, prefix| g.gen_stub_call(prefix, None).then_some(())).map(|(out, _, _)| out)
}

enum ParamEdit {
    Replace { elem: usize, slot: usize, with: Vec<VarRef> },
    ToAny { elem: usize, matcher: usize },
    ToEq { elem: usize, matcher: usize, ty: Type },
}

fn alter_params(sp: &StubProgram, gen: &mut Gen<'_>) -> Option<StubProgram> {
    let locals = sp.var_types();
    let mut edits = Vec::new();
    for (i, e) in sp.elems.iter().enumerate() {
        let prefix = StubProgram::new(sp.elems[..i].to_vec());
        let mocks = gen.mock_vars(&prefix);
        for (slot, r) in e.refs().into_iter().enumerate() {
            let Some(ty) = StubProgram::ref_type(r, &locals, gen.test) else { continue };
            let is_mock_slot = slot == 0 && e.is_stub_call();
            let with: Vec<VarRef> = gen
                .vars_of_type(&prefix, &ty)
                .into_iter()
                .filter(|v| v != r && (!is_mock_slot || mocks.contains(v)))
                .collect();
            if !with.is_empty() {
                edits.push(ParamEdit::Replace { elem: i, slot, with });
            }
        }
        if let Elem::StubCall { mock, method, matchers, .. } = e {
            let Some(Type::Named(iface)) = StubProgram::ref_type(mock, &locals, gen.test) else { continue };
            let Some(sig) = gen.prog.interface(&iface).and_then(|d| d.method(method)) else { continue };
            for (m, (matcher, p)) in matchers.iter().zip(&sig.params).enumerate() {
                edits.push(match matcher {
                    ArgMatcher::Eq(_) => ParamEdit::ToAny { elem: i, matcher: m },
                    ArgMatcher::Any => ParamEdit::ToEq { elem: i, matcher: m, ty: p.ty.clone() },
                });
            }
        }
    }
    if edits.is_empty() {
        return None;
    }
    let pick = gen.rng.gen_range(0..edits.len());
    match edits.swap_remove(pick) {
        ParamEdit::Replace { elem, slot, with } => {
            let v = with.choose(gen.rng)?.clone();
            let mut out = sp.clone();
            *out.elems[elem].refs_mut().into_iter().nth(slot)? = v;
            Some(out)
        }
        ParamEdit::ToAny { elem, matcher } => {
            let mut out = sp.clone();
            if let Elem::StubCall { matchers, .. } = &mut out.elems[elem] {
                matchers[matcher] = ArgMatcher::Any;
            }
            Some(out)
        }
        ParamEdit::ToEq { elem, matcher, ty } => {
            let (mut out, added, v) = gen_at(sp, elem, gen, |g, prefix| g.gen_var(prefix, &ty, 1))?;
            if let Elem::StubCall { matchers, .. } = &mut out.elems[elem + added] {
                matchers[matcher] = ArgMatcher::Eq(v);
            }
            Some(out)
        }
    }
}

fn shift_int(v: i64, rng: &mut EngineRng) -> i64 {
    let delta = match rng.gen_range(0..3) {
        0 => if rng.gen_bool(0.5) { 1 } else { -1 },
        1 => if rng.gen_bool(0.5) { 10 } else { -10 },
        _ => rng.gen_range(-5..=5),
    };
    // i64::MIN has no literal form
    v.saturating_add(delta).max(i64::MIN + 1)
}

fn random_char(pool_chars: &[char], rng: &mut EngineRng) -> char {
    if !pool_chars.is_empty() && rng.gen_bool(0.5) {
        *pool_chars.choose(rng).expect("nonempty")
    } else {
        rng.gen_range(0x20u8..=0x7e) as char
    }
}

fn alter_string(s: &str, gen: &mut Gen<'_>) -> String {
    let pool_strings: Vec<&str> = gen.pool.strings().collect();
    let pool_chars: Vec<char> = {
        let mut cs: Vec<char> = pool_strings.iter().flat_map(|s| s.chars()).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    };
    let mut chars: Vec<char> = s.chars().collect();
    // insert, delete, replace, pool replacement
    let mut kinds: Vec<u8> = vec![0];
    if !chars.is_empty() {
        kinds.extend([1, 2]);
    }
    if !pool_strings.is_empty() {
        kinds.push(3);
    }
    match *kinds.choose(gen.rng).expect("nonempty") {
        0 => {
            let at = gen.rng.gen_range(0..=chars.len());
            let c = random_char(&pool_chars, gen.rng);
            chars.insert(at, c);
        }
        1 => {
            let at = gen.rng.gen_range(0..chars.len());
            chars.remove(at);
        }
        2 => {
            let at = gen.rng.gen_range(0..chars.len());
            chars[at] = random_char(&pool_chars, gen.rng);
        }
        _ => return pool_strings.choose(gen.rng).expect("nonempty").to_string(),
    }
    chars.into_iter().collect()
}

fn alter_literal(sp: &StubProgram, gen: &mut Gen<'_>) -> Option<StubProgram> {
    let sites: Vec<usize> = sp
        .elems
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e, Elem::VarDef { expr: Expr::Literal(_), .. }))
        .map(|(i, _)| i)
        .collect();
    let at = *sites.choose(gen.rng)?;
    let mut out = sp.clone();
    let Elem::VarDef { expr: Expr::Literal(lit), .. } = &mut out.elems[at] else { unreachable!() };
    *lit = match lit {
        Literal::Int(v) => Literal::Int(shift_int(*v, gen.rng)),
        Literal::Real(v) => {
            let shifted = *v + shift_int(0, gen.rng) as f64;
            Literal::Real(if shifted.is_finite() { shifted } else { *v })
        }
        Literal::Bool(b) => Literal::Bool(!*b),
        Literal::Str(s) => Literal::Str(alter_string(s, gen)),
    };
    Some(out)
}

/// Exchanges two elements, then restores def-before-use by emitting every
/// element's missing definitions just before it.
fn swap(sp: &StubProgram, rng: &mut EngineRng) -> Option<StubProgram> {
    if sp.len() < 2 {
        return None;
    }
    let i = rng.gen_range(0..sp.len());
    let mut j = rng.gen_range(0..sp.len() - 1);
    if j >= i {
        j += 1;
    }
    let mut elems = sp.elems.clone();
    elems.swap(i, j);
    let def_at: BTreeMap<VarId, usize> = elems.iter().enumerate().filter_map(|(k, e)| e.defined().map(|v| (v, k))).collect();
    let mut emitted = vec![false; elems.len()];
    let mut order = Vec::with_capacity(elems.len());
    fn emit(k: usize, elems: &[Elem], def_at: &BTreeMap<VarId, usize>, emitted: &mut [bool], order: &mut Vec<usize>) {
        if emitted[k] {
            return;
        }
        emitted[k] = true;
        for v in elems[k].uses() {
            if let Some(&d) = def_at.get(&v) {
                emit(d, elems, def_at, emitted, order);
            }
        }
        order.push(k);
    }
    for k in 0..elems.len() {
        emit(k, &elems, &def_at, &mut emitted, &mut order);
    }
    Some(StubProgram::new(order.into_iter().map(|k| elems[k].clone()).collect()))
}

/// Removes one stub call or one definition nothing reads.
fn drop_elem(sp: &StubProgram, rng: &mut EngineRng) -> Option<StubProgram> {
    let mut sites: Vec<usize> = sp.elems.iter().enumerate().filter(|(_, e)| e.is_stub_call()).map(|(i, _)| i).collect();
    sites.extend(sp.unused_defs());
    sites.sort_unstable();
    let at = *sites.choose(rng)?;
    let mut out = sp.clone();
    out.elems.remove(at);
    Some(out)
}

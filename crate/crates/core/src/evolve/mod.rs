//! Evolutionary search for stub code that makes a test pass.
//!
//! One run evaluates a random initial population, then each generation
//! carries the elite over unchanged and fills the rest with mutated
//! offspring of tournament-selected parents, until some individual passes
//! or the generation budget is spent.
//!
//! All random decisions come from one seeded generator in a fixed order:
//! initial genomes one after another, then per generation the elite pick
//! (unguided only), and for each offspring pair: both tournaments,
//! crossover, mutation of the first child, mutation of the second.
//! Evaluation draws nothing, so evaluating in parallel does not change
//! results.

pub mod gen;
pub mod operators;
pub mod pool;

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{dominates, weighted_sum, FitnessTriple, DEFAULT_C};
use crate::minilang::ast::{Program, TestCase, Type};
use crate::minilang::{execute, parse_arrange, ExecOptions, ExecutionReport, LangError, Limits};
use crate::stubir::{StubProgram, MAX_LEN};

pub use gen::{mock_or_real, Gen, MockChoice};
pub use operators::{crossover, mutate, MutationOp};
pub use pool::SymbolPool;

pub type EngineRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("no way to produce a value of type {0}")]
    NoGenerator(Type),
    #[error(transparent)]
    Lang(#[from] LangError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Tournaments decided by lexicographic dominance on (AS, EC, SU).
    Dominance,
    /// Tournaments decided by `SU + 2·EC + 4·AS`.
    Weighted,
    /// Random parents and random carry-over; fitness only detects a pass.
    Unguided,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Dominance, Strategy::Weighted, Strategy::Unguided];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Dominance => "dominance",
            Strategy::Weighted => "weighted",
            Strategy::Unguided => "unguided",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected dominance, weighted, or unguided)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Generate,
    Repair,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Generate => "generate",
            Mode::Repair => "repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub pop_size: usize,
    pub max_gen: u32,
    pub elite_fraction: f64,
    pub tournament: usize,
    pub c: f64,
    pub max_len: usize,
    pub strategy: Strategy,
    pub mode: Mode,
    pub seed: u64,
    /// Per-candidate execution limits.
    pub limits: Limits,
    /// Upper bound of the uniform stub-call count per test mock in the
    /// initial population.
    pub init_max_per_mock: usize,
    /// Evaluation threads: 0 uses the global pool, 1 evaluates inline.
    pub threads: usize,
    /// When false, reported wall time is zero so reports are reproducible
    /// byte for byte.
    pub measure_time: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            pop_size: 200,
            max_gen: 400,
            elite_fraction: 0.01,
            tournament: 2,
            c: DEFAULT_C,
            max_len: MAX_LEN,
            strategy: Strategy::Dominance,
            mode: Mode::Generate,
            seed: 0,
            limits: Limits { step_budget: 100_000, loop_cap: 10_000, max_depth: 256 },
            init_max_per_mock: 5,
            threads: 0,
            measure_time: true,
        }
    }
}

impl EngineConfig {
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.pop_size as f64).floor() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: StubProgram,
    pub fitness: FitnessTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub generation: u32,
    pub best: FitnessTriple,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Passed,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    /// The passing individual, or the best one found.
    pub best: Individual,
    /// Generations evolved after the initial population.
    pub generations: u32,
    /// Distinct genomes executed.
    pub evaluations: u64,
    pub wall_seconds: f64,
    pub stats: Vec<GenStats>,
    /// Fitness values consulted by parent and elite selection.
    pub selection_fitness_reads: u64,
}

/// Renders `sp` at the test's stub site and executes the test.
pub fn execute_stub(prog: &Program, test: &TestCase, sp: &StubProgram, limits: Limits) -> Result<ExecutionReport, LangError> {
    let block = parse_arrange(&sp.render(), prog, test)?;
    Ok(execute(prog, test, &block, &ExecOptions { limits, mutation: None }))
}

/// Fitness of one genome; a genome that fails to check scores zero.
pub fn evaluate(prog: &Program, test: &TestCase, sp: &StubProgram, cfg: &EngineConfig) -> FitnessTriple {
    match execute_stub(prog, test, sp, cfg.limits) {
        Ok(report) => FitnessTriple::from_report(&report, &test.act_ids, cfg.c),
        Err(_) => FitnessTriple::new(0.0, 0.0, 0.0),
    }
}

/// Parent and elite selection under one strategy, counting every fitness
/// value it reads.
pub struct Selector {
    pub strategy: Strategy,
    pub tournament: usize,
    pub reads: u64,
}

impl Selector {
    pub fn new(strategy: Strategy, tournament: usize) -> Self {
        Selector { strategy, tournament, reads: 0 }
    }

    /// True when `a` beats `b`; ties are a coin flip.
    fn wins(&mut self, a: &FitnessTriple, b: &FitnessTriple, rng: &mut EngineRng) -> bool {
        self.reads += 2;
        let (ab, ba) = match self.strategy {
            Strategy::Dominance => (dominates(a, b), dominates(b, a)),
            _ => {
                let (x, y) = (weighted_sum(a), weighted_sum(b));
                (x > y, y > x)
            }
        };
        if ab != ba {
            ab
        } else {
            rng.gen_bool(0.5)
        }
    }

    /// Index of one parent.
    pub fn select(&mut self, pop: &[Individual], rng: &mut EngineRng) -> usize {
        if self.strategy == Strategy::Unguided {
            return rng.gen_range(0..pop.len());
        }
        let mut best = rng.gen_range(0..pop.len());
        for _ in 1..self.tournament {
            let c = rng.gen_range(0..pop.len());
            if self.wins(&pop[c].fitness, &pop[best].fitness, rng) {
                best = c;
            }
        }
        best
    }

    /// Indices of the `n` individuals carried over unchanged.
    pub fn elites(&mut self, pop: &[Individual], n: usize, rng: &mut EngineRng) -> Vec<usize> {
        if self.strategy == Strategy::Unguided {
            return rand::seq::index::sample(rng, pop.len(), n.min(pop.len())).into_vec();
        }
        self.reads += pop.len() as u64;
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| rank(self.strategy, &pop[b].fitness, &pop[a].fitness).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }
}

fn rank(strategy: Strategy, a: &FitnessTriple, b: &FitnessTriple) -> std::cmp::Ordering {
    match strategy {
        Strategy::Weighted => weighted_sum(a).total_cmp(&weighted_sum(b)),
        _ => a.lex_cmp(b),
    }
}

/// Best individual under `strategy` (dominance for unguided runs); the
/// earliest wins ties.
pub fn best_of(pop: &[Individual], strategy: Strategy) -> &Individual {
    let mut best = &pop[0];
    for ind in &pop[1..] {
        if rank(strategy, &ind.fitness, &best.fitness).is_gt() {
            best = ind;
        }
    }
    best
}

struct Evaluator<'a> {
    prog: &'a Program,
    test: &'a TestCase,
    cfg: &'a EngineConfig,
    cache: HashMap<String, FitnessTriple>,
    evaluations: u64,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Evaluator<'a> {
    fn new(prog: &'a Program, test: &'a TestCase, cfg: &'a EngineConfig) -> Self {
        let pool = if cfg.threads > 1 {
            rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build().ok()
        } else {
            None
        };
        Evaluator { prog, test, cfg, cache: HashMap::new(), evaluations: 0, pool }
    }

    fn evaluate(&mut self, genomes: Vec<StubProgram>) -> Vec<Individual> {
        let keys: Vec<String> = genomes.iter().map(StubProgram::render).collect();
        let mut todo: Vec<usize> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && queued.insert(k.as_str()) {
                todo.push(i);
            }
        }
        let (prog, test, cfg) = (self.prog, self.test, self.cfg);
        let run = |i: &usize| evaluate(prog, test, &genomes[*i], cfg);
        let results: Vec<FitnessTriple> = match (&self.pool, cfg.threads) {
            (_, 1) => todo.iter().map(run).collect(),
            (Some(p), _) => p.install(|| todo.par_iter().map(run).collect()),
            (None, _) => todo.par_iter().map(run).collect(),
        };
        self.evaluations += todo.len() as u64;
        for (i, f) in todo.iter().zip(results) {
            self.cache.insert(keys[*i].clone(), f);
        }
        genomes
            .into_iter()
            .zip(&keys)
            .map(|(genome, k)| Individual { fitness: self.cache[k], genome })
            .collect()
    }
}

fn first_pass(pop: &[Individual]) -> Option<&Individual> {
    let mut best: Option<&Individual> = None;
    for ind in pop.iter().filter(|i| i.fitness.pass) {
        if best.map_or(true, |b| ind.fitness.lex_cmp(&b.fitness).is_gt()) {
            best = Some(ind);
        }
    }
    best
}

/// Runs the search. In repair mode `broken` (the broken stub's text) seeds
/// the symbol pool; it is ignored in generate mode.
pub fn run(prog: &Program, test: &TestCase, cfg: &EngineConfig, broken: Option<&str>) -> RunResult {
    let start = Instant::now();
    let pool = SymbolPool::construct(test, prog, if cfg.mode == Mode::Repair { broken } else { None });
    let mut rng = EngineRng::seed_from_u64(cfg.seed);
    let mut selector = Selector::new(cfg.strategy, cfg.tournament.max(2));
    let mut eval = Evaluator::new(prog, test, cfg);
    let n = cfg.pop_size.max(2);

    let initial: Vec<StubProgram> = (0..n)
        .map(|_| Gen::new(prog, test, &pool, &mut rng, 0).initial(cfg.init_max_per_mock, cfg.max_len))
        .collect();
    let mut pop = eval.evaluate(initial);
    let mut stats = Vec::new();
    let report_strategy = if cfg.strategy == Strategy::Unguided { Strategy::Dominance } else { cfg.strategy };
    let mut generation = 0u32;
    let mut record = |generation: u32, pop: &[Individual]| {
        let best = best_of(pop, report_strategy);
        stats.push(GenStats { generation, best: best.fitness, pass: pop.iter().any(|i| i.fitness.pass) });
    };
    record(0, &pop);

    let mut passed = first_pass(&pop).cloned();
    while passed.is_none() && generation < cfg.max_gen {
        generation += 1;
        let mut next: Vec<StubProgram> =
            selector.elites(&pop, cfg.elite_count(), &mut rng).into_iter().map(|i| pop[i].genome.clone()).collect();
        while next.len() < n {
            let a = selector.select(&pop, &mut rng);
            let b = selector.select(&pop, &mut rng);
            let (o1, o2) = crossover(&pop[a].genome, &pop[b].genome, &mut rng, cfg.max_len);
            for o in [o1, o2] {
                let mut g = Gen::new(prog, test, &pool, &mut rng, 0);
                let (m, _) = mutate(&o, &mut g, cfg.max_len);
                if next.len() < n {
                    next.push(m);
                }
            }
        }
        pop = eval.evaluate(next);
        record(generation, &pop);
        passed = first_pass(&pop).cloned();
    }

    let wall_seconds = if cfg.measure_time { start.elapsed().as_secs_f64() } else { 0.0 };
    let (status, best) = match passed {
        Some(ind) => (RunStatus::Passed, ind),
        None => (RunStatus::Exhausted, best_of(&pop, report_strategy).clone()),
    };
    RunResult {
        status,
        best: Individual { genome: best.genome.canonical(), fitness: best.fitness },
        generations: generation,
        evaluations: eval.evaluations,
        wall_seconds,
        stats,
        selection_fitness_reads: selector.reads,
    }
}

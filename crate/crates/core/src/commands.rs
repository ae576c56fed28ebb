//! The generate, repair, fidelity, and bench commands over corpus entries,
//! and the records they emit.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusEntry;
use crate::evolve::{self, execute_stub, EngineConfig, GenStats, Mode, RunStatus, Strategy};
use crate::fidelity::{self, FidelityError, FidelityReport};
use crate::fitness::FitnessTriple;
use crate::minilang::{parse_arrange, Limits};
use crate::stubir::{StubParseError, StubProgram};

/// The first ten primes from 1000.
pub const DEFAULT_SEEDS: [u64; 10] = [1009, 1013, 1019, 1021, 1031, 1033, 1039, 1049, 1051, 1061];

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("entry {0} has no broken stub to repair")]
    MissingBrokenStub(String),
    #[error("entry {0} has no ground-truth stub")]
    NoGroundTruth(String),
    #[error("report is for entry {report}, not {entry}")]
    EntryMismatch { report: String, entry: String },
    #[error("stub does not parse: {0}")]
    Stub(#[from] StubParseError),
    #[error("stub is not valid: {0}")]
    InvalidStub(String),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
}

/// One engine run, as written to a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub entry: String,
    pub mode: Mode,
    pub strategy: Strategy,
    pub seed: u64,
    pub pop_size: usize,
    pub max_gen: u32,
    pub status: RunStatus,
    pub generations: u32,
    pub evaluations: u64,
    pub wall_seconds: f64,
    pub stub_len: usize,
    pub stub: String,
    pub fitness: FitnessTriple,
    pub selection_fitness_reads: u64,
    pub series: Vec<GenStats>,
}

impl RunReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn passed(&self) -> bool {
        self.status == RunStatus::Passed
    }
}

fn run_mode(entry: &CorpusEntry, cfg: &EngineConfig, mode: Mode) -> RunReport {
    let cfg = EngineConfig { mode, ..cfg.clone() };
    let r = evolve::run(&entry.program, &entry.test, &cfg, entry.broken.as_deref());
    RunReport {
        entry: entry.id.clone(),
        mode,
        strategy: cfg.strategy,
        seed: cfg.seed,
        pop_size: cfg.pop_size,
        max_gen: cfg.max_gen,
        status: r.status,
        generations: r.generations,
        evaluations: r.evaluations,
        wall_seconds: r.wall_seconds,
        stub_len: r.best.genome.len(),
        stub: r.best.genome.render(),
        fitness: r.best.fitness,
        selection_fitness_reads: r.selection_fitness_reads,
        series: r.stats,
    }
}

/// Synthesizes a stub from scratch; a broken stub is ignored.
pub fn cmd_generate(entry: &CorpusEntry, cfg: &EngineConfig) -> RunReport {
    run_mode(entry, cfg, Mode::Generate)
}

/// Synthesizes a replacement for the entry's broken stub, whose literals
/// and symbols join the pool.
pub fn cmd_repair(entry: &CorpusEntry, cfg: &EngineConfig) -> Result<RunReport, CommandError> {
    if entry.broken.is_none() {
        return Err(CommandError::MissingBrokenStub(entry.id.clone()));
    }
    Ok(run_mode(entry, cfg, Mode::Repair))
}

/// Runs `cmd_generate` or `cmd_repair` according to `cfg.mode`.
pub fn cmd_run(entry: &CorpusEntry, cfg: &EngineConfig) -> Result<RunReport, CommandError> {
    match cfg.mode {
        Mode::Generate => Ok(cmd_generate(entry, cfg)),
        Mode::Repair => cmd_repair(entry, cfg),
    }
}

/// Parses and validates a stub in the entry's test scope.
pub fn parse_stub(entry: &CorpusEntry, text: &str) -> Result<StubProgram, CommandError> {
    let sp = StubProgram::parse(text, &entry.program, &entry.test)?;
    let violations = sp.validate(&entry.program, &entry.test);
    if !violations.is_empty() {
        return Err(CommandError::InvalidStub(format!("{violations:?}")));
    }
    Ok(sp)
}

/// Re-parses, re-validates, and re-executes the report's stub. Returns
/// whether the test passes with it.
pub fn verify_report(report: &RunReport, entry: &CorpusEntry) -> Result<bool, CommandError> {
    if report.entry != entry.id {
        return Err(CommandError::EntryMismatch { report: report.entry.clone(), entry: entry.id.clone() });
    }
    let sp = parse_stub(entry, &report.stub)?;
    let r = execute_stub(&entry.program, &entry.test, &sp, Limits::default()).map_err(StubParseError::from)?;
    Ok(r.passed())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub entry: String,
    pub cut: String,
    #[serde(flatten)]
    pub report: FidelityReport,
}

/// Compares `stub` against the entry's ground truth.
pub fn cmd_fidelity(entry: &CorpusEntry, stub: &str) -> Result<FidelityRecord, CommandError> {
    let truth = entry.truth.as_ref().ok_or_else(|| CommandError::NoGroundTruth(entry.id.clone()))?;
    parse_stub(entry, stub)?;
    let (prog, test) = (&entry.program, &entry.test);
    let synth = parse_arrange(stub, prog, test).map_err(StubParseError::from)?;
    let truth = parse_arrange(&truth.render(), prog, test).map_err(StubParseError::from)?;
    let report = fidelity::measure(prog, test, &entry.meta.cut, &synth, &truth, Limits::default())?;
    Ok(FidelityRecord { entry: entry.id.clone(), cut: entry.meta.cut.clone(), report })
}

/// What a bench runs: every entry under every strategy and seed, in
/// generate mode, plus repair mode for entries with a broken stub.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub base: EngineConfig,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            strategies: Strategy::ALL.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            modes: vec![Mode::Generate, Mode::Repair],
            base: EngineConfig { measure_time: true, ..EngineConfig::default() },
        }
    }
}

/// Runs every cell of the plan, in parallel across cells. Reports come
/// back in cell order: entry, mode, strategy, seed.
pub fn cmd_bench(entries: &[CorpusEntry], plan: &BenchPlan) -> Vec<RunReport> {
    let mut cells = Vec::new();
    for e in entries {
        for &mode in &plan.modes {
            if mode == Mode::Repair && e.broken.is_none() {
                continue;
            }
            for &strategy in &plan.strategies {
                for &seed in &plan.seeds {
                    cells.push((e, EngineConfig { mode, strategy, seed, threads: 1, ..plan.base.clone() }));
                }
            }
        }
    }
    cells.par_iter().map(|(e, cfg)| run_mode(e, cfg, cfg.mode)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub entry: String,
    pub mode: Mode,
    pub strategy: Strategy,
    pub runs: usize,
    pub successes: usize,
    /// Medians over successful runs; absent when none succeeded.
    pub median_generations: Option<f64>,
    pub median_seconds: Option<f64>,
    pub median_stub_len: Option<f64>,
}

/// Share of runs of one mode and strategy, over all entries, that passed
/// within each generation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCurve {
    pub mode: Mode,
    pub strategy: Strategy,
    pub runs: usize,
    /// `success_rate[g]` is the rate at a budget of `g` generations.
    pub success_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub curves: Vec<BudgetCurve>,
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[m] } else { (xs[m - 1] + xs[m]) / 2.0 })
}

/// Summary table of a set of reports; independent of their order.
pub fn summarize(reports: &[RunReport]) -> BenchSummary {
    let mut cells: BTreeMap<(String, &str, &str), Vec<&RunReport>> = BTreeMap::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        cells.entry((r.entry.clone(), r.mode.name(), r.strategy.name())).or_default().push(r);
        groups.entry((r.mode.name(), r.strategy.name())).or_default().push(r);
    }
    let rows = cells
        .into_values()
        .map(|rs| {
            let ok: Vec<&&RunReport> = rs.iter().filter(|r| r.passed()).collect();
            let med = |f: fn(&RunReport) -> f64| median(&mut ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            BenchRow {
                entry: rs[0].entry.clone(),
                mode: rs[0].mode,
                strategy: rs[0].strategy,
                runs: rs.len(),
                successes: ok.len(),
                median_generations: med(|r| r.generations as f64),
                median_seconds: med(|r| r.wall_seconds),
                median_stub_len: med(|r| r.stub_len as f64),
            }
        })
        .collect();
    let curves = groups
        .into_values()
        .map(|rs| {
            let top = rs.iter().map(|r| r.max_gen).max().unwrap_or(0);
            let success_rate = (0..=top)
                .map(|g| rs.iter().filter(|r| r.passed() && r.generations <= g).count() as f64 / rs.len() as f64)
                .collect();
            BudgetCurve { mode: rs[0].mode, strategy: rs[0].strategy, runs: rs.len(), success_rate }
        })
        .collect();
    BenchSummary { rows, curves }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.prec$}"))
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:<9} {:<10} {:>7} {:>8} {:>8} {:>6}", "entry", "mode", "strategy", "success", "gen", "time", "|S|")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:<9} {:<10} {:>7} {:>8} {:>8} {:>6}",
                r.entry,
                r.mode.name(),
                r.strategy.name(),
                format!("{}/{}", r.successes, r.runs),
                opt(r.median_generations, 1),
                opt(r.median_seconds, 3),
                opt(r.median_stub_len, 1),
            )?;
        }
        for c in &self.curves {
            let last = c.success_rate.len().saturating_sub(1);
            let marks: Vec<String> = [0, last / 4, last / 2, 3 * last / 4, last]
                .iter()
                .map(|&g| format!("g{g}={:.2}", c.success_rate.get(g).copied().unwrap_or(0.0)))
                .collect();
            writeln!(f, "success by budget  {:<9} {:<10} {}", c.mode.name(), c.strategy.name(), marks.join(" "))?;
        }
        Ok(())
    }
}

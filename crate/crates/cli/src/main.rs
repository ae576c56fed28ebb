use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stubforge::commands::{cmd_bench, cmd_fidelity, cmd_generate, cmd_repair, summarize, BenchPlan, RunReport, DEFAULT_SEEDS};
use stubforge::corpus::{load_corpus, load_one, CorpusEntry};
use stubforge::evolve::{EngineConfig, Mode, Strategy};

/// Evolutionary synthesis and repair of mock stub code.
#[derive(Parser)]
#[command(name = "stubforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a stub for an entry from scratch.
    Generate(RunArgs),
    /// Synthesize a replacement for an entry's broken stub.
    Repair(RunArgs),
    /// Compare a stub with the entry's ground truth.
    Fidelity(FidelityArgs),
    /// Run entries under several strategies and seeds and summarize.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, default_value = "dominance")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    pop: usize,
    #[arg(long = "max-gen", default_value_t = 400)]
    max_gen: u32,
    /// Evaluation threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Report zero wall time so reports are reproducible byte for byte.
    #[arg(long = "no-timing")]
    no_timing: bool,
}

impl EngineArgs {
    fn config(&self, mode: Mode) -> EngineConfig {
        EngineConfig {
            strategy: self.strategy,
            seed: self.seed,
            pop_size: self.pop,
            max_gen: self.max_gen,
            threads: self.threads,
            measure_time: !self.no_timing,
            mode,
            ..EngineConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    entry: String,
    /// Where to write the report line; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct FidelityArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    entry: String,
    /// Stub to measure; without it a stub is generated first.
    #[arg(long)]
    stub: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Entries to run; all if absent. Repeatable.
    #[arg(long)]
    entry: Vec<String>,
    /// Strategies to run; all if absent. Repeatable.
    #[arg(long)]
    strategy: Vec<Strategy>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pop: usize,
    #[arg(long = "max-gen", default_value_t = 400)]
    max_gen: u32,
    /// Skip repair-mode cells.
    #[arg(long = "generate-only")]
    generate_only: bool,
    #[arg(long = "no-timing")]
    no_timing: bool,
    /// Where to write report lines; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn describe(r: &RunReport) {
    eprintln!(
        "{} {} {} seed {}: {:?} after {} generations, {} evaluations, {:.3}s, |S| = {}",
        r.entry,
        r.mode.name(),
        r.strategy.name(),
        r.seed,
        r.status,
        r.generations,
        r.evaluations,
        r.wall_seconds,
        r.stub_len
    );
    eprintln!("{}", r.stub);
}

fn exit_for(r: &RunReport) -> ExitCode {
    if r.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(args: &RunArgs, mode: Mode) -> Result<ExitCode> {
    let entry = load_one(&args.corpus, &args.entry)?;
    let cfg = args.engine.config(mode);
    let report = match mode {
        Mode::Generate => cmd_generate(&entry, &cfg),
        Mode::Repair => cmd_repair(&entry, &cfg)?,
    };
    writeln!(sink(&args.out)?, "{}", report.to_json_line())?;
    describe(&report);
    Ok(exit_for(&report))
}

fn fidelity(args: &FidelityArgs) -> Result<ExitCode> {
    let entry = load_one(&args.corpus, &args.entry)?;
    let stub = match &args.stub {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        None => {
            let report = cmd_generate(&entry, &args.engine.config(Mode::Generate));
            describe(&report);
            if !report.passed() {
                eprintln!("no passing stub to measure");
                return Ok(ExitCode::from(2));
            }
            report.stub
        }
    };
    let record = cmd_fidelity(&entry, &stub)?;
    writeln!(sink(&args.out)?, "{}", serde_json::to_string(&record)?)?;
    let r = &record.report;
    eprintln!(
        "{}: instruction jaccard {:.4}, path similarity {:.4} (dlev {}), killed-mutant jaccard {:.4} ({} mutants, {}/{} killed)",
        record.entry,
        r.instruction_jaccard,
        r.path_similarity,
        r.path_dlev,
        r.killed_jaccard,
        r.mutants,
        r.killed_synth.len(),
        r.killed_truth.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn bench(args: &BenchArgs) -> Result<ExitCode> {
    let all = load_corpus(&args.corpus)?;
    let entries: Vec<CorpusEntry> = if args.entry.is_empty() {
        all
    } else {
        let mut picked = Vec::new();
        for id in &args.entry {
            match all.iter().find(|e| &e.id == id) {
                Some(e) => picked.push(e.clone()),
                None => bail!("no corpus entry `{id}`"),
            }
        }
        picked
    };
    let plan = BenchPlan {
        strategies: if args.strategy.is_empty() { Strategy::ALL.to_vec() } else { args.strategy.clone() },
        seeds: args.seeds.clone(),
        modes: if args.generate_only { vec![Mode::Generate] } else { vec![Mode::Generate, Mode::Repair] },
        base: EngineConfig { pop_size: args.pop, max_gen: args.max_gen, measure_time: !args.no_timing, ..EngineConfig::default() },
    };
    let reports = cmd_bench(&entries, &plan);
    let mut out = sink(&args.out)?;
    for r in &reports {
        writeln!(out, "{}", r.to_json_line())?;
    }
    let summary = summarize(&reports);
    if let Some(p) = &args.summary {
        std::fs::write(p, serde_json::to_string_pretty(&summary)?).with_context(|| format!("cannot write {}", p.display()))?;
    }
    eprint!("{summary}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => run(a, Mode::Generate),
        Command::Repair(a) => run(a, Mode::Repair),
        Command::Fidelity(a) => fidelity(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

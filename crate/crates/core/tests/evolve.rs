use std::path::PathBuf;

use rand::SeedableRng;
use stubforge::corpus::{load_one, CorpusEntry};
use stubforge::evolve::{crossover, mock_or_real, mutate, run, EngineConfig, EngineRng, EvolveError, Gen, MockChoice, Mode, RunStatus, Strategy, SymbolPool};
use stubforge::fitness::dominates;
use stubforge::minilang::ast::Type;
use stubforge::minilang::{parse_program, parse_test};
use stubforge::stubir::{StubProgram, SymbolKind, MAX_LEN};

fn entry(id: &str) -> CorpusEntry {
    load_one(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus"), id).unwrap()
}

fn small(strategy: Strategy, seed: u64) -> EngineConfig {
    EngineConfig { pop_size: 40, max_gen: 30, strategy, seed, measure_time: false, ..EngineConfig::default() }
}

#[test]
fn pool_harvests_test_program_and_broken_stub() {
    let l1 = entry("L1");
    let pool = SymbolPool::construct(&l1.test, &l1.program, None);
    let strs: Vec<&str> = pool.strings().collect();
    assert!(strs.contains(&"foo") && strs.contains(&"bar"));
    assert!(pool.has_symbol(SymbolKind::Builtin, "sha1Hex"));
    assert!(pool.has_symbol(SymbolKind::Constructor, "TimeoutException"));
    assert_eq!(pool.test_mocks, ["UserDao", "User"]);

    let s36 = entry("S36");
    let gen_pool = SymbolPool::construct(&s36.test, &s36.program, None);
    let rep_pool = SymbolPool::construct(&s36.test, &s36.program, s36.broken.as_deref());
    assert!(!gen_pool.strings().any(|s| s == "/actuator/health"));
    assert!(rep_pool.strings().any(|s| s == "/actuator/health"));
    assert_eq!(rep_pool, SymbolPool::construct(&s36.test, &s36.program, s36.broken.as_deref()));
}

const MOCKING: &str = "
    interface Clock { fn now() -> Int; }
    interface Feed { fn next() -> Str; }
    record Point { x: Int; y: Int; }
    class Service {
        clock: Clock;
        fn at(p: Point, f: Feed) -> Int { return self.clock.now() + p.x; }
    }
    class Orphan { fn make() -> Int { return 1; } }
";

#[test]
fn mocking_decisions() {
    let prog = parse_program(MOCKING).unwrap();
    let test = parse_test(
        "test T { mock clock: Clock; let s = new Service(clock); stub; act { let r = s.now(); } assert { assertEquals(1, r); } }"
            .replace("s.now()", "clock.now()")
            .as_str(),
        &prog,
    )
    .unwrap();
    let pool = SymbolPool::construct(&test, &prog, None);
    let mut rng = EngineRng::seed_from_u64(7);
    let named = |n: &str| Type::Named(n.to_string());
    for _ in 0..50 {
        assert_eq!(mock_or_real(&pool, &named("Clock"), &mut rng).unwrap(), MockChoice::Mock("Clock".into()));
        assert!(matches!(mock_or_real(&pool, &named("Point"), &mut rng).unwrap(), MockChoice::Real(s) if s.name == "Point"));
        assert_eq!(mock_or_real(&pool, &named("Feed"), &mut rng).unwrap(), MockChoice::Mock("Feed".into()));
    }
    assert!(matches!(mock_or_real(&pool, &Type::Int, &mut rng), Err(EvolveError::NoGenerator(_))));
    let orphan = mock_or_real(&pool, &named("Orphan"), &mut rng).unwrap();
    assert!(matches!(orphan, MockChoice::Real(s) if s.kind == SymbolKind::Constructor));
}

#[test]
fn initial_population_is_valid_and_reproducible() {
    let e = entry("L1");
    let pool = SymbolPool::construct(&e.test, &e.program, None);
    let make = |seed| {
        let mut rng = EngineRng::seed_from_u64(seed);
        (0..200).map(|_| Gen::new(&e.program, &e.test, &pool, &mut rng, 0).initial(5, MAX_LEN)).collect::<Vec<_>>()
    };
    let a = make(3);
    assert_eq!(a, make(3));
    for sp in &a {
        assert!(sp.is_valid(&e.program, &e.test), "{sp}");
        assert!(sp.stub_call_count() <= 10);
    }
    assert!(a.iter().any(|sp| sp.stub_call_count() == 0));
}

#[test]
fn variation_keeps_genomes_valid() {
    for id in ["L1", "M3", "S36", "W4"] {
        let e = entry(id);
        let pool = SymbolPool::construct(&e.test, &e.program, e.broken.as_deref());
        let mut rng = EngineRng::seed_from_u64(11);
        let mut pop: Vec<StubProgram> =
            (0..20).map(|_| Gen::new(&e.program, &e.test, &pool, &mut rng, 0).initial(5, MAX_LEN)).collect();
        for step in 0..1000 {
            let i = step % pop.len();
            let j = (step * 7 + 3) % pop.len();
            let (a, b) = crossover(&pop[i], &pop[j], &mut rng, MAX_LEN);
            let (m, _) = mutate(&a, &mut Gen::new(&e.program, &e.test, &pool, &mut rng, 0), MAX_LEN);
            for sp in [&a, &b, &m] {
                assert!(sp.is_valid(&e.program, &e.test), "{id}: {:?}\n{sp}", sp.validate(&e.program, &e.test));
            }
            pop[i] = m;
            pop[j] = b;
        }
    }
}

#[test]
fn crossover_of_empty_parents_is_empty() {
    let mut rng = EngineRng::seed_from_u64(1);
    let empty = StubProgram::default();
    assert_eq!(crossover(&empty, &empty, &mut rng, MAX_LEN), (StubProgram::default(), StubProgram::default()));
}

#[test]
fn zero_generations_reports_the_initial_best() {
    let e = entry("M3");
    let r = run(&e.program, &e.test, &EngineConfig { max_gen: 0, ..small(Strategy::Dominance, 5) }, None);
    assert_eq!(r.status, RunStatus::Exhausted);
    assert_eq!(r.generations, 0);
    assert_eq!(r.stats.len(), 1);
    assert_eq!(r.stats[0].best, r.best.fitness);
}

#[test]
fn trivial_entry_passes_fast() {
    let e = entry("T1");
    for seed in [1009, 1013, 1019] {
        let r = run(&e.program, &e.test, &small(Strategy::Dominance, seed), None);
        assert_eq!(r.status, RunStatus::Passed);
        assert!(r.generations <= 2);
        assert!(r.best.fitness.pass);
    }
}

#[test]
fn unguided_selection_reads_no_fitness() {
    let e = entry("M3");
    let unguided = run(&e.program, &e.test, &small(Strategy::Unguided, 2), None);
    assert_eq!(unguided.selection_fitness_reads, 0);
    let guided = run(&e.program, &e.test, &small(Strategy::Dominance, 2), None);
    assert!(guided.selection_fitness_reads > 0);
}

#[test]
fn elitism_never_loses_the_best() {
    let e = entry("M3");
    let r = run(&e.program, &e.test, &small(Strategy::Dominance, 9), None);
    for w in r.stats.windows(2) {
        assert!(!dominates(&w[0].best, &w[1].best), "generation {} regressed", w[1].generation);
    }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let e = entry("L1");
    let base = EngineConfig { pop_size: 60, max_gen: 20, seed: 1013, measure_time: false, ..EngineConfig::default() };
    let inline = run(&e.program, &e.test, &EngineConfig { threads: 1, ..base.clone() }, None);
    let pooled = run(&e.program, &e.test, &EngineConfig { threads: 3, ..base.clone() }, None);
    let global = run(&e.program, &e.test, &EngineConfig { threads: 0, ..base }, None);
    assert_eq!(inline, pooled);
    assert_eq!(inline, global);
}

#[test]
fn repair_mode_ignores_missing_broken_stub() {
    let e = entry("T1");
    let cfg = EngineConfig { mode: Mode::Repair, ..small(Strategy::Weighted, 4) };
    assert_eq!(run(&e.program, &e.test, &cfg, None).status, RunStatus::Passed);
}

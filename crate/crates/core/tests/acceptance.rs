//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use stubforge::commands::{cmd_fidelity, cmd_generate, cmd_repair, median, verify_report, RunReport, DEFAULT_SEEDS};
use stubforge::corpus::{load_one, CorpusEntry};
use stubforge::edit_distance::{damerau_levenshtein, levenshtein};
use stubforge::evolve::{crossover, mutate, EngineConfig, EngineRng, Gen, Strategy, SymbolPool};
use stubforge::fidelity::path_similarity;
use stubforge::fitness::{
    assertion_score, assertion_status, distance, dominates, exercise_coverage, stub_utilization, weighted_sum, FitnessError,
    FitnessTriple,
};
use stubforge::minilang::{AssertionOutcome, Heap, Value};
use stubforge::stubir::{StubProgram, MAX_LEN};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn entry(id: &str) -> CorpusEntry {
    load_one(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus"), id).expect("corpus entry loads")
}

fn cfg(pop: usize, max_gen: u32, strategy: Strategy, seed: u64) -> EngineConfig {
    EngineConfig { pop_size: pop, max_gen, strategy, seed, measure_time: false, ..EngineConfig::default() }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

// Levenshtein by recursion on prefixes, memoized on prefix lengths.
fn lev_naive(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let d = match (a.split_last(), b.split_last()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = go(ra, rb, memo) + usize::from(x != y);
                sub.min(go(ra, b, memo) + 1).min(go(a, rb, memo) + 1)
            }
        };
        memo.insert((a.len(), b.len()), d);
        d
    }
    go(a, b, &mut HashMap::new())
}

fn c1_fitness() -> Verdict {
    let mut cases: Vec<(String, f64, f64)> = Vec::new();
    let mut case = |name: &str, got: f64, want: f64| cases.push((name.to_string(), got, want));
    let heap = Heap::new();
    let s = |x: &str| Value::Str(x.to_string());
    let str_d = |x: &str, y: &str| {
        let (a, b): (Vec<char>, Vec<char>) = (x.chars().collect(), y.chars().collect());
        let den = if a.is_empty() { 1.0 } else { a.len() as f64 };
        (lev_naive(&a, &b) as f64 / den).tanh()
    };

    for used in [0usize, 1, 3, 10, 25] {
        case(&format!("SU used={used}"), stub_utilization(used, 10.0), (used as f64 / 10.0).tanh());
    }
    let set = |v: &[u32]| v.iter().copied().collect::<BTreeSet<u32>>();
    case("EC 2/4", exercise_coverage(&set(&[1, 2, 9]), &set(&[1, 2, 3, 4])).unwrap(), 0.5);
    case("EC full", exercise_coverage(&set(&[5, 6]), &set(&[5, 6])).unwrap(), 1.0);
    case("EC none", exercise_coverage(&set(&[]), &set(&[7])).unwrap(), 0.0);
    case(
        "EC empty act",
        f64::from(u8::from(exercise_coverage(&set(&[]), &set(&[])) == Err(FitnessError::EmptyActBlock))),
        1.0,
    );

    case("d health", distance(&heap, &s("/actuator/health"), &s("/actuator/hea")), (3.0f64 / 16.0).tanh());
    case("d health oracle", distance(&heap, &s("/actuator/health"), &s("/actuator/hea")), str_d("/actuator/health", "/actuator/hea"));
    case("d kitten", distance(&heap, &s("kitten"), &s("sitting")), str_d("kitten", "sitting"));
    case("d str empty expected", distance(&heap, &s(""), &s("abc")), 3.0f64.tanh());
    case("d str equal", distance(&heap, &s("same"), &s("same")), 0.0);
    case("d str unicode", distance(&heap, &s("héllo"), &s("hello")), str_d("héllo", "hello"));
    case("d int", distance(&heap, &Value::Int(25), &Value::Int(20)), (5.0f64 / 25.0).tanh());
    case("d int negative", distance(&heap, &Value::Int(-4), &Value::Int(4)), (8.0f64 / 4.0).tanh());
    case("d int zero expected", distance(&heap, &Value::Int(0), &Value::Int(3)), 3.0f64.tanh());
    case("d int extremes", distance(&heap, &Value::Int(i64::MAX), &Value::Int(i64::MIN)), ((2.0f64.powi(64) - 1.0) / (2.0f64.powi(63) - 1.0)).tanh());
    case("d real", distance(&heap, &Value::Real(2.5), &Value::Real(2.0)), (0.5f64 / 2.5).tanh());
    case("d real zero expected", distance(&heap, &Value::Real(0.0), &Value::Real(0.5)), 0.5f64.tanh());
    case("d bool", distance(&heap, &Value::Bool(true), &Value::Bool(false)), 1.0f64.tanh());
    case("d bool equal", distance(&heap, &Value::Bool(false), &Value::Bool(false)), 0.0);
    case("d null vs str", distance(&heap, &Value::Null, &s("x")), 1.0f64.tanh());
    case("d str vs null", distance(&heap, &s("x"), &Value::Null), 1.0f64.tanh());
    case("d int vs str", distance(&heap, &Value::Int(25), &s("25")), str_d("25", "\"25\""));
    case("d int vs real", distance(&heap, &Value::Int(2), &Value::Real(2.0)), str_d("2", "2.0"));
    let mut h = Heap::new();
    let p1 = h.record("Point", vec![("x".into(), Value::Int(1)), ("y".into(), Value::Int(2))]);
    let p2 = h.record("Point", vec![("x".into(), Value::Int(1)), ("y".into(), Value::Int(37))]);
    case("d record", distance(&h, &p1, &p2), str_d("Point{x=1,y=2}", "Point{x=1,y=37}"));
    let a1 = h.array(vec![s("a"), s("b")]);
    let a2 = h.array(vec![s("a")]);
    case("d array", distance(&h, &a1, &a2), str_d("[\"a\",\"b\"]", "[\"a\"]"));

    let failed = |e: Value, a: Value| AssertionOutcome::Failed { expected: e, actual: a };
    case("score satisfied", assertion_score(&heap, &AssertionOutcome::Satisfied), 1.0);
    case("score failed int", assertion_score(&heap, &failed(Value::Int(25), Value::Int(20))), 1.0 - (0.2f64).tanh());
    case("score failed health", assertion_score(&heap, &failed(s("/actuator/health"), s("/actuator/hea"))), 1.0 - (3.0f64 / 16.0).tanh());
    case("score non-equals", assertion_score(&heap, &AssertionOutcome::FailedNonEquals), 0.0);
    case("score not executed", assertion_score(&heap, &AssertionOutcome::NotExecuted), 0.0);
    case("AS mean", assertion_status(&[1.0, 0.5, 0.0]).unwrap(), 0.5);
    case("AS single", assertion_status(&[0.25]).unwrap(), 0.25);
    let ws = |su: f64, ec: f64, a: f64| weighted_sum(&FitnessTriple::new(su, ec, a));
    case("weighted all ones", ws(1.0, 1.0, 1.0), 7.0);
    case("weighted mixed", ws(0.1, 0.5, 0.25), 0.1 + 1.0 + 1.0);
    case("weighted zero", ws(0.0, 0.0, 0.0), 0.0);

    let bad: Vec<String> = cases.iter().filter(|(_, g, w)| !close(*g, *w)).map(|(n, g, w)| format!("{n}: {g} != {w}")).collect();
    verdict(bad.is_empty() && cases.len() >= 30, format!("{} cases, {} mismatched {}", cases.len(), bad.len(), bad.join("; ")))
}

fn c2_dominance() -> Verdict {
    let mut rng = EngineRng::seed_from_u64(42);
    let grid = [0.0, 0.25, 0.5, 1.0];
    let draw = |rng: &mut EngineRng| {
        let mut c = || if rng.gen_bool(0.6) { grid[rng.gen_range(0..grid.len())] } else { rng.gen::<f64>() };
        FitnessTriple::new(c(), c(), c())
    };
    let triples: Vec<FitnessTriple> = (0..10_000).map(|_| draw(&mut rng)).collect();
    let mut violations = Vec::new();
    let mut pareto_checked = 0;
    for (i, a) in triples.iter().enumerate() {
        let b = &triples[(i * 7919 + 13) % triples.len()];
        let c = &triples[(i * 104_729 + 71) % triples.len()];
        if dominates(a, a) {
            violations.push(format!("irreflexive {a:?}"));
        }
        if dominates(a, b) && dominates(b, a) {
            violations.push(format!("asymmetric {a:?} {b:?}"));
        }
        if dominates(a, b) && dominates(b, c) && !dominates(a, c) {
            violations.push(format!("transitive {a:?} {b:?} {c:?}"));
        }
        let ge = a.su >= b.su && a.ec >= b.ec && a.as_ >= b.as_;
        let gt = a.su > b.su || a.ec > b.ec || a.as_ > b.as_;
        if ge && gt {
            pareto_checked += 1;
            if !dominates(a, b) || weighted_sum(a) <= weighted_sum(b) {
                violations.push(format!("pareto {a:?} {b:?}"));
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!("10000 triples, {pareto_checked} Pareto-ordered pairs, {} violations {}", violations.len(), violations.first().cloned().unwrap_or_default()),
    )
}

fn c3_edit_distance() -> Verdict {
    let mut seqs: Vec<Vec<u8>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..5 {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..3u8 {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    let index: HashMap<&Vec<u8>, usize> = seqs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    // single-edit neighbours within length 5; shortest paths are Levenshtein distances
    let neighbours = |s: &Vec<u8>| {
        let mut out = Vec::new();
        for i in 0..s.len() {
            let mut d = s.clone();
            d.remove(i);
            out.push(d);
            for c in 0..3u8 {
                if c != s[i] {
                    let mut r = s.clone();
                    r[i] = c;
                    out.push(r);
                }
            }
        }
        if s.len() < 5 {
            for i in 0..=s.len() {
                for c in 0..3u8 {
                    let mut ins = s.clone();
                    ins.insert(i, c);
                    out.push(ins);
                }
            }
        }
        out
    };
    let adj: Vec<Vec<usize>> = seqs.iter().map(|s| neighbours(s).iter().map(|n| index[n]).collect()).collect();

    fn osa_rec(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [[Option<usize>; 6]; 6]) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == 0 {
            j
        } else if j == 0 {
            i
        } else {
            let mut best = (osa_rec(a, b, i - 1, j, memo) + 1)
                .min(osa_rec(a, b, i, j - 1, memo) + 1)
                .min(osa_rec(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]));
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                best = best.min(osa_rec(a, b, i - 2, j - 2, memo) + 1);
            }
            best
        };
        memo[i][j] = Some(v);
        v
    }

    let mut pairs = 0u64;
    let mut bad = Vec::new();
    for (si, s) in seqs.iter().enumerate() {
        let mut dist = vec![usize::MAX; seqs.len()];
        dist[si] = 0;
        let mut q = VecDeque::from([si]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for (ti, t) in seqs.iter().enumerate() {
            pairs += 1;
            let osa = osa_rec(s, t, s.len(), t.len(), &mut [[None; 6]; 6]);
            if levenshtein(s, t) != dist[ti] || damerau_levenshtein(s, t) != osa {
                bad.push(format!("{s:?} {t:?}"));
            }
        }
    }
    verdict(bad.is_empty(), format!("{pairs} pairs, {} mismatches {}", bad.len(), bad.first().cloned().unwrap_or_default()))
}

fn c4_genomes() -> Verdict {
    let entries: Vec<CorpusEntry> = ["L1", "M3", "S36", "W4", "T1"].into_iter().map(entry).collect();
    let mut rng = EngineRng::seed_from_u64(2024);
    let mut problems = Vec::new();
    let mut programs = 0;
    let mut elems_checked = 0;
    for k in 0..1000 {
        let e = &entries[k % entries.len()];
        let pool = SymbolPool::construct(&e.test, &e.program, e.broken.as_deref());
        let mut sp = Gen::new(&e.program, &e.test, &pool, &mut rng, 0).initial(5, MAX_LEN);
        sp.elems.truncate(10);
        if !sp.is_valid(&e.program, &e.test) {
            problems.push(format!("invalid random genome\n{sp}"));
            continue;
        }
        programs += 1;
        for idx in 0..sp.len() {
            elems_checked += 1;
            let keep = sp.slice_indices(idx);
            for &i in &keep {
                for v in sp.elems[i].uses() {
                    let def = sp.elems[..i].iter().rposition(|el| el.defined() == Some(v));
                    if !matches!(def, Some(d) if keep.contains(&d)) {
                        problems.push(format!("slice of {idx} misses the definition of v{v}\n{sp}"));
                    }
                }
            }
            let slice = sp.backward_slice(idx);
            if slice.backward_slice(slice.len() - 1) != slice {
                problems.push(format!("slice of {idx} is not idempotent\n{sp}"));
            }
            if !slice.is_valid(&e.program, &e.test) {
                problems.push(format!("slice of {idx} is invalid\n{sp}"));
            }
        }
    }

    let mut ops = 0;
    for e in &entries {
        let pool = SymbolPool::construct(&e.test, &e.program, e.broken.as_deref());
        let mut pop: Vec<StubProgram> = (0..30).map(|_| Gen::new(&e.program, &e.test, &pool, &mut rng, 0).initial(5, MAX_LEN)).collect();
        for _ in 0..1000 {
            let (i, j) = (rng.gen_range(0..pop.len()), rng.gen_range(0..pop.len()));
            let (a, b) = crossover(&pop[i], &pop[j], &mut rng, MAX_LEN);
            let (ma, _) = mutate(&a, &mut Gen::new(&e.program, &e.test, &pool, &mut rng, 0), MAX_LEN);
            let (mb, _) = mutate(&b, &mut Gen::new(&e.program, &e.test, &pool, &mut rng, 0), MAX_LEN);
            ops += 4;
            for out in [&a, &b, &ma, &mb] {
                if !out.is_valid(&e.program, &e.test) || out.len() > MAX_LEN {
                    problems.push(format!("{}: invalid offspring {:?}", e.id, out.validate(&e.program, &e.test)));
                }
            }
            pop[i] = ma;
            pop[j] = mb;
        }
    }
    verdict(
        problems.is_empty() && programs == 1000 && ops >= 10_000,
        format!("{programs} genomes, {elems_checked} slices, {ops} variation outputs, {} problems {}", problems.len(), problems.first().cloned().unwrap_or_default()),
    )
}

fn c5_determinism(reports: &mut Vec<(RunReport, CorpusEntry)>) -> Verdict {
    let e = entry("L1");
    let base = cfg(100, 200, Strategy::Dominance, DEFAULT_SEEDS[0]);
    let runs: Vec<RunReport> = [1usize, 1, 0, 4]
        .into_iter()
        .map(|threads| cmd_generate(&e, &EngineConfig { threads, ..base.clone() }))
        .collect();
    let lines: Vec<String> = runs.iter().map(RunReport::to_json_line).collect();
    let same = lines.windows(2).all(|w| w[0] == w[1]);
    let bytes = lines[0].len();
    reports.extend(runs.into_iter().map(|r| (r, e.clone())));
    verdict(same, format!("4 runs on L1 with 1, 1, all, and 4 evaluation threads; {bytes}-byte reports identical: {same}"))
}

fn run_seeds(e: &CorpusEntry, make: impl Fn(u64) -> RunReport, reports: &mut Vec<(RunReport, CorpusEntry)>) -> Vec<RunReport> {
    let out: Vec<RunReport> = DEFAULT_SEEDS.iter().map(|&s| make(s)).collect();
    reports.extend(out.iter().cloned().map(|r| (r, e.clone())));
    out
}

fn successes(rs: &[RunReport]) -> usize {
    rs.iter().filter(|r| r.passed()).count()
}

fn gens_of(rs: &[RunReport]) -> Vec<u32> {
    rs.iter().map(|r| if r.passed() { r.generations } else { u32::MAX }).collect()
}

fn c6_generation(reports: &mut Vec<(RunReport, CorpusEntry)>) -> Verdict {
    let e = entry("L1");
    let rs = run_seeds(&e, |s| cmd_generate(&e, &cfg(100, 200, Strategy::Dominance, s)), reports);
    let ok = successes(&rs);
    let throw_then_return = rs
        .iter()
        .filter(|r| r.passed())
        .filter(|r| {
            let th = r.stub.lines().position(|l| l.contains("dao.findUser") && l.contains("thenThrow"));
            let ret = r.stub.lines().collect::<Vec<_>>().iter().rposition(|l| l.contains("dao.findUser") && l.contains("thenReturn"));
            matches!((th, ret), (Some(a), Some(b)) if a < b)
        })
        .count();
    let gens: Vec<String> = gens_of(&rs).iter().map(|g| if *g == u32::MAX { "-".into() } else { g.to_string() }).collect();
    verdict(
        ok >= 7,
        format!("L1, N=100, MAX_GEN=200: {ok}/10 seeds passed (generations {}); {throw_then_return} passing stubs throw then return on findUser", gens.join(",")),
    )
}

fn c7_repair(reports: &mut Vec<(RunReport, CorpusEntry)>) -> Verdict {
    let e = entry("S36");
    let gen = run_seeds(&e, |s| cmd_generate(&e, &cfg(100, 200, Strategy::Dominance, s)), reports);
    let rep = run_seeds(&e, |s| cmd_repair(&e, &cfg(100, 200, Strategy::Dominance, s)).expect("S36 has a broken stub"), reports);
    let (gs, rs) = (successes(&gen), successes(&rep));
    let mutual: Vec<(u32, u32)> =
        gen.iter().zip(&rep).filter(|(g, r)| g.passed() && r.passed()).map(|(g, r)| (g.generations, r.generations)).collect();
    let mg = median(&mut mutual.iter().map(|m| m.0 as f64).collect::<Vec<_>>());
    let mr = median(&mut mutual.iter().map(|m| m.1 as f64).collect::<Vec<_>>());
    let medians_ok = match (mr, mg) {
        (Some(r), Some(g)) => r <= g,
        _ => true,
    };
    let fmt = |m: Option<f64>| m.map_or("n/a".to_string(), |v| v.to_string());
    verdict(
        rs >= gs && medians_ok,
        format!(
            "S36, N=100, MAX_GEN=200: repair {rs}/10, generate {gs}/10; {} mutually successful seeds, median generations repair {} vs generate {}",
            mutual.len(),
            fmt(mr),
            fmt(mg)
        ),
    )
}

fn c8_guidance(reports: &mut Vec<(RunReport, CorpusEntry)>) -> Verdict {
    let e = entry("M3");
    let dom = run_seeds(&e, |s| cmd_generate(&e, &cfg(200, 400, Strategy::Dominance, s)), reports);
    let ung = run_seeds(&e, |s| cmd_generate(&e, &cfg(200, 400, Strategy::Unguided, s)), reports);
    let (d, u) = (successes(&dom), successes(&ung));
    let med = |rs: &[RunReport]| median(&mut rs.iter().filter(|r| r.passed()).map(|r| r.generations as f64).collect::<Vec<_>>());
    let (md, mu) = (med(&dom), med(&ung));
    let pass = d > u || (d == 10 && u == 10 && md < mu);
    let best_ung = ung.iter().map(|r| r.fitness.as_).fold(0.0, f64::max);
    let best_dom_failed = dom.iter().filter(|r| !r.passed()).map(|r| r.fitness.as_).fold(0.0, f64::max);
    verdict(
        pass,
        format!(
            "M3 (3 string assertEquals), N=200, MAX_GEN=400: dominance {d}/10 (median generations {md:?}), unguided {u}/10 (median {mu:?}); best AS of failed runs: dominance {best_dom_failed:.4}, unguided {best_ung:.4}"
        ),
    )
}

fn c9_fidelity(reports: &mut Vec<(RunReport, CorpusEntry)>) -> Verdict {
    let t1 = entry("T1");
    run_seeds(&t1, |s| cmd_generate(&t1, &cfg(100, 200, Strategy::Dominance, s)), reports);
    let mut measured = 0;
    let mut unsaturated = Vec::new();
    let mut errors = Vec::new();
    for (r, e) in reports.iter().filter(|(r, _)| r.passed() && ["T1", "L1", "M3"].contains(&r.entry.as_str())) {
        match cmd_fidelity(e, &r.stub) {
            Ok(f) => {
                measured += 1;
                let f = f.report;
                if f.instruction_jaccard != 1.0 || f.path_similarity != 1.0 || f.killed_jaccard != 1.0 {
                    unsaturated.push(format!(
                        "{} seed {}: {:.4}/{:.4}/{:.4}",
                        r.entry, r.seed, f.instruction_jaccard, f.path_similarity, f.killed_jaccard
                    ));
                }
            }
            Err(err) => errors.push(format!("{} seed {}: {err}", r.entry, r.seed)),
        }
    }
    let by_entry: BTreeSet<String> = reports.iter().filter(|(r, _)| r.passed()).map(|(r, _)| r.entry.clone()).collect();

    let w4 = entry("W4");
    let alt = w4.alternative.as_ref().expect("W4 ships an alternative stub").render();
    let weak = cmd_fidelity(&w4, &alt);
    let synthesized = run_seeds(&w4, |s| cmd_generate(&w4, &cfg(100, 200, Strategy::Dominance, s)), reports);
    let mut weak_synth = 0;
    for r in synthesized.iter().filter(|r| r.passed()) {
        if let Ok(f) = cmd_fidelity(&w4, &r.stub) {
            if f.report.path_similarity < 1.0 {
                weak_synth += 1;
            }
        }
    }
    let (weak_ok, weak_detail) = match &weak {
        Ok(f) => (
            f.report.path_similarity < 1.0 && path_similarity(&[1], &[1]).is_ok(),
            format!(
                "W4 alternative stub passes with instruction jaccard {:.4}, path similarity {:.4}, killed jaccard {:.4}",
                f.report.instruction_jaccard, f.report.path_similarity, f.report.killed_jaccard
            ),
        ),
        Err(e) => (false, format!("W4 alternative stub: {e}")),
    };
    verdict(
        measured > 0 && unsaturated.is_empty() && errors.is_empty() && weak_ok && by_entry.contains("T1") && by_entry.contains("L1"),
        format!(
            "{measured} synthesized stubs on forced entries (T1, L1, M3) measured, {} below 1.0 {}{}; {weak_detail}; {weak_synth}/{} synthesized W4 stubs take a different path",
            unsaturated.len(),
            unsaturated.join(" "),
            errors.join(" "),
            successes(&synthesized)
        ),
    )
}

fn c10_reports(reports: &[(RunReport, CorpusEntry)]) -> Verdict {
    let passed: Vec<&(RunReport, CorpusEntry)> = reports.iter().filter(|(r, _)| r.passed()).collect();
    let mut failures = Vec::new();
    for (r, e) in &passed {
        let reparsed: RunReport = serde_json::from_str(&r.to_json_line()).expect("report round-trips");
        match verify_report(&reparsed, e) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("{} seed {} no longer passes", r.entry, r.seed)),
            Err(err) => failures.push(format!("{} seed {}: {err}", r.entry, r.seed)),
        }
    }
    verdict(
        failures.is_empty() && !passed.is_empty(),
        format!("{} passed reports of {} re-parsed, re-validated, and re-executed; {} failed {}", passed.len(), reports.len(), failures.len(), failures.join("; ")),
    )
}

fn main() {
    let mut reports: Vec<(RunReport, CorpusEntry)> = Vec::new();
    type Check<'a> = Box<dyn FnOnce(&mut Vec<(RunReport, CorpusEntry)>) -> Verdict + 'a>;
    let criteria: Vec<(u32, &str, u64, Check)> = vec![
        (1, "fitness formulas", 1, Box::new(|_| c1_fitness())),
        (2, "dominance order", 5, Box::new(|_| c2_dominance())),
        (3, "edit distances", 30, Box::new(|_| c3_edit_distance())),
        (4, "slicing and genome validity", 60, Box::new(|_| c4_genomes())),
        (5, "determinism", 120, Box::new(c5_determinism)),
        (6, "generation on L1", 600, Box::new(c6_generation)),
        (7, "repair vs generation on S36", 600, Box::new(c7_repair)),
        (8, "guided vs unguided on M3", 900, Box::new(c8_guidance)),
        (9, "fidelity", 600, Box::new(c9_fidelity)),
        (10, "self-verifying reports", 60, Box::new(|r: &mut Vec<_>| c10_reports(r))),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let v = check(&mut reports);
        let took = start.elapsed();
        let in_time = took < Duration::from_secs(limit);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {} {name}: {} [{:.2}s, limit {limit}s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

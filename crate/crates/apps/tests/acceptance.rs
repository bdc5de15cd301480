//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; a
//! failing criterion is retried once on a fresh seed before it counts.

use lll_apps::gen::{random_bounded_degree_graph, random_color_matrix, random_hypergraph, random_regular_cnf};
use lll_apps::hypergraph::{p1, p2, rank_threshold, run_hyp2col, HypInstance, HypOptions};
use lll_apps::nonrep::{
    nonrep_params, planted_offset_instance, rho_offset_search, run_nonrep, run_rho_similar, NonRepOptions,
};
use lll_apps::perm::{
    partial_latin_bound, run_latin, run_partial_latin, stein_baseline, stein_bound, LatinOptions,
};
use lll_apps::ramsey::{edge_index, find_mono_cliques, run_ramsey, EdgeColoring};
use lll_apps::sat::{max_occurrence_limit, SatOptions, SatSolver};
use lll_apps::verify::{
    check_clique_free, check_hyp2col, check_nonrepetitive, check_rho_similar_free, check_transversal,
};
use lll_core::analysis::{minimal_mu, theta, DEFAULT_EXACT_LIMIT};
use lll_core::engine::{run_mt, run_mt_dfs};
use lll_core::entropy::{distortion_bounds, mt_entropy_bound, Order};
use lll_core::oracle::{mc_run, mc_run_streaming};
use lll_core::rng::{stream, TrialRng};
use lll_core::truncated::{
    gamma, run_parallel_truncated, run_truncated, solve_parallel_params, symmetric_mu, BETA_TOL,
};
use lll_core::witness::{enumerate_family_trees, internal_state_count, verify_wtl};
use lll_core::{EngineError, EngineOptions, Event, EventFamily, Model, NeighborScan, ProductSpace, Run};
use rand::seq::SliceRandom;
use rand::Rng;
use std::f64::consts::E;
use std::fmt::Debug;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

fn ctx<T, Er: Debug>(r: Result<T, Er>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const Z: f64 = 3.0;
const LIMIT: usize = DEFAULT_EXACT_LIMIT;

// ---------------------------------------------------------------------------
// Instances

/// Five fair bits, four pairwise-overlapping events.
fn shared_instance() -> EventFamily {
    let s = ProductSpace::uniform(5, 2);
    let ev = [
        vec![(0, 1), (1, 1), (2, 1)],
        vec![(2, 0), (3, 1), (4, 1)],
        vec![(0, 0), (3, 0), (4, 1)],
        vec![(1, 0), (4, 0)],
    ]
    .iter()
    .map(|pairs| Event::assignment(&s, pairs).unwrap())
    .collect();
    with_minimal_mu(EventFamily::new(s, ev, vec![0.0; 4]).unwrap()).expect("shared instance is feasible")
}

fn with_minimal_mu(f: EventFamily) -> Option<EventFamily> {
    let mu = minimal_mu(&f, LIMIT)?;
    f.with_mu(mu).ok()
}

/// Random family of conjunctions of 2 or 3 literals over fair bits.
fn random_family(rng: &mut TrialRng, vars: usize, events: usize) -> EventFamily {
    let s = ProductSpace::uniform(vars, 2);
    let all: Vec<usize> = (0..vars).collect();
    let ev = (0..events)
        .map(|_| {
            let w = rng.gen_range(2..=3);
            let vars: Vec<usize> = all.choose_multiple(rng, w).copied().collect();
            let pairs: Vec<(usize, u32)> = vars.into_iter().map(|v| (v, rng.gen_range(0..2))).collect();
            Event::assignment(&s, &pairs).unwrap()
        })
        .collect();
    EventFamily::new(s, ev, vec![0.0; events]).unwrap()
}

/// Events `X_i = … = X_{i+width-1} = 1` around a cycle of `m` variables.
fn ring(m: usize, width: usize, p1: f64) -> EventFamily {
    let s = ProductSpace::bernoulli(&vec![p1; m]).unwrap();
    let ev = (0..m)
        .map(|i| {
            let pairs: Vec<(usize, u32)> = (0..width).map(|j| ((i + j) % m, 1)).collect();
            Event::assignment(&s, &pairs).unwrap()
        })
        .collect();
    EventFamily::new(s, ev, vec![0.0; m]).unwrap()
}

/// Every single-variable event `X_v = c`.
fn literal_events(f: &EventFamily) -> Vec<(String, Event)> {
    let s = f.space();
    (0..s.num_vars())
        .flat_map(|v| (0..s.domain(v) as u32).map(move |c| (v, c)))
        .map(|(v, c)| (format!("x{v}={c}"), Event::assignment(s, &[(v, c)]).unwrap()))
        .collect()
}

// ---------------------------------------------------------------------------
// Checks shared by the single-instance and cross-engine criteria

type Engine<'a> = dyn Fn(&mut TrialRng) -> Result<Run<usize, u32>, EngineError> + Sync + 'a;

fn wtl_check(f: &EventFamily, trials: u64, seed: u64, engine: &Engine) -> Outcome {
    let mut trees = Vec::new();
    for b in 0..f.len() {
        let e = enumerate_family_trees(f, b, 1e-3, 200_000);
        ensure(!e.truncated, || format!("tree enumeration for B{b} hit its cap"))?;
        trees.extend(e.trees);
    }
    let rep = ctx(verify_wtl(f, &trees, trials, seed, engine))?;
    for (b, &(sum, mu, _)) in rep.weight_sums.iter().enumerate() {
        ensure(sum <= mu * (1.0 + 1e-9), || format!("B{b}: tree weights {sum} exceed μ = {mu}"))?;
    }
    match rep.trees.iter().find(|t| t.violation) {
        Some(t) => Err(format!("{}: frequency {} > weight {} + 3σ", t.tree, t.frequency, t.weight)),
        None => Ok(format!("{} trees", rep.trees.len())),
    }
}

fn output_check(f: &EventFamily, events: &[(String, Event)], trials: u64, seed: u64, engine: &Engine) -> Outcome {
    let names: Vec<&str> = events.iter().map(|e| e.0.as_str()).collect();
    let rep = mc_run(seed, trials, &names, |_, rng| {
        let run = engine(rng).expect("run within cap");
        events.iter().map(|(_, e)| e.holds(&run.config) as u8 as f64).collect()
    });
    let mut worst = f64::NEG_INFINITY;
    for (name, e) in events {
        let th = theta(f, e, f.mu(), LIMIT);
        ensure(th.exact, || format!("{name}: θ not exact"))?;
        let s = rep.stat(name).unwrap();
        ensure(s.below(th.value, Z), || format!("{name}: {} > θ = {} + 3σ", s.mean, th.value))?;
        worst = worst.max(s.mean - th.value);
    }
    Ok(format!("{} events, max freq−θ {worst:.4}", events.len()))
}

fn internal_check(f: &EventFamily, pairs: &[(String, Event, usize)], trials: u64, seed: u64, engine: &Engine) -> Outcome {
    let names: Vec<String> = pairs.iter().map(|(n, _, b)| format!("{n}|B{b}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rep = mc_run(seed, trials, &refs, |_, rng| {
        let run = engine(rng).expect("run within cap");
        pairs.iter().map(|(_, e, b)| internal_state_count(&run, e, *b) as f64).collect()
    });
    for ((_, e, b), name) in pairs.iter().zip(&names) {
        let bound = f.mu()[*b] * theta(f, e, f.mu(), LIMIT).value;
        let s = rep.stat(name).unwrap();
        ensure(s.below(bound, Z), || format!("{name}: mean {} > μθ = {bound} + 3σ", s.mean))?;
    }
    Ok(format!("{} pairs", pairs.len()))
}

fn default_pairs(f: &EventFamily) -> Vec<(String, Event, usize)> {
    let lits = literal_events(f);
    [(1, 3), (9, 0), (4, 2), (6, 1), (3, 1)]
        .iter()
        .map(|&(l, b)| (lits[l % lits.len()].0.clone(), lits[l % lits.len()].1.clone(), b % f.len()))
        .collect()
}

// ---------------------------------------------------------------------------
// Criteria

fn c01_witness_trees(seed: u64) -> Outcome {
    let start = Instant::now();
    let f = shared_instance();
    let opts = EngineOptions::new(100_000);
    let msg = wtl_check(&f, 100_000, seed, &|rng| run_mt(&f, rng, &opts))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{msg}, {secs:.1}s"))
}

fn c02_output_distribution(seed: u64) -> Outcome {
    let start = Instant::now();
    let f = shared_instance();
    let opts = EngineOptions::new(100_000);
    let events = literal_events(&f);
    ensure(events.len() == 10, || "expected ten designated events".into())?;
    let msg = output_check(&f, &events, 100_000, seed, &|rng| run_mt(&f, rng, &opts))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{msg}, {secs:.1}s"))
}

fn c03_internal_states(seed: u64) -> Outcome {
    let f = shared_instance();
    let opts = EngineOptions::new(100_000);
    internal_check(&f, &default_pairs(&f), 100_000, seed, &|rng| run_mt(&f, rng, &opts))
}

fn c04_truncated_symmetric(seed: u64) -> Outcome {
    let (d, alpha, m) = (5, 2.0, 15);
    let p = alpha / (E * d as f64);
    let f = ring(m, 3, p.cbrt());
    ensure(f.neighbors(0).len() == d, || format!("|N(B)| = {}", f.neighbors(0).len()))?;
    let sym = ctx(symmetric_mu(p, d, alpha))?;
    ensure((sym.mu - 0.06331).abs() < 1e-4, || format!("μ = {}", sym.mu))?;
    let mu = vec![sym.mu; m];
    let opts = EngineOptions::new(100_000);
    let mut names: Vec<String> = (0..m).map(|i| format!("survive{i}")).collect();
    names.push("resamplings_per_event".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rep = mc_run(seed, 100_000, &refs, |_, rng| {
        let r = run_truncated(&f, &mu, rng, &opts, LIMIT).expect("criterion holds");
        let mut v: Vec<f64> = (0..m).map(|i| r.survivors.contains(&i) as u8 as f64).collect();
        v.push(r.run.resamplings() as f64 / m as f64);
        v
    });
    let mut worst = 0.0f64;
    for name in &names[..m] {
        let s = rep.stat(name).unwrap();
        ensure(s.below(sym.survival_bound, Z), || format!("{name}: {} > {}", s.mean, sym.survival_bound))?;
        worst = worst.max(s.mean);
    }
    let r = rep.stat("resamplings_per_event").unwrap();
    ensure(r.below(sym.mu, Z), || format!("resamplings/event {} > μ = {}", r.mean, sym.mu))?;
    Ok(format!(
        "max survival {worst:.4} ≤ {:.5}, resamplings/event {:.4} ≤ {:.5}",
        sym.survival_bound, r.mean, sym.mu
    ))
}

fn c05_parallel_truncated(seed: u64) -> Outcome {
    let (d, alpha, m) = (3, 2.0, 12);
    let p = alpha / (E * d as f64);
    let f = ring(m, 2, p.sqrt());
    ensure(f.neighbors(0).len() == d, || format!("|N(B)| = {}", f.neighbors(0).len()))?;
    let pp = ctx(solve_parallel_params(p, d, alpha, BETA_TOL))?;
    let miss = (gamma(pp.beta, pp.r, d, pp.t) - pp.z).abs();
    ensure(miss <= BETA_TOL, || format!("|γ_t(β) − z| = {miss:e}"))?;
    ensure(pp.r >= alpha / (E * d as f64), || format!("r = {} below α/(ed)", pp.r))?;
    let names: Vec<String> = (0..m).map(|i| format!("survive{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rep = mc_run(seed, 100_000, &refs, |_, rng| {
        let run = run_parallel_truncated(&f, pp.beta, pp.t, rng);
        let live = f.find_all(&run.config);
        (0..m).map(|i| live.contains(&i) as u8 as f64).collect()
    });
    let mut worst = 0.0f64;
    for name in &names {
        let s = rep.stat(name).unwrap();
        ensure(s.below(pp.survival_bound, Z), || format!("{name}: {} > {}", s.mean, pp.survival_bound))?;
        worst = worst.max(s.mean);
    }
    Ok(format!("t = {}, β = {:.6}, max survival {worst:.4} ≤ {:.5}", pp.t, pp.beta, pp.survival_bound))
}

fn c06_partial_latin(seed: u64) -> Outcome {
    let n = 60;
    let opts = EngineOptions::new(10_000_000);
    let rep = mc_run(seed, 500, &["len"], |_, rng| {
        let m = random_color_matrix(n, 15, rng).unwrap();
        vec![run_partial_latin(&m, rng, &opts).expect("run").length as f64]
    });
    let bound = partial_latin_bound(n, 0.25);
    let s = rep.stat("len").unwrap();
    ensure(s.above(bound, Z), || format!("mean length {} < {bound} − 3σ", s.mean))?;
    let base = mc_run(seed ^ 0x5eed, 500, &["len"], |_, rng| {
        let m = random_color_matrix(n, n, rng).unwrap();
        vec![stein_baseline(&m, rng).1 as f64]
    });
    let sb = stein_bound(n, 1.0);
    let b = base.stat("len").unwrap();
    ensure(b.above(sb, Z), || format!("baseline mean {} < {sb} − 3σ", b.mean))?;
    Ok(format!("partial {:.2} ≥ {bound:.2}, baseline {:.2} ≥ {sb:.2}", s.mean, b.mean))
}

fn c07_full_latin(seed: u64) -> Outcome {
    let opts = EngineOptions::new(10_000_000).audit(false);
    let audited = LatinOptions { audit_buckets: true, force: false };
    let rep = mc_run(seed, 200, &["ok"], |_, rng| {
        let m = random_color_matrix(64, 6, rng).unwrap();
        let ok = match run_latin(&m, rng, &opts, &audited) {
            Ok(r) => check_transversal(&m, &r.pi) == Ok(None),
            Err(_) => false,
        };
        vec![ok as u8 as f64]
    });
    let s = rep.stat("ok").unwrap();
    ensure(s.min == 1.0, || format!("{} of 200 runs failed", ((1.0 - s.mean) * 200.0).round()))?;
    let time = |n: usize, delta: usize| {
        let mut rng = stream(seed, n as u64);
        let ms: Vec<_> = (0..30).map(|_| random_color_matrix(n, delta, &mut rng).unwrap()).collect();
        let start = Instant::now();
        for m in &ms {
            run_latin(m, &mut rng, &opts, &LatinOptions::default()).expect("transversal");
        }
        start.elapsed().as_secs_f64()
    };
    let ratio = time(128, 13) / time(64, 6);
    let note = if ratio <= 3.0 { "within" } else { "above" };
    Ok(format!("200/200 verified, audits clean; T(128)/T(64) = {ratio:.2} ({note} 3.0, informative)"))
}

fn c08_partial_ksat(seed: u64) -> Outcome {
    let (n, k, l, alpha) = (400, 4, 5, 2.0);
    ensure(l as f64 <= max_occurrence_limit(k, alpha), || "L above the admissible bound".into())?;
    ensure((l + 1) as f64 > max_occurrence_limit(k, alpha), || "L not at the bound".into())?;
    let inst = ctx(random_regular_cnf(n, k, l, &mut stream(seed, u64::MAX)))?;
    let solver = ctx(SatSolver::new(&inst, alpha))?;
    let opts = EngineOptions::new(10_000_000).audit(false);
    let rep = mc_run(seed, 500, &["sat"], |_, rng| {
        vec![solver.run(rng, &opts, &SatOptions::default()).expect("run").satisfied as f64]
    });
    let bound = solver.bound();
    let s = rep.stat("sat").unwrap();
    ensure(s.above(bound, Z), || format!("mean satisfied {} < {bound} − 3σ", s.mean))?;
    Ok(format!("m = {}, mean satisfied {:.2} ≥ {bound:.2}", inst.m(), s.mean))
}

fn c09_nonrepetitive(seed: u64) -> Outcome {
    let params = ctx(nonrep_params(3))?;
    let opts = EngineOptions::new(10_000_000).audit(false);
    let nopts = NonRepOptions { shortcut: false, ..Default::default() };
    let rep = mc_run(seed, 100, &["ok"], |_, rng| {
        let g = random_bounded_degree_graph(30, 3, rng);
        let ok = match run_nonrep(&g, params.c, rng, &opts, &nopts) {
            Ok(r) => check_nonrepetitive(&g, &r.colors) == Ok(None),
            Err(_) => false,
        };
        vec![ok as u8 as f64]
    });
    let s = rep.stat("ok").unwrap();
    ensure(s.min == 1.0, || format!("{} of 100 runs invalid", ((1.0 - s.mean) * 100.0).round()))?;
    let time = |n: usize| {
        let mut rng = stream(seed, n as u64);
        let gs: Vec<_> = (0..20).map(|_| random_bounded_degree_graph(n, 3, &mut rng)).collect();
        let start = Instant::now();
        for g in &gs {
            run_nonrep(g, params.c, &mut rng, &opts, &nopts).expect("coloring");
        }
        start.elapsed().as_secs_f64()
    };
    let ratio = time(60) / time(30);
    let note = if ratio <= 5.0 { "within" } else { "above" };
    Ok(format!("C = {}, 100/100 verified; T(60)/T(30) = {ratio:.2} ({note} 5.0, informative)", params.c))
}

fn c10_rho_similar(seed: u64) -> Outcome {
    let rho = 0.8;
    let opts = EngineOptions::new(10_000_000).audit(false);
    let rep = mc_run(seed, 100, &["ok"], |_, rng| {
        let g = random_bounded_degree_graph(20, 3, rng);
        let ok = match run_rho_similar(&g, rho, rng, &opts, false) {
            Ok(r) => check_rho_similar_free(&g, &r.colors, rho) == Ok(None),
            Err(_) => false,
        };
        vec![ok as u8 as f64]
    });
    let s = rep.stat("ok").unwrap();
    ensure(s.min == 1.0, || format!("{} of 100 runs invalid", ((1.0 - s.mean) * 100.0).round()))?;
    let (g, colors) = planted_offset_instance();
    let planted = ctx(check_rho_similar_free(&g, &colors, rho))?;
    ensure(planted.is_some(), || "oracle misses the planted path".into())?;
    let l = g.n() / 2;
    ensure(rho_offset_search(&g, &colors, rho, l, [0]).is_empty(), || "offset 0 alone finds the path".into())?;
    ensure(!rho_offset_search(&g, &colors, rho, l, 0..l).is_empty(), || "offset scan misses the path".into())?;
    Ok("100/100 verified; planted path needs a nonzero offset".into())
}

fn c11_hypergraph(seed: u64) -> Outcome {
    let k = 8;
    let r = rank_threshold(k);
    // midpoint rule on [0, 1]: P(rank ≥ R) and ∫_0^R (1−ρ²)^{k−1}
    let grid = 1_000_000;
    let h = 1.0 / grid as f64;
    let (mut tail, mut low) = (0.0, 0.0);
    for i in 0..grid {
        let x = (i as f64 + 0.5) * h;
        if x >= r {
            tail += h;
        } else {
            low += h * (1.0 - x * x).powi(k as i32 - 1);
        }
    }
    let p1_grid = (0.5 * tail).powi(k as i32);
    let p2_grid = 2f64.powi(1 - 2 * k as i32) * low;
    ensure((p1(k) - p1_grid).abs() < 1e-4, || format!("p₁ {} vs grid {p1_grid}", p1(k)))?;
    ensure((p2(k) - p2_grid).abs() < 1e-4, || format!("p₂ {} vs grid {p2_grid}", p2(k)))?;
    let opts = EngineOptions::new(10_000_000).audit(false);
    let hopts = HypOptions { shortcut: false, audit_lists: true, ..Default::default() };
    let rep = mc_run(seed, 100, &["ok", "l"], |_, rng| {
        let inst = HypInstance::new(1600, k, random_hypergraph(1600, k, 2000, 11, rng).unwrap()).expect("L ≤ 85");
        let ok = match run_hyp2col(&inst, rng, &opts, &hopts) {
            Ok(run) => run.audit_failures == 0 && check_hyp2col(&inst, &run.colors) == Ok(None),
            Err(_) => false,
        };
        vec![ok as u8 as f64, inst.l as f64]
    });
    let s = rep.stat("ok").unwrap();
    ensure(s.min == 1.0, || format!("{} of 100 runs failed", ((1.0 - s.mean) * 100.0).round()))?;
    Ok(format!("100/100 verified, max |N(f)| = {}; p₁ matches grid", rep.stat("l").unwrap().max))
}

fn brute_cliques(g: &EdgeColoring, k: usize) -> Vec<Vec<usize>> {
    let n = g.n;
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != k {
            continue;
        }
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let c = g.colors[edge_index(n, s[0], s[1])];
        if s.iter().enumerate().all(|(i, &a)| s[i + 1..].iter().all(|&b| g.colors[edge_index(n, a, b)] == c)) {
            out.push(s);
        }
    }
    out.sort();
    out
}

fn c12_ramsey(seed: u64) -> Outcome {
    let opts = EngineOptions::new(10_000_000).audit(false);
    let rep = mc_run(seed, 100, &["ok"], |_, rng| {
        let ok = match run_ramsey(5, rng, &opts) {
            Ok(r) => r.coloring.n == 15 && check_clique_free(15, &r.coloring.colors, 5) == Ok(None),
            Err(_) => false,
        };
        vec![ok as u8 as f64]
    });
    let s = rep.stat("ok").unwrap();
    ensure(s.min == 1.0, || format!("{} of 100 runs failed", ((1.0 - s.mean) * 100.0).round()))?;
    let mut rng = stream(seed, 1 << 40);
    for (n, k) in [(15, 5), (12, 4), (9, 3)] {
        for _ in 0..20 {
            let colors: Vec<u8> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0..2)).collect();
            let g = EdgeColoring::new(n, colors);
            let mut fast = find_mono_cliques(&g, k);
            fast.sort();
            ensure(fast == brute_cliques(&g, k), || format!("clique search differs on K{n}, k = {k}"))?;
        }
    }
    Ok("100/100 verified; clique search matches exhaustive oracle".into())
}

fn c13_entropy(seed: u64) -> Outcome {
    let mut rng = stream(seed, 0);
    let (mut found, mut tries) = (0, 0);
    while found < 100 {
        tries += 1;
        ensure(tries < 100_000, || "too few feasible random families".into())?;
        let events = rng.gen_range(1..=12);
        let Some(f) = with_minimal_mu(random_family(&mut rng, 10, events)) else { continue };
        let d = distortion_bounds(&f, f.mu(), LIMIT);
        let exact = d.exact.ok_or("exact distortion unavailable")?;
        ensure(exact <= d.crude + 1e-12, || format!("exact {exact} > crude {}", d.crude))?;
        ensure(exact <= d.variable_based + 1e-12, || format!("exact {exact} > variable {}", d.variable_based))?;
        found += 1;
    }
    // 6 fair bits: 64 outcomes
    let s = ProductSpace::uniform(6, 2);
    let ev = [vec![(0, 1), (1, 1), (2, 1)], vec![(2, 0), (3, 1), (4, 1)], vec![(4, 0), (5, 1)], vec![(0, 0), (5, 0), (3, 0)]]
        .iter()
        .map(|p| Event::assignment(&s, p).unwrap())
        .collect();
    let f = with_minimal_mu(EventFamily::new(s, ev, vec![0.0; 4]).unwrap()).ok_or("small instance infeasible")?;
    let bound = ctx(mt_entropy_bound(&f, f.mu(), Order::Infinity, LIMIT))?;
    let cap = (-bound.bound).exp();
    let names: Vec<String> = (0..64).map(|i| format!("o{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let opts = EngineOptions::new(100_000).audit(false);
    let rep = mc_run_streaming(seed, 1_000_000, &refs, |_, rng| {
        let x = run_mt(&f, rng, &opts).expect("run").config;
        let idx = x.iter().enumerate().fold(0usize, |a, (i, &b)| a | (b as usize) << i);
        (0..64).map(|i| (i == idx) as u8 as f64).collect()
    });
    let top = rep.stats.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).unwrap();
    for st in &rep.stats {
        ensure(st.below(cap, Z), || format!("{}: frequency {} > e^-H = {cap}", st.name, st.mean))?;
    }
    Ok(format!("100/100 distortion orderings; max output freq {:.5} ≤ {cap:.5}", top.mean))
}

fn c14_cross_engine(seed: u64) -> Outcome {
    let mut rng = stream(seed, 0);
    let mut done = 0;
    let trials = 10_000;
    while done < 20 {
        let Some(f) = with_minimal_mu(random_family(&mut rng, 5, 4)) else { continue };
        let s = seed.wrapping_mul(31).wrapping_add(done);
        let plain = EngineOptions::new(100_000).audit(false);
        let audited = EngineOptions::new(100_000).audit(true);
        let engines: [(&str, &Engine); 2] = [
            ("run_mt", &|r: &mut TrialRng| run_mt(&f, r, &plain)),
            ("run_mt_dfs", &|r: &mut TrialRng| run_mt_dfs(&f, &mut NeighborScan, r, &audited)),
        ];
        let lits = literal_events(&f);
        let pairs = default_pairs(&f);
        for (name, engine) in engines {
            let tag = |e: String| format!("instance {done}, {name}: {e}");
            wtl_check(&f, trials, s, engine).map_err(tag)?;
            output_check(&f, &lits, trials, s, engine).map_err(tag)?;
            internal_check(&f, &pairs, trials, s, engine).map_err(tag)?;
        }
        done += 1;
    }
    Ok(format!("20 instances × 2 engines × {trials} runs, no missed events"))
}

// ---------------------------------------------------------------------------

fn attempt(f: fn(u64) -> Outcome, seed: u64) -> Outcome {
    match catch_unwind(AssertUnwindSafe(|| f(seed))) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() {
    let criteria: [(&str, fn(u64) -> Outcome); 14] = [
        ("witness tree frequencies", c01_witness_trees),
        ("output distribution", c02_output_distribution),
        ("internal states", c03_internal_states),
        ("truncated, symmetric", c04_truncated_symmetric),
        ("parallel truncated", c05_parallel_truncated),
        ("partial Latin transversal", c06_partial_latin),
        ("full Latin transversal", c07_full_latin),
        ("partial k-SAT", c08_partial_ksat),
        ("non-repetitive coloring", c09_nonrepetitive),
        ("rho-similar coloring", c10_rho_similar),
        ("hypergraph 2-coloring", c11_hypergraph),
        ("Ramsey coloring", c12_ramsey),
        ("entropy bounds", c13_entropy),
        ("cross-engine consistency", c14_cross_engine),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let base = 0xACCE_0000 + id as u64;
        let (res, retried) = match attempt(*f, base) {
            Ok(m) => (Ok(m), false),
            Err(first) => match attempt(*f, base + 0x1_0000) {
                Ok(m) => (Ok(m), true),
                Err(second) => (Err(format!("{first}; retry: {second}")), true),
            },
        };
        let secs = start.elapsed().as_secs_f64();
        let retry = if retried { ", after retry" } else { "" };
        match res {
            Ok(m) => println!("criterion {id:2} {name}: PASS ({m}{retry}; {secs:.1}s)"),
            Err(e) => {
                failed += 1;
                println!("criterion {id:2} {name}: FAIL ({e}; {secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

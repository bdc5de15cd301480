use lll_core::analysis::{check_pegden, minimal_mu};
use lll_core::engine::{run_mt, run_mt_dfs};
use lll_core::entropy::{mt_entropy_bound, Order};
use lll_core::oracle::mc_run;
use lll_core::rng::stream;
use lll_core::swap::{run_mt_swapping, PermEventFamily, PermModel, PermScan};
use lll_core::truncated::{gamma, solve_parallel_params, BETA_TOL};
use lll_core::{EngineError, EngineOptions, Event, EventFamily, Model, NeighborScan, ProductSpace, SelectionRule};
use proptest::prelude::*;
use std::f64::consts::E;

const RULES: [SelectionRule; 3] = [SelectionRule::LowestIndex, SelectionRule::StackLifo, SelectionRule::Random];

fn family(evs: &[Vec<(usize, u32)>], vars: usize) -> EventFamily {
    let s = ProductSpace::uniform(vars, 2);
    let events = evs.iter().map(|p| Event::assignment(&s, p).unwrap()).collect();
    EventFamily::new(s, events, vec![0.0; evs.len()]).unwrap()
}

/// True when every configuration of the fair bits makes some event hold.
fn unavoidable(f: &EventFamily) -> bool {
    let n = f.space().num_vars();
    (0u32..1 << n).all(|m| {
        let x: Vec<u32> = (0..n).map(|i| m >> i & 1).collect();
        !f.find_all(&x).is_empty()
    })
}

fn every_permutation_bad(model: &PermEventFamily) -> bool {
    fn go(model: &PermEventFamily, pi: &mut Vec<usize>, k: usize) -> bool {
        if k == pi.len() {
            return !model.find_all(pi).is_empty();
        }
        (k..pi.len()).all(|i| {
            pi.swap(k, i);
            let bad = go(model, pi, k + 1);
            pi.swap(k, i);
            bad
        })
    }
    go(model, &mut (0..model.n()).collect(), 0)
}

fn conjunctions(vars: usize, max_events: usize) -> impl Strategy<Value = Vec<Vec<(usize, u32)>>> {
    prop::collection::vec(prop::collection::btree_map(0..vars, 0u32..2, 2..4), 1..max_events)
        .prop_map(|v| v.into_iter().map(|m| m.into_iter().collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_avoids_every_event_and_log_replays(evs in conjunctions(8, 10), seed in 0u64..1000, rule in 0usize..3) {
        let f = family(&evs, 8);
        let opts = EngineOptions::new(1_000_000).rule(RULES[rule]);
        let Ok(a) = run_mt(&f, &mut stream(seed, 0), &opts) else {
            prop_assert!(unavoidable(&f));
            return Ok(());
        };
        prop_assert!(f.find_all(&a.config).is_empty());
        prop_assert!(a.log.check_faithful(|e, x| f.event(*e).holds(x)).is_ok());
        prop_assert_eq!(a.log.replay().last().unwrap(), a.config.clone());
        let b = run_mt(&f, &mut stream(seed, 0), &opts).unwrap();
        prop_assert_eq!(a.log, b.log);
    }

    #[test]
    fn depth_first_engine_misses_nothing(evs in conjunctions(8, 10), seed in 0u64..1000, rule in 0usize..3) {
        let f = family(&evs, 8);
        let opts = EngineOptions::new(1_000_000).rule(RULES[rule]).audit(true);
        let r = match run_mt_dfs(&f, &mut NeighborScan, &mut stream(seed, 1), &opts) {
            Ok(r) => r,
            Err(EngineError::CapExceeded { .. }) => {
                prop_assert!(unavoidable(&f));
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(format!("{e:?}"))),
        };
        prop_assert!(f.find_all(&r.config).is_empty());
        prop_assert!(r.log.check_faithful(|e, x| f.event(*e).holds(x)).is_ok());
    }

    #[test]
    fn swapping_keeps_a_bijection(n in 3usize..9, raw in prop::collection::vec((0usize..9, 0usize..9, 0usize..9, 0usize..9), 1..8), seed in 0u64..1000) {
        let events: Vec<Vec<(usize, usize)>> = raw
            .iter()
            .map(|&(a, b, c, d)| {
                let (x, y, x2, y2) = (a % n, b % n, c % n, d % n);
                if x == x2 || y == y2 { vec![(x, y)] } else { vec![(x, y), (x2, y2)] }
            })
            .collect();
        let model = PermEventFamily::new(n, events);
        let Ok(r) = run_mt_swapping(&model, &mut PermScan, &mut stream(seed, 2), &EngineOptions::new(200_000)) else {
            prop_assert!(every_permutation_bad(&model));
            return Ok(());
        };
        prop_assert!(r.state.is_bijection());
        prop_assert!(model.find_all(r.state.pi()).is_empty());
    }

    #[test]
    fn parallel_parameters_meet_their_identities(d in 2usize..12, alpha in 1.01f64..E) {
        let p = alpha / (E * d as f64);
        let pp = solve_parallel_params(p, d, alpha, BETA_TOL).unwrap();
        let df = d as f64;
        let r = ((df - 1.0) / (df - alpha.ln())).powf(df - 1.0) / df;
        prop_assert!((pp.r - r).abs() <= 1e-12 * r);
        prop_assert!(pp.r >= p * (1.0 - 1e-12));
        prop_assert!(pp.lambda >= 1.0 - 1e-12);
        prop_assert!((pp.z - (1.0 - alpha.ln()) / (df - 1.0)).abs() < 1e-12);
        prop_assert!((gamma(pp.beta, pp.r, d, pp.t) - pp.z).abs() <= BETA_TOL);
        prop_assert!((0.0..=1.0).contains(&pp.beta));
    }

    #[test]
    fn entropy_bound_below_base(evs in conjunctions(8, 8)) {
        let f = family(&evs, 8);
        if let Some(mu) = minimal_mu(&f, 25) {
            for rho in [Order::Finite(1.5), Order::Finite(3.0), Order::Infinity] {
                let b = mt_entropy_bound(&f, &mu, rho, 25).unwrap();
                prop_assert!(b.distortion.crude >= 0.0 && b.distortion.variable_based >= 0.0);
                prop_assert!(b.distortion.exact.unwrap() >= -1e-12);
                prop_assert!(b.bound <= b.base_entropy + 1e-12);
            }
        }
    }
}

/// Under every selection rule, each event is resampled at most `μ(B)` times
/// on average.
#[test]
fn resampling_counts_respect_mu_for_every_rule() {
    let f = family(
        &[
            vec![(0, 1), (1, 1), (2, 1)],
            vec![(2, 0), (3, 1), (4, 1)],
            vec![(0, 0), (3, 0), (4, 1)],
            vec![(1, 0), (4, 0)],
            vec![(5, 1), (6, 1), (0, 1)],
        ],
        7,
    );
    let mu = minimal_mu(&f, 25).unwrap();
    assert!(check_pegden(&f, &mu, 25).satisfied);
    let names = ["B0", "B1", "B2", "B3", "B4"];
    for (i, rule) in RULES.into_iter().enumerate() {
        let opts = EngineOptions::new(100_000).rule(rule);
        let rep = mc_run(40 + i as u64, 50_000, &names, |_, rng| {
            let counts = run_mt(&f, rng, &opts).unwrap().log.counts();
            (0..5).map(|b| *counts.get(&b).unwrap_or(&0) as f64).collect()
        });
        for (b, name) in names.iter().enumerate() {
            let s = rep.stat(name).unwrap();
            assert!(s.below(mu[b], 3.0), "{rule:?} {name}: {} > {}", s.mean, mu[b]);
        }
    }
}

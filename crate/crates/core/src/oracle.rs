//! Independent brute-force oracles and a seeded Monte Carlo harness.

use crate::event::Event;
use crate::rng::{stream, TrialRng};
use crate::space::{for_each_assignment, ProductSpace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} assignments exceed the enumeration budget")]
    TooLarge(u64),
}

/// Exact mass of `event` under the product distribution.
pub fn exhaustive_event_prob(space: &ProductSpace, event: &Event) -> Result<f64, OracleError> {
    let scope = event.scope();
    let size = space.joint_size(scope);
    if size > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(size));
    }
    let mut x = vec![0u32; space.num_vars()];
    let mut mass = 0.0;
    for_each_assignment(space, scope, |vals| {
        let mut w = 1.0;
        for (&v, &val) in scope.iter().zip(vals) {
            x[v] = val;
            w *= space.prob(v, val);
        }
        if event.holds(&x) {
            mass += w;
        }
    });
    Ok(mass)
}

/// Half-width of a two-sided Hoeffding interval for a mean of `n` samples in
/// a range of width `range`, at confidence `1 − delta`.
pub fn hoeffding_half_width(range: f64, n: u64, delta: f64) -> f64 {
    range * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl StatSummary {
    /// One-sided check `mean ≤ bound + z·stderr`.
    pub fn below(&self, bound: f64, z: f64) -> bool {
        self.mean <= bound + z * self.stderr + 1e-12 * bound.abs().max(1.0)
    }

    /// One-sided check `mean ≥ bound − z·stderr`.
    pub fn above(&self, bound: f64, z: f64) -> bool {
        self.mean >= bound - z * self.stderr - 1e-12 * bound.abs().max(1.0)
    }

    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.stderr, self.mean + z * self.stderr)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub trials: u64,
    pub stats: Vec<StatSummary>,
}

impl TrialReport {
    pub fn stat(&self, name: &str) -> Option<&StatSummary> {
        self.stats.iter().find(|s| s.name == name)
    }
}

#[derive(Clone)]
struct Acc {
    n: u64,
    sum: Vec<f64>,
    sq: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Acc {
    fn new(k: usize) -> Self {
        Acc { n: 0, sum: vec![0.0; k], sq: vec![0.0; k], min: vec![f64::INFINITY; k], max: vec![f64::NEG_INFINITY; k] }
    }

    fn push(&mut self, v: &[f64]) {
        self.n += 1;
        for i in 0..v.len() {
            self.sum[i] += v[i];
            self.sq[i] += v[i] * v[i];
            self.min[i] = self.min[i].min(v[i]);
            self.max[i] = self.max[i].max(v[i]);
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.n += o.n;
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sq[i] += o.sq[i];
            self.min[i] = self.min[i].min(o.min[i]);
            self.max[i] = self.max[i].max(o.max[i]);
        }
        self
    }
}

/// Runs `trials` experiments, trial `i` on stream `i` of `seed`, and
/// summarizes each named statistic. Results are collected in trial order
/// before summing, so reports do not depend on scheduling.
pub fn mc_run<F>(seed: u64, trials: u64, names: &[&str], experiment: F) -> TrialReport
where
    F: Fn(u64, &mut TrialRng) -> Vec<f64> + Sync,
{
    assert!(trials > 0, "need at least one trial");
    let k = names.len();
    let rows: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let v = experiment(t, &mut stream(seed, t));
            assert_eq!(v.len(), k, "experiment returned the wrong number of statistics");
            v
        })
        .collect();
    let mut acc = Acc::new(k);
    for r in &rows {
        acc.push(r);
    }
    summarize(seed, names, acc)
}

fn summarize(seed: u64, names: &[&str], acc: Acc) -> TrialReport {
    let n = acc.n as f64;
    let stats = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mean = acc.sum[i] / n;
            let variance = if acc.n > 1 { ((acc.sq[i] - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            StatSummary {
                name: name.to_string(),
                mean,
                variance,
                stderr: (variance / n).sqrt(),
                min: acc.min[i],
                max: acc.max[i],
            }
        })
        .collect();
    TrialReport { seed, trials: acc.n, stats }
}

/// Streaming variant for experiments too large to buffer; the per-chunk
/// partial sums are merged in chunk order.
pub fn mc_run_streaming<F>(seed: u64, trials: u64, names: &[&str], experiment: F) -> TrialReport
where
    F: Fn(u64, &mut TrialRng) -> Vec<f64> + Sync,
{
    const CHUNK: u64 = 4096;
    let k = names.len();
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Acc::new(k);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                acc.push(&experiment(t, &mut stream(seed, t)));
            }
            acc
        })
        .collect();
    let acc = parts.into_iter().fold(Acc::new(k), Acc::merge);
    summarize(seed, names, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn enumeration_examples() {
        let s = ProductSpace::uniform(3, 2);
        let e = Event::assignment(&s, &[(1, 1)]).unwrap();
        assert_eq!(exhaustive_event_prob(&s, &e).unwrap(), 0.5);
        let mono = Event::new(&s, vec![0, 1, 2], |x| x[0] == x[1] && x[1] == x[2]).unwrap();
        assert!((exhaustive_event_prob(&s, &mono).unwrap() - 0.25).abs() < 1e-15);
        let big = ProductSpace::uniform(30, 2);
        let e = Event::with_prob(&big, (0..30).collect(), |_| false, 0.0);
        // scope too large even for construction-time checking is allowed
        let e = e.unwrap();
        assert!(matches!(exhaustive_event_prob(&big, &e), Err(OracleError::TooLarge(_))));
    }

    #[test]
    fn constant_statistic_has_zero_variance() {
        let r = mc_run(1, 500, &["c"], |_, _| vec![3.0]);
        let s = r.stat("c").unwrap();
        assert_eq!((s.mean, s.variance, s.stderr), (3.0, 0.0, 0.0));
    }

    #[test]
    fn fair_coin() {
        let r = mc_run(2, 10_000, &["coin"], |_, rng| vec![rng.gen_bool(0.5) as u8 as f64]);
        let s = r.stat("coin").unwrap();
        let (lo, hi) = s.ci(3.0);
        assert!(lo <= 0.5 && 0.5 <= hi);
        assert!((s.mean - 0.5).abs() <= hoeffding_half_width(1.0, 10_000, 1e-3));
    }

    #[test]
    fn reports_are_reproducible() {
        let f = |t: u64, rng: &mut TrialRng| vec![rng.gen::<f64>() + t as f64 * 1e-9];
        assert_eq!(mc_run(3, 1000, &["u"], f), mc_run(3, 1000, &["u"], f));
        let a = mc_run(3, 10_000, &["u"], f);
        let b = mc_run_streaming(3, 10_000, &["u"], f);
        assert!((a.stats[0].mean - b.stats[0].mean).abs() < 1e-12);
    }
}

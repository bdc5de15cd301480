//! Truncated MT for partial avoidance, and the parallel variant run for a
//! fixed number of rounds.

use crate::analysis::{holds_with_tol, independent_subset_sum, theta_bad, CriterionReport};
use crate::engine::{run_mt_dfs_marked, run_mt_marked, CoreMarks, EngineError, EngineOptions, Run};
use crate::event::EventFamily;
use crate::model::{Model, NeighborScan, Searcher};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TruncatedError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("augmented family fails the criterion at event {event} (slack {slack})")]
    AugmentedViolated { event: usize, slack: f64 },
    #[error("alpha = {0} outside the admissible range")]
    AlphaOutOfRange(f64),
    #[error("e*p*d = {value} exceeds alpha = {alpha}")]
    CriterionViolated { value: f64, alpha: f64 },
    #[error("invalid symmetric parameters p = {p}, d = {d}")]
    BadParameters { p: f64, d: usize },
    #[error("no root for the round recurrence")]
    NoRoot,
}

/// Core probabilities `q(B) = min(1, μ(B)/θ(B))` together with the `θ` values.
pub fn core_probabilities(family: &EventFamily, mu: &[f64], exact_limit: usize) -> (Vec<f64>, Vec<f64>) {
    let theta: Vec<f64> = (0..family.len())
        .map(|i| theta_bad(family, i, mu, exact_limit).value)
        .collect();
    let q = theta
        .iter()
        .zip(mu)
        .map(|(&t, &m)| if t > 0.0 { (m / t).min(1.0) } else { 1.0 })
        .collect();
    (q, theta)
}

/// Checks the criterion for the marked family `B ∧ Y(B) = 1`, whose
/// right-hand side is `q(B) θ(B)`.
pub fn check_augmented(mu: &[f64], q: &[f64], theta: &[f64]) -> CriterionReport {
    let mut report = CriterionReport {
        satisfied: true,
        slack: f64::INFINITY,
        worst_event: None,
        epsilon_slack: f64::INFINITY,
        alpha: None,
        exact: true,
    };
    for i in 0..mu.len() {
        let rhs = q[i] * theta[i];
        let slack = mu[i] - rhs;
        if slack < report.slack {
            report.slack = slack;
            report.worst_event = Some(i);
        }
        if rhs > 0.0 {
            report.epsilon_slack = report.epsilon_slack.min(mu[i] / rhs - 1.0);
        }
        report.satisfied &= holds_with_tol(mu[i], rhs);
    }
    report
}

/// Per-event survival bound `max(0, θ(B) − μ(B))`.
pub fn survival_bound(mu: &[f64], theta: &[f64]) -> Vec<f64> {
    theta.iter().zip(mu).map(|(t, m)| (t - m).max(0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct TruncatedRun<E, V> {
    pub run: Run<E, V>,
    /// Bad events still true in the output.
    pub survivors: Vec<E>,
}

/// Truncated MT on a family with weights `mu`, using a full scan per step.
/// With `q ≡ 1` this consumes randomness exactly as [`crate::engine::run_mt`].
pub fn run_truncated<R: Rng + ?Sized>(
    family: &EventFamily,
    mu: &[f64],
    rng: &mut R,
    opts: &EngineOptions,
    exact_limit: usize,
) -> Result<TruncatedRun<usize, u32>, TruncatedError> {
    let q = prepared_q(family, mu, exact_limit)?;
    let qf = |e: &usize| q[*e];
    Ok(run_truncated_model(family, &qf, rng, opts)?)
}

/// As [`run_truncated`], with the neighborhood searcher.
pub fn run_truncated_dfs<R: Rng + ?Sized>(
    family: &EventFamily,
    mu: &[f64],
    rng: &mut R,
    opts: &EngineOptions,
    exact_limit: usize,
) -> Result<TruncatedRun<usize, u32>, TruncatedError> {
    let q = prepared_q(family, mu, exact_limit)?;
    let qf = |e: &usize| q[*e];
    Ok(run_truncated_model_dfs(family, &mut NeighborScan, &qf, rng, opts)?)
}

fn prepared_q(family: &EventFamily, mu: &[f64], exact_limit: usize) -> Result<Vec<f64>, TruncatedError> {
    let (q, theta) = core_probabilities(family, mu, exact_limit);
    let report = check_augmented(mu, &q, &theta);
    if !report.satisfied {
        return Err(TruncatedError::AugmentedViolated {
            event: report.worst_event.unwrap_or(0),
            slack: report.slack,
        });
    }
    Ok(q)
}

/// Truncated MT for any model, with caller-supplied core probabilities.
pub fn run_truncated_model<M: Model, R: Rng + ?Sized>(
    model: &M,
    q: &dyn Fn(&M::Event) -> f64,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<TruncatedRun<M::Event, M::Value>, EngineError> {
    let mut marks = CoreMarks::new(q);
    let run = run_mt_marked(model, rng, opts, Some(&mut marks))?;
    let survivors = model.find_all(&run.config);
    Ok(TruncatedRun { run, survivors })
}

pub fn run_truncated_model_dfs<M: Model, S: Searcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    q: &dyn Fn(&M::Event) -> f64,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<TruncatedRun<M::Event, M::Value>, EngineError> {
    let mut marks = CoreMarks::new(q);
    let run = run_mt_dfs_marked(model, searcher, rng, opts, Some(&mut marks))?;
    let survivors = model.find_all(&run.config);
    Ok(TruncatedRun { run, survivors })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTruncation {
    pub mu: f64,
    pub survival_bound: f64,
}

/// `μ = (e/α)^{1/d} − 1`, with survival bound `ln α / d`.
pub fn symmetric_mu(p: f64, d: usize, alpha: f64) -> Result<SymmetricTruncation, TruncatedError> {
    if !(1.0..=E).contains(&alpha) {
        return Err(TruncatedError::AlphaOutOfRange(alpha));
    }
    if d == 0 || !(0.0..=1.0).contains(&p) {
        return Err(TruncatedError::BadParameters { p, d });
    }
    let value = E * p * d as f64;
    if !holds_with_tol(alpha, value) {
        return Err(TruncatedError::CriterionViolated { value, alpha });
    }
    let d = d as f64;
    Ok(SymmetricTruncation { mu: (E / alpha).powf(1.0 / d) - 1.0, survival_bound: alpha.ln() / d })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelParams {
    pub p: f64,
    pub d: usize,
    pub alpha: f64,
    pub r: f64,
    pub lambda: f64,
    pub z: f64,
    pub t: usize,
    pub beta: f64,
    /// `γ_0(β) .. γ_{t+1}(β)`.
    pub gamma_table: Vec<f64>,
    pub survival_bound: f64,
}

/// `γ_i(β)` with `γ_0 = 0`, `γ_{i+1} = β r (1 + γ_i)^d`.
pub fn gamma(beta: f64, r: f64, d: usize, i: usize) -> f64 {
    (0..i).fold(0.0, |g, _| beta * r * (1.0 + g).powi(d as i32))
}

pub fn gamma_table(beta: f64, r: f64, d: usize, upto: usize) -> Vec<f64> {
    (0..=upto).map(|i| gamma(beta, r, d, i)).collect()
}

/// Bisection tolerance for `β`.
pub const BETA_TOL: f64 = 1.0 / (1u64 << 40) as f64;

/// Solves for the round count `t` and core probability `β`.
///
/// For `d = 1` the events are independent and every true event is resampled
/// each round (`β = 1`), so `t` is the least value with `p^{t+1} ≤ ln α`.
pub fn solve_parallel_params(p: f64, d: usize, alpha: f64, tol: f64) -> Result<ParallelParams, TruncatedError> {
    if !(alpha > 1.0 && alpha <= E) {
        return Err(TruncatedError::AlphaOutOfRange(alpha));
    }
    if d == 0 || !(0.0..=1.0).contains(&p) {
        return Err(TruncatedError::BadParameters { p, d });
    }
    let value = E * p * d as f64;
    if !holds_with_tol(alpha, value) {
        return Err(TruncatedError::CriterionViolated { value, alpha });
    }
    let la = alpha.ln();
    if d == 1 {
        let mut t = 0usize;
        while p.powi(t as i32 + 1) > la {
            t += 1;
        }
        return Ok(ParallelParams {
            p,
            d,
            alpha,
            r: 1.0,
            lambda: 1.0,
            z: 0.0,
            t,
            beta: 1.0,
            gamma_table: Vec::new(),
            survival_bound: la,
        });
    }
    let df = d as f64;
    let r = ((df - 1.0) / (df - la)).powf(df - 1.0) / df;
    let lambda = r * (df - 1.0) * (1.0 + 1.0 / (df - 1.0)).powf(df);
    let z = (1.0 - la) / (df - 1.0);
    let mut t = 1usize;
    while gamma(1.0, r, d, t) < z {
        t += 1;
        if t > 1_000_000 {
            return Err(TruncatedError::NoRoot);
        }
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut beta = if z == 0.0 { 0.0 } else { 1.0 };
    if z > 0.0 {
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            let g = gamma(mid, r, d, t);
            beta = mid;
            if (g - z).abs() <= tol * 0.5 {
                break;
            }
            if g < z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (gamma(beta, r, d, t) - z).abs() > tol {
            return Err(TruncatedError::NoRoot);
        }
    }
    let gamma_table = gamma_table(beta, r, d, t + 1);
    Ok(ParallelParams {
        p,
        d,
        alpha,
        r,
        lambda,
        z,
        t,
        beta,
        gamma_table,
        survival_bound: la / df,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundLog<E> {
    /// True bad events with their mark set at the start of the round.
    pub live: Vec<E>,
    /// The independent set resampled in this round.
    pub selected: Vec<E>,
}

#[derive(Clone, Debug)]
pub struct ParallelRun<E, V> {
    pub config: Vec<V>,
    pub rounds: Vec<RoundLog<E>>,
}

impl<E, V> ParallelRun<E, V> {
    pub fn resamplings(&self) -> usize {
        self.rounds.iter().map(|r| r.selected.len()).sum()
    }
}

/// Greedy maximal independent set (under scope overlap) in the given order.
pub fn greedy_mis<M: Model>(model: &M, live: &[M::Event]) -> Vec<M::Event> {
    let mut chosen: Vec<M::Event> = Vec::new();
    for e in live {
        if chosen.iter().all(|c| !model.overlaps(c, e)) {
            chosen.push(e.clone());
        }
    }
    chosen
}

/// Runs exactly `rounds` lock-step rounds: each round resamples a maximal
/// independent set of the true events whose mark (probability `beta`) is set.
pub fn run_parallel_truncated<M: Model, R: Rng + ?Sized>(
    model: &M,
    beta: f64,
    rounds: usize,
    rng: &mut R,
) -> ParallelRun<M::Event, M::Value> {
    let qf = move |_: &M::Event| beta;
    let mut marks = CoreMarks::new(&qf);
    let mut x = model.sample_initial(rng);
    let mut log = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut live = model.find_all(&x);
        live.retain(|e| marks.is_core(e, rng));
        live.sort();
        let selected = greedy_mis(model, &live);
        for e in &selected {
            for v in model.scope(e) {
                x[v] = model.sample_var(v, rng);
            }
            marks.reset(e);
        }
        log.push(RoundLog { live, selected });
    }
    ParallelRun { config: x, rounds: log }
}

/// Checks the round recurrence for a table `sigma[i-1] = σ_i`, `i = 1..=t+1`,
/// and returns the per-event survival bounds `σ_{t+1}/q − σ_t` when it holds.
pub fn check_sigma_table(
    family: &EventFamily,
    q: &[f64],
    sigma: &[Vec<f64>],
    exact_limit: usize,
) -> Option<Vec<f64>> {
    let m = family.len();
    if sigma.is_empty() {
        return None;
    }
    let zero = vec![0.0; m];
    let level = |i: usize| -> &[f64] { if i == 0 { &zero } else { &sigma[i - 1] } };
    for b in 0..m {
        let p = family.event(b).prob();
        if !holds_with_tol(sigma[0][b], q[b] * p) {
            return None;
        }
        for i in 1..sigma.len() {
            let nb = family.neighbors(b);
            let hi = independent_subset_sum(family, nb, level(i), exact_limit).value;
            let lo = independent_subset_sum(family, nb, level(i - 1), exact_limit).value;
            let rhs = level(i)[b] + q[b] * p * (hi - lo);
            if !holds_with_tol(level(i + 1)[b], rhs) {
                return None;
            }
        }
    }
    let t = sigma.len() - 1;
    Some(
        (0..m)
            .map(|b| if q[b] > 0.0 { level(t + 1)[b] / q[b] - level(t)[b] } else { family.event(b).prob() })
            .collect(),
    )
}

//! Local-lemma criteria, `θ`, and runtime bounds.

use crate::event::{Event, EventFamily};
use crate::REL_TOL;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use thiserror::Error;

pub const DEFAULT_EXACT_LIMIT: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("criterion violated at event {event}: mu = {mu}, theta = {theta}")]
    CriterionViolated { event: usize, mu: f64, theta: f64 },
}

/// Value of an independent-set sum, flagged when it is only the product bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSum {
    pub value: f64,
    pub exact: bool,
}

/// `Σ_I Π_{B ∈ I} w(B)` over subsets `I` of `ids` independent under `dep`.
///
/// Exact when `ids.len() <= exact_limit` (and at most 64), otherwise the
/// product bound `Π (1 + w(B))`.
pub fn independent_sum_by(
    ids: &[usize],
    weight: impl Fn(usize) -> f64,
    dep: impl Fn(usize, usize) -> bool,
    exact_limit: usize,
) -> SubsetSum {
    if ids.len() > exact_limit.min(64) {
        let value = ids.iter().map(|&b| 1.0 + weight(b)).product();
        return SubsetSum { value, exact: false };
    }
    let k = ids.len();
    let w: Vec<f64> = ids.iter().map(|&b| weight(b)).collect();
    let mut adj = vec![0u64; k];
    for i in 0..k {
        for j in 0..k {
            if i != j && dep(ids[i], ids[j]) {
                adj[i] |= 1 << j;
            }
        }
    }
    // split into connected components; the sum factorizes over them
    let mut value = 1.0;
    let mut left: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    while left != 0 {
        let start = left.trailing_zeros() as usize;
        let mut comp = 1u64 << start;
        let mut frontier = comp;
        while frontier != 0 {
            let i = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = adj[i] & !comp;
            comp |= new;
            frontier |= new;
        }
        left &= !comp;
        value *= poly(&adj, &w, comp);
    }
    SubsetSum { value, exact: true }
}

fn poly(adj: &[u64], w: &[f64], mask: u64) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & (mask - 1);
    let without = poly(adj, w, rest);
    if w[i] == 0.0 {
        return without;
    }
    without + w[i] * poly(adj, w, rest & !adj[i])
}

/// Independent-set sum over a subset of the family with weights `mu`.
pub fn independent_subset_sum(family: &EventFamily, ids: &[usize], mu: &[f64], exact_limit: usize) -> SubsetSum {
    independent_sum_by(ids, |b| mu[b], |a, b| family.depends(a, b), exact_limit)
}

/// `θ(E) = P(E) Σ_{I ⊆ N(E) independent} Π μ`, for an arbitrary event.
pub fn theta(family: &EventFamily, e: &Event, mu: &[f64], exact_limit: usize) -> SubsetSum {
    let s = independent_subset_sum(family, &family.neighborhood(e), mu, exact_limit);
    SubsetSum { value: e.prob() * s.value, exact: s.exact }
}

/// `θ(B_i)` using the family's dependency neighborhood.
pub fn theta_bad(family: &EventFamily, i: usize, mu: &[f64], exact_limit: usize) -> SubsetSum {
    let s = independent_subset_sum(family, family.neighbors(i), mu, exact_limit);
    SubsetSum { value: family.event(i).prob() * s.value, exact: s.exact }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub satisfied: bool,
    /// `min_B μ(B) − RHS(B)`.
    pub slack: f64,
    pub worst_event: Option<usize>,
    /// `min_B μ(B)/RHS(B) − 1`.
    pub epsilon_slack: f64,
    /// `e·p·d` for the symmetric check.
    pub alpha: Option<f64>,
    /// False when some right-hand side used the product bound.
    pub exact: bool,
}

pub(crate) fn holds_with_tol(lhs: f64, rhs: f64) -> bool {
    lhs - rhs >= -REL_TOL * rhs.abs().max(1.0)
}

/// Checks `μ(B) ≥ θ(B)` for every bad event.
pub fn check_pegden(family: &EventFamily, mu: &[f64], exact_limit: usize) -> CriterionReport {
    let mut report = CriterionReport {
        satisfied: true,
        slack: f64::INFINITY,
        worst_event: None,
        epsilon_slack: f64::INFINITY,
        alpha: None,
        exact: true,
    };
    for i in 0..family.len() {
        let th = theta_bad(family, i, mu, exact_limit);
        report.exact &= th.exact;
        let slack = mu[i] - th.value;
        if slack < report.slack {
            report.slack = slack;
            report.worst_event = Some(i);
        }
        if th.value > 0.0 {
            report.epsilon_slack = report.epsilon_slack.min(mu[i] / th.value - 1.0);
        }
        report.satisfied &= holds_with_tol(mu[i], th.value);
    }
    report
}

/// Symmetric criterion `e·p·d ≤ 1`.
pub fn check_symmetric(p: f64, d: usize) -> CriterionReport {
    assert!((0.0..=1.0).contains(&p) && d >= 1, "need p in [0,1] and d >= 1");
    let alpha = E * p * d as f64;
    CriterionReport {
        satisfied: holds_with_tol(1.0, alpha),
        slack: 1.0 - alpha,
        worst_event: None,
        epsilon_slack: if alpha > 0.0 { 1.0 / alpha - 1.0 } else { f64::INFINITY },
        alpha: Some(alpha),
        exact: true,
    }
}

/// Cost-weighted events `(c_i, A_i)` dominating a searcher's running time.
#[derive(Clone, Debug, Default)]
pub struct EventDecomposition {
    pub terms: Vec<(f64, Event)>,
}

impl EventDecomposition {
    pub fn push(&mut self, cost: f64, event: Event) {
        assert!(cost >= 0.0 && cost.is_finite(), "costs must be finite and nonnegative");
        self.terms.push((cost, event));
    }

    /// `T = Σ c_i θ(A_i)`.
    pub fn cost(&self, family: &EventFamily, mu: &[f64], exact_limit: usize) -> f64 {
        self.terms
            .iter()
            .map(|(c, a)| c * theta(family, a, mu, exact_limit).value)
            .sum()
    }
}

fn require_criterion(family: &EventFamily, exact_limit: usize) -> Result<(), AnalysisError> {
    let mu = family.mu();
    for i in 0..family.len() {
        let th = theta_bad(family, i, mu, exact_limit).value;
        if !holds_with_tol(mu[i], th) {
            return Err(AnalysisError::CriterionViolated { event: i, mu: mu[i], theta: th });
        }
    }
    Ok(())
}

/// Expected search time bound `(1 + Σ μ) · Σ c_i θ(A_i)`.
pub fn bound_runtime(decomp: &EventDecomposition, family: &EventFamily, exact_limit: usize) -> Result<f64, AnalysisError> {
    require_criterion(family, exact_limit)?;
    Ok((1.0 + family.total_mu()) * decomp.cost(family, family.mu(), exact_limit))
}

/// Per-event variant: `Σ_B μ(B) T_B`, excluding initialization.
pub fn bound_runtime_per_event(
    decomps: &[EventDecomposition],
    family: &EventFamily,
    exact_limit: usize,
) -> Result<f64, AnalysisError> {
    assert_eq!(decomps.len(), family.len(), "one decomposition per bad event");
    require_criterion(family, exact_limit)?;
    let mu = family.mu();
    Ok(decomps
        .iter()
        .enumerate()
        .map(|(i, d)| mu[i] * d.cost(family, mu, exact_limit))
        .sum())
}

/// Least `μ` with `μ = θ(μ)`, by fixed-point iteration from `μ = P`.
/// Returns `None` when the iteration diverges, i.e. no `μ` satisfies the
/// criterion.
pub fn minimal_mu(family: &EventFamily, exact_limit: usize) -> Option<Vec<f64>> {
    let m = family.len();
    let mut mu: Vec<f64> = (0..m).map(|i| family.event(i).prob()).collect();
    let total_bound = 1e6 * (1.0 + m as f64);
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..m).map(|i| theta_bad(family, i, &mu, exact_limit).value).collect();
        let diff = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        mu = next;
        if !mu.iter().all(|x| x.is_finite()) || mu.iter().sum::<f64>() > total_bound {
            return None;
        }
        if diff <= 1e-14 * (1.0 + mu.iter().cloned().fold(0.0, f64::max)) {
            return Some(mu);
        }
    }
    None
}

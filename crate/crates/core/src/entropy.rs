//! Rényi-entropy lower bounds for the output distribution of MT.
//!
//! One remark on the independent-transversal example: the text around it
//! calls `k (ln b − ln 3/2)` an upper bound on the min-entropy, but the
//! derivation produces a lower bound, and it is treated as one here.

use crate::analysis::{check_pegden, independent_subset_sum};
use crate::event::EventFamily;
use crate::space::ProductSpace;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("Rényi order must exceed 1 (got {0})")]
    InvalidOrder(f64),
    #[error("distribution sums to {0}")]
    NotNormalized(f64),
    #[error("criterion violated at event {0}")]
    CriterionViolated(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Order {
    Finite(f64),
    Infinity,
}

impl Order {
    fn check(self) -> Result<(), EntropyError> {
        match self {
            Order::Finite(r) if !(r > 1.0 && r.is_finite()) => Err(EntropyError::InvalidOrder(r)),
            _ => Ok(()),
        }
    }

    /// `ρ/(ρ−1)`, equal to 1 at infinity.
    pub fn factor(self) -> f64 {
        match self {
            Order::Finite(r) => r / (r - 1.0),
            Order::Infinity => 1.0,
        }
    }
}

/// `H_ρ` of a finite distribution.
pub fn renyi(dist: &[f64], rho: Order) -> Result<f64, EntropyError> {
    rho.check()?;
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p < 0.0) {
        return Err(EntropyError::NotNormalized(sum));
    }
    Ok(match rho {
        Order::Infinity => -dist.iter().cloned().fold(0.0, f64::max).ln(),
        Order::Finite(r) => {
            let s: f64 = dist.iter().filter(|&&p| p > 0.0).map(|&p| p.powf(r)).sum();
            s.ln() / (1.0 - r)
        }
    })
}

/// `H_ρ` of a product space, summed over variables.
pub fn product_renyi(space: &ProductSpace, rho: Order) -> Result<f64, EntropyError> {
    (0..space.num_vars()).map(|v| renyi(space.probs(v), rho)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    /// `ln Σ_{I indep} Π μ`, when the family is small enough to enumerate.
    pub exact: Option<f64>,
    /// `Σ μ`.
    pub crude: f64,
    /// `Σ_i ln(1 + Σ_{B ∋ i} y(B))` with `y(B) = (1+μ(B))^{1/|var(B)|} − 1`.
    pub variable_based: f64,
}

impl Distortion {
    pub fn best(&self) -> f64 {
        self.exact.unwrap_or(f64::INFINITY).min(self.crude).min(self.variable_based)
    }
}

pub fn distortion_bounds(family: &EventFamily, mu: &[f64], exact_limit: usize) -> Distortion {
    let ids: Vec<usize> = (0..family.len()).collect();
    let s = independent_subset_sum(family, &ids, mu, exact_limit);
    let exact = s.exact.then(|| s.value.ln());
    let crude = mu.iter().sum();
    let y: Vec<f64> = (0..family.len())
        .map(|b| (1.0 + mu[b]).powf(1.0 / family.event(b).scope().len() as f64) - 1.0)
        .collect();
    let variable_based = (0..family.space().num_vars())
        .map(|v| (1.0 + family.events_on_var(v).iter().map(|&b| y[b]).sum::<f64>()).ln())
        .sum();
    Distortion { exact, crude, variable_based }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBound {
    pub rho: Order,
    pub base_entropy: f64,
    pub distortion: Distortion,
    /// `H_ρ(Ω) − (ρ/(ρ−1)) · distortion`.
    pub bound: f64,
    /// `exp(bound)`: a lower bound on the number of bad-event-free configurations.
    pub count_bound: f64,
}

pub fn mt_entropy_bound(family: &EventFamily, mu: &[f64], rho: Order, exact_limit: usize) -> Result<EntropyBound, EntropyError> {
    rho.check()?;
    let report = check_pegden(family, mu, exact_limit);
    if !report.satisfied {
        return Err(EntropyError::CriterionViolated(report.worst_event.unwrap_or(0)));
    }
    let base_entropy = product_renyi(family.space(), rho)?;
    let distortion = distortion_bounds(family, mu, exact_limit);
    let bound = base_entropy - rho.factor() * distortion.best();
    Ok(EntropyBound { rho, base_entropy, distortion, bound, count_bound: bound.exp() })
}

/// Min-entropy lower bound for the independent transversal application:
/// `k ln(4b / (2 + b/Δ − sqrt(b²/Δ² − 4b/Δ)))`, valid for `b ≥ 4Δ`.
pub fn independent_transversal_min_entropy(k: usize, b: f64, delta: f64) -> f64 {
    assert!(b >= 4.0 * delta && delta > 0.0, "need b >= 4 delta");
    let x = b / delta;
    let disc = (x * x - 4.0 * x).max(0.0).sqrt();
    k as f64 * (4.0 * b / (2.0 + x - disc)).ln()
}

/// `β = 1 − ln α` and the order `ρ = 1 + 2β^{-1/2}` used for partial k-SAT.
pub fn partial_ksat_params(alpha: f64) -> (f64, f64) {
    let beta = 1.0 - alpha.ln();
    (beta, 1.0 + 2.0 / beta.sqrt())
}

/// Log of the solution-count lower bound `n (ln 2 − β(4 + 4√β + β)/k²)`,
/// ignoring the polynomial factor in `m`.
pub fn partial_ksat_log_count(n: usize, k: usize, alpha: f64) -> f64 {
    let (beta, _) = partial_ksat_params(alpha);
    let kk = (k * k) as f64;
    n as f64 * (std::f64::consts::LN_2 - beta * (4.0 + 4.0 * beta.sqrt() + beta) / kk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn renyi_examples() {
        let u = vec![0.125; 8];
        for rho in [Order::Finite(1.5), Order::Finite(7.0), Order::Infinity] {
            assert!((renyi(&u, rho).unwrap() - 8f64.ln()).abs() < 1e-12);
            assert_eq!(renyi(&[1.0, 0.0], rho).unwrap(), 0.0);
        }
        assert!((renyi(&[0.75, 0.25], Order::Infinity).unwrap() - 0.28768).abs() < 1e-5);
        assert!(matches!(renyi(&u, Order::Finite(1.0)), Err(EntropyError::InvalidOrder(_))));
        assert!(matches!(renyi(&[0.5], Order::Finite(2.0)), Err(EntropyError::NotNormalized(_))));
    }

    #[test]
    fn distortion_examples() {
        let s = ProductSpace::uniform(3, 2);
        let none = EventFamily::new(s.clone(), vec![], vec![]).unwrap();
        let d = distortion_bounds(&none, &[], 25);
        assert_eq!((d.exact, d.crude, d.variable_based), (Some(0.0), 0.0, 0.0));

        let one = EventFamily::new(s.clone(), vec![Event::assignment(&s, &[(0, 1), (1, 1)]).unwrap()], vec![3.0]).unwrap();
        let d = distortion_bounds(&one, one.mu(), 25);
        assert!((d.variable_based - 4f64.ln()).abs() < 1e-12);
        assert!((d.exact.unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(d.crude, 3.0);
    }

    #[test]
    fn bound_examples() {
        let s = ProductSpace::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        let none = EventFamily::new(s.clone(), vec![], vec![]).unwrap();
        let b = mt_entropy_bound(&none, &[], Order::Infinity, 25).unwrap();
        assert_eq!(b.bound, b.base_entropy);
        let b = mt_entropy_bound(&none, &[], Order::Finite(2.0), 25).unwrap();
        assert_eq!(b.bound, product_renyi(&s, Order::Finite(2.0)).unwrap());

        let one = EventFamily::new(s.clone(), vec![Event::assignment(&s, &[(0, 1)]).unwrap()], vec![1.0]).unwrap();
        let b = mt_entropy_bound(&one, one.mu(), Order::Infinity, 25).unwrap();
        let expect = product_renyi(&s, Order::Infinity).unwrap() - 2f64.ln();
        assert!((b.bound - expect).abs() < 1e-12);
        let bad = one.clone().with_mu(vec![0.1]).unwrap();
        assert!(mt_entropy_bound(&bad, bad.mu(), Order::Infinity, 25).is_err());
    }

    #[test]
    fn transversal_closed_form_at_four_delta() {
        for delta in [1.0, 3.0, 10.0] {
            let b = 4.0 * delta;
            let v = independent_transversal_min_entropy(5, b, delta);
            assert!((v - 5.0 * (2.0 * b / 3.0).ln()).abs() < 1e-12);
            assert!((v - 5.0 * (b.ln() - 1.5f64.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_ksat_entropy() {
        let (beta, rho) = partial_ksat_params(1.0);
        assert_eq!(beta, 1.0);
        assert_eq!(rho, 3.0);
        let v = partial_ksat_log_count(100, 3, 1.0);
        assert!((v - 100.0 * (LN_2 - 9.0 / 9.0)).abs() < 1e-12);
        let (beta, _) = partial_ksat_params(std::f64::consts::E);
        assert!(beta.abs() < 1e-15);
        assert!((partial_ksat_log_count(10, 4, std::f64::consts::E) - 10.0 * LN_2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn renyi_nonincreasing(raw in prop::collection::vec(0.01f64..1.0, 1..10), a in 1.01f64..5.0, b in 0.0f64..5.0) {
            let s: f64 = raw.iter().sum();
            let dist: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let h1 = renyi(&dist, Order::Finite(a)).unwrap();
            let h2 = renyi(&dist, Order::Finite(a + b)).unwrap();
            let hi = renyi(&dist, Order::Infinity).unwrap();
            prop_assert!(h2 <= h1 + 1e-12);
            prop_assert!(hi <= h2 + 1e-12);
        }
    }
}

//! Finite product distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("variable {0} has an empty domain")]
    EmptyDomain(usize),
    #[error("variable {var}: probability {value} is negative or not finite")]
    BadProbability { var: usize, value: f64 },
    #[error("variable {var}: probabilities sum to {sum}")]
    NotNormalized { var: usize, sum: f64 },
}

/// Independent variables `X_i` with values `0..domain(i)` drawn from `probs[i]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductSpace {
    probs: Vec<Vec<f64>>,
    #[serde(skip)]
    cdf: Vec<Vec<f64>>,
}

impl ProductSpace {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        for (var, p) in probs.iter().enumerate() {
            if p.is_empty() {
                return Err(SpaceError::EmptyDomain(var));
            }
            for &value in p {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(SpaceError::BadProbability { var, value });
                }
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SpaceError::NotNormalized { var, sum });
            }
        }
        let cdf = probs.iter().map(|p| cumulative(p)).collect();
        Ok(ProductSpace { probs, cdf })
    }

    pub fn uniform(n: usize, domain: usize) -> Self {
        assert!(domain > 0, "domain must be non-empty");
        Self::new(vec![vec![1.0 / domain as f64; domain]; n]).expect("uniform space is valid")
    }

    /// Binary variables with `P(X_i = 1) = p1[i]`.
    pub fn bernoulli(p1: &[f64]) -> Result<Self, SpaceError> {
        Self::new(p1.iter().map(|&p| vec![1.0 - p, p]).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.probs.len()
    }

    pub fn domain(&self, var: usize) -> usize {
        self.probs[var].len()
    }

    pub fn probs(&self, var: usize) -> &[f64] {
        &self.probs[var]
    }

    pub fn prob(&self, var: usize, value: u32) -> f64 {
        self.probs[var].get(value as usize).copied().unwrap_or(0.0)
    }

    pub fn sample_var<R: Rng + ?Sized>(&self, var: usize, rng: &mut R) -> u32 {
        let cdf = &self.cdf[var];
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c <= u);
        if idx < cdf.len() {
            return idx as u32;
        }
        // rounding left the last cumulative value below u
        self.probs[var].iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        (0..self.num_vars()).map(|i| self.sample_var(i, rng)).collect()
    }

    /// Number of joint assignments of `vars`, saturating.
    pub fn joint_size(&self, vars: &[usize]) -> u64 {
        vars.iter()
            .fold(1u64, |acc, &v| acc.saturating_mul(self.domain(v) as u64))
    }

    /// Probability of the assignment `values` to `vars`.
    pub fn assignment_prob(&self, vars: &[usize], values: &[u32]) -> f64 {
        vars.iter().zip(values).map(|(&v, &x)| self.prob(v, x)).product()
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

/// Visits every assignment of `vars` in lexicographic order.
pub fn for_each_assignment(space: &ProductSpace, vars: &[usize], mut f: impl FnMut(&[u32])) {
    let mut values = vec![0u32; vars.len()];
    loop {
        f(&values);
        let mut i = vars.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            values[i] += 1;
            if (values[i] as usize) < space.domain(vars[i]) {
                break;
            }
            values[i] = 0;
        }
    }
}

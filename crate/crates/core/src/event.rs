//! Bad events over a product space and the dependency structure between them.

use crate::space::{for_each_assignment, ProductSpace};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Predicate over a full configuration; it may only read the event's scope.
pub type Predicate = Arc<dyn Fn(&[u32]) -> bool + Send + Sync>;

/// Largest joint scope size on which probabilities are checked by enumeration.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("event scope is empty")]
    EmptyScope,
    #[error("variable {var} is out of range for a space of {n} variables")]
    VarOutOfRange { var: usize, n: usize },
    #[error("variable {0} appears twice in a scope")]
    DuplicateVar(usize),
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("stated probability {stated} differs from enumerated mass {enumerated}")]
    ProbabilityMismatch { stated: f64, enumerated: f64 },
    #[error("scope too large to enumerate ({0} assignments)")]
    TooLarge(u64),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("dependency relation is not reflexive at event {0}")]
    NotReflexive(usize),
    #[error("dependency relation is not symmetric for events {0} and {1}")]
    NotSymmetric(usize, usize),
}

#[derive(Clone)]
pub struct Event {
    scope: Vec<usize>,
    predicate: Predicate,
    prob: f64,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Event")
            .field("scope", &self.scope)
            .field("prob", &self.prob)
            .finish()
    }
}

impl Event {
    /// Builds an event whose probability is obtained by enumerating its scope.
    pub fn new(
        space: &ProductSpace,
        scope: Vec<usize>,
        predicate: impl Fn(&[u32]) -> bool + Send + Sync + 'static,
    ) -> Result<Self, EventError> {
        let scope = normalize_scope(space, scope)?;
        let predicate: Predicate = Arc::new(predicate);
        let size = space.joint_size(&scope);
        if size > BRUTE_FORCE_LIMIT {
            return Err(EventError::TooLarge(size));
        }
        let prob = enumerate_mass(space, &scope, &predicate).clamp(0.0, 1.0);
        Ok(Event { scope, predicate, prob })
    }

    /// Builds an event with an analytic probability. Small scopes are
    /// cross-checked against enumeration.
    pub fn with_prob(
        space: &ProductSpace,
        scope: Vec<usize>,
        predicate: impl Fn(&[u32]) -> bool + Send + Sync + 'static,
        prob: f64,
    ) -> Result<Self, EventError> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(EventError::BadProbability(prob));
        }
        let scope = normalize_scope(space, scope)?;
        let predicate: Predicate = Arc::new(predicate);
        if space.joint_size(&scope) <= BRUTE_FORCE_LIMIT {
            let enumerated = enumerate_mass(space, &scope, &predicate);
            if (enumerated - prob).abs() > 1e-9 {
                return Err(EventError::ProbabilityMismatch { stated: prob, enumerated });
            }
        }
        Ok(Event { scope, predicate, prob })
    }

    /// The conjunction `X_v = value` over the listed pairs.
    pub fn assignment(space: &ProductSpace, pairs: &[(usize, u32)]) -> Result<Self, EventError> {
        let scope = normalize_scope(space, pairs.iter().map(|p| p.0).collect())?;
        let prob = pairs.iter().map(|&(v, x)| space.prob(v, x)).product();
        let pairs = pairs.to_vec();
        Ok(Event {
            scope,
            predicate: Arc::new(move |x: &[u32]| pairs.iter().all(|&(v, val)| x[v] == val)),
            prob,
        })
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn holds(&self, x: &[u32]) -> bool {
        (self.predicate)(x)
    }

    pub fn overlaps(&self, other: &Event) -> bool {
        sorted_intersect(&self.scope, &other.scope)
    }
}

fn normalize_scope(space: &ProductSpace, mut scope: Vec<usize>) -> Result<Vec<usize>, EventError> {
    if scope.is_empty() {
        return Err(EventError::EmptyScope);
    }
    let n = space.num_vars();
    scope.sort_unstable();
    for w in scope.windows(2) {
        if w[0] == w[1] {
            return Err(EventError::DuplicateVar(w[0]));
        }
    }
    if let Some(&var) = scope.iter().find(|&&v| v >= n) {
        return Err(EventError::VarOutOfRange { var, n });
    }
    Ok(scope)
}

fn enumerate_mass(space: &ProductSpace, scope: &[usize], predicate: &Predicate) -> f64 {
    let mut x = vec![0u32; space.num_vars()];
    let mut mass = 0.0;
    for_each_assignment(space, scope, |values| {
        for (&v, &val) in scope.iter().zip(values) {
            x[v] = val;
        }
        if predicate(&x) {
            mass += space.assignment_prob(scope, values);
        }
    });
    mass
}

pub(crate) fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// An indexed family of bad events with weights `mu`.
///
/// Two relations are kept. `overlap` is variable sharing and drives the
/// searchers; `dependency` drives the analysis and defaults to `overlap`, but
/// may be replaced by a sparser lopsided relation.
#[derive(Clone, Debug)]
pub struct EventFamily {
    space: ProductSpace,
    events: Vec<Event>,
    mu: Vec<f64>,
    overlap: Vec<Vec<usize>>,
    dependency: Vec<Vec<usize>>,
    var_events: Vec<Vec<usize>>,
    lopsided: bool,
}

impl EventFamily {
    pub fn new(space: ProductSpace, events: Vec<Event>, mu: Vec<f64>) -> Result<Self, EventError> {
        check_weights(events.len(), &mu)?;
        let n = space.num_vars();
        for e in &events {
            if let Some(&var) = e.scope.iter().find(|&&v| v >= n) {
                return Err(EventError::VarOutOfRange { var, n });
            }
        }
        let mut var_events = vec![Vec::new(); n];
        for (i, e) in events.iter().enumerate() {
            for &v in &e.scope {
                var_events[v].push(i);
            }
        }
        let overlap: Vec<Vec<usize>> = events
            .iter()
            .map(|e| {
                let mut nb: Vec<usize> =
                    e.scope.iter().flat_map(|&v| var_events[v].iter().copied()).collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();
        Ok(EventFamily {
            space,
            events,
            mu,
            dependency: overlap.clone(),
            overlap,
            var_events,
            lopsided: false,
        })
    }

    /// Replaces the dependency relation. It must be reflexive and symmetric.
    pub fn with_dependency(mut self, rel: impl Fn(usize, usize) -> bool) -> Result<Self, EventError> {
        let m = self.events.len();
        let mut dependency = vec![Vec::new(); m];
        for i in 0..m {
            if !rel(i, i) {
                return Err(EventError::NotReflexive(i));
            }
            for j in 0..m {
                let r = rel(i, j);
                if r != rel(j, i) {
                    return Err(EventError::NotSymmetric(i, j));
                }
                if r {
                    dependency[i].push(j);
                }
            }
        }
        self.dependency = dependency;
        self.lopsided = true;
        Ok(self)
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Result<Self, EventError> {
        check_weights(self.events.len(), &mu)?;
        self.mu = mu;
        Ok(self)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn total_mu(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn is_lopsided(&self) -> bool {
        self.lopsided
    }

    /// Inclusive dependency neighborhood `N(B_i)`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.dependency[i]
    }

    /// Events sharing a variable with `B_i`, including itself.
    pub fn overlap_neighbors(&self, i: usize) -> &[usize] {
        &self.overlap[i]
    }

    pub fn depends(&self, i: usize, j: usize) -> bool {
        self.dependency[i].binary_search(&j).is_ok()
    }

    pub fn events_on_var(&self, v: usize) -> &[usize] {
        &self.var_events[v]
    }

    /// `N(E)` for an arbitrary event: all bad events sharing a variable with it.
    pub fn neighborhood(&self, e: &Event) -> Vec<usize> {
        let mut nb: Vec<usize> = e
            .scope
            .iter()
            .flat_map(|&v| self.var_events[v].iter().copied())
            .collect();
        nb.sort_unstable();
        nb.dedup();
        nb
    }

    /// Default resampling cap `10^4 (1 + Σ μ)`.
    pub fn default_cap(&self) -> u64 {
        let c = 1e4 * (1.0 + self.total_mu());
        if c.is_finite() && c < u64::MAX as f64 {
            c.ceil() as u64
        } else {
            u64::MAX
        }
    }
}

fn check_weights(m: usize, mu: &[f64]) -> Result<(), EventError> {
    if mu.len() != m {
        return Err(EventError::WeightCount { expected: m, got: mu.len() });
    }
    if let Some(&w) = mu.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(EventError::BadWeight(w));
    }
    Ok(())
}

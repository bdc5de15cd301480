//! Partial k-SAT by truncated MT under a biased product distribution.

use lll_core::analysis::{theta_bad, DEFAULT_EXACT_LIMIT};
use lll_core::engine::{EngineError, EngineOptions, SelectionRule};
use lll_core::event::{Event, EventError, EventFamily};
use lll_core::space::ProductSpace;
use lll_core::truncated::run_truncated_model;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SatError {
    #[error("clause {clause}: {reason}")]
    InvalidClause { clause: usize, reason: String },
    #[error("α = {0} outside [1, e]")]
    InvalidAlpha(f64),
    #[error("L = {l} exceeds the limit {limit} for α = {alpha}")]
    OccurrenceTooLarge { l: usize, limit: f64, alpha: f64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error("no satisfying assignment after {0} uniform draws")]
    ShortcutExhausted(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn is_true(&self, x: &[bool]) -> bool {
        x[self.var] == self.positive
    }
}

/// CNF formula whose clauses all have exactly `k` distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfInstance {
    n: usize,
    k: usize,
    clauses: Vec<Vec<Literal>>,
    occ: Vec<usize>,
    pos: Vec<usize>,
}

impl CnfInstance {
    pub fn new(n: usize, k: usize, clauses: Vec<Vec<Literal>>) -> Result<Self, SatError> {
        let mut occ = vec![0; n];
        let mut pos = vec![0; n];
        for (i, c) in clauses.iter().enumerate() {
            let bad = |reason: String| SatError::InvalidClause { clause: i, reason };
            if c.len() != k {
                return Err(bad(format!("width {} differs from k = {k}", c.len())));
            }
            for (j, l) in c.iter().enumerate() {
                if l.var >= n {
                    return Err(bad(format!("variable {} out of range", l.var)));
                }
                if c[..j].iter().any(|o| o.var == l.var) {
                    return Err(bad(format!("variable {} repeated", l.var)));
                }
                occ[l.var] += 1;
                pos[l.var] += l.positive as usize;
            }
        }
        Ok(CnfInstance { n, k, clauses, occ, pos })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn occurrences(&self) -> &[usize] {
        &self.occ
    }

    pub fn max_occurrence(&self) -> usize {
        self.occ.iter().copied().max().unwrap_or(0)
    }

    /// Fraction `δ_i` of positive occurrences; 1/2 for unused variables.
    pub fn positive_fraction(&self, i: usize) -> f64 {
        if self.occ[i] == 0 {
            0.5
        } else {
            self.pos[i] as f64 / self.occ[i] as f64
        }
    }

    pub fn clause_satisfied(&self, c: usize, x: &[bool]) -> bool {
        self.clauses[c].iter().any(|l| l.is_true(x))
    }

    pub fn count_satisfied(&self, x: &[bool]) -> usize {
        (0..self.m()).filter(|&c| self.clause_satisfied(c, x)).count()
    }

    /// Clauses conflict when some shared variable appears with opposite signs.
    pub fn conflict(&self, a: usize, b: usize) -> bool {
        a == b
            || self.clauses[a]
                .iter()
                .any(|l| self.clauses[b].iter().any(|o| o.var == l.var && o.positive != l.positive))
    }
}

/// Largest admissible `L = α·2^{k+1}/(ek) − 2/k`.
pub fn max_occurrence_limit(k: usize, alpha: f64) -> f64 {
    alpha * 2f64.powi(k as i32 + 1) / (E * k as f64) - 2.0 / k as f64
}

/// Lower bound `m(1 − 2^{-k}·e·ln α/α)` on the expected number of
/// satisfied clauses.
pub fn satisfied_bound(m: usize, k: usize, alpha: f64) -> f64 {
    m as f64 * (1.0 - 2f64.powi(-(k as i32)) * E * alpha.ln() / alpha)
}

/// `z = 2 ln(2^{k+1}/(2+kL))/(2+kL)`.
pub fn z_value(k: usize, l: usize) -> f64 {
    let d = 2.0 + (k * l) as f64;
    2.0 * (2f64.powi(k as i32 + 1) / d).ln() / d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    pub alpha: f64,
    pub l: usize,
    pub z: f64,
    pub x: f64,
    /// Probability that each variable is set true.
    pub p_true: Vec<f64>,
}

pub fn bias_params(inst: &CnfInstance, alpha: f64) -> Result<BiasParams, SatError> {
    if !(1.0..=E).contains(&alpha) {
        return Err(SatError::InvalidAlpha(alpha));
    }
    let l = inst.max_occurrence().max(1);
    let limit = max_occurrence_limit(inst.k(), alpha);
    if l as f64 > limit + 1e-12 {
        return Err(SatError::OccurrenceTooLarge { l, limit, alpha });
    }
    let z = z_value(inst.k(), l);
    let x = l as f64 * z / 2.0;
    let p_true = (0..inst.n()).map(|i| (0.5 - x * (inst.positive_fraction(i) - 0.5)).clamp(0.0, 1.0)).collect();
    Ok(BiasParams { alpha, l, z, x, p_true })
}

/// Clause-violation events under the biased space, with the lopsided
/// dependency relation and weight `z` on every event.
pub fn sat_family(inst: &CnfInstance, bias: &BiasParams) -> Result<EventFamily, SatError> {
    let space = ProductSpace::bernoulli(&bias.p_true).map_err(|e| SatError::InvalidClause {
        clause: 0,
        reason: e.to_string(),
    })?;
    let mut events = Vec::with_capacity(inst.m());
    for c in inst.clauses() {
        let lits = c.clone();
        let prob = lits
            .iter()
            .map(|l| if l.positive { 1.0 - bias.p_true[l.var] } else { bias.p_true[l.var] })
            .product();
        let scope = lits.iter().map(|l| l.var).collect();
        let pred = move |x: &[u32]| lits.iter().all(|l| (x[l.var] == 1) != l.positive);
        events.push(Event::with_prob(&space, scope, pred, prob)?);
    }
    let fam = EventFamily::new(space, events, vec![bias.z; inst.m()])?;
    Ok(fam.with_dependency(|a, b| inst.conflict(a, b))?)
}

/// Core probabilities `min(1, z/θ(B))` with `θ` summed exactly over the
/// lopsided neighborhoods.
pub fn core_probabilities(fam: &EventFamily) -> Vec<f64> {
    (0..fam.len())
        .map(|i| {
            let t = theta_bad(fam, i, fam.mu(), DEFAULT_EXACT_LIMIT).value;
            if t > 0.0 {
                (fam.mu()[i] / t).min(1.0)
            } else {
                1.0
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct SatOptions {
    /// For `m < 2^{k−1}`, redraw uniform assignments until all clauses hold.
    pub shortcut: bool,
    pub rule: SelectionRule,
    /// Keep the best of this many runs.
    pub best_of: usize,
}

impl Default for SatOptions {
    fn default() -> Self {
        SatOptions { shortcut: true, rule: SelectionRule::LowestIndex, best_of: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SatRun {
    pub assignment: Vec<bool>,
    pub satisfied: usize,
    pub falsified: usize,
    pub resamplings: usize,
    pub bound: f64,
    pub z: f64,
    pub used_shortcut: bool,
}

/// Prepared state for repeated runs on one instance.
#[derive(Clone, Debug)]
pub struct SatSolver {
    pub inst: CnfInstance,
    pub bias: BiasParams,
    pub family: EventFamily,
    pub q: Vec<f64>,
}

impl SatSolver {
    pub fn new(inst: &CnfInstance, alpha: f64) -> Result<Self, SatError> {
        let bias = bias_params(inst, alpha)?;
        let family = sat_family(inst, &bias)?;
        let q = core_probabilities(&family);
        Ok(SatSolver { inst: inst.clone(), bias, family, q })
    }

    pub fn bound(&self) -> f64 {
        satisfied_bound(self.inst.m(), self.inst.k(), self.bias.alpha)
    }

    fn once<R: Rng + ?Sized>(&self, rng: &mut R, opts: &EngineOptions, sopts: &SatOptions) -> Result<SatRun, SatError> {
        let inst = &self.inst;
        let m = inst.m();
        if sopts.shortcut && (m as f64) < 2f64.powi(inst.k() as i32 - 1) {
            let tries = 10_000;
            for _ in 0..tries {
                let x: Vec<bool> = (0..inst.n()).map(|_| rng.gen()).collect();
                if inst.count_satisfied(&x) == m {
                    return Ok(self.report(x, 0, true));
                }
            }
            return Err(SatError::ShortcutExhausted(tries));
        }
        let q = &self.q;
        let opts = opts.rule(sopts.rule);
        let run = run_truncated_model(&self.family, &|e: &usize| q[*e], rng, &opts)?;
        let resamplings = run.run.resamplings();
        let x = run.run.config.iter().map(|&v| v == 1).collect();
        Ok(self.report(x, resamplings, false))
    }

    fn report(&self, x: Vec<bool>, resamplings: usize, used_shortcut: bool) -> SatRun {
        let satisfied = self.inst.count_satisfied(&x);
        SatRun {
            falsified: self.inst.m() - satisfied,
            satisfied,
            assignment: x,
            resamplings,
            bound: self.bound(),
            z: self.bias.z,
            used_shortcut,
        }
    }

    /// Best of `sopts.best_of` independent runs.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, opts: &EngineOptions, sopts: &SatOptions) -> Result<SatRun, SatError> {
        let mut best = self.once(rng, opts, sopts)?;
        for _ in 1..sopts.best_of.max(1) {
            let r = self.once(rng, opts, sopts)?;
            if r.satisfied > best.satisfied {
                best = r;
            }
        }
        Ok(best)
    }
}

pub fn run_partial_ksat<R: Rng + ?Sized>(
    inst: &CnfInstance,
    alpha: f64,
    rng: &mut R,
    opts: &EngineOptions,
    sopts: &SatOptions,
) -> Result<SatRun, SatError> {
    SatSolver::new(inst, alpha)?.run(rng, opts, sopts)
}

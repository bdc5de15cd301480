//! Latin transversals by swapping MT, with a hash-bucket index for the
//! event search, plus partial transversals.

use lll_core::engine::{EngineError, EngineOptions};
use lll_core::swap::{run_mt_swapping, run_truncated_swapping, PermModel, PermSearcher, PermutationState};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PermAppError {
    #[error("matrix is not square: {0}")]
    NotSquare(String),
    #[error("Δ = {delta} exceeds 27n/256 = {limit}")]
    TooManyRepeats { delta: usize, limit: f64 },
    #[error("β = {0} outside (0, 1/4]")]
    InvalidBeta(f64),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("output repeats color {color} in rows {x} and {x2}")]
    NotTransversal { color: u32, x: usize, x2: usize },
    #[error("{0} bucket audit failures")]
    AuditFailed(usize),
    #[error("w(x, y) = {w} exceeds the limit {limit}")]
    WeightTooLarge { w: f64, limit: f64 },
}

/// Square matrix of dense color ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorMatrix {
    n: usize,
    cells: Vec<u32>,
    delta: usize,
    colors: usize,
}

impl ColorMatrix {
    /// Row-major cells; color ids are relabeled densely in order of first
    /// appearance.
    pub fn from_flat(n: usize, cells: Vec<u32>) -> Result<Self, PermAppError> {
        if cells.len() != n * n {
            return Err(PermAppError::NotSquare(format!("{} cells for n = {n}", cells.len())));
        }
        let mut ids: HashMap<u32, u32> = HashMap::new();
        let mut count: Vec<usize> = Vec::new();
        let cells: Vec<u32> = cells
            .into_iter()
            .map(|c| {
                let next = ids.len() as u32;
                let id = *ids.entry(c).or_insert(next);
                if id as usize == count.len() {
                    count.push(0);
                }
                count[id as usize] += 1;
                id
            })
            .collect();
        let delta = count.iter().copied().max().unwrap_or(0);
        Ok(ColorMatrix { n, cells, delta, colors: count.len() })
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self, PermAppError> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(PermAppError::NotSquare(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        ColorMatrix::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.delta as f64 / self.n as f64
    }

    pub fn num_colors(&self) -> usize {
        self.colors
    }

    pub fn color(&self, x: usize, y: usize) -> u32 {
        self.cells[x * self.n + y]
    }

    /// Cells of every color.
    pub fn cells_by_color(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.colors];
        for x in 0..self.n {
            for y in 0..self.n {
                out[self.color(x, y) as usize].push((x, y));
            }
        }
        out
    }

    /// Number of same-colored cell pairs in distinct rows and columns.
    pub fn bad_event_count(&self) -> usize {
        self.cells_by_color()
            .iter()
            .map(|cs| {
                let mut k = 0;
                for (i, &(x, y)) in cs.iter().enumerate() {
                    k += cs[i + 1..].iter().filter(|&&(a, b)| a != x && b != y).count();
                }
                k
            })
            .sum()
    }
}

/// Bad event `π(x) = y ∧ π(x2) = y2` with `x < x2`.
pub type CellPair = (usize, usize, usize, usize);

fn pair_event(x: usize, y: usize, x2: usize, y2: usize) -> CellPair {
    if x < x2 {
        (x, y, x2, y2)
    } else {
        (x2, y2, x, y)
    }
}

#[derive(Clone, Debug)]
pub struct LatinModel {
    pub matrix: ColorMatrix,
}

impl PermModel for LatinModel {
    type Event = CellPair;

    fn n(&self) -> usize {
        self.matrix.n
    }

    fn pairs(&self, e: &CellPair) -> Vec<(usize, usize)> {
        vec![(e.0, e.1), (e.2, e.3)]
    }

    fn find_all(&self, pi: &[usize]) -> Vec<CellPair> {
        let mut rows: HashMap<u32, Vec<usize>> = HashMap::new();
        for (x, &y) in pi.iter().enumerate() {
            rows.entry(self.matrix.color(x, y)).or_default().push(x);
        }
        let mut out = Vec::new();
        for xs in rows.values() {
            for (i, &x) in xs.iter().enumerate() {
                for &x2 in &xs[i + 1..] {
                    out.push(pair_event(x, pi[x], x2, pi[x2]));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

const PRIME: u64 = (1 << 61) - 1;

/// `c ↦ ((a·c + b) mod (2^61 − 1)) mod n`, a pairwise-independent family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
    n: u64,
}

impl PairwiseHash {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        PairwiseHash { a: rng.gen_range(1..PRIME), b: rng.gen_range(0..PRIME), n: n.max(1) as u64 }
    }

    pub fn apply(&self, c: u32) -> usize {
        let v = (self.a as u128 * c as u128 + self.b as u128) % PRIME as u128;
        (v % self.n as u128) as usize
    }
}

const NIL: usize = usize::MAX;

/// For each bucket `t`, a doubly linked list of the rows `x` whose selected
/// cell `(x, π(x))` has a color hashing to `t`.
#[derive(Clone, Debug)]
pub struct ColorBuckets {
    hash: PairwiseHash,
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    bucket_of: Vec<usize>,
}

impl ColorBuckets {
    pub fn build(m: &ColorMatrix, pi: &[usize], hash: PairwiseHash) -> Self {
        let n = m.n();
        let mut b = ColorBuckets { hash, head: vec![NIL; n], next: vec![NIL; n], prev: vec![NIL; n], bucket_of: vec![NIL; n] };
        for x in 0..n {
            b.insert(x, hash.apply(m.color(x, pi[x])));
        }
        b
    }

    fn insert(&mut self, x: usize, t: usize) {
        let h = self.head[t];
        self.next[x] = h;
        self.prev[x] = NIL;
        if h != NIL {
            self.prev[h] = x;
        }
        self.head[t] = x;
        self.bucket_of[x] = t;
    }

    fn remove(&mut self, x: usize) {
        let (p, nx) = (self.prev[x], self.next[x]);
        if p != NIL {
            self.next[p] = nx;
        } else {
            self.head[self.bucket_of[x]] = nx;
        }
        if nx != NIL {
            self.prev[nx] = p;
        }
        self.bucket_of[x] = NIL;
    }

    /// Re-files the given rows after their entries changed.
    pub fn update(&mut self, m: &ColorMatrix, pi: &[usize], rows: &[usize]) {
        for &x in rows {
            let t = self.hash.apply(m.color(x, pi[x]));
            if t != self.bucket_of[x] {
                self.remove(x);
                self.insert(x, t);
            }
        }
    }

    /// Rows sharing `x`'s bucket, `x` excluded.
    pub fn bucket_mates(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        let mut cur = self.head[self.bucket_of[x]];
        std::iter::from_fn(move || {
            while cur != NIL {
                let r = cur;
                cur = self.next[cur];
                if r != x {
                    return Some(r);
                }
            }
            None
        })
    }

    /// True events through row `x`, found by probing only its bucket.
    pub fn events_through(&self, m: &ColorMatrix, pi: &[usize], x: usize, out: &mut Vec<CellPair>) -> usize {
        let c = m.color(x, pi[x]);
        let mut probes = 0;
        for x2 in self.bucket_mates(x) {
            probes += 1;
            if m.color(x2, pi[x2]) == c {
                out.push(pair_event(x, pi[x], x2, pi[x2]));
            }
        }
        probes
    }

    /// Checks the lists against a rescan of `π`.
    pub fn audit(&self, m: &ColorMatrix, pi: &[usize]) -> bool {
        let n = m.n();
        let mut seen = vec![0usize; n];
        for t in 0..n {
            let mut prev = NIL;
            let mut cur = self.head[t];
            let mut steps = 0;
            while cur != NIL {
                if self.prev[cur] != prev || self.bucket_of[cur] != t || steps > n {
                    return false;
                }
                seen[cur] += 1;
                steps += 1;
                prev = cur;
                cur = self.next[cur];
            }
        }
        (0..n).all(|x| seen[x] == 1 && self.bucket_of[x] == self.hash.apply(m.color(x, pi[x])))
    }
}

/// Swapping-MT searcher backed by [`ColorBuckets`].
#[derive(Clone, Debug)]
pub struct BucketSearcher {
    hash: PairwiseHash,
    buckets: Option<ColorBuckets>,
    pub audit: bool,
    pub audit_failures: usize,
    pub probes: usize,
}

impl BucketSearcher {
    pub fn new(hash: PairwiseHash, audit: bool) -> Self {
        BucketSearcher { hash, buckets: None, audit, audit_failures: 0, probes: 0 }
    }
}

impl PermSearcher<LatinModel> for BucketSearcher {
    fn init(&mut self, model: &LatinModel, pi: &[usize]) -> Vec<CellPair> {
        let b = ColorBuckets::build(&model.matrix, pi, self.hash);
        let mut out = Vec::new();
        for x in 0..pi.len() {
            self.probes += b.events_through(&model.matrix, pi, x, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        self.buckets = Some(b);
        out
    }

    fn after_swaps(&mut self, model: &LatinModel, pi: &[usize], changed: &[usize]) -> Vec<CellPair> {
        let b = self.buckets.as_mut().expect("init runs first");
        b.update(&model.matrix, pi, changed);
        if self.audit && !b.audit(&model.matrix, pi) {
            self.audit_failures += 1;
        }
        let mut out = Vec::new();
        for &x in changed {
            self.probes += b.events_through(&model.matrix, pi, x, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// First repeated color of the selected cells, if any.
pub fn repeated_color(m: &ColorMatrix, pi: &[usize]) -> Option<(u32, usize, usize)> {
    let mut first: HashMap<u32, usize> = HashMap::new();
    for (x, &y) in pi.iter().enumerate() {
        let c = m.color(x, y);
        if let Some(&x0) = first.get(&c) {
            return Some((c, x0, x));
        }
        first.insert(c, x);
    }
    None
}

/// Number of distinct colors met by `π`, which equals the length of the
/// partial transversal left after keeping one cell per repeated color.
pub fn distinct_colors(m: &ColorMatrix, pi: &[usize]) -> usize {
    let mut seen = vec![false; m.num_colors()];
    pi.iter().enumerate().filter(|&(x, &y)| !std::mem::replace(&mut seen[m.color(x, y) as usize], true)).count()
}

/// Active-cell mask after deactivating, for each conflict, every cell but
/// the one in the lowest row.
pub fn active_cells(m: &ColorMatrix, pi: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; m.num_colors()];
    pi.iter().enumerate().map(|(x, &y)| !std::mem::replace(&mut seen[m.color(x, y) as usize], true)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct LatinOptions {
    pub audit_buckets: bool,
    /// Skip the `Δ ≤ 27n/256` precondition.
    pub force: bool,
}

impl Default for LatinOptions {
    fn default() -> Self {
        LatinOptions { audit_buckets: false, force: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatinRun {
    pub pi: Vec<usize>,
    pub resamplings: usize,
    pub probes: usize,
}

/// Largest Δ for which a full transversal is guaranteed.
pub fn full_transversal_limit(n: usize) -> f64 {
    27.0 * n as f64 / 256.0
}

/// Swapping MT for a full transversal. The result is checked before it is
/// returned.
pub fn run_latin<R: Rng + ?Sized>(
    m: &ColorMatrix,
    rng: &mut R,
    opts: &EngineOptions,
    lopts: &LatinOptions,
) -> Result<LatinRun, PermAppError> {
    let limit = full_transversal_limit(m.n());
    if !lopts.force && m.delta() > 1 && m.delta() as f64 > limit {
        return Err(PermAppError::TooManyRepeats { delta: m.delta(), limit });
    }
    let model = LatinModel { matrix: m.clone() };
    let mut s = BucketSearcher::new(PairwiseHash::random(m.n(), rng), lopts.audit_buckets);
    let run = run_mt_swapping(&model, &mut s, rng, opts)?;
    if s.audit_failures > 0 {
        return Err(PermAppError::AuditFailed(s.audit_failures));
    }
    let pi = run.state.into_vec();
    if let Some((color, x, x2)) = repeated_color(m, &pi) {
        return Err(PermAppError::NotTransversal { color, x, x2 });
    }
    Ok(LatinRun { pi, resamplings: run.log.entries.len(), probes: s.probes })
}

/// `max w(x, y)` with `w(x, y) = (1 + α)^{#events involving row x or column y}`.
pub fn max_weight(m: &ColorMatrix, alpha: f64) -> f64 {
    let n = m.n();
    let mut row = vec![0usize; n];
    let mut col = vec![0usize; n];
    let mut both = vec![0usize; n * n];
    for cs in m.cells_by_color() {
        for (i, &(x, y)) in cs.iter().enumerate() {
            for &(x2, y2) in &cs[i + 1..] {
                if x == x2 || y == y2 {
                    continue;
                }
                row[x] += 1;
                row[x2] += 1;
                col[y] += 1;
                col[y2] += 1;
                // (row, column) pairs this event touches in both coordinates
                both[x * n + y] += 1;
                both[x2 * n + y2] += 1;
                both[x * n + y2] += 1;
                both[x2 * n + y] += 1;
            }
        }
    }
    let mut worst = 0usize;
    for x in 0..n {
        for y in 0..n {
            worst = worst.max(row[x] + col[y] - both[x * n + y]);
        }
    }
    (1.0 + alpha).powi(worst as i32)
}

/// Weight `α = 1/(3n(Δ−1))` used for the full-transversal analysis.
pub fn full_alpha(n: usize, delta: usize) -> f64 {
    if delta < 2 {
        0.0
    } else {
        1.0 / (3.0 * n as f64 * (delta - 1) as f64)
    }
}

/// Checks `max w(x, y) ≤ limit`.
pub fn check_weights(m: &ColorMatrix, limit: f64) -> Result<f64, PermAppError> {
    let w = max_weight(m, full_alpha(m.n(), m.delta()));
    if w > limit {
        Err(PermAppError::WeightTooLarge { w, limit })
    } else {
        Ok(w)
    }
}

/// Expected-length bound `n(1 − e^{−β})/β` for the random baseline.
pub fn stein_bound(n: usize, beta: f64) -> f64 {
    if beta <= 0.0 {
        n as f64
    } else {
        n as f64 * (1.0 - (-beta).exp()) / beta
    }
}

/// A uniform permutation trimmed to one cell per color; returns the length.
pub fn stein_baseline<R: Rng + ?Sized>(m: &ColorMatrix, rng: &mut R) -> (Vec<usize>, usize) {
    let pi = PermutationState::uniform(m.n(), rng).into_vec();
    let len = distinct_colors(m, &pi);
    (pi, len)
}

/// `n·min(1, 1/2 + ∛(27/(2048β)))`.
pub fn partial_latin_bound(n: usize, beta: f64) -> f64 {
    n as f64 * (0.5 + (27.0 / (2048.0 * beta)).cbrt()).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialLatinParams {
    pub alpha: f64,
    /// `p(1 + n(Δ−1)α)^4`, an upper bound on every θ.
    pub theta_hat: f64,
    pub q: f64,
}

pub fn partial_latin_params(n: usize, delta: usize) -> PartialLatinParams {
    if delta < 2 || n < 2 {
        return PartialLatinParams { alpha: 0.0, theta_hat: 0.0, q: 0.0 };
    }
    let (nf, d1) = (n as f64, (delta - 1) as f64);
    let alpha = (((nf - 1.0) / (4.0 * d1)).cbrt() - 1.0).max(0.0) / (nf * d1);
    let theta_hat = (1.0 + nf * d1 * alpha).powi(4) / (nf * (nf - 1.0));
    PartialLatinParams { alpha, theta_hat, q: (alpha / theta_hat).min(1.0) }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialLatinRun {
    pub pi: Vec<usize>,
    pub active: Vec<bool>,
    pub length: usize,
    pub resamplings: usize,
    pub params: PartialLatinParams,
}

/// Truncated swapping MT followed by deactivation of surviving conflicts.
pub fn run_partial_latin<R: Rng + ?Sized>(
    m: &ColorMatrix,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<PartialLatinRun, PermAppError> {
    let beta = m.beta();
    if !(beta > 0.0 && beta <= 0.25) {
        return Err(PermAppError::InvalidBeta(beta));
    }
    let params = partial_latin_params(m.n(), m.delta());
    let model = LatinModel { matrix: m.clone() };
    let mut s = BucketSearcher::new(PairwiseHash::random(m.n(), rng), false);
    let q = params.q;
    let run = run_truncated_swapping(&model, &mut s, &|_| q, rng, opts)?;
    let pi = run.state.into_vec();
    let active = active_cells(m, &pi);
    let length = active.iter().filter(|&&a| a).count();
    Ok(PartialLatinRun { pi, active, length, resamplings: run.log.entries.len(), params })
}

//! Hypergraph two-coloring: MT over (color, rank) pairs followed by the
//! rank-ordered flip pass.

use lll_core::engine::{run_mt_dfs, EngineError, EngineOptions};
use lll_core::model::{Model, Searcher};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HypError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("data structure audit failed after {0} resamplings")]
    AuditFailed(usize),
    #[error("flip pass left edge {0} monochromatic")]
    FlipFailed(usize),
    #[error("no valid coloring after {0} restarts")]
    RestartsExhausted(usize),
}

/// Rank threshold `R = ln k / (2k)`.
pub fn rank_threshold(k: usize) -> f64 {
    (k as f64).ln() / (2.0 * k as f64)
}

/// Largest neighborhood size allowed: `0.17·√(k/ln k)·2^k`.
pub fn max_neighborhood(k: usize) -> f64 {
    0.17 * (k as f64 / (k as f64).ln()).sqrt() * 2f64.powi(k as i32)
}

/// Probability of `B(f)` for one color: `2^{-k}(1−R)^k`.
pub fn p1(k: usize) -> f64 {
    let r = rank_threshold(k);
    2f64.powi(-(k as i32)) * (1.0 - r).powi(k as i32)
}

/// Probability of `B(f, f')` for one color:
/// `2^{1−2k} ∫_0^R (1−ρ²)^{k−1} dρ`, expanded as a polynomial.
pub fn p2(k: usize) -> f64 {
    let r = rank_threshold(k);
    let mut s = 0.0;
    let mut binom = 1.0;
    for j in 0..k {
        let term = binom * r.powi(2 * j as i32 + 1) / (2 * j + 1) as f64;
        s += if j % 2 == 0 { term } else { -term };
        binom = binom * (k - 1 - j) as f64 / (j + 1) as f64;
    }
    2f64.powi(1 - 2 * k as i32) * s
}

/// `t ≤ exp(2L√e·p₁ + 4L²e·p₂)`; the criterion asks for `t ≤ √e`.
pub fn t_bound(k: usize, l: usize) -> f64 {
    let l = l as f64;
    (2.0 * l * E.sqrt() * p1(k) + 4.0 * l * l * E * p2(k)).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypInstance {
    pub k: usize,
    pub n: usize,
    pub edges: Vec<Vec<usize>>,
    /// Edges through each vertex.
    pub incidence: Vec<Vec<usize>>,
    /// Intersecting edges of each edge, itself included, sorted.
    pub nbrs: Vec<Vec<usize>>,
    /// `max |N(f)|`.
    pub l: usize,
    pub r: f64,
}

impl HypInstance {
    /// Builds the instance and checks uniformity and the `L` bound.
    pub fn new(n: usize, k: usize, edges: Vec<Vec<usize>>) -> Result<Self, HypError> {
        let inst = Self::unchecked(n, k, edges)?;
        if inst.l as f64 > max_neighborhood(k) {
            return Err(HypError::InvalidInstance(format!(
                "max |N(f)| = {} exceeds {:.3}",
                inst.l,
                max_neighborhood(k)
            )));
        }
        Ok(inst)
    }

    /// Builds the instance without the `L` bound.
    pub fn unchecked(n: usize, k: usize, mut edges: Vec<Vec<usize>>) -> Result<Self, HypError> {
        if k < 2 {
            return Err(HypError::InvalidInstance("k must be at least 2".into()));
        }
        let mut incidence = vec![Vec::new(); n];
        for (i, e) in edges.iter_mut().enumerate() {
            e.sort_unstable();
            if e.len() != k {
                return Err(HypError::InvalidInstance(format!("edge {i} has {} vertices, expected {k}", e.len())));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(HypError::InvalidInstance(format!("edge {i} repeats a vertex")));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(HypError::InvalidInstance(format!("edge {i} uses vertex {v} >= n = {n}")));
            }
            for &v in e.iter() {
                incidence[v].push(i);
            }
        }
        let mut nbrs = Vec::with_capacity(edges.len());
        for e in &edges {
            let mut s: Vec<usize> = e.iter().flat_map(|&v| incidence[v].iter().copied()).collect();
            s.sort_unstable();
            s.dedup();
            nbrs.push(s);
        }
        let l = nbrs.iter().map(Vec::len).max().unwrap_or(0);
        Ok(HypInstance { k, n, edges, incidence, nbrs, l, r: rank_threshold(k) })
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// The single common vertex of two edges, if they meet in exactly one.
    pub fn single_common(&self, f: usize, g: usize) -> Option<usize> {
        let (a, b) = (&self.edges[f], &self.edges[g]);
        let (mut i, mut j, mut found) = (0, 0, None);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        found
    }

    pub fn t_bound(&self) -> f64 {
        t_bound(self.k, self.l)
    }

    /// Whether `t ≤ √e` holds for this instance's `L`.
    pub fn certified(&self) -> bool {
        self.t_bound() <= E.sqrt()
    }

    /// Below this edge count the plain flip procedure is used with restarts.
    pub fn shortcut_threshold(&self) -> f64 {
        let k = self.k as f64;
        (k / k.ln()).sqrt() * 2f64.powi(self.k as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexState {
    pub color: u8,
    pub rank: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HypEvent {
    /// Edge `f` is monochromatic in `color` with every rank above `R`.
    Single { f: usize, color: u8 },
    /// Flip-failure pattern: `f` monochromatic in `color`, `f ∩ g = {v}` with
    /// `v` the lowest vertex of `f` and rank at most `R`, and every other
    /// vertex of `g` not of `color` or ranked below `v`.
    Pair { f: usize, g: usize, color: u8 },
}

fn mono_color(edge: &[usize], x: &[VertexState]) -> Option<u8> {
    let c = x[edge[0]].color;
    edge.iter().all(|&v| x[v].color == c).then_some(c)
}

fn lowest(edge: &[usize], x: &[VertexState]) -> usize {
    *edge
        .iter()
        .min_by(|&&a, &&b| x[a].rank.total_cmp(&x[b].rank).then(a.cmp(&b)))
        .expect("edges are non-empty")
}

impl HypInstance {
    fn single_holds(&self, f: usize, color: u8, x: &[VertexState]) -> bool {
        self.edges[f].iter().all(|&v| x[v].color == color && x[v].rank > self.r)
    }

    fn pair_holds(&self, f: usize, g: usize, color: u8, x: &[VertexState]) -> bool {
        let Some(v) = self.single_common(f, g) else { return false };
        if !self.edges[f].iter().all(|&u| x[u].color == color) {
            return false;
        }
        if lowest(&self.edges[f], x) != v || x[v].rank > self.r {
            return false;
        }
        self.edges[g]
            .iter()
            .filter(|&&u| u != v)
            .all(|&u| x[u].color != color || x[u].rank < x[v].rank)
    }

    /// Events of either type with `f` as the monochromatic edge.
    fn events_from(&self, f: usize, x: &[VertexState], out: &mut BTreeSet<HypEvent>) {
        let Some(c) = mono_color(&self.edges[f], x) else { return };
        if self.single_holds(f, c, x) {
            out.insert(HypEvent::Single { f, color: c });
        }
        for &g in &self.nbrs[f] {
            if g != f && self.pair_holds(f, g, c, x) {
                out.insert(HypEvent::Pair { f, g, color: c });
            }
        }
    }
}

impl Model for HypInstance {
    type Value = VertexState;
    type Event = HypEvent;

    fn num_vars(&self) -> usize {
        self.n
    }

    fn sample_var<R: Rng + ?Sized>(&self, _: usize, rng: &mut R) -> VertexState {
        VertexState { color: rng.gen_range(0..2), rank: rng.gen::<f64>() }
    }

    fn scope(&self, e: &HypEvent) -> Vec<usize> {
        match *e {
            HypEvent::Single { f, .. } => self.edges[f].clone(),
            HypEvent::Pair { f, g, .. } => {
                let mut s: Vec<usize> = self.edges[f].iter().chain(&self.edges[g]).copied().collect();
                s.sort_unstable();
                s.dedup();
                s
            }
        }
    }

    fn holds(&self, e: &HypEvent, x: &[VertexState]) -> bool {
        match *e {
            HypEvent::Single { f, color } => self.single_holds(f, color, x),
            HypEvent::Pair { f, g, color } => self.pair_holds(f, g, color, x),
        }
    }

    fn find_all(&self, x: &[VertexState]) -> Vec<HypEvent> {
        let mut out = BTreeSet::new();
        for f in 0..self.m() {
            self.events_from(f, x, &mut out);
        }
        out.into_iter().collect()
    }
}

/// Per-vertex lists of the monochromatic edges through each vertex, with
/// O(1) insertion and removal.
#[derive(Clone, Debug, Default)]
pub struct MonoLists {
    lists: Vec<Vec<usize>>,
    /// For edge `f` and its `j`-th vertex, the slot of `f` in that list.
    slot: Vec<Vec<usize>>,
    mono: Vec<bool>,
}

const NO_SLOT: usize = usize::MAX;

impl MonoLists {
    pub fn build(inst: &HypInstance, x: &[VertexState]) -> Self {
        let mut d = MonoLists {
            lists: vec![Vec::new(); inst.n],
            slot: inst.edges.iter().map(|e| vec![NO_SLOT; e.len()]).collect(),
            mono: vec![false; inst.m()],
        };
        for f in 0..inst.m() {
            if mono_color(&inst.edges[f], x).is_some() {
                d.insert(inst, f);
            }
        }
        d
    }

    fn insert(&mut self, inst: &HypInstance, f: usize) {
        self.mono[f] = true;
        for (j, &v) in inst.edges[f].iter().enumerate() {
            self.slot[f][j] = self.lists[v].len();
            self.lists[v].push(f);
        }
    }

    fn remove(&mut self, inst: &HypInstance, f: usize) {
        self.mono[f] = false;
        for (j, &v) in inst.edges[f].iter().enumerate() {
            let s = self.slot[f][j];
            let list = &mut self.lists[v];
            list.swap_remove(s);
            if s < list.len() {
                let moved = list[s];
                let jj = inst.edges[moved].binary_search(&v).expect("vertex of listed edge");
                self.slot[moved][jj] = s;
            }
            self.slot[f][j] = NO_SLOT;
        }
    }

    /// Re-evaluates every edge through the changed vertices.
    pub fn update(&mut self, inst: &HypInstance, changed: &[usize], x: &[VertexState]) {
        let mut touched: Vec<usize> = changed.iter().flat_map(|&v| inst.incidence[v].iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        for f in touched {
            let now = mono_color(&inst.edges[f], x).is_some();
            if now && !self.mono[f] {
                self.insert(inst, f);
            } else if !now && self.mono[f] {
                self.remove(inst, f);
            }
        }
    }

    pub fn mono_through(&self, v: usize) -> &[usize] {
        &self.lists[v]
    }

    /// Compares the lists against a fresh scan of the coloring.
    pub fn audit(&self, inst: &HypInstance, x: &[VertexState]) -> bool {
        for v in 0..inst.n {
            let mut have = self.lists[v].clone();
            have.sort_unstable();
            let want: Vec<usize> =
                inst.incidence[v].iter().copied().filter(|&f| mono_color(&inst.edges[f], x).is_some()).collect();
            let mut want = want;
            want.sort_unstable();
            if have != want {
                return false;
            }
        }
        (0..inst.m()).all(|f| self.mono[f] == mono_color(&inst.edges[f], x).is_some())
    }
}

/// Neighborhood searcher backed by [`MonoLists`].
#[derive(Clone, Debug, Default)]
pub struct MonoListSearcher {
    pub lists: MonoLists,
    /// Audit the lists after every update.
    pub audit: bool,
    pub audit_failures: usize,
    pub updates: usize,
}

impl MonoListSearcher {
    pub fn new(audit: bool) -> Self {
        MonoListSearcher { audit, ..Default::default() }
    }
}

impl Searcher<HypInstance> for MonoListSearcher {
    fn init(&mut self, inst: &HypInstance, x: &[VertexState]) -> Vec<HypEvent> {
        self.lists = MonoLists::build(inst, x);
        let mut out = BTreeSet::new();
        for f in 0..inst.m() {
            if self.lists.mono[f] {
                inst.events_from(f, x, &mut out);
            }
        }
        out.into_iter().collect()
    }

    fn after_resample(&mut self, inst: &HypInstance, _: &HypEvent, changed: &[usize], x: &[VertexState]) -> Vec<HypEvent> {
        self.lists.update(inst, changed, x);
        self.updates += 1;
        if self.audit && !self.lists.audit(inst, x) {
            self.audit_failures += 1;
        }
        let mut out = BTreeSet::new();
        let mut touched: Vec<usize> = changed.iter().flat_map(|&v| inst.incidence[v].iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        for &g in &touched {
            // g as the monochromatic edge
            if self.lists.mono[g] {
                inst.events_from(g, x, &mut out);
            }
            // g as the second edge: candidates are monochromatic edges through g
            for &v in &inst.edges[g] {
                for &f in self.lists.mono_through(v) {
                    if f == g {
                        continue;
                    }
                    let c = x[v].color;
                    if inst.pair_holds(f, g, c, x) {
                        out.insert(HypEvent::Pair { f, g, color: c });
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Processes vertices by increasing rank and flips each vertex that is the
/// lowest of a currently monochromatic edge. Returns the final colors.
pub fn flip_pass(inst: &HypInstance, x: &[VertexState]) -> Vec<u8> {
    let mut colors: Vec<u8> = x.iter().map(|s| s.color).collect();
    let mut lowest_of = vec![Vec::new(); inst.n];
    for (f, e) in inst.edges.iter().enumerate() {
        lowest_of[lowest(e, x)].push(f);
    }
    let mut order: Vec<usize> = (0..inst.n).collect();
    order.sort_by(|&a, &b| x[a].rank.total_cmp(&x[b].rank).then(a.cmp(&b)));
    for v in order {
        let c = colors[v];
        let flip = lowest_of[v].iter().any(|&f| inst.edges[f].iter().all(|&u| colors[u] == c));
        if flip {
            colors[v] = 1 - c;
        }
    }
    colors
}

/// First monochromatic edge of a final coloring.
pub fn first_mono_edge(inst: &HypInstance, colors: &[u8]) -> Option<usize> {
    inst.edges.iter().position(|e| e.iter().all(|&v| colors[v] == colors[e[0]]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypRun {
    pub colors: Vec<u8>,
    pub resamplings: usize,
    /// `t ≤ √e` held for the instance.
    pub certified: bool,
    pub t_bound: f64,
    pub used_shortcut: bool,
    pub restarts: usize,
    pub audit_failures: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct HypOptions {
    /// Use the plain flip procedure when `m` is below the shortcut threshold.
    pub shortcut: bool,
    pub max_restarts: usize,
    /// Audit the monochromatic-edge lists after every resampling.
    pub audit_lists: bool,
}

impl Default for HypOptions {
    fn default() -> Self {
        HypOptions { shortcut: true, max_restarts: 10_000, audit_lists: false }
    }
}

/// Two-colors the hypergraph: MT on the flip-failure events, then the flip
/// pass. The result never has a monochromatic edge.
pub fn run_hyp2col<R: Rng + ?Sized>(
    inst: &HypInstance,
    rng: &mut R,
    opts: &EngineOptions,
    hopts: &HypOptions,
) -> Result<HypRun, HypError> {
    let t = inst.t_bound();
    let certified = t <= E.sqrt();
    if hopts.shortcut && (inst.m() as f64) < inst.shortcut_threshold() {
        for restart in 0..hopts.max_restarts {
            let x = inst.sample_initial(rng);
            let colors = flip_pass(inst, &x);
            if first_mono_edge(inst, &colors).is_none() {
                return Ok(HypRun {
                    colors,
                    resamplings: 0,
                    certified,
                    t_bound: t,
                    used_shortcut: true,
                    restarts: restart,
                    audit_failures: 0,
                });
            }
        }
        return Err(HypError::RestartsExhausted(hopts.max_restarts));
    }
    let mut searcher = MonoListSearcher::new(hopts.audit_lists);
    let run = run_mt_dfs(inst, &mut searcher, rng, opts)?;
    if hopts.audit_lists && searcher.audit_failures > 0 {
        return Err(HypError::AuditFailed(searcher.audit_failures));
    }
    let colors = flip_pass(inst, &run.config);
    if let Some(f) = first_mono_edge(inst, &colors) {
        return Err(HypError::FlipFailed(f));
    }
    Ok(HypRun {
        colors,
        resamplings: run.resamplings(),
        certified,
        t_bound: t,
        used_shortcut: false,
        restarts: 0,
        audit_failures: searcher.audit_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::random_hypergraph;
    use lll_core::rng::stream;

    #[test]
    fn p1_example() {
        let want = 2f64.powi(-8) * (1.0 - 8f64.ln() / 16.0).powi(8);
        assert!((p1(8) - want).abs() < 1e-15);
        assert!((p1(8) - 0.00128).abs() < 1e-5);
    }

    #[test]
    fn p2_matches_quadrature_and_bound() {
        for k in [3usize, 5, 8] {
            let r = rank_threshold(k);
            let steps = 200_000;
            let h = r / steps as f64;
            let mut s = 0.0;
            for i in 0..steps {
                let rho = (i as f64 + 0.5) * h;
                s += (1.0 - rho * rho).powi(k as i32 - 1) * h;
            }
            let want = 2f64.powi(1 - 2 * k as i32) * s;
            assert!((p2(k) - want).abs() < 1e-12 * want.max(1e-300) + 1e-15);
            assert!(p2(k) <= 2f64.powi(1 - 2 * k as i32) * r);
        }
    }

    #[test]
    fn k8_l85_is_allowed_but_uncertified() {
        assert!(85.0 <= max_neighborhood(8));
        assert!(86.0 > max_neighborhood(8));
        assert!(t_bound(8, 85) > E.sqrt());
    }

    #[test]
    fn single_edge_is_always_fixed() {
        let inst = HypInstance::new(4, 4, vec![vec![0, 1, 2, 3]]).unwrap();
        let opts = EngineOptions::new(10_000);
        for s in 0..1000 {
            let r = run_hyp2col(&inst, &mut stream(1, s), &opts, &HypOptions::default()).unwrap();
            assert!(first_mono_edge(&inst, &r.colors).is_none());
        }
        let forced = HypOptions { shortcut: false, ..Default::default() };
        for s in 0..1000 {
            let r = run_hyp2col(&inst, &mut stream(2, s), &opts, &forced).unwrap();
            assert!(first_mono_edge(&inst, &r.colors).is_none());
        }
    }

    #[test]
    fn flip_failure_implies_bad_event() {
        // Whenever the flip pass leaves a monochromatic edge, some bad event
        // held on the sampled state.
        let mut rng = stream(9, 0);
        let inst = HypInstance::unchecked(10, 3, random_hypergraph(10, 3, 12, 6, &mut rng).unwrap()).unwrap();
        let mut failures = 0;
        for s in 0..5000 {
            let x = inst.sample_initial(&mut stream(10, s));
            let colors = flip_pass(&inst, &x);
            if first_mono_edge(&inst, &colors).is_some() {
                failures += 1;
                assert!(!inst.find_all(&x).is_empty());
            }
        }
        assert!(failures > 0, "instance too easy to exercise the implication");
    }

    #[test]
    fn searcher_lists_stay_consistent() {
        let mut rng = stream(4, 0);
        let edges = random_hypergraph(40, 4, 60, 6, &mut rng).unwrap();
        let inst = HypInstance::unchecked(40, 4, edges).unwrap();
        let opts = EngineOptions::new(100_000).audit(true);
        let hopts = HypOptions { shortcut: false, audit_lists: true, ..Default::default() };
        for s in 0..50 {
            let r = run_hyp2col(&inst, &mut stream(5, s), &opts, &hopts).unwrap();
            assert_eq!(r.audit_failures, 0);
            assert!(first_mono_edge(&inst, &r.colors).is_none());
        }
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(HypInstance::new(3, 3, vec![vec![0, 1]]).is_err());
        assert!(HypInstance::new(3, 3, vec![vec![0, 1, 1]]).is_err());
        assert!(HypInstance::new(3, 3, vec![vec![0, 1, 5]]).is_err());
    }
}

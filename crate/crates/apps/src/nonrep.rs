//! Non-repetitive vertex colorings, k-repetitions, and ρ-similar halves.
//!
//! A repetition is a simple path `p_0 … p_{l−1} q_0 … q_{l−1}` with
//! `χ(p_i) = χ(q_i)` for all `i`. Bad events are identified by the path in
//! canonical orientation (see [`canonical_path`]).

use crate::graph::{canonical_path, Graph};
use lll_core::engine::{run_mt, run_mt_dfs, EngineError, EngineOptions};
use lll_core::model::{Model, Searcher};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

/// Default bound on stories explored by one search.
pub const STORY_CAP: usize = 1_000_000;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum NonRepError {
    #[error("story population exceeded {cap} (level {level})")]
    StoryExplosion { cap: usize, level: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("no feasible φ found")]
    Infeasible,
    #[error("output still contains a bad path {0:?}")]
    Invalid(Vec<usize>),
}

/// Smallest `φ ≥ 0` with `feasible(φ)`, by doubling then bisection.
pub fn minimal_phi(feasible: impl Fn(f64) -> bool) -> Option<f64> {
    if feasible(0.0) {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while !feasible(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `αC − 1 − α²CΔ/(1−α²CΔ²)²`; negative infinity outside the domain.
pub fn eq5_slack(c: f64, delta: f64, alpha: f64) -> f64 {
    let g = alpha * alpha * c;
    if g * delta * delta >= 1.0 {
        return f64::NEG_INFINITY;
    }
    alpha * c - 1.0 - g * delta / (1.0 - g * delta * delta).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonRepParams {
    pub delta: usize,
    pub phi: f64,
    pub c: u32,
    pub alpha: f64,
    pub beta: f64,
    pub slack: f64,
}

fn standard_alpha(c: f64, d: f64) -> f64 {
    1.0 / (c.sqrt() * (d + d.powf(2.0 / 3.0)))
}

/// Palette `⌈Δ² + φΔ^{5/3}⌉` with the smallest φ meeting the criterion at
/// `α = (√C(Δ+Δ^{2/3}))^{-1}`.
pub fn nonrep_params(delta: usize) -> Result<NonRepParams, NonRepError> {
    let d = delta.max(1) as f64;
    let palette = |phi: f64| (d * d + phi * d.powf(5.0 / 3.0)).ceil();
    let feasible = |phi: f64| {
        let c = palette(phi);
        eq5_slack(c, d, standard_alpha(c, d)) >= 0.0
    };
    let phi = minimal_phi(feasible).ok_or(NonRepError::Infeasible)?;
    let c = palette(phi);
    let alpha = standard_alpha(c, d);
    Ok(NonRepParams {
        delta,
        phi,
        c: c as u32,
        alpha,
        beta: (d + d.powf(2.0 / 3.0)).powi(-2),
        slack: eq5_slack(c, d, alpha),
    })
}

/// `Cα − 1 − kα^kCΔ^{k−1}/(1−α^kCΔ^k)²`.
pub fn eq7_slack(c: f64, delta: f64, alpha: f64, k: usize) -> f64 {
    let g = alpha.powi(k as i32) * c;
    let r = g * delta.powi(k as i32);
    if r >= 1.0 {
        return f64::NEG_INFINITY;
    }
    c * alpha - 1.0 - k as f64 * g * delta.powi(k as i32 - 1) / (1.0 - r).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KThueParams {
    pub k: usize,
    pub epsilon: f64,
    pub delta: usize,
    pub phi: f64,
    pub c: u32,
    pub alpha: f64,
    /// Longest color sequence checked.
    pub l_max: usize,
    /// `Σ_{l > l_max} n C^l Δ^{kl} α^{kl}`.
    pub tail: f64,
    pub slack: f64,
}

/// Parameters for avoiding k-repetitions with inflation ε on `n` vertices.
pub fn kthue_params(delta: usize, k: usize, epsilon: f64, n: usize) -> Result<KThueParams, NonRepError> {
    if k < 2 || !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(NonRepError::InvalidParameters(format!("need k >= 2 and ε >= 0, got k={k}, ε={epsilon}")));
    }
    let d = delta.max(1) as f64;
    let a = 1.0 + (1.0 + epsilon) / (k as f64 - 1.0);
    let b = 2.0 / 3.0 + (1.0 + epsilon) / (k as f64 - 1.0);
    let palette = |phi: f64| (d.powf(a) + phi * d.powf(b)).ceil();
    let alpha_of = |phi: f64| 1.0 / (d.powf(a) + 0.5 * phi * d.powf(b));
    let feasible = |phi: f64| eq7_slack(palette(phi), d, alpha_of(phi), k) >= 0.0;
    let phi = minimal_phi(feasible).ok_or(NonRepError::Infeasible)?;
    let (c, alpha) = (palette(phi), alpha_of(phi));
    let q = c * (d * alpha).powi(k as i32);
    let nf = n.max(2) as f64;
    // n q^L / (1 − q) ≤ 1/n
    let l_min = ((nf * nf / (1.0 - q)).ln() / (1.0 / q).ln()).ceil().max(1.0) as usize;
    let l_max = l_min.saturating_sub(1).max(1);
    let tail = nf * q.powi(l_max as i32 + 1) / (1.0 - q);
    Ok(KThueParams { k, epsilon, delta, phi, c: c as u32, alpha, l_max, tail, slack: eq7_slack(c, d, alpha, k) })
}

/// Binary entropy in nats.
pub fn entropy_nats(rho: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    t(rho) + t(1.0 - rho)
}

/// `Cα − 2α^{2ρ}C^ρΔe^h/(1 − α^{2ρ}C^ρΔ²e^h)² − 1`.
pub fn rho_slack(c: f64, delta: f64, alpha: f64, rho: f64) -> f64 {
    let h = entropy_nats(rho);
    let g = alpha.powf(2.0 * rho) * c.powf(rho) * h.exp();
    if g * delta * delta >= 1.0 {
        return f64::NEG_INFINITY;
    }
    c * alpha - 2.0 * g * delta / (1.0 - g * delta * delta).powi(2) - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    pub rho: f64,
    pub delta: usize,
    pub phi: f64,
    pub c: u32,
    pub alpha: f64,
    pub h: f64,
    pub slack: f64,
}

/// Palette `ρ^{-1}(1−ρ)^{1−1/ρ}(Δ²+φΔ^{11/6})^{1/ρ}` with minimal φ.
pub fn rho_params(delta: usize, rho: f64) -> Result<RhoParams, NonRepError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(NonRepError::InvalidParameters(format!("ρ must lie in (0, 1], got {rho}")));
    }
    let d = delta.max(1) as f64;
    let h = entropy_nats(rho);
    let lead = (1.0 / rho) * (1.0 - rho).powf(1.0 - 1.0 / rho);
    let palette = |phi: f64| (lead * (d * d + phi * d.powf(11.0 / 6.0)).powf(1.0 / rho)).ceil();
    let alpha_of = |phi: f64| (-h / rho).exp() * (d * d + 0.5 * phi * d.powf(11.0 / 6.0)).powf(-1.0 / rho);
    let feasible = |phi: f64| rho_slack(palette(phi), d, alpha_of(phi), rho) >= 0.0;
    let phi = minimal_phi(feasible).ok_or(NonRepError::Infeasible)?;
    let (c, alpha) = (palette(phi), alpha_of(phi));
    Ok(RhoParams { rho, delta, phi, c: c as u32, alpha, h, slack: rho_slack(c, d, alpha, rho) })
}

/// Per-vertex adjacency lists sorted by `(color, vertex)`, plus the members
/// of each color class.
#[derive(Clone, Debug, Default)]
pub struct ColorIndex {
    by_color: Vec<Vec<(u32, usize)>>,
    members: Vec<Vec<usize>>,
}

impl ColorIndex {
    pub fn build(g: &Graph, colors: &[u32], palette: u32) -> Self {
        let by_color = (0..g.n())
            .map(|v| {
                let mut a: Vec<(u32, usize)> = g.neighbors(v).iter().map(|&u| (colors[u], u)).collect();
                a.sort_unstable();
                a
            })
            .collect();
        let mut members = vec![Vec::new(); palette as usize];
        for (v, &c) in colors.iter().enumerate() {
            members[c as usize].push(v);
        }
        ColorIndex { by_color, members }
    }

    /// Neighbors of `v` colored `c`.
    pub fn with_color(&self, v: usize, c: u32) -> &[(u32, usize)] {
        let a = &self.by_color[v];
        let lo = a.partition_point(|&(x, _)| x < c);
        let hi = a.partition_point(|&(x, _)| x <= c);
        &a[lo..hi]
    }

    pub fn neighbors(&self, v: usize) -> &[(u32, usize)] {
        &self.by_color[v]
    }

    pub fn members(&self, c: u32) -> &[usize] {
        &self.members[c as usize]
    }

    /// Moves `v` from color `old` to `new`.
    pub fn recolor(&mut self, g: &Graph, v: usize, old: u32, new: u32) {
        if old == new {
            return;
        }
        for &u in g.neighbors(v) {
            let a = &mut self.by_color[u];
            let i = a.binary_search(&(old, v)).expect("index entry present");
            a.remove(i);
            let j = a.binary_search(&(new, v)).unwrap_err();
            a.insert(j, (new, v));
        }
        let m = &mut self.members[old as usize];
        let i = m.binary_search(&v).expect("member present");
        m.remove(i);
        let m = &mut self.members[new as usize];
        let j = m.binary_search(&v).unwrap_err();
        m.insert(j, v);
    }

    /// Compares against an index rebuilt from scratch.
    pub fn audit(&self, g: &Graph, colors: &[u32]) -> bool {
        let fresh = ColorIndex::build(g, colors, self.members.len() as u32);
        fresh.by_color == self.by_color && fresh.members == self.members
    }
}

/// Checks that `path` (vertices in order) has equal-colored halves.
pub fn is_repetition(colors: &[u32], path: &[usize]) -> bool {
    let l = path.len() / 2;
    path.len() % 2 == 0 && l > 0 && (0..l).all(|i| colors[path[i]] == colors[path[i + l]])
}

struct Grow<'a> {
    g: &'a Graph,
    idx: &'a ColorIndex,
    max_half: usize,
    cap: usize,
    explored: usize,
    used: Vec<bool>,
    p: VecDeque<usize>,
    q: VecDeque<usize>,
    out: BTreeSet<Vec<usize>>,
}

impl<'a> Grow<'a> {
    fn new(g: &'a Graph, idx: &'a ColorIndex, cap: usize) -> Self {
        Grow {
            g,
            idx,
            max_half: g.n() / 2,
            cap,
            explored: 0,
            used: vec![false; g.n()],
            p: VecDeque::new(),
            q: VecDeque::new(),
            out: BTreeSet::new(),
        }
    }

    fn start(&mut self, a: usize, b: usize, backward: bool) -> Result<(), NonRepError> {
        self.p.push_back(a);
        self.q.push_back(b);
        self.used[a] = true;
        self.used[b] = true;
        let r = self.visit(backward);
        self.used[a] = false;
        self.used[b] = false;
        self.p.clear();
        self.q.clear();
        r
    }

    fn visit(&mut self, backward: bool) -> Result<(), NonRepError> {
        self.explored += 1;
        if self.explored > self.cap {
            return Err(NonRepError::StoryExplosion { cap: self.cap, level: self.p.len() });
        }
        let (pf, pb) = (self.p[0], *self.p.back().expect("non-empty"));
        let (qf, qb) = (self.q[0], *self.q.back().expect("non-empty"));
        if self.g.adjacent(pb, qf) {
            let path: Vec<usize> = self.p.iter().chain(self.q.iter()).copied().collect();
            self.out.insert(canonical_path(path));
        }
        if self.p.len() >= self.max_half {
            return Ok(());
        }
        let idx = self.idx;
        if backward {
            for &(c, a) in idx.neighbors(pf) {
                if self.used[a] {
                    continue;
                }
                self.used[a] = true;
                for &(_, b) in idx.with_color(qf, c) {
                    if self.used[b] {
                        continue;
                    }
                    self.used[b] = true;
                    self.p.push_front(a);
                    self.q.push_front(b);
                    let r = self.visit(true);
                    self.p.pop_front();
                    self.q.pop_front();
                    self.used[b] = false;
                    r?;
                }
                self.used[a] = false;
            }
        }
        for &(c, a) in idx.neighbors(pb) {
            if self.used[a] {
                continue;
            }
            self.used[a] = true;
            for &(_, b) in idx.with_color(qb, c) {
                if self.used[b] {
                    continue;
                }
                self.used[b] = true;
                self.p.push_back(a);
                self.q.push_back(b);
                let r = self.visit(false);
                self.p.pop_back();
                self.q.pop_back();
                self.used[b] = false;
                r?;
            }
            self.used[a] = false;
        }
        Ok(())
    }
}

/// Repetitions in the current coloring. Without an anchor every repetition
/// is found by growing forward from each same-colored start pair; with an
/// anchor `v` only repetitions through `v` are found, by growing outward
/// from the pairs `(v, v')` and `(v', v)`.
pub fn find_repeats(
    g: &Graph,
    idx: &ColorIndex,
    colors: &[u32],
    anchor: Option<usize>,
    cap: usize,
) -> Result<Vec<Vec<usize>>, NonRepError> {
    let mut s = Grow::new(g, idx, cap);
    match anchor {
        None => {
            for c in 0..idx.members.len() as u32 {
                let m = idx.members(c);
                for &a in m {
                    for &b in m {
                        if a != b {
                            s.start(a, b, false)?;
                        }
                    }
                }
            }
        }
        Some(v) => {
            for &w in idx.members(colors[v]) {
                if w != v {
                    s.start(v, w, true)?;
                    s.start(w, v, true)?;
                }
            }
        }
    }
    Ok(s.out.into_iter().collect())
}

/// Convenience wrapper building the index first.
pub fn find_repeats_in(g: &Graph, colors: &[u32], palette: u32) -> Vec<Vec<usize>> {
    let idx = ColorIndex::build(g, colors, palette);
    find_repeats(g, &idx, colors, None, usize::MAX).expect("uncapped search")
}

#[derive(Clone, Debug)]
pub struct NonRepModel {
    pub graph: Graph,
    pub palette: u32,
}

impl Model for NonRepModel {
    type Value = u32;
    type Event = Vec<usize>;

    fn num_vars(&self) -> usize {
        self.graph.n()
    }

    fn sample_var<R: Rng + ?Sized>(&self, _: usize, rng: &mut R) -> u32 {
        rng.gen_range(0..self.palette)
    }

    fn scope(&self, e: &Vec<usize>) -> Vec<usize> {
        let mut s = e.clone();
        s.sort_unstable();
        s
    }

    fn holds(&self, e: &Vec<usize>, x: &[u32]) -> bool {
        is_repetition(x, e)
    }

    fn find_all(&self, x: &[u32]) -> Vec<Vec<usize>> {
        find_repeats_in(&self.graph, x, self.palette)
    }
}

/// Keeps the color index current and searches outward from every recolored
/// vertex.
#[derive(Clone, Debug)]
pub struct AnchoredSearcher {
    idx: ColorIndex,
    colors: Vec<u32>,
    cap: usize,
    pub audit: bool,
    pub audit_failures: usize,
    pub exploded: Option<NonRepError>,
}

impl AnchoredSearcher {
    pub fn new(cap: usize, audit: bool) -> Self {
        AnchoredSearcher {
            idx: ColorIndex::default(),
            colors: Vec::new(),
            cap,
            audit,
            audit_failures: 0,
            exploded: None,
        }
    }
}

impl Searcher<NonRepModel> for AnchoredSearcher {
    fn init(&mut self, model: &NonRepModel, x: &[u32]) -> Vec<Vec<usize>> {
        self.idx = ColorIndex::build(&model.graph, x, model.palette);
        self.colors = x.to_vec();
        match find_repeats(&model.graph, &self.idx, x, None, self.cap) {
            Ok(v) => v,
            Err(e) => {
                self.exploded = Some(e);
                Vec::new()
            }
        }
    }

    fn after_resample(&mut self, model: &NonRepModel, _: &Vec<usize>, changed: &[usize], x: &[u32]) -> Vec<Vec<usize>> {
        for &v in changed {
            self.idx.recolor(&model.graph, v, self.colors[v], x[v]);
            self.colors[v] = x[v];
        }
        if self.audit && !self.idx.audit(&model.graph, x) {
            self.audit_failures += 1;
        }
        if self.exploded.is_some() {
            return Vec::new();
        }
        let mut out = BTreeSet::new();
        for &v in changed {
            match find_repeats(&model.graph, &self.idx, x, Some(v), self.cap) {
                Ok(found) => out.extend(found),
                Err(e) => {
                    self.exploded = Some(e);
                    return Vec::new();
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NonRepOptions {
    /// Color every vertex distinctly when the palette has at least `n` colors.
    pub shortcut: bool,
    pub story_cap: usize,
    /// Audit the color index after every resampling.
    pub audit_index: bool,
}

impl Default for NonRepOptions {
    fn default() -> Self {
        NonRepOptions { shortcut: true, story_cap: STORY_CAP, audit_index: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonRepRun {
    pub colors: Vec<u32>,
    pub palette: u32,
    pub resamplings: usize,
    pub used_shortcut: bool,
}

fn distinct(n: usize, palette: u32) -> NonRepRun {
    NonRepRun { colors: (0..n as u32).collect(), palette, resamplings: 0, used_shortcut: true }
}

/// Depth-first MT with the anchored search. The output is checked with a
/// full search before returning, so an invalid coloring is never returned.
pub fn run_nonrep<R: Rng + ?Sized>(
    g: &Graph,
    palette: u32,
    rng: &mut R,
    opts: &EngineOptions,
    nopts: &NonRepOptions,
) -> Result<NonRepRun, NonRepError> {
    if palette == 0 {
        return Err(NonRepError::InvalidParameters("empty palette".into()));
    }
    if nopts.shortcut && palette as usize >= g.n() {
        return Ok(distinct(g.n(), palette));
    }
    let model = NonRepModel { graph: g.clone(), palette };
    let mut searcher = AnchoredSearcher::new(nopts.story_cap, nopts.audit_index);
    let run = run_mt_dfs(&model, &mut searcher, rng, opts)?;
    if let Some(e) = searcher.exploded {
        return Err(e);
    }
    if searcher.audit_failures > 0 {
        return Err(NonRepError::InvalidParameters(format!("{} index audit failures", searcher.audit_failures)));
    }
    if let Some(p) = model.find_all(&run.config).into_iter().next() {
        return Err(NonRepError::Invalid(p));
    }
    Ok(NonRepRun { resamplings: run.resamplings(), colors: run.config, palette, used_shortcut: false })
}

/// Whether `path` is colored `x x … x` with `k` copies.
pub fn is_k_repetition(colors: &[u32], path: &[usize], k: usize) -> bool {
    let l = path.len() / k;
    l > 0 && path.len() == k * l && (l..path.len()).all(|i| colors[path[i]] == colors[path[i - l]])
}

/// k-repetitions with period at most `l_max`, grown along paths whose colors
/// repeat with the period.
pub fn find_k_repetitions(g: &Graph, colors: &[u32], k: usize, l_max: usize) -> Vec<Vec<usize>> {
    fn dfs(
        g: &Graph,
        colors: &[u32],
        len: usize,
        l: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if path.len() == len {
            out.insert(canonical_path(path.clone()));
            return;
        }
        let last = *path.last().expect("non-empty");
        for &u in g.neighbors(last) {
            if used[u] || (path.len() >= l && colors[u] != colors[path[path.len() - l]]) {
                continue;
            }
            used[u] = true;
            path.push(u);
            dfs(g, colors, len, l, path, used, out);
            path.pop();
            used[u] = false;
        }
    }
    let n = g.n();
    let mut out = BTreeSet::new();
    let mut used = vec![false; n];
    for l in 1..=l_max {
        if k * l > n {
            break;
        }
        for v in 0..n {
            used[v] = true;
            let mut path = vec![v];
            dfs(g, colors, k * l, l, &mut path, &mut used, &mut out);
            used[v] = false;
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug)]
pub struct KThueModel {
    pub graph: Graph,
    pub k: usize,
    pub palette: u32,
    pub l_max: usize,
}

impl Model for KThueModel {
    type Value = u32;
    type Event = Vec<usize>;

    fn num_vars(&self) -> usize {
        self.graph.n()
    }

    fn sample_var<R: Rng + ?Sized>(&self, _: usize, rng: &mut R) -> u32 {
        rng.gen_range(0..self.palette)
    }

    fn scope(&self, e: &Vec<usize>) -> Vec<usize> {
        let mut s = e.clone();
        s.sort_unstable();
        s
    }

    fn holds(&self, e: &Vec<usize>, x: &[u32]) -> bool {
        is_k_repetition(x, e, self.k)
    }

    fn find_all(&self, x: &[u32]) -> Vec<Vec<usize>> {
        find_k_repetitions(&self.graph, x, self.k, self.l_max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KThueRun {
    pub colors: Vec<u32>,
    pub params: KThueParams,
    /// Repetitions of period above this length were not searched.
    pub checked_length: usize,
    pub resamplings: usize,
    pub used_shortcut: bool,
}

/// MT over k-repetitions of period at most `L`; longer ones are ignored, so
/// the output is only certified up to that period.
pub fn run_kthue<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    epsilon: f64,
    rng: &mut R,
    opts: &EngineOptions,
    shortcut: bool,
) -> Result<KThueRun, NonRepError> {
    let params = kthue_params(g.max_degree(), k, epsilon, g.n())?;
    if shortcut && params.c as usize >= g.n() {
        let r = distinct(g.n(), params.c);
        return Ok(KThueRun { colors: r.colors, params, checked_length: g.n() / k, resamplings: 0, used_shortcut: true });
    }
    let model = KThueModel { graph: g.clone(), k, palette: params.c, l_max: params.l_max };
    let run = run_mt(&model, rng, opts)?;
    Ok(KThueRun {
        resamplings: run.resamplings(),
        colors: run.config,
        params,
        checked_length: params.l_max,
        used_shortcut: false,
    })
}

/// `⌈ρt⌉`, robust to rounding in `ρt`.
pub fn agreements_needed(rho: f64, t: usize) -> usize {
    (rho * t as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Whether the halves of `path` agree in at least `⌈ρl⌉` positions.
pub fn is_rho_similar(colors: &[u32], path: &[usize], rho: f64) -> bool {
    let l = path.len() / 2;
    if l == 0 || path.len() % 2 != 0 {
        return false;
    }
    let agree = (0..l).filter(|&i| colors[path[i]] == colors[path[i + l]]).count();
    agree >= agreements_needed(rho, l)
}

struct Offset<'a> {
    g: &'a Graph,
    colors: &'a [u32],
    rho: f64,
    l: usize,
    a: usize,
    pos: Vec<usize>,
    used: Vec<bool>,
    out: &'a mut BTreeSet<Vec<usize>>,
}

impl Offset<'_> {
    fn candidates(&self, t: usize, position: usize) -> Vec<usize> {
        if t == 0 || position == 0 {
            (0..self.g.n()).collect()
        } else {
            self.g.neighbors(self.pos[position - 1]).to_vec()
        }
    }

    fn stage(&mut self, t: usize, agree: usize) {
        if agree < agreements_needed(self.rho, t) {
            return;
        }
        let (l, a) = (self.l, self.a);
        if t == l {
            let p = &self.pos;
            let closed = if a == 0 {
                self.g.adjacent(p[l - 1], p[l])
            } else {
                self.g.adjacent(p[a - 1], p[a]) && self.g.adjacent(p[l + a - 1], p[l + a])
            };
            if closed {
                self.out.insert(canonical_path(p.clone()));
            }
            return;
        }
        let i = a + t;
        let j = (l + a + t) % (2 * l);
        for u in self.candidates(t, i) {
            if self.used[u] {
                continue;
            }
            self.used[u] = true;
            self.pos[i] = u;
            for w in self.candidates(t, j) {
                if self.used[w] {
                    continue;
                }
                self.used[w] = true;
                self.pos[j] = w;
                let hit = (self.colors[u] == self.colors[w]) as usize;
                self.stage(t + 1, agree + hit);
                self.used[w] = false;
            }
            self.used[u] = false;
        }
    }
}

/// ρ-similar paths of length `2l` found by the branches starting at the given
/// offsets. Stories are pruned at stage `t` when fewer than `⌈ρt⌉` of the
/// pairs chosen so far agree.
pub fn rho_offset_search(
    g: &Graph,
    colors: &[u32],
    rho: f64,
    l: usize,
    offsets: impl IntoIterator<Item = usize>,
) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    if l == 0 || 2 * l > g.n() {
        return Vec::new();
    }
    for a in offsets {
        assert!(a < l, "offset out of range");
        let mut s = Offset { g, colors, rho, l, a, pos: vec![0; 2 * l], used: vec![false; g.n()], out: &mut out };
        s.stage(0, 0);
    }
    out.into_iter().collect()
}

/// Every ρ-similar path, scanning all offsets for every half-length.
pub fn find_rho_similar(g: &Graph, colors: &[u32], rho: f64) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    for l in 1..=g.n() / 2 {
        out.extend(rho_offset_search(g, colors, rho, l, 0..l));
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug)]
pub struct RhoModel {
    pub graph: Graph,
    pub rho: f64,
    pub palette: u32,
}

impl Model for RhoModel {
    type Value = u32;
    type Event = Vec<usize>;

    fn num_vars(&self) -> usize {
        self.graph.n()
    }

    fn sample_var<R: Rng + ?Sized>(&self, _: usize, rng: &mut R) -> u32 {
        rng.gen_range(0..self.palette)
    }

    fn scope(&self, e: &Vec<usize>) -> Vec<usize> {
        let mut s = e.clone();
        s.sort_unstable();
        s
    }

    fn holds(&self, e: &Vec<usize>, x: &[u32]) -> bool {
        is_rho_similar(x, e, self.rho)
    }

    fn find_all(&self, x: &[u32]) -> Vec<Vec<usize>> {
        find_rho_similar(&self.graph, x, self.rho)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoRun {
    pub colors: Vec<u32>,
    pub params: RhoParams,
    pub resamplings: usize,
    pub used_shortcut: bool,
}

/// MT avoiding ρ-similar halves, using the offset scan as the searcher.
pub fn run_rho_similar<R: Rng + ?Sized>(
    g: &Graph,
    rho: f64,
    rng: &mut R,
    opts: &EngineOptions,
    shortcut: bool,
) -> Result<RhoRun, NonRepError> {
    let params = rho_params(g.max_degree(), rho)?;
    if shortcut && params.c as usize >= g.n() {
        return Ok(RhoRun { colors: (0..g.n() as u32).collect(), params, resamplings: 0, used_shortcut: true });
    }
    let model = RhoModel { graph: g.clone(), rho, palette: params.c };
    let run = run_mt(&model, rng, opts)?;
    if let Some(p) = model.find_all(&run.config).into_iter().next() {
        return Err(NonRepError::Invalid(p));
    }
    Ok(RhoRun { resamplings: run.resamplings(), colors: run.config, params, used_shortcut: false })
}

/// A pair of equal-length paths with matching colors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Story {
    pub v: Vec<usize>,
    pub w: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct DoublingReport {
    /// Repetitions, canonical and sorted.
    pub repeats: Vec<Vec<usize>>,
    /// Story count per level; level `j` (from 1) holds stories of length at
    /// most `2^{j−1}`.
    pub populations: Vec<usize>,
    /// Level at which each repetition's story first appeared.
    pub found_level: HashMap<Vec<usize>, usize>,
}

/// Level-synchronous search: stories of length at most `2^j` are built by
/// joining two stories of the previous level whose lengths differ by at most
/// one.
pub fn find_repeats_doubling(g: &Graph, colors: &[u32], cap: usize) -> Result<DoublingReport, NonRepError> {
    let n = g.n();
    let mut level_of: HashMap<Story, usize> = HashMap::new();
    let mut current: Vec<Story> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && colors[a] == colors[b] {
                current.push(Story { v: vec![a], w: vec![b] });
            }
        }
    }
    if current.len() > cap {
        return Err(NonRepError::StoryExplosion { cap, level: 1 });
    }
    for s in &current {
        level_of.insert(s.clone(), 1);
    }
    let mut populations = vec![current.len()];
    let half = n / 2;
    let mut level = 1;
    while (1usize << (level - 1)) < half {
        level += 1;
        let mut by_start: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, s) in current.iter().enumerate() {
            by_start.entry((s.v[0], s.w[0])).or_default().push(i);
        }
        let mut next: BTreeSet<Story> = current.iter().cloned().collect();
        let mut used = vec![false; n];
        for s1 in &current {
            let k1 = s1.v.len();
            for &x in s1.v.iter().chain(&s1.w) {
                used[x] = true;
            }
            let (vl, wl) = (*s1.v.last().expect("non-empty"), *s1.w.last().expect("non-empty"));
            for &a in g.neighbors(vl) {
                for &b in g.neighbors(wl) {
                    let Some(list) = by_start.get(&(a, b)) else { continue };
                    for &j in list {
                        let s2 = &current[j];
                        let k2 = s2.v.len();
                        if k2 > k1 || k1 - k2 > 1 || k1 + k2 > half {
                            continue;
                        }
                        if s2.v.iter().chain(&s2.w).any(|&x| used[x]) {
                            continue;
                        }
                        let mut v = s1.v.clone();
                        v.extend(&s2.v);
                        let mut w = s1.w.clone();
                        w.extend(&s2.w);
                        next.insert(Story { v, w });
                        if next.len() > cap {
                            return Err(NonRepError::StoryExplosion { cap, level });
                        }
                    }
                }
            }
            for &x in s1.v.iter().chain(&s1.w) {
                used[x] = false;
            }
        }
        for s in &next {
            level_of.entry(s.clone()).or_insert(level);
        }
        current = next.into_iter().collect();
        populations.push(current.len());
    }
    let mut repeats = BTreeSet::new();
    let mut found_level = HashMap::new();
    for s in &current {
        if g.adjacent(*s.v.last().expect("non-empty"), s.w[0]) {
            let path = canonical_path(s.v.iter().chain(&s.w).copied().collect());
            let lv = level_of[s];
            let e = found_level.entry(path.clone()).or_insert(lv);
            *e = (*e).min(lv);
            repeats.insert(path);
        }
    }
    Ok(DoublingReport { repeats: repeats.into_iter().collect(), populations, found_level })
}

/// A path of 20 vertices whose halves agree in 8 of 10 positions, with the
/// disagreements at both ends. At `ρ = 0.8` every branch of offset 0 is
/// pruned in both orientations, while offset 1 finds the path.
pub fn planted_offset_instance() -> (Graph, Vec<u32>) {
    let mut colors: Vec<u32> = (1..=10).chain(1..=10).collect();
    colors[10] = 11;
    colors[19] = 12;
    (Graph::path(20), colors)
}

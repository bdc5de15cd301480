//! Two-colorings of K_n without monochromatic k-cliques.

use lll_core::analysis::{check_symmetric, CriterionReport};
use lll_core::engine::{run_mt_dfs, EngineError, EngineOptions};
use lll_core::model::{Model, Searcher};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::{E, SQRT_2};

/// Vertex count `⌈(√2/e)·k·2^{k/2}⌉` targeted for clique size `k`.
pub fn ramsey_n(k: usize) -> usize {
    (SQRT_2 / E * k as f64 * 2f64.powf(k as f64 / 2.0)).ceil() as usize
}

/// Probability `2^{1−C(k,2)}` that a fixed k-clique is monochromatic.
pub fn clique_prob(k: usize) -> f64 {
    2f64.powi(1 - (k * (k - 1) / 2) as i32)
}

/// Number of k-cliques sharing at least one edge with a fixed one, itself
/// included.
pub fn clique_dependency(n: usize, k: usize) -> usize {
    // the rest share at most one vertex
    let apart = binom(n - k, k) + k as u128 * binom(n - k, k - 1);
    (binom(n, k) - apart) as usize
}

/// Symmetric criterion for the clique events on K_n.
pub fn ramsey_criterion(n: usize, k: usize) -> CriterionReport {
    check_symmetric(clique_prob(k), clique_dependency(n, k))
}

pub fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Edge index of `{i, j}` in the row-major upper triangle.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// Endpoints of every edge, by index.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            v.push((a, b));
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    pub n: usize,
    pub colors: Vec<u8>,
}

impl EdgeColoring {
    pub fn new(n: usize, colors: Vec<u8>) -> Self {
        assert_eq!(colors.len(), n * (n.max(1) - 1) / 2, "wrong number of edge colors");
        EdgeColoring { n, colors }
    }

    pub fn constant(n: usize, c: u8) -> Self {
        EdgeColoring { n, colors: vec![c; n * (n.max(1) - 1) / 2] }
    }

    pub fn color(&self, i: usize, j: usize) -> u8 {
        self.colors[edge_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, c: u8) {
        let e = edge_index(self.n, i, j);
        self.colors[e] = c;
    }
}

/// Grows `clique` (color `c`, vertices sorted) by vertices above `from`.
fn extend(
    color: &dyn Fn(usize, usize) -> u8,
    n: usize,
    k: usize,
    clique: &mut Vec<usize>,
    c: u8,
    from: usize,
    out: &mut BTreeSet<Vec<usize>>,
) {
    if clique.len() == k {
        let mut s = clique.clone();
        s.sort_unstable();
        out.insert(s);
        return;
    }
    for w in from..n {
        if clique.contains(&w) {
            continue;
        }
        if clique.iter().all(|&u| color(u, w) == c) {
            clique.push(w);
            extend(color, n, k, clique, c, w + 1, out);
            clique.pop();
        }
    }
}

/// All monochromatic k-cliques, each as a sorted vertex list, in order.
pub fn find_mono_cliques(g: &EdgeColoring, k: usize) -> Vec<Vec<usize>> {
    let n = g.n;
    let mut out = BTreeSet::new();
    if k == 0 || k > n {
        return Vec::new();
    }
    if k == 1 {
        return (0..n).map(|v| vec![v]).collect();
    }
    let color = |i: usize, j: usize| g.color(i, j);
    for a in 0..n {
        for b in a + 1..n {
            let c = g.color(a, b);
            let mut clique = vec![a, b];
            extend(&color, n, k, &mut clique, c, b + 1, &mut out);
        }
    }
    out.into_iter().collect()
}

/// Monochromatic k-cliques containing the edge `{a, b}`.
pub fn mono_cliques_through(g: &EdgeColoring, k: usize, a: usize, b: usize, out: &mut BTreeSet<Vec<usize>>) {
    let color = |i: usize, j: usize| g.color(i, j);
    mono_through(&color, g.n, k, a, b, out);
}

fn mono_through(
    color: &dyn Fn(usize, usize) -> u8,
    n: usize,
    k: usize,
    a: usize,
    b: usize,
    out: &mut BTreeSet<Vec<usize>>,
) {
    let c = color(a, b);
    let mut clique = vec![a, b];
    extend(color, n, k, &mut clique, c, 0, out);
}

/// Clique bad events over the edge variables of K_n.
#[derive(Clone, Debug)]
pub struct RamseyModel {
    pub n: usize,
    pub k: usize,
    edges: Vec<(usize, usize)>,
}

impl RamseyModel {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k >= 2 && n >= 2, "need n, k >= 2");
        RamseyModel { n, k, edges: edge_list(n) }
    }

    fn color_of<'a>(&'a self, x: &'a [u8]) -> impl Fn(usize, usize) -> u8 + 'a {
        move |i, j| x[edge_index(self.n, i, j)]
    }
}

impl Model for RamseyModel {
    type Value = u8;
    type Event = Vec<usize>;

    fn num_vars(&self) -> usize {
        self.edges.len()
    }

    fn sample_var<R: Rng + ?Sized>(&self, _: usize, rng: &mut R) -> u8 {
        rng.gen_range(0..2)
    }

    fn scope(&self, e: &Vec<usize>) -> Vec<usize> {
        let mut s = Vec::with_capacity(e.len() * (e.len() - 1) / 2);
        for (i, &a) in e.iter().enumerate() {
            for &b in &e[i + 1..] {
                s.push(edge_index(self.n, a, b));
            }
        }
        s.sort_unstable();
        s
    }

    fn holds(&self, e: &Vec<usize>, x: &[u8]) -> bool {
        let color = self.color_of(x);
        let c = color(e[0], e[1]);
        e.iter().enumerate().all(|(i, &a)| e[i + 1..].iter().all(|&b| color(a, b) == c))
    }

    fn find_all(&self, x: &[u8]) -> Vec<Vec<usize>> {
        find_mono_cliques(&EdgeColoring { n: self.n, colors: x.to_vec() }, self.k)
    }
}

/// Searches only cliques through the edges just recolored.
#[derive(Clone, Copy, Debug, Default)]
pub struct CliqueSearcher;

impl Searcher<RamseyModel> for CliqueSearcher {
    fn init(&mut self, model: &RamseyModel, x: &[u8]) -> Vec<Vec<usize>> {
        model.find_all(x)
    }

    fn after_resample(&mut self, model: &RamseyModel, _: &Vec<usize>, changed: &[usize], x: &[u8]) -> Vec<Vec<usize>> {
        let color = model.color_of(x);
        let mut out = BTreeSet::new();
        for &e in changed {
            let (a, b) = model.edges[e];
            mono_through(&color, model.n, model.k, a, b, &mut out);
        }
        out.into_iter().collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RamseyRun {
    pub coloring: EdgeColoring,
    pub k: usize,
    pub resamplings: usize,
}

/// Runs depth-first MT on K_n with clique events of size `k`.
pub fn run_ramsey_n<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<RamseyRun, EngineError> {
    let model = RamseyModel::new(n, k);
    let run = run_mt_dfs(&model, &mut CliqueSearcher, rng, opts)?;
    Ok(RamseyRun { resamplings: run.resamplings(), coloring: EdgeColoring { n, colors: run.config }, k })
}

/// As [`run_ramsey_n`] with `n = ramsey_n(k)`.
pub fn run_ramsey<R: Rng + ?Sized>(k: usize, rng: &mut R, opts: &EngineOptions) -> Result<RamseyRun, EngineError> {
    assert!(k >= 3, "need k >= 3");
    run_ramsey_n(ramsey_n(k), k, rng, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lll_core::rng::stream;

    fn brute(g: &EdgeColoring, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let n = g.n;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let c = g.color(idx[0], idx[1]);
            if (0..k).all(|i| (i + 1..k).all(|j| g.color(idx[i], idx[j]) == c)) {
                out.push(idx.clone());
            }
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        out
    }

    #[test]
    fn n_formula() {
        assert_eq!(ramsey_n(5), 15);
        assert_eq!(ramsey_n(3), 5);
    }

    #[test]
    fn edge_indices_are_a_bijection() {
        let n = 7;
        let list = edge_list(n);
        for (e, &(a, b)) in list.iter().enumerate() {
            assert_eq!(edge_index(n, a, b), e);
            assert_eq!(edge_index(n, b, a), e);
        }
    }

    #[test]
    fn triangle_examples() {
        let g = EdgeColoring::constant(3, 0);
        assert_eq!(find_mono_cliques(&g, 3), vec![vec![0, 1, 2]]);
        let mut h = g.clone();
        h.set(0, 2, 1);
        assert!(find_mono_cliques(&h, 3).is_empty());
    }

    #[test]
    fn branching_matches_brute_force() {
        let mut rng = stream(3, 0);
        for _ in 0..20 {
            let n = 10;
            let colors = (0..45).map(|_| rng.gen_range(0..2u8)).collect();
            let g = EdgeColoring::new(n, colors);
            assert_eq!(find_mono_cliques(&g, 4), brute(&g, 4));
        }
    }

    #[test]
    fn dependency_count() {
        // K6, k=3: 20 triangles; those sharing no edge with {0,1,2} share at
        // most one vertex: 1 (disjoint) + 3·3 (one common vertex).
        assert_eq!(clique_dependency(6, 3), 20 - 10);
        let d = clique_dependency(15, 5);
        assert_eq!(d, 1701);
        assert!(!ramsey_criterion(15, 5).satisfied);
        assert!(ramsey_criterion(9, 5).satisfied);
    }

    #[test]
    fn small_runs_are_clique_free() {
        let opts = EngineOptions::new(100_000).audit(true);
        for s in 0..20 {
            let r = run_ramsey(3, &mut stream(11, s), &opts).unwrap();
            assert_eq!(r.coloring.n, 5);
            assert!(brute(&r.coloring, 3).is_empty());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let opts = EngineOptions::new(100_000);
        let a = run_ramsey(4, &mut stream(5, 1), &opts).unwrap();
        let b = run_ramsey(4, &mut stream(5, 1), &opts).unwrap();
        assert_eq!(a.coloring, b.coloring);
    }
}

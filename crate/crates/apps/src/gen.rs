//! Random instance generators.

use crate::graph::Graph;
use crate::perm::ColorMatrix;
use crate::sat::{CnfInstance, Literal};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("cannot place {m} edges of size {k} on {n} vertices with degree at most {maxdeg}")]
    Hypergraph { n: usize, k: usize, m: usize, maxdeg: usize },
    #[error("need n·l divisible by k, got n={n}, l={l}, k={k}")]
    Indivisible { n: usize, l: usize, k: usize },
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
}

/// Random graph with maximum degree at most `maxdeg`: vertex pairs are
/// visited in random order and kept while both ends have spare degree.
pub fn random_bounded_degree_graph<R: Rng + ?Sized>(n: usize, maxdeg: usize, rng: &mut R) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    pairs.shuffle(rng);
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    for (u, v) in pairs {
        if deg[u] < maxdeg && deg[v] < maxdeg {
            deg[u] += 1;
            deg[v] += 1;
            edges.push((u, v));
        }
    }
    Graph::new(n, &edges).expect("generated edges are valid")
}

/// `m` distinct `k`-uniform edges on `n` vertices, every vertex in at most
/// `maxdeg` of them.
pub fn random_hypergraph<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    m: usize,
    maxdeg: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, GenError> {
    let err = GenError::Hypergraph { n, k, m, maxdeg };
    if k == 0 || k > n || m * k > n * maxdeg {
        return Err(err);
    }
    'restart: for _ in 0..100 {
        let mut deg = vec![0usize; n];
        let mut open: Vec<usize> = (0..n).collect();
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(m);
        while edges.len() < m {
            if open.len() < k {
                continue 'restart;
            }
            let mut tries = 0;
            let e = loop {
                let mut e: Vec<usize> = open.choose_multiple(rng, k).copied().collect();
                e.sort_unstable();
                if !seen.contains(&e) {
                    break e;
                }
                tries += 1;
                if tries > 100 {
                    continue 'restart;
                }
            };
            for &v in &e {
                deg[v] += 1;
            }
            open.retain(|&v| deg[v] < maxdeg);
            seen.insert(e.clone());
            edges.push(e);
        }
        return Ok(edges);
    }
    Err(err)
}

/// An `n × n` matrix in which `⌊n²/Δ⌋` colors appear exactly `Δ` times and
/// one more color takes any remaining cells, in random positions.
pub fn random_color_matrix<R: Rng + ?Sized>(n: usize, delta: usize, rng: &mut R) -> Result<ColorMatrix, GenError> {
    if n == 0 || delta == 0 || delta > n * n {
        return Err(GenError::Invalid(format!("n={n}, Δ={delta}")));
    }
    let mut cells: Vec<u32> = (0..n * n).map(|i| (i / delta) as u32).collect();
    cells.shuffle(rng);
    Ok(ColorMatrix::from_flat(n, cells).expect("square by construction"))
}

/// Random k-CNF in which each of the `n` variables occurs exactly `l` times
/// with a uniformly random sign, `m = nl/k`.
pub fn random_regular_cnf<R: Rng + ?Sized>(n: usize, k: usize, l: usize, rng: &mut R) -> Result<CnfInstance, GenError> {
    if k == 0 || k > n {
        return Err(GenError::Invalid(format!("k={k} with n={n}")));
    }
    if (n * l) % k != 0 {
        return Err(GenError::Indivisible { n, l, k });
    }
    let mut slots: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(l)).collect();
    slots.shuffle(rng);
    let m = slots.len() / k;
    let clash = |s: &[usize], c: usize| {
        let cl = &s[c * k..(c + 1) * k];
        (0..k).find(|&i| cl[..i].contains(&cl[i]))
    };
    // repair clauses with a repeated variable by random swaps that keep both
    // clauses free of repeats
    let mut budget = 1000 * slots.len().max(1);
    for c in 0..m {
        while let Some(i) = clash(&slots, c) {
            if budget == 0 {
                return Err(GenError::Invalid("could not separate repeated variables".into()));
            }
            budget -= 1;
            let a = c * k + i;
            let b = rng.gen_range(0..slots.len());
            if b / k == c {
                continue;
            }
            slots.swap(a, b);
            let other = b / k;
            if other < c && clash(&slots, other).is_some() {
                slots.swap(a, b);
            }
        }
    }
    let clauses = slots
        .chunks(k)
        .map(|ch| ch.iter().map(|&v| Literal { var: v, positive: rng.gen() }).collect())
        .collect();
    Ok(CnfInstance::new(n, k, clauses).expect("repaired clauses are valid"))
}

//! Exhaustive validity checks that share no search code with the solvers.
//! Each returns `Ok(None)` on success and `Ok(Some(witness))` on failure.

use crate::graph::Graph;
use crate::hypergraph::HypInstance;
use crate::perm::ColorMatrix;
use thiserror::Error;

/// Largest graph for which path enumeration is attempted.
pub const PATH_LIMIT: usize = 40;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("{what} of size {size} exceeds the enumeration limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Paths of `k·l` vertices whose entry `j ≥ l` must "match" entry `j − l`.
/// `budget` is the number of mismatches tolerated; `None` means none.
struct PeriodicPaths<'a> {
    g: &'a Graph,
    colors: &'a [u32],
    l: usize,
    len: usize,
    slack: usize,
    path: Vec<usize>,
    used: Vec<bool>,
}

impl PeriodicPaths<'_> {
    fn go(&mut self, misses: usize) -> bool {
        if self.path.len() == self.len {
            return true;
        }
        let last = *self.path.last().expect("non-empty");
        let nbrs: Vec<usize> = self.g.neighbors(last).to_vec();
        for u in nbrs {
            if self.used[u] {
                continue;
            }
            let j = self.path.len();
            let miss = (j >= self.l && self.colors[u] != self.colors[self.path[j - self.l]]) as usize;
            if misses + miss > self.slack {
                continue;
            }
            self.used[u] = true;
            self.path.push(u);
            if self.go(misses + miss) {
                return true;
            }
            self.path.pop();
            self.used[u] = false;
        }
        false
    }
}

fn periodic_search(g: &Graph, colors: &[u32], k: usize, l_max: usize, slack: impl Fn(usize) -> usize) -> Option<Vec<usize>> {
    let n = g.n();
    for l in 1..=l_max {
        if k * l > n {
            break;
        }
        for v in 0..n {
            let mut s = PeriodicPaths {
                g,
                colors,
                l,
                len: k * l,
                slack: slack(l),
                path: vec![v],
                used: vec![false; n],
            };
            s.used[v] = true;
            if s.go(0) {
                return Some(s.path);
            }
        }
    }
    None
}

fn check_size(g: &Graph, colors: &[u32]) -> Result<(), VerifyError> {
    if g.n() > PATH_LIMIT {
        return Err(VerifyError::TooLarge { what: "graph", size: g.n(), limit: PATH_LIMIT });
    }
    if colors.len() != g.n() {
        return Err(VerifyError::Malformed(format!("{} colors for {} vertices", colors.len(), g.n())));
    }
    Ok(())
}

/// A path colored `xx`, if one exists.
pub fn check_nonrepetitive(g: &Graph, colors: &[u32]) -> Result<Option<Vec<usize>>, VerifyError> {
    check_size(g, colors)?;
    Ok(periodic_search(g, colors, 2, g.n() / 2, |_| 0))
}

/// A path colored `x^k` with `|x| ≤ l_max`, if one exists.
pub fn check_k_repetition_free(g: &Graph, colors: &[u32], k: usize, l_max: usize) -> Result<Option<Vec<usize>>, VerifyError> {
    check_size(g, colors)?;
    Ok(periodic_search(g, colors, k, l_max, |_| 0))
}

/// A path of `2l` vertices whose halves agree in at least `⌈ρl⌉` positions.
pub fn check_rho_similar_free(g: &Graph, colors: &[u32], rho: f64) -> Result<Option<Vec<usize>>, VerifyError> {
    check_size(g, colors)?;
    let need = |l: usize| (rho * l as f64 - 1e-9).ceil().max(0.0) as usize;
    Ok(periodic_search(g, colors, 2, g.n() / 2, |l| l - need(l).min(l)))
}

/// Two rows with the same selected color, if any; also rejects
/// non-permutations.
pub fn check_transversal(m: &ColorMatrix, pi: &[usize]) -> Result<Option<Vec<usize>>, VerifyError> {
    let n = m.n();
    if pi.len() != n {
        return Err(VerifyError::Malformed(format!("{} entries for n = {n}", pi.len())));
    }
    let mut col = vec![false; n];
    for &y in pi {
        if y >= n || std::mem::replace(&mut col[y], true) {
            return Err(VerifyError::Malformed("not a permutation".into()));
        }
    }
    for x in 0..n {
        for x2 in x + 1..n {
            if m.color(x, pi[x]) == m.color(x2, pi[x2]) {
                return Ok(Some(vec![x, x2]));
            }
        }
    }
    Ok(None)
}

/// A monochromatic edge, if any.
pub fn check_hyp2col(inst: &HypInstance, colors: &[u8]) -> Result<Option<Vec<usize>>, VerifyError> {
    if colors.len() != inst.n {
        return Err(VerifyError::Malformed(format!("{} colors for {} vertices", colors.len(), inst.n)));
    }
    Ok(inst.edges.iter().find(|e| e.iter().all(|&v| colors[v] == colors[e[0]])).cloned())
}

/// A monochromatic `k`-clique of the edge coloring (edges in row-major
/// upper-triangle order), if any.
pub fn check_clique_free(n: usize, edge_colors: &[u8], k: usize) -> Result<Option<Vec<usize>>, VerifyError> {
    if edge_colors.len() != n * n.saturating_sub(1) / 2 {
        return Err(VerifyError::Malformed("wrong number of edge colors".into()));
    }
    if n > 64 {
        return Err(VerifyError::TooLarge { what: "complete graph", size: n, limit: 64 });
    }
    let mut adj = vec![vec![0u8; n]; n];
    let mut it = edge_colors.iter();
    for a in 0..n {
        for b in a + 1..n {
            let c = *it.next().expect("length checked");
            adj[a][b] = c;
            adj[b][a] = c;
        }
    }
    if k < 2 || k > n {
        return Ok(None);
    }
    // lexicographic walk over k-subsets
    let mut s: Vec<usize> = (0..k).collect();
    loop {
        let c = adj[s[0]][s[1]];
        if s.iter().enumerate().all(|(i, &a)| s[i + 1..].iter().all(|&b| adj[a][b] == c)) {
            return Ok(Some(s));
        }
        let mut i = k;
        while i > 0 && s[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(None);
        }
        s[i - 1] += 1;
        for j in i..k {
            s[j] = s[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_1212_fails_with_witness() {
        let g = Graph::path(4);
        let w = check_nonrepetitive(&g, &[1, 2, 1, 2]).unwrap().unwrap();
        assert_eq!(w.len(), 4);
        assert!(check_nonrepetitive(&g, &[1, 2, 3, 1]).unwrap().is_none());
        assert!(check_nonrepetitive(&Graph::path(41), &[0; 41]).is_err());
    }

    #[test]
    fn distinct_matrix_passes() {
        let m = ColorMatrix::from_flat(3, (0..9).collect()).unwrap();
        assert_eq!(check_transversal(&m, &[2, 0, 1]).unwrap(), None);
        let same = ColorMatrix::from_flat(2, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(check_transversal(&same, &[0, 1]).unwrap(), Some(vec![0, 1]));
        assert!(check_transversal(&m, &[0, 0, 1]).is_err());
    }

    #[test]
    fn k5_one_color() {
        let w = check_clique_free(5, &[0; 10], 5).unwrap();
        assert_eq!(w, Some(vec![0, 1, 2, 3, 4]));
        let mut c = vec![0u8; 10];
        c[3] = 1;
        assert_eq!(check_clique_free(5, &c, 5).unwrap(), None);
    }

    #[test]
    fn rho_tolerates_mismatches() {
        let g = Graph::path(10);
        let colors = [1, 2, 3, 4, 5, 9, 2, 3, 4, 5];
        assert!(check_rho_similar_free(&g, &colors, 0.8).unwrap().is_some());
        assert!(check_rho_similar_free(&g, &colors, 1.0).unwrap().is_none());
    }

    #[test]
    fn k_repetition() {
        let g = Graph::path(6);
        assert!(check_k_repetition_free(&g, &[1, 2, 1, 2, 1, 2], 3, 2).unwrap().is_some());
        assert!(check_k_repetition_free(&g, &[1, 2, 1, 2, 1, 3], 3, 2).unwrap().is_none());
    }

    #[test]
    fn hypergraph_mono_edge() {
        let inst = HypInstance::unchecked(4, 2, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(check_hyp2col(&inst, &[0, 1, 1, 1]).unwrap(), Some(vec![2, 3]));
        assert_eq!(check_hyp2col(&inst, &[0, 1, 0, 1]).unwrap(), None);
    }
}

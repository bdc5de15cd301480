//! Instance file readers. Blank lines and lines starting with `#` are
//! ignored in every format except DIMACS, which uses `c` comments.

use crate::error::CliError;
use clap::ValueEnum;
use lll_apps::graph::Graph;
use lll_apps::hypergraph::HypInstance;
use lll_apps::perm::ColorMatrix;
use lll_apps::sat::{CnfInstance, Literal};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    GraphEdgelist,
    Hypergraph,
    ColorMatrix,
    Dimacs,
}

/// Hex SHA-256 of the raw bytes.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read(path: &Path) -> Result<(String, String), CliError> {
    let text = std::fs::read_to_string(path)?;
    let d = digest(text.as_bytes());
    Ok((text, d))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn lines<'a>(text: &'a str, comment: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with(comment))
}

fn numbers<T: FromStr>(line: usize, s: &str) -> Result<Vec<T>, CliError> {
    s.split_whitespace()
        .map(|tok| tok.parse().map_err(|_| CliError::Parse { line, msg: format!("bad number {tok:?}") }))
        .collect()
}

fn exactly<T: FromStr + Copy, const N: usize>(line: usize, s: &str, what: &str) -> Result<[T; N], CliError> {
    let v: Vec<T> = numbers(line, s)?;
    v.try_into().map_err(|_| CliError::Parse { line, msg: format!("expected {what}") })
}

/// Header `n`, then one `u v` edge per line, 0-indexed.
pub fn graph_edgelist(text: &str) -> Result<Graph, CliError> {
    let mut it = lines(text, "#");
    let (hl, h) = it.next().ok_or(CliError::Parse { line: 1, msg: "missing header \"n\"".into() })?;
    let [n] = exactly::<usize, 1>(hl, h, "header \"n\"")?;
    let mut edges = Vec::new();
    for (line, l) in it {
        let [u, v] = exactly::<usize, 2>(line, l, "\"u v\"")?;
        if u >= n || v >= n || u == v {
            return Err(CliError::Parse { line, msg: format!("invalid edge {u} {v} for n = {n}") });
        }
        edges.push((u, v));
    }
    Graph::new(n, &edges).map_err(|e| CliError::Invalid(e.to_string()))
}

/// Header `k m n`, then `m` lines of `k` vertex ids.
pub fn hypergraph(text: &str) -> Result<HypInstance, CliError> {
    let mut it = lines(text, "#");
    let (hl, h) = it.next().ok_or(CliError::Parse { line: 1, msg: "missing header \"k m n\"".into() })?;
    let [k, m, n] = exactly::<usize, 3>(hl, h, "header \"k m n\"")?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in it {
        let e: Vec<usize> = numbers(line, l)?;
        if e.len() != k {
            return Err(CliError::Parse { line, msg: format!("edge has {} vertices, expected k = {k}", e.len()) });
        }
        if let Some(v) = e.iter().find(|&&v| v >= n) {
            return Err(CliError::Parse { line, msg: format!("vertex {v} out of range for n = {n}") });
        }
        edges.push(e);
    }
    if edges.len() != m {
        return Err(CliError::Invalid(format!("header declares {m} edges, found {}", edges.len())));
    }
    HypInstance::unchecked(n, k, edges).map_err(|e| CliError::Invalid(e.to_string()))
}

/// Header `n`, then `n` rows of `n` color ids.
pub fn color_matrix(text: &str) -> Result<ColorMatrix, CliError> {
    let mut it = lines(text, "#");
    let (hl, h) = it.next().ok_or(CliError::Parse { line: 1, msg: "missing header \"n\"".into() })?;
    let [n] = exactly::<usize, 1>(hl, h, "header \"n\"")?;
    let mut rows = Vec::with_capacity(n);
    for (line, l) in it {
        let r: Vec<u32> = numbers(line, l)?;
        if r.len() != n {
            return Err(CliError::Parse { line, msg: format!("row has {} entries, expected {n}", r.len()) });
        }
        rows.push(r);
    }
    if rows.len() != n {
        return Err(CliError::Invalid(format!("expected {n} rows, found {}", rows.len())));
    }
    ColorMatrix::from_rows(rows).map_err(|e| CliError::Invalid(e.to_string()))
}

/// DIMACS CNF. Every clause must have exactly `k` distinct variables; `k`
/// defaults to the width of the first clause. Repeated variables are
/// rejected, not merged.
pub fn dimacs(text: &str, k: Option<usize>) -> Result<CnfInstance, CliError> {
    let mut header = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (line, l) in lines(text, "c") {
        last_line = line;
        if l.starts_with('%') {
            break;
        }
        if let Some(rest) = l.strip_prefix('p') {
            if header.is_some() {
                return Err(CliError::Parse { line, msg: "duplicate header".into() });
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != "cnf" {
                return Err(CliError::Parse { line, msg: "expected \"p cnf n m\"".into() });
            }
            let [n, m] = exactly::<usize, 2>(line, &toks[1..].join(" "), "\"p cnf n m\"")?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or(CliError::Parse { line, msg: "clause before the \"p cnf\" header".into() })?;
        for lit in numbers::<i64>(line, l)? {
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > n {
                return Err(CliError::Parse { line, msg: format!("variable {var} exceeds n = {n}") });
            }
            current.push(Literal { var: var - 1, positive: lit > 0 });
        }
    }
    let (n, m) = header.ok_or(CliError::Parse { line: last_line.max(1), msg: "missing \"p cnf\" header".into() })?;
    if !current.is_empty() {
        return Err(CliError::Parse { line: last_line, msg: "last clause is not terminated by 0".into() });
    }
    if clauses.len() != m {
        return Err(CliError::Invalid(format!("header declares {m} clauses, found {}", clauses.len())));
    }
    let k = k.or_else(|| clauses.first().map(Vec::len)).unwrap_or(1);
    CnfInstance::new(n, k, clauses).map_err(|e| CliError::Invalid(e.to_string()))
}

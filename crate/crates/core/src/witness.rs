//! Witness trees reconstructed from resampling logs.

use crate::engine::{EngineError, Run};
use crate::event::{Event, EventFamily};
use crate::rng::{stream, TrialRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WitnessError {
    #[error("step {k} outside 1..={len}")]
    OutOfRange { k: usize, len: usize },
    #[error("node {child} is not dependent on its parent")]
    NotDependent { child: usize },
    #[error("siblings {0} and {1} are dependent or share a label")]
    DependentSiblings(usize, usize),
    #[error("only the root may carry a non-bad label")]
    MisplacedLabel,
}

/// Node label: a bad event of the family, or an outside event used as root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Bad(usize),
    Other(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub label: Label,
    pub parent: Option<usize>,
    pub depth: usize,
    pub children: Vec<usize>,
}

/// Node 0 is the root; nodes are stored in creation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTree {
    pub nodes: Vec<Node>,
}

impl WitnessTree {
    pub fn singleton(label: Label) -> Self {
        WitnessTree { nodes: vec![Node { label, parent: None, depth: 0, children: Vec::new() }] }
    }

    pub fn root(&self) -> Label {
        self.nodes[0].label
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_child(&mut self, parent: usize, label: Label) -> usize {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(Node { label, parent: Some(parent), depth, children: Vec::new() });
        self.nodes[parent].children.push(id);
        id
    }

    /// `w(τ)`: product of label probabilities.
    pub fn weight(&self, prob: impl Fn(Label) -> f64) -> f64 {
        self.nodes.iter().map(|n| prob(n.label)).product()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.nodes.iter().filter(|n| n.label == label).count()
    }

    /// Order-free encoding; equal for isomorphic labeled trees.
    pub fn canonical(&self) -> String {
        fn enc(t: &WitnessTree, i: usize) -> String {
            let mut kids: Vec<String> = t.nodes[i].children.iter().map(|&c| enc(t, c)).collect();
            kids.sort();
            let head = match t.nodes[i].label {
                Label::Bad(b) => format!("B{b}"),
                Label::Other(e) => format!("E{e}"),
            };
            if kids.is_empty() {
                head
            } else {
                format!("{head}({})", kids.join(","))
            }
        }
        enc(self, 0)
    }

    /// Checks the structural rules: only the root may be an outside event,
    /// children depend on their parent, siblings are distinct and pairwise
    /// independent.
    pub fn validate(&self, dep: impl Fn(Label, Label) -> bool) -> Result<(), WitnessError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 && matches!(n.label, Label::Other(_)) {
                return Err(WitnessError::MisplacedLabel);
            }
            if let Some(p) = n.parent {
                if !dep(self.nodes[p].label, n.label) {
                    return Err(WitnessError::NotDependent { child: i });
                }
            }
            for (a, &x) in n.children.iter().enumerate() {
                for &y in &n.children[a + 1..] {
                    let (lx, ly) = (self.nodes[x].label, self.nodes[y].label);
                    if lx == ly || dep(lx, ly) {
                        return Err(WitnessError::DependentSiblings(x, y));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Attaches `B^t` for `t` in `steps` (already reversed) under the deepest
/// node it depends on, earliest-created among equals.
fn grow(tree: &mut WitnessTree, steps: impl Iterator<Item = usize>, dep: &dyn Fn(Label, usize) -> bool) {
    for b in steps {
        let mut best: Option<usize> = None;
        for (i, n) in tree.nodes.iter().enumerate() {
            if dep(n.label, b) && best.map_or(true, |j| n.depth > tree.nodes[j].depth) {
                best = Some(i);
            }
        }
        if let Some(p) = best {
            tree.add_child(p, Label::Bad(b));
        }
    }
}

/// `τ̂^k` from the event sequence `B^1..B^T` (k is 1-based).
pub fn build_tree(events: &[usize], k: usize, dep: impl Fn(usize, usize) -> bool) -> Result<WitnessTree, WitnessError> {
    if k == 0 || k > events.len() {
        return Err(WitnessError::OutOfRange { k, len: events.len() });
    }
    let mut tree = WitnessTree::singleton(Label::Bad(events[k - 1]));
    let d = |l: Label, b: usize| match l {
        Label::Bad(a) => dep(a, b),
        Label::Other(_) => false,
    };
    grow(&mut tree, events[..k - 1].iter().rev().copied(), &d);
    Ok(tree)
}

/// Tree for an outside event `E` (label `Other(e)`) checked on `X^k`, the
/// configuration after `k` resamplings.
pub fn build_event_tree(
    events: &[usize],
    k: usize,
    e: usize,
    e_dep: impl Fn(usize) -> bool,
    dep: impl Fn(usize, usize) -> bool,
) -> Result<WitnessTree, WitnessError> {
    if k > events.len() {
        return Err(WitnessError::OutOfRange { k, len: events.len() });
    }
    let mut tree = WitnessTree::singleton(Label::Other(e));
    let d = |l: Label, b: usize| match l {
        Label::Bad(a) => dep(a, b),
        Label::Other(_) => e_dep(b),
    };
    grow(&mut tree, events[..k].iter().rev().copied(), &d);
    Ok(tree)
}

/// E/B tree for a step `k ≥ 1`: root `E`, forced child `B^k`, then
/// `B^{k-1}..B^1` attached as usual.
pub fn build_event_bad_tree(
    events: &[usize],
    k: usize,
    e: usize,
    e_dep: impl Fn(usize) -> bool,
    dep: impl Fn(usize, usize) -> bool,
) -> Result<WitnessTree, WitnessError> {
    if k == 0 || k > events.len() {
        return Err(WitnessError::OutOfRange { k, len: events.len() });
    }
    let mut tree = WitnessTree::singleton(Label::Other(e));
    tree.add_child(0, Label::Bad(events[k - 1]));
    let d = |l: Label, b: usize| match l {
        Label::Bad(a) => dep(a, b),
        Label::Other(_) => e_dep(b),
    };
    grow(&mut tree, events[..k - 1].iter().rev().copied(), &d);
    Ok(tree)
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub trees: Vec<WitnessTree>,
    pub total_weight: f64,
    /// Set when the structure cap stopped the enumeration.
    pub truncated: bool,
}

/// All tree-structures rooted at `root` with weight at least `min_weight`,
/// up to `cap` of them. A node's children form an independent set of
/// distinct bad events from `neighbors(label)`.
pub fn enumerate_trees(
    root: Label,
    neighbors: &dyn Fn(Label) -> Vec<usize>,
    dep: &dyn Fn(usize, usize) -> bool,
    prob: &dyn Fn(Label) -> f64,
    min_weight: f64,
    cap: usize,
) -> Enumeration {
    let mut out = Enumeration { trees: Vec::new(), total_weight: 0.0, truncated: false };
    let tree = WitnessTree::singleton(root);
    let w = prob(root);
    if w >= min_weight && w > 0.0 {
        let ctx = Ctx { neighbors, dep, prob, min_weight, cap };
        expand(&ctx, tree, w, 0, &mut out);
    }
    out
}

struct Ctx<'a> {
    neighbors: &'a dyn Fn(Label) -> Vec<usize>,
    dep: &'a dyn Fn(usize, usize) -> bool,
    prob: &'a dyn Fn(Label) -> f64,
    min_weight: f64,
    cap: usize,
}

/// Nodes before `next` have their children fixed; the rest are open.
fn expand(ctx: &Ctx<'_>, tree: WitnessTree, w: f64, next: usize, out: &mut Enumeration) {
    if out.trees.len() >= ctx.cap {
        out.truncated = true;
        return;
    }
    if next == tree.len() {
        out.total_weight += w;
        out.trees.push(tree);
        return;
    }
    let mut cand = (ctx.neighbors)(tree.nodes[next].label);
    cand.sort_unstable();
    cand.dedup();
    let mut chosen = Vec::new();
    subsets(ctx, &tree, w, next, &cand, 0, &mut chosen, out);
}

#[allow(clippy::too_many_arguments)]
fn subsets(
    ctx: &Ctx<'_>,
    tree: &WitnessTree,
    w: f64,
    node: usize,
    cand: &[usize],
    from: usize,
    chosen: &mut Vec<usize>,
    out: &mut Enumeration,
) {
    if out.truncated {
        return;
    }
    // children of `node` are fixed to `chosen`
    let mut t = tree.clone();
    for &b in chosen.iter() {
        t.add_child(node, Label::Bad(b));
    }
    expand(ctx, t, w, node + 1, out);
    for i in from..cand.len() {
        let b = cand[i];
        let nw = w * (ctx.prob)(Label::Bad(b));
        if nw < ctx.min_weight || nw <= 0.0 {
            continue;
        }
        if chosen.iter().any(|&c| (ctx.dep)(c, b)) {
            continue;
        }
        chosen.push(b);
        subsets(ctx, tree, nw, node, cand, i + 1, chosen, out);
        chosen.pop();
    }
}

/// Enumerates tree-structures of a family rooted at bad event `b`.
pub fn enumerate_family_trees(family: &EventFamily, b: usize, min_weight: f64, cap: usize) -> Enumeration {
    let neighbors = |l: Label| match l {
        Label::Bad(a) => family.neighbors(a).to_vec(),
        Label::Other(_) => Vec::new(),
    };
    let dep = |a: usize, c: usize| family.depends(a, c);
    let prob = |l: Label| match l {
        Label::Bad(a) => family.event(a).prob(),
        Label::Other(_) => 1.0,
    };
    enumerate_trees(Label::Bad(b), &neighbors, &dep, &prob, min_weight, cap)
}

/// Canonical forms of `τ̂^1..τ̂^T` for a run.
pub fn appearing_trees(family: &EventFamily, events: &[usize]) -> HashSet<String> {
    (1..=events.len())
        .map(|k| {
            build_tree(events, k, |a, b| family.depends(a, b))
                .expect("k in range")
                .canonical()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeCheck {
    pub tree: String,
    pub weight: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub hoeffding: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WtlReport {
    pub trials: u64,
    pub trees: Vec<TreeCheck>,
    /// Per bad event: enumerated weight sum, `μ(B)`, and whether the
    /// enumeration hit its cap.
    pub weight_sums: Vec<(f64, f64, bool)>,
    pub violations: usize,
}

/// Runs `trials` executions and compares the appearance frequency of each
/// tree-structure against its weight; also checks enumerated weight sums
/// against `μ`.
pub fn verify_wtl<F>(
    family: &EventFamily,
    structures: &[WitnessTree],
    trials: u64,
    seed: u64,
    run: F,
) -> Result<WtlReport, WitnessError>
where
    F: Fn(&mut TrialRng) -> Result<Run<usize, u32>, EngineError> + Sync,
{
    let dep = |a: Label, b: Label| match (a, b) {
        (Label::Bad(x), Label::Bad(y)) => family.depends(x, y),
        _ => false,
    };
    for s in structures {
        s.validate(dep)?;
    }
    let keys: Vec<String> = structures.iter().map(|s| s.canonical()).collect();
    let index: HashMap<&str, usize> = keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut c = vec![0u64; keys.len()];
            let r = run(&mut stream(seed, t)).expect("run within cap");
            for k in appearing_trees(family, &r.log.events()) {
                if let Some(&i) = index.get(k.as_str()) {
                    c[i] += 1;
                }
            }
            c
        })
        .reduce(
            || vec![0u64; keys.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let prob = |l: Label| match l {
        Label::Bad(a) => family.event(a).prob(),
        Label::Other(_) => 1.0,
    };
    let n = trials as f64;
    let trees: Vec<TreeCheck> = structures
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let f = c as f64 / n;
            let stderr = (f * (1.0 - f) / n).sqrt();
            let weight = s.weight(prob);
            TreeCheck {
                tree: s.canonical(),
                weight,
                frequency: f,
                stderr,
                hoeffding: crate::oracle::hoeffding_half_width(1.0, trials, 1e-3),
                violation: f - 3.0 * stderr > weight,
            }
        })
        .collect();
    let weight_sums = (0..family.len())
        .map(|b| {
            let e = enumerate_family_trees(family, b, 1e-6, 100_000);
            (e.total_weight, family.mu()[b], e.truncated)
        })
        .collect();
    let violations = trees.iter().filter(|t| t.violation).count();
    Ok(WtlReport { trials, trees, weight_sums, violations })
}

/// `Σ_t [E(X^t) ∧ B^t = B]` over a logged run, `X^t` being the configuration
/// right after the `t`-th resampling.
pub fn internal_state_count(run: &Run<usize, u32>, e: &Event, b: usize) -> u64 {
    run.log
        .replay()
        .skip(1)
        .zip(&run.log.entries)
        .filter(|(x, entry)| entry.event == b && e.holds(x))
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::minimal_mu;
    use crate::engine::{run_mt, EngineOptions, SelectionRule};
    use crate::rng::stream;
    use crate::space::ProductSpace;

    fn chain() -> EventFamily {
        // B0 ~ B1 ~ B2, B0 independent of B2
        let s = ProductSpace::uniform(4, 2);
        let ev = vec![
            Event::assignment(&s, &[(0, 1), (1, 1)]).unwrap(),
            Event::assignment(&s, &[(1, 0), (2, 1)]).unwrap(),
            Event::assignment(&s, &[(2, 0), (3, 1)]).unwrap(),
        ];
        let f = EventFamily::new(s, ev, vec![0.0; 3]).unwrap();
        let mu: Vec<f64> = minimal_mu(&f, 25).unwrap().iter().map(|m| m * 1.001).collect();
        f.with_mu(mu).unwrap()
    }

    #[test]
    fn build_examples() {
        let dep = |a: usize, b: usize| a == b || a + b == 1;
        let t = build_tree(&[0], 1, dep).unwrap();
        assert_eq!(t.canonical(), "B0");
        assert_eq!(build_tree(&[0, 1], 2, dep).unwrap().canonical(), "B1(B0)");
        assert_eq!(build_tree(&[0, 2], 2, dep).unwrap().canonical(), "B2");
        assert!(build_tree(&[0], 2, dep).is_err());
        assert!(build_tree(&[0], 0, dep).is_err());
    }

    #[test]
    fn deepest_then_earliest() {
        // 0 ~ everything, 1 ~ 2
        let dep = |a: usize, b: usize| a == b || a == 0 || b == 0 || (a.min(b) == 1 && a.max(b) == 2);
        // root B0; B1 and B2... processed backward: B2 under B0, then B1 under B2 (deeper)
        let t = build_tree(&[1, 2, 0], 3, dep).unwrap();
        assert_eq!(t.canonical(), "B0(B2(B1))");
        assert_eq!(t.nodes[2].depth, 2);
    }

    #[test]
    fn event_tree_examples() {
        let dep = |a: usize, b: usize| a == b;
        let t = build_event_tree(&[], 0, 7, |_| true, dep).unwrap();
        assert_eq!(t.canonical(), "E7");
        assert!((t.weight(|_| 0.3) - 0.3).abs() < 1e-15);
        let t = build_event_tree(&[1], 1, 0, |b| b == 1, dep).unwrap();
        assert_eq!(t.canonical(), "E0(B1)");
        let w = t.weight(|l| if l == Label::Other(0) { 0.5 } else { 0.25 });
        assert!((w - 0.125).abs() < 1e-15);
        // E independent of B1 but B1 forced under the root
        let t = build_event_bad_tree(&[1], 1, 0, |_| false, dep).unwrap();
        assert_eq!(t.canonical(), "E0(B1)");
    }

    #[test]
    fn invalid_structures_rejected() {
        let dep = |a: Label, b: Label| match (a, b) {
            (Label::Bad(x), Label::Bad(y)) => x == y || x + y == 1,
            _ => false,
        };
        let mut t = WitnessTree::singleton(Label::Bad(0));
        t.add_child(0, Label::Bad(2));
        assert_eq!(t.validate(dep), Err(WitnessError::NotDependent { child: 1 }));
        let mut t = WitnessTree::singleton(Label::Bad(0));
        t.add_child(0, Label::Bad(1));
        t.add_child(0, Label::Bad(1));
        assert!(matches!(t.validate(dep), Err(WitnessError::DependentSiblings(..))));
    }

    #[test]
    fn singleton_on_one_event_instance() {
        let s = ProductSpace::uniform(1, 2);
        let f = EventFamily::new(s.clone(), vec![Event::assignment(&s, &[(0, 1)]).unwrap()], vec![1.0]).unwrap();
        let tree = WitnessTree::singleton(Label::Bad(0));
        let opts = EngineOptions::new(1000);
        let r = verify_wtl(&f, &[tree], 100_000, 1, |rng| run_mt(&f, rng, &opts)).unwrap();
        let c = &r.trees[0];
        assert!((c.weight - 0.5).abs() < 1e-15);
        assert!((c.frequency - 0.5).abs() <= 3.0 * c.stderr + 1e-9);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn enumeration_weights_bounded_by_mu() {
        let f = chain();
        for b in 0..f.len() {
            let e = enumerate_family_trees(&f, b, 1e-7, 100_000);
            assert!(e.total_weight <= f.mu()[b], "{} > {}", e.total_weight, f.mu()[b]);
            for t in &e.trees {
                let w = t.weight(|l| match l {
                    Label::Bad(a) => f.event(a).prob(),
                    Label::Other(_) => 1.0,
                });
                assert!(w > 0.0 && w <= 1.0);
                t.validate(|a, c| match (a, c) {
                    (Label::Bad(x), Label::Bad(y)) => f.depends(x, y),
                    _ => false,
                })
                .unwrap();
            }
            let keys: HashSet<String> = e.trees.iter().map(|t| t.canonical()).collect();
            assert_eq!(keys.len(), e.trees.len());
        }
    }

    #[test]
    fn built_trees_are_enumerated_and_distinct() {
        let f = chain();
        let all: HashSet<String> = (0..3)
            .flat_map(|b| enumerate_family_trees(&f, b, 0.25f64.powi(6) * 0.999, 100_000).trees)
            .filter(|t| t.len() <= 6)
            .map(|t| t.canonical())
            .collect();
        let opts = EngineOptions::new(10_000).rule(SelectionRule::Random);
        for t in 0..500 {
            let run = run_mt(&f, &mut stream(2, t), &opts).unwrap();
            let events = run.log.events();
            let mut per_event: HashMap<usize, HashSet<String>> = HashMap::new();
            for k in 1..=events.len() {
                let tree = build_tree(&events, k, |a, b| f.depends(a, b)).unwrap();
                assert_eq!(tree.count_label(Label::Bad(events[k - 1])), events[..k].iter().filter(|&&e| e == events[k - 1]).count());
                if tree.len() <= 6 {
                    assert!(all.contains(&tree.canonical()), "{}", tree.canonical());
                }
                assert!(per_event.entry(events[k - 1]).or_default().insert(tree.canonical()));
                assert_eq!(tree, build_tree(&events, k, |a, b| f.depends(a, b)).unwrap());
            }
        }
    }

    #[test]
    fn internal_state_counts_after_step() {
        let s = ProductSpace::uniform(1, 2);
        let f = EventFamily::new(s.clone(), vec![Event::assignment(&s, &[(0, 1)]).unwrap()], vec![1.0]).unwrap();
        let zero = Event::assignment(&s, &[(0, 0)]).unwrap();
        let run = run_mt(&f, &mut stream(0, 3), &EngineOptions::new(100)).unwrap();
        // the final resampling always lands on 0
        let expect = u64::from(!run.log.is_empty());
        assert_eq!(internal_state_count(&run, &zero, 0), expect);
    }
}

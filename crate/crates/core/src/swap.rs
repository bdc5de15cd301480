//! Swapping MT on a uniformly random permutation.
//!
//! Bad events are conjunctions of pairs `π(x) = y`. Resampling an event with
//! rows `x_1, ..., x_r` swaps, for each `i` in order, the entry at `x_i` with
//! the entry at a position drawn uniformly from `[n] \ {x_1, ..., x_{i-1}}`.

use crate::engine::{CoreMarks, EngineError, EngineOptions, Pending};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt::Debug;
use std::hash::Hash;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PermError {
    #[error("not a permutation of 0..{0}")]
    NotBijection(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationState {
    pi: Vec<usize>,
}

impl PermutationState {
    pub fn identity(n: usize) -> Self {
        PermutationState { pi: (0..n).collect() }
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut pi: Vec<usize> = (0..n).collect();
        pi.shuffle(rng);
        PermutationState { pi }
    }

    pub fn from_vec(pi: Vec<usize>) -> Result<Self, PermError> {
        let s = PermutationState { pi };
        if s.is_bijection() {
            Ok(s)
        } else {
            Err(PermError::NotBijection(s.pi.len()))
        }
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.pi
    }

    pub fn swap(&mut self, x: usize, z: usize) {
        self.pi.swap(x, z);
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.pi.len();
        let mut seen = vec![false; n];
        for &y in &self.pi {
            if y >= n || seen[y] {
                return false;
            }
            seen[y] = true;
        }
        true
    }
}

/// Bad events over a permutation of `[n]`.
pub trait PermModel {
    type Event: Clone + Eq + Hash + Ord + Debug;

    fn n(&self) -> usize;
    /// The pairs `(x, y)` of the event, rows distinct, in scope order.
    fn pairs(&self, e: &Self::Event) -> Vec<(usize, usize)>;
    fn find_all(&self, pi: &[usize]) -> Vec<Self::Event>;

    fn holds(&self, e: &Self::Event, pi: &[usize]) -> bool {
        self.pairs(e).iter().all(|&(x, y)| pi[x] == y)
    }
}

pub trait PermSearcher<M: PermModel> {
    fn init(&mut self, model: &M, pi: &[usize]) -> Vec<M::Event>;
    /// Called after a resampling batch; `changed` lists every position whose
    /// entry may differ. Must return every true event touching those rows.
    fn after_swaps(&mut self, model: &M, pi: &[usize], changed: &[usize]) -> Vec<M::Event>;
}

/// Rescans all events after every batch.
#[derive(Clone, Copy, Debug, Default)]
pub struct PermScan;

impl<M: PermModel> PermSearcher<M> for PermScan {
    fn init(&mut self, model: &M, pi: &[usize]) -> Vec<M::Event> {
        model.find_all(pi)
    }

    fn after_swaps(&mut self, model: &M, pi: &[usize], _: &[usize]) -> Vec<M::Event> {
        model.find_all(pi)
    }
}

/// Explicit list of pair-conjunction events.
#[derive(Clone, Debug)]
pub struct PermEventFamily {
    n: usize,
    events: Vec<Vec<(usize, usize)>>,
}

impl PermEventFamily {
    pub fn new(n: usize, events: Vec<Vec<(usize, usize)>>) -> Self {
        for e in &events {
            let mut rows: Vec<usize> = e.iter().map(|p| p.0).collect();
            rows.sort_unstable();
            rows.dedup();
            assert_eq!(rows.len(), e.len(), "event rows must be distinct");
            assert!(e.iter().all(|&(x, y)| x < n && y < n), "pair out of range");
        }
        PermEventFamily { n, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

impl PermModel for PermEventFamily {
    type Event = usize;

    fn n(&self) -> usize {
        self.n
    }

    fn pairs(&self, e: &usize) -> Vec<(usize, usize)> {
        self.events[*e].clone()
    }

    fn find_all(&self, pi: &[usize]) -> Vec<usize> {
        (0..self.events.len())
            .filter(|&i| self.events[i].iter().all(|&(x, y)| pi[x] == y))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermEntry<E> {
    pub step: u64,
    pub event: E,
    /// Swapped position pairs `(x, z)`, in the order performed.
    pub swaps: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermLog<E> {
    pub initial: Vec<usize>,
    pub entries: Vec<PermEntry<E>>,
}

impl<E> PermLog<E> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct PermRun<E> {
    pub state: PermutationState,
    pub log: PermLog<E>,
}

/// Swapping MT starting from a uniform permutation.
pub fn run_mt_swapping<M: PermModel, S: PermSearcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<PermRun<M::Event>, EngineError> {
    let state = PermutationState::uniform(model.n(), rng);
    swapping_loop(model, searcher, state, rng, opts, None)
}

/// Truncated swapping MT: a true event is resampled only when its core mark,
/// drawn with probability `q`, is set.
pub fn run_truncated_swapping<M: PermModel, S: PermSearcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    q: &dyn Fn(&M::Event) -> f64,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<PermRun<M::Event>, EngineError> {
    let state = PermutationState::uniform(model.n(), rng);
    let mut marks = CoreMarks::new(q);
    swapping_loop(model, searcher, state, rng, opts, Some(&mut marks))
}

/// Runs from a given start state.
pub fn run_mt_swapping_from<M: PermModel, S: PermSearcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    state: PermutationState,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<PermRun<M::Event>, EngineError> {
    swapping_loop(model, searcher, state, rng, opts, None)
}

fn swapping_loop<M: PermModel, S: PermSearcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    mut state: PermutationState,
    rng: &mut R,
    opts: &EngineOptions,
    mut marks: Option<&mut CoreMarks<'_, M::Event>>,
) -> Result<PermRun<M::Event>, EngineError> {
    let n = state.n();
    let mut log = PermLog { initial: state.pi.clone(), entries: Vec::new() };
    let mut pending = Pending::new(opts.rule);
    for e in searcher.init(model, &state.pi) {
        pending.push(e);
    }
    let mut changed = Vec::new();
    while let Some(e) = pending.pop(rng) {
        if !model.holds(&e, &state.pi) {
            continue;
        }
        if let Some(m) = marks.as_deref_mut() {
            if !m.is_core(&e, rng) {
                continue;
            }
        }
        if log.entries.len() as u64 >= opts.cap {
            return Err(EngineError::CapExceeded { cap: opts.cap });
        }
        let pairs = model.pairs(&e);
        let mut swaps = Vec::with_capacity(pairs.len());
        changed.clear();
        for (i, &(x, _)) in pairs.iter().enumerate() {
            let z = loop {
                let z = rng.gen_range(0..n);
                if !pairs[..i].iter().any(|p| p.0 == z) {
                    break z;
                }
            };
            state.swap(x, z);
            swaps.push((x, z));
            changed.push(x);
            changed.push(z);
        }
        changed.sort_unstable();
        changed.dedup();
        if opts.audit {
            assert!(state.is_bijection(), "swap batch broke the permutation");
        }
        if let Some(m) = marks.as_deref_mut() {
            m.reset(&e);
        }
        let step = log.entries.len() as u64 + 1;
        log.entries.push(PermEntry { step, event: e, swaps });
        for f in searcher.after_swaps(model, &state.pi, &changed) {
            pending.push(f);
        }
    }
    if opts.audit {
        let mut missed = model.find_all(&state.pi);
        if let Some(m) = marks.as_deref_mut() {
            missed.retain(|e| m.is_core(e, rng));
        }
        if let Some(first) = missed.first() {
            return Err(EngineError::SearcherIncomplete {
                missed: missed.len(),
                example: format!("{first:?}"),
            });
        }
    }
    Ok(PermRun { state, log })
}

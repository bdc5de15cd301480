//! Sequential Moser-Tardos engines over a [`Model`].

use crate::model::{Model, Searcher};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    LowestIndex,
    #[default]
    StackLifo,
    Random,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("resampling cap of {cap} exceeded")]
    CapExceeded { cap: u64 },
    #[error("searcher missed {missed} true bad event(s), e.g. {example}")]
    SearcherIncomplete { missed: usize, example: String },
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub rule: SelectionRule,
    pub cap: u64,
    /// Full rescan at termination to catch searcher omissions.
    pub audit: bool,
}

impl EngineOptions {
    pub fn new(cap: u64) -> Self {
        EngineOptions { rule: SelectionRule::default(), cap, audit: cfg!(debug_assertions) }
    }

    pub fn rule(mut self, rule: SelectionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }
}

/// One resampling: the event and the fresh values drawn for its scope.
#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry<E, V> {
    pub step: u64,
    pub event: E,
    pub values: Vec<(usize, V)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResampleLog<E, V> {
    pub initial: Vec<V>,
    pub entries: Vec<LogEntry<E, V>>,
}

impl<E: Clone, V: Copy> ResampleLog<E, V> {
    pub fn new(initial: Vec<V>) -> Self {
        ResampleLog { initial, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `B^1, ..., B^T`.
    pub fn events(&self) -> Vec<E> {
        self.entries.iter().map(|e| e.event.clone()).collect()
    }

    /// Configurations `X^0, X^1, ..., X^T`.
    pub fn replay(&self) -> Replay<'_, E, V> {
        Replay { log: self, x: None, next: 0 }
    }

    /// Checks that every logged event held just before it was resampled.
    /// Returns the first offending step on failure.
    pub fn check_faithful(&self, holds: impl Fn(&E, &[V]) -> bool) -> Result<(), u64> {
        let mut x = self.initial.clone();
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.step != i as u64 + 1 || !holds(&entry.event, &x) {
                return Err(entry.step);
            }
            for &(v, val) in &entry.values {
                x[v] = val;
            }
        }
        Ok(())
    }
}

impl<E: Clone + Eq + Hash, V> ResampleLog<E, V> {
    pub fn counts(&self) -> HashMap<E, u64> {
        let mut c = HashMap::new();
        for e in &self.entries {
            *c.entry(e.event.clone()).or_insert(0) += 1;
        }
        c
    }
}

pub struct Replay<'a, E, V> {
    log: &'a ResampleLog<E, V>,
    x: Option<Vec<V>>,
    next: usize,
}

impl<E, V: Copy> Iterator for Replay<'_, E, V> {
    type Item = Vec<V>;

    fn next(&mut self) -> Option<Vec<V>> {
        match &mut self.x {
            None => {
                self.x = Some(self.log.initial.clone());
            }
            Some(x) => {
                let entry = self.log.entries.get(self.next)?;
                for &(v, val) in &entry.values {
                    x[v] = val;
                }
                self.next += 1;
            }
        }
        self.x.clone()
    }
}

#[derive(Clone, Debug)]
pub struct Run<E, V> {
    pub config: Vec<V>,
    pub log: ResampleLog<E, V>,
}

impl<E, V> Run<E, V> {
    pub fn resamplings(&self) -> usize {
        self.log.entries.len()
    }
}

/// Core marks `Y(B)` with `P(Y(B) = 1) = q(B)`, drawn lazily.
///
/// A mark is drawn the first time the event is inspected and forgotten when
/// the event is resampled. When `q` is 0 or 1 no randomness is consumed.
pub struct CoreMarks<'a, E> {
    q: &'a dyn Fn(&E) -> f64,
    y: HashMap<E, bool>,
}

impl<'a, E: Clone + Eq + Hash> CoreMarks<'a, E> {
    pub fn new(q: &'a dyn Fn(&E) -> f64) -> Self {
        CoreMarks { q, y: HashMap::new() }
    }

    pub fn is_core<R: Rng + ?Sized>(&mut self, e: &E, rng: &mut R) -> bool {
        let q = (self.q)(e);
        if q >= 1.0 {
            return true;
        }
        if !(q > 0.0) {
            return false;
        }
        *self.y.entry(e.clone()).or_insert_with(|| rng.gen_bool(q))
    }

    pub fn reset(&mut self, e: &E) {
        self.y.remove(e);
    }
}

fn resample<M: Model, R: Rng + ?Sized>(
    model: &M,
    e: &M::Event,
    x: &mut [M::Value],
    rng: &mut R,
    log: &mut ResampleLog<M::Event, M::Value>,
) -> Vec<usize> {
    let scope = model.scope(e);
    let mut values = Vec::with_capacity(scope.len());
    for &v in &scope {
        let val = model.sample_var(v, rng);
        x[v] = val;
        values.push((v, val));
    }
    let step = log.entries.len() as u64 + 1;
    log.entries.push(LogEntry { step, event: e.clone(), values });
    scope
}

/// MT with a full scan of the family before every step.
pub fn run_mt<M: Model, R: Rng + ?Sized>(
    model: &M,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<Run<M::Event, M::Value>, EngineError> {
    run_mt_marked(model, rng, opts, None)
}

pub(crate) fn run_mt_marked<M: Model, R: Rng + ?Sized>(
    model: &M,
    rng: &mut R,
    opts: &EngineOptions,
    mut marks: Option<&mut CoreMarks<'_, M::Event>>,
) -> Result<Run<M::Event, M::Value>, EngineError> {
    let mut x = model.sample_initial(rng);
    let mut log = ResampleLog::new(x.clone());
    let mut stack: Vec<M::Event> = Vec::new();
    loop {
        let mut live = model.find_all(&x);
        if let Some(m) = marks.as_deref_mut() {
            live.retain(|e| m.is_core(e, rng));
        }
        if live.is_empty() {
            break;
        }
        let e = match opts.rule {
            SelectionRule::LowestIndex => live.iter().min().cloned().expect("non-empty"),
            SelectionRule::Random => live[rng.gen_range(0..live.len())].clone(),
            SelectionRule::StackLifo => {
                let set: HashSet<&M::Event> = live.iter().collect();
                stack.retain(|e| set.contains(e));
                let on_stack: HashSet<M::Event> = stack.iter().cloned().collect();
                stack.extend(live.iter().filter(|e| !on_stack.contains(*e)).cloned());
                stack.pop().expect("non-empty")
            }
        };
        if log.entries.len() as u64 >= opts.cap {
            return Err(EngineError::CapExceeded { cap: opts.cap });
        }
        resample(model, &e, &mut x, rng, &mut log);
        if let Some(m) = marks.as_deref_mut() {
            m.reset(&e);
        }
    }
    Ok(Run { config: x, log })
}

/// Pending events for the depth-first engine, ordered by the selection rule.
pub(crate) enum Pending<E> {
    Lifo(Vec<E>, HashSet<E>),
    Lowest(BTreeSet<E>),
    Random(Vec<E>, HashSet<E>),
}

impl<E: Clone + Eq + Hash + Ord> Pending<E> {
    pub(crate) fn new(rule: SelectionRule) -> Self {
        match rule {
            SelectionRule::StackLifo => Pending::Lifo(Vec::new(), HashSet::new()),
            SelectionRule::LowestIndex => Pending::Lowest(BTreeSet::new()),
            SelectionRule::Random => Pending::Random(Vec::new(), HashSet::new()),
        }
    }

    pub(crate) fn push(&mut self, e: E) {
        match self {
            Pending::Lifo(v, s) | Pending::Random(v, s) => {
                if s.insert(e.clone()) {
                    v.push(e);
                }
            }
            Pending::Lowest(s) => {
                s.insert(e);
            }
        }
    }

    pub(crate) fn pop<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<E> {
        match self {
            Pending::Lifo(v, s) => {
                let e = v.pop()?;
                s.remove(&e);
                Some(e)
            }
            Pending::Lowest(s) => s.pop_first(),
            Pending::Random(v, s) => {
                if v.is_empty() {
                    return None;
                }
                let e = v.swap_remove(rng.gen_range(0..v.len()));
                s.remove(&e);
                Some(e)
            }
        }
    }
}

/// Depth-first MT: after resampling `B` only the searcher's report on the
/// neighborhood of `B` is added to the pending set.
pub fn run_mt_dfs<M: Model, S: Searcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    rng: &mut R,
    opts: &EngineOptions,
) -> Result<Run<M::Event, M::Value>, EngineError> {
    run_mt_dfs_marked(model, searcher, rng, opts, None)
}

pub(crate) fn run_mt_dfs_marked<M: Model, S: Searcher<M>, R: Rng + ?Sized>(
    model: &M,
    searcher: &mut S,
    rng: &mut R,
    opts: &EngineOptions,
    mut marks: Option<&mut CoreMarks<'_, M::Event>>,
) -> Result<Run<M::Event, M::Value>, EngineError> {
    let mut x = model.sample_initial(rng);
    let mut log = ResampleLog::new(x.clone());
    let mut pending = Pending::new(opts.rule);
    for e in searcher.init(model, &x) {
        pending.push(e);
    }
    while let Some(e) = pending.pop(rng) {
        if !model.holds(&e, &x) {
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
        let changed = resample(model, &e, &mut x, rng, &mut log);
        if let Some(m) = marks.as_deref_mut() {
            m.reset(&e);
        }
        for f in searcher.after_resample(model, &e, &changed, &x) {
            pending.push(f);
        }
    }
    if opts.audit {
        let mut missed = model.find_all(&x);
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
    Ok(Run { config: x, log })
}

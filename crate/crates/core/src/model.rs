//! The interface the resampling engines drive.

use crate::event::{sorted_intersect, EventFamily};
use rand::Rng;
use std::fmt::Debug;
use std::hash::Hash;

/// A variable model together with a family of bad events.
pub trait Model {
    type Value: Copy + PartialEq + Debug;
    type Event: Clone + Eq + Hash + Ord + Debug;

    fn num_vars(&self) -> usize;
    fn sample_var<R: Rng + ?Sized>(&self, var: usize, rng: &mut R) -> Self::Value;
    /// Sorted, duplicate-free variable set of the event.
    fn scope(&self, e: &Self::Event) -> Vec<usize>;
    fn holds(&self, e: &Self::Event, x: &[Self::Value]) -> bool;
    /// Every true bad event, in a fixed order.
    fn find_all(&self, x: &[Self::Value]) -> Vec<Self::Event>;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Self::Value> {
        (0..self.num_vars()).map(|v| self.sample_var(v, rng)).collect()
    }

    fn overlaps(&self, a: &Self::Event, b: &Self::Event) -> bool {
        sorted_intersect(&self.scope(a), &self.scope(b))
    }
}

/// Finds bad events that may have become true after a resampling.
pub trait Searcher<M: Model> {
    fn init(&mut self, model: &M, x: &[M::Value]) -> Vec<M::Event>;

    /// Called after `resampled` had its variables `changed` redrawn. Must
    /// return every true bad event among those sharing a variable with it.
    fn after_resample(
        &mut self,
        model: &M,
        resampled: &M::Event,
        changed: &[usize],
        x: &[M::Value],
    ) -> Vec<M::Event>;
}

/// Rescans the whole family after every resampling.
#[derive(Clone, Copy, Debug, Default)]
pub struct FullScan;

impl<M: Model> Searcher<M> for FullScan {
    fn init(&mut self, model: &M, x: &[M::Value]) -> Vec<M::Event> {
        model.find_all(x)
    }

    fn after_resample(&mut self, model: &M, _: &M::Event, _: &[usize], x: &[M::Value]) -> Vec<M::Event> {
        model.find_all(x)
    }
}

/// Re-examines only the events sharing a variable with the resampled one.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeighborScan;

impl Searcher<EventFamily> for NeighborScan {
    fn init(&mut self, model: &EventFamily, x: &[u32]) -> Vec<usize> {
        model.find_all(x)
    }

    fn after_resample(&mut self, model: &EventFamily, b: &usize, _: &[usize], x: &[u32]) -> Vec<usize> {
        model
            .overlap_neighbors(*b)
            .iter()
            .copied()
            .filter(|&j| model.event(j).holds(x))
            .collect()
    }
}

impl Model for EventFamily {
    type Value = u32;
    type Event = usize;

    fn num_vars(&self) -> usize {
        self.space().num_vars()
    }

    fn sample_var<R: Rng + ?Sized>(&self, var: usize, rng: &mut R) -> u32 {
        self.space().sample_var(var, rng)
    }

    fn scope(&self, e: &usize) -> Vec<usize> {
        self.event(*e).scope().to_vec()
    }

    fn holds(&self, e: &usize, x: &[u32]) -> bool {
        self.event(*e).holds(x)
    }

    fn find_all(&self, x: &[u32]) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.event(i).holds(x)).collect()
    }

    fn overlaps(&self, a: &usize, b: &usize) -> bool {
        self.overlap_neighbors(*a).binary_search(b).is_ok()
    }
}

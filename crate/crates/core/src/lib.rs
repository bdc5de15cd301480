//! Moser-Tardos resampling on product spaces and permutations.
//!
//! The crate provides the resampling engines (naive scan, depth-first search,
//! swapping on permutations), the truncated and parallel-truncated variants,
//! witness-tree reconstruction, local-lemma criterion checks, Rényi-entropy
//! bounds, and a small Monte Carlo harness used by the test suites.

pub mod analysis;
pub mod engine;
pub mod entropy;
pub mod event;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod space;
pub mod swap;
pub mod truncated;
pub mod witness;

pub use analysis::{CriterionReport, SubsetSum};
pub use engine::{EngineError, EngineOptions, ResampleLog, Run, SelectionRule};
pub use event::{Event, EventError, EventFamily};
pub use model::{FullScan, Model, NeighborScan, Searcher};
pub use space::{ProductSpace, SpaceError};

/// Relative tolerance used when comparing both sides of a criterion.
pub const REL_TOL: f64 = 1e-12;

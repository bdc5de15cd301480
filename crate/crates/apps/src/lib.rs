//! Applications of the resampling engines: Ramsey and hypergraph colorings,
//! non-repetitive colorings, Latin transversals, and partial k-SAT.

pub mod gen;
pub mod graph;
pub mod hypergraph;
pub mod nonrep;
pub mod perm;
pub mod ramsey;
pub mod sat;
pub mod verify;

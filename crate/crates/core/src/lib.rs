//! Coded MapReduce for multi-access distributed computing, built from
//! Steiner systems.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`subsets`]: lexicographic ranking of k-subsets of `[n]`.
//! - [`designs`]: `t-(Λ, α, m)` designs, their validation and a catalog.
//! - [`mra`]: MapReduce arrays built from a `t-(Λ, α, 1)` design, plus an
//!   independent validator.
//! - [`topology`]: mappers, reducers and output-function assignment.
//! - [`engine`]: bit-exact Map, Shuffle and Reduce phases with a centralized
//!   oracle.
//! - [`metrics`]: exact-rational loads and the comparison table.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is on and plain iterators otherwise.

pub mod designs;
pub mod engine;
pub mod metrics;
pub mod mra;
pub mod par;
pub mod subsets;
pub mod topology;

pub use designs::{catalog, catalog_design, Design};
pub use engine::{simulate, SimConfig, SimulationRun};
pub use mra::{build_mra, validate_mra, Mra};
pub use par::Exec;
pub use subsets::KSubset;
pub use topology::{derive_topology, MadcTopology};

//! Threshold activation on directed social graphs.
//!
//! The crate is `no_std` (it needs `alloc`). It holds the algorithmic core:
//! graphs and traversals, triggering-model and external-influence sampling,
//! exact small-instance oracles, bottom-k reachability sketches, the STAB
//! greedy and the Monte Carlo baselines. File formats, parallel drivers and
//! the command line live in the `stab` crate.
#![no_std]
extern crate alloc;

pub mod baselines;
pub mod error;
pub mod exact;
pub mod graph;
pub mod influence;
pub mod rng;
pub mod sketch;
pub mod stab;

pub use error::{Result, TapError};
pub use graph::{DirectedGraph, NodeId, NodeSet, Traversal};

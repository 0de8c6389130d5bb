//! Reduction of maximum weighted matching (MWM) to the largest-cardinality
//! matching problem in the CONGEST model.
//!
//! The crate has five parts:
//!
//! * [`rational`] and [`graph`]: exact rational arithmetic, graph/matching
//!   domain types, and brute-force matching oracles used as ground truth.
//! * [`reduce`]: the sequential reference implementation of the weight
//!   transforms (geometric rounding, raise/merge of the smallest weight
//!   class) and the two reduction algorithms, with a full transform trace.
//! * [`congest`]: a deterministic synchronous message-passing simulator with
//!   per-message bit accounting.
//! * [`protocol`]: the constant-round distributed reduction as a node
//!   program, the local epsilon schedule, and pluggable cardinality oracles.
//! * [`harness`]: instance I/O, generators, the end-to-end pipeline with
//!   certificate verification, and batch sweeps.

pub mod congest;
pub mod graph;
pub mod harness;
pub mod protocol;
pub mod rational;
pub mod reduce;

mod error;

pub use error::{Error, Result};

//! Discrete-event simulation of asynchronous gossip optimization.
//!
//! The library simulates pairwise dual coordinate methods on a communication
//! graph under three models of communication:
//!
//! - synchronous rounds (every `tau_max` time units, all nodes average),
//! - the Poisson point process model (each edge activates at the ticks of an
//!   independent Poisson clock),
//! - the refined loss network model (nodes engaged in an exchange are locked
//!   for its duration; an initiator first runs a busy-check costing an
//!   epsilon fraction of the exchange delay).
//!
//! Two algorithms drive the updates: the plain coordinate descent method on
//! the dual (pairwise averaging for quadratics) and its continuously
//! accelerated variant, which mixes an iterate/momentum pair through a
//! closed-form contraction between activations.
//!
//! The `analysis` module carries the spectral-gap rate calculators, the
//! loss-network constants, assumption checkers and fitting helpers used by
//! the verification harness; `graph` and `objective` hold the immutable
//! problem data.

pub mod analysis;
pub mod dualcore;
pub mod engine;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod objective;
pub mod rng;

pub use error::{Error, Result};

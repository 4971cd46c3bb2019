//! Rate regions for partially cooperative relay broadcast channels.
//!
//! * [`info`]: entropies and conditional mutual informations on finite joints.
//! * [`channel`]: channel laws, file format, builders, structure checks.
//! * [`polytope`]: exact symbolic inequality systems, Fourier-Motzkin
//!   elimination, numeric instantiation and low-dimensional vertex enumeration.
//! * [`cloud`]: rate-point clouds with Pareto, Minkowski and dominance operations.
//! * [`region`]: per-theorem evaluators, closed forms, capacities and frontier search.
//! * [`sim`]: Monte Carlo simulation of the block-Markov random-coding schemes.

pub mod channel;
pub mod cloud;
pub mod error;
pub mod exec;
pub mod info;
pub mod polytope;
pub mod region;
pub mod sim;

pub use error::{RbcError, Result};

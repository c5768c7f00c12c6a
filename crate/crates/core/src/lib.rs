//! Sequential approximate Bayesian computation.
//!
//! The centerpiece is [`algorithms::run_apmc`], the adaptive population Monte
//! Carlo ABC sampler: it picks its own tolerance schedule from the α-quantile of
//! simulated distances, keeps particles across generations with
//! importance weights that stay on a common scale, and stops once the fraction of
//! fresh proposals beating the previous tolerance falls below `p_acc_min`.
//!
//! Four reference samplers are provided for comparison: rejection ABC, PMC with a
//! fixed tolerance schedule, replenishment SMC (RSMC) and adaptive SMC with
//! ESS-driven tolerances.
//!
//! The crate is `no_std` + `alloc`. The `std` feature (default) enables wall-clock
//! timing in traces and the `parallel` feature (default) fans simulator calls out
//! over a rayon pool. Results do not depend on either: every particle draws from
//! its own counter-keyed random stream.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod algorithms;
pub mod error;
pub mod kernels;
mod linalg;
pub mod metrics;
pub mod models;
mod parallel;
pub mod prior;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod simulator;
pub mod trace;
pub mod types;

pub use error::{Error, Result};
pub use prior::PriorSpec;
pub use rng::{RandomStream, StreamSeed};
pub use simulator::Simulator;
pub use trace::{IterationRecord, RunTrace};
pub use types::{ParamVector, Particle, WeightedSample};

use alloc::vec::Vec;

use crate::rng::RandomStream;
use crate::types::ParamVector;

/// A stochastic model reduced to its distance to the observed data.
///
/// Implementations must be pure given `(theta, rng)`: the same parameter vector
/// and stream state always produce the same distance. They are called
/// concurrently, each call with its own stream.
pub trait Simulator: Sync {
    /// Simulates once at `theta` and returns `ρ(S(x), S(y)) ≥ 0`.
    fn distance(&self, theta: &ParamVector, rng: &mut RandomStream) -> f64;

    /// Raw summary statistics of one simulation, when the model exposes them.
    fn statistics(&self, _theta: &ParamVector, _rng: &mut RandomStream) -> Option<Vec<f64>> {
        None
    }
}

impl<F> Simulator for F
where
    F: Fn(&ParamVector, &mut RandomStream) -> f64 + Sync,
{
    fn distance(&self, theta: &ParamVector, rng: &mut RandomStream) -> f64 {
        self(theta, rng)
    }
}

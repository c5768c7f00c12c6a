//! One-parameter mixture model with a closed-form posterior.
//!
//! `x | θ ~ ½ N(θ, 1/100) + ½ N(θ, 1)`, observed `y = 0`, prior `U[-10, 10]`,
//! distance `|x − y|`. The posterior is proportional to `f(0 | θ)` on the prior
//! box.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::prior::PriorSpec;
use crate::quadrature::adaptive_simpson;
use crate::rng::RandomStream;
use crate::simulator::Simulator;
use crate::types::ParamVector;

pub const TOY_LOWER: f64 = -10.0;
pub const TOY_UPPER: f64 = 10.0;
pub const TOY_OBSERVED: f64 = 0.0;
const NARROW_SD: f64 = 0.1;
const WIDE_SD: f64 = 1.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// One draw of `|x − y|` at `theta`.
pub fn toy_simulate<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    let sd = if rng.random::<bool>() { NARROW_SD } else { WIDE_SD };
    let z: f64 = rng.sample(StandardNormal);
    libm::fabs(theta + sd * z - TOY_OBSERVED)
}

/// Unnormalized posterior `½ (10 φ(10 θ) + φ(θ))`.
pub fn toy_unnormalized(theta: f64) -> f64 {
    let narrow = theta / NARROW_SD;
    0.5 * INV_SQRT_2PI
        * (libm::exp(-0.5 * narrow * narrow) / NARROW_SD + libm::exp(-0.5 * theta * theta) / WIDE_SD)
}

/// The exact posterior density, normalized over the prior box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyPosterior {
    normalizer: f64,
}

impl ToyPosterior {
    pub fn new() -> Self {
        let normalizer = adaptive_simpson(toy_unnormalized, TOY_LOWER, TOY_UPPER, 64, 1e-14);
        Self { normalizer }
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn density(&self, theta: f64) -> f64 {
        if (TOY_LOWER..=TOY_UPPER).contains(&theta) {
            toy_unnormalized(theta) / self.normalizer
        } else {
            0.0
        }
    }
}

impl Default for ToyPosterior {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyModel {
    posterior: ToyPosterior,
}

impl ToyModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prior(&self) -> PriorSpec {
        PriorSpec::uniform(TOY_LOWER, TOY_UPPER).expect("valid toy bounds")
    }

    pub fn posterior(&self) -> &ToyPosterior {
        &self.posterior
    }
}

impl Simulator for ToyModel {
    fn distance(&self, theta: &ParamVector, rng: &mut RandomStream) -> f64 {
        toy_simulate(theta[0], rng)
    }
}

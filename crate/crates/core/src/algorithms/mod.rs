//! The samplers. Each returns the final population together with a per-iteration
//! [`RunTrace`].
//!
//! Randomness comes from [`StreamSeed`] streams keyed by `(iteration, particle)`,
//! and simulator calls inside an iteration are evaluated concurrently with the
//! `parallel` feature; state updates between iterations are sequential, so
//! results are identical for any worker count.

mod apmc;
mod pmc;
mod rejection;
mod rsmc;
mod smc;

use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::prior::PriorSpec;
use crate::rng::RandomStream;
use crate::simulator::Simulator;
use crate::trace::RunTrace;
use crate::types::{ParamVector, WeightedSample};

pub use apmc::{run_apmc, ApmcConfig, InitialDesign};
pub use pmc::{run_pmc, PmcConfig};
pub use rejection::{run_rejection, RejectionConfig};
pub use rsmc::{mh_trials_for, run_rsmc, RsmcConfig};
pub use smc::{run_smc, SmcConfig};

#[cfg(doc)]
use crate::rng::StreamSeed;

/// Default cap on simulator calls per run.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// A finished run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Run {
    pub sample: WeightedSample,
    pub trace: RunTrace,
}

impl Run {
    pub fn simulations(&self) -> u64 {
        self.trace.total_simulations()
    }
}

/// `(Σ W)² / Σ W²`, i.e. `(Σ W²)⁻¹` for normalized weights.
pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeight);
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok(total * total / sq)
}

/// Fraction of freshly simulated distances strictly below `epsilon_prev`.
pub fn p_acc(new_distances: &[f64], epsilon_prev: f64) -> Result<f64> {
    if new_distances.is_empty() {
        return Err(Error::Empty);
    }
    let hits = new_distances.iter().filter(|&&d| d < epsilon_prev).count();
    Ok(hits as f64 / new_distances.len() as f64)
}

/// Shared simulation counter. Charges are checked against the cap as they
/// happen; whether a run exhausts the budget depends only on the total it
/// needs, not on scheduling.
pub(crate) struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            used: AtomicU64::new(0),
        }
    }

    pub fn charge(&self, k: u64) -> Result<()> {
        let before = self.used.fetch_add(k, Ordering::Relaxed);
        let after = before.saturating_add(k);
        if after > self.limit {
            Err(Error::BudgetExhausted {
                limit: self.limit,
                used: after,
            })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn checked_distance<S: Simulator + ?Sized>(
    simulator: &S,
    theta: &ParamVector,
    rng: &mut RandomStream,
) -> Result<f64> {
    let d = simulator.distance(theta, rng);
    if d >= 0.0 && !d.is_nan() {
        Ok(d)
    } else {
        Err(Error::config(alloc::format!("simulator returned invalid distance {d}")))
    }
}

/// Prior draws until `accept(ρ)` holds. Returns the accepted draw, its distance
/// and the number of simulations spent.
pub(crate) fn draw_until<S, F>(
    prior: &PriorSpec,
    simulator: &S,
    accept: F,
    rng: &mut RandomStream,
    budget: &Budget,
) -> Result<(ParamVector, f64, u64)>
where
    S: Simulator + ?Sized,
    F: Fn(f64) -> bool,
{
    let mut spent = 0;
    loop {
        budget.charge(1)?;
        spent += 1;
        let theta = prior.sample_one(rng);
        let rho = checked_distance(simulator, &theta, rng)?;
        if accept(rho) {
            return Ok((theta, rho, spent));
        }
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::config(alloc::format!("{name} must be positive, got {value}")))
    }
}

pub(crate) fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::config(alloc::format!("{name} must lie in (0, 1), got {value}")))
    }
}

pub(crate) fn check_population(n: usize) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::config("population size must be at least 2"))
    }
}

//! A four-parameter model observed through eight noisy summary statistics.
//!
//! Parameters live on `[0,4] × [0,1] × [0,1] × [0,0.5]`. Statistics come in two
//! "census years" `τ ∈ {1, 2}`, four per year:
//!
//! | channel        | value (noise-free)                                   | noise sd  | discrepancy |
//! |----------------|------------------------------------------------------|-----------|-------------|
//! | `population_τ` | `1000 + τ (50 θ₁ − 300 θ₄ + 60 θ₂ − 30)`             | `8 τ`     | L1          |
//! | `age_τ`        | softmax `[0.45θ₁ − 1.2τθ₄, 0.3 + 0.5θ₃, 0.2 + 0.1τ, 0.8θ₄ − 0.1θ₁]` | 0.01 per bin | χ² |
//! | `household_τ`  | softmax `[0.9θ₃ − 1.1θ₄, 0.6θ₂ + 0.2τ, 0.4 + 0.3θ₂θ₃]` | 0.01 per bin | χ² |
//! | `migration_τ`  | `25 τ (θ₂ − 0.5) + 6 θ₃ − 3`                          | `1.5`     | L1          |
//!
//! Noisy bin proportions are clipped at `1e-9` and renormalized. The observed
//! statistics are the noise-free values at [`SYNTHETIC_TRUTH`], so the posterior
//! concentrates around it. `θ₁` and `θ₄` enter the population channels through
//! `50 θ₁ − 300 θ₄`, which correlates them mildly.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::channels::{calibrate_channel_scales, infinity_norm_distance, Discrepancy, StatChannel};
use crate::error::Result;
use crate::prior::PriorSpec;
use crate::rng::{RandomStream, StreamSeed};
use crate::simulator::Simulator;
use crate::types::ParamVector;

pub const SYNTHETIC_BOUNDS: [(f64, f64); 4] = [(0.0, 4.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.5)];
pub const SYNTHETIC_TRUTH: [f64; 4] = [2.0, 0.4, 0.6, 0.2];
/// Prior-predictive pilot runs used to calibrate channel scales.
pub const CALIBRATION_RUNS: usize = 4000;
/// Fixed so every instance of the model carries the same scales.
pub const CALIBRATION_SEED: u64 = 0x5EED_CA11;

const POPULATION_SD: f64 = 8.0;
const SHARE_SD: f64 = 0.01;
const MIGRATION_SD: f64 = 1.5;

fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| libm::exp(l - top)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Noise-free statistics at `theta`, in channel order.
pub fn synthetic_mean_statistics(theta: &[f64]) -> Vec<Vec<f64>> {
    let (t1, t2, t3, t4) = (theta[0], theta[1], theta[2], theta[3]);
    let mut out = Vec::with_capacity(8);
    for tau in [1.0, 2.0] {
        out.push(alloc::vec![1000.0 + tau * (50.0 * t1 - 300.0 * t4 + 60.0 * t2 - 30.0)]);
        out.push(softmax(&[
            0.45 * t1 - 1.2 * tau * t4,
            0.3 + 0.5 * t3,
            0.2 + 0.1 * tau,
            0.8 * t4 - 0.1 * t1,
        ]));
        out.push(softmax(&[0.9 * t3 - 1.1 * t4, 0.6 * t2 + 0.2 * tau, 0.4 + 0.3 * t2 * t3]));
        out.push(alloc::vec![25.0 * tau * (t2 - 0.5) + 6.0 * t3 - 3.0]);
    }
    out
}

fn noisy_shares<R: Rng + ?Sized>(shares: &mut [f64], rng: &mut R) {
    for s in shares.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *s = (*s + SHARE_SD * z).max(1e-9);
    }
    let total: f64 = shares.iter().sum();
    for s in shares.iter_mut() {
        *s /= total;
    }
}

/// One noisy realization of the statistics at `theta`.
pub fn synthetic_statistics<R: Rng + ?Sized>(theta: &[f64], rng: &mut R) -> Vec<Vec<f64>> {
    let mut stats = synthetic_mean_statistics(theta);
    for (m, s) in stats.iter_mut().enumerate() {
        let tau = if m < 4 { 1.0 } else { 2.0 };
        match m % 4 {
            0 => s[0] += POPULATION_SD * tau * rng.sample::<f64, _>(StandardNormal),
            3 => s[0] += MIGRATION_SD * rng.sample::<f64, _>(StandardNormal),
            _ => noisy_shares(s, rng),
        }
    }
    stats
}

fn channel_layout() -> [(&'static str, Discrepancy); 8] {
    [
        ("population_1", Discrepancy::L1),
        ("age_1", Discrepancy::ChiSquare),
        ("household_1", Discrepancy::ChiSquare),
        ("migration_1", Discrepancy::L1),
        ("population_2", Discrepancy::L1),
        ("age_2", Discrepancy::ChiSquare),
        ("household_2", Discrepancy::ChiSquare),
        ("migration_2", Discrepancy::L1),
    ]
}

#[derive(Debug, Clone)]
pub struct SyntheticModel {
    prior: PriorSpec,
    channels: Vec<StatChannel>,
}

impl SyntheticModel {
    /// Observed data at [`SYNTHETIC_TRUTH`], channel scales calibrated with the
    /// fixed pilot seed.
    pub fn new() -> Result<Self> {
        Self::with_calibration(CALIBRATION_RUNS, StreamSeed::new(CALIBRATION_SEED, 0))
    }

    pub fn with_calibration(n_pilot: usize, seed: StreamSeed) -> Result<Self> {
        let prior = PriorSpec::new(SYNTHETIC_BOUNDS.to_vec())?;
        let observed = synthetic_mean_statistics(&SYNTHETIC_TRUTH);
        let mut channels: Vec<StatChannel> = channel_layout()
            .into_iter()
            .zip(observed)
            .map(|((name, kind), obs)| StatChannel::new(String::from(name), obs, kind))
            .collect();
        let scales = calibrate_channel_scales(
            &channels,
            &prior,
            |t, rng| synthetic_statistics(t, rng),
            n_pilot,
            seed,
        )?;
        for (c, s) in channels.iter_mut().zip(scales) {
            c.scale = s;
        }
        Ok(Self { prior, channels })
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn channels(&self) -> &[StatChannel] {
        &self.channels
    }

    pub fn truth(&self) -> ParamVector {
        ParamVector::from_finite(SYNTHETIC_TRUTH.to_vec())
    }
}

impl Simulator for SyntheticModel {
    fn distance(&self, theta: &ParamVector, rng: &mut RandomStream) -> f64 {
        let stats = synthetic_statistics(theta, rng);
        infinity_norm_distance(&self.channels, &stats).expect("eight channels")
    }

    fn statistics(&self, theta: &ParamVector, rng: &mut RandomStream) -> Option<Vec<f64>> {
        Some(synthetic_statistics(theta, rng).concat())
    }
}

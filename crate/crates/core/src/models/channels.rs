//! Summary-statistic channels combined with the infinity norm.
//!
//! Each channel compares a simulated statistic `S_m` to its observed value
//! `S'_m` with its own discrepancy, divides by a calibrated scale (the
//! prior-predictive standard deviation of that discrepancy) and the distance is
//! the largest normalized discrepancy.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::{RandomStream, StreamSeed};
use crate::types::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Discrepancy {
    /// `Σ |s − o|`.
    L1,
    /// `Σ (s − o)² / o` over bins with `o > 0`.
    ChiSquare,
}

impl Discrepancy {
    pub fn eval(self, simulated: &[f64], observed: &[f64]) -> f64 {
        match self {
            Discrepancy::L1 => simulated
                .iter()
                .zip(observed)
                .map(|(s, o)| libm::fabs(s - o))
                .sum(),
            Discrepancy::ChiSquare => simulated
                .iter()
                .zip(observed)
                .filter(|(_, &o)| o > 0.0)
                .map(|(s, o)| (s - o) * (s - o) / o)
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatChannel {
    pub name: String,
    pub observed: Vec<f64>,
    pub discrepancy: Discrepancy,
    /// Normalization scale, `> 0`.
    pub scale: f64,
}

impl StatChannel {
    pub fn new(name: impl Into<String>, observed: Vec<f64>, discrepancy: Discrepancy) -> Self {
        Self {
            name: name.into(),
            observed,
            discrepancy,
            scale: 1.0,
        }
    }

    pub fn raw(&self, simulated: &[f64]) -> Result<f64> {
        if simulated.len() != self.observed.len() {
            return Err(Error::DimensionMismatch {
                expected: self.observed.len(),
                got: simulated.len(),
            });
        }
        Ok(self.discrepancy.eval(simulated, &self.observed))
    }

    pub fn normalized(&self, simulated: &[f64]) -> Result<f64> {
        Ok(self.raw(simulated)? / self.scale)
    }
}

/// `max_m ρ_m(S_m, S'_m) / scale_m`.
pub fn infinity_norm_distance(channels: &[StatChannel], simulated: &[Vec<f64>]) -> Result<f64> {
    if channels.len() != simulated.len() {
        return Err(Error::DimensionMismatch {
            expected: channels.len(),
            got: simulated.len(),
        });
    }
    channels
        .iter()
        .zip(simulated)
        .try_fold(0.0f64, |acc, (c, s)| Ok(acc.max(c.normalized(s)?)))
}

/// Pilot runs for variance equalization.
///
/// Draws `n_pilot` parameters from the prior, simulates each once and returns, per
/// channel, the sample standard deviation of the raw discrepancy.
pub fn calibrate_channel_scales<F>(
    channels: &[StatChannel],
    prior: &PriorSpec,
    simulate: F,
    n_pilot: usize,
    seed: StreamSeed,
) -> Result<Vec<f64>>
where
    F: Fn(&ParamVector, &mut RandomStream) -> Vec<Vec<f64>> + Sync + Send,
{
    if n_pilot < 100 {
        return Err(Error::config("pilot sample must contain at least 100 runs"));
    }
    let raws: Vec<Result<Vec<f64>>> = map_indexed(n_pilot, |i| {
        let mut rng = seed.stream(0, i as u64);
        let theta = prior.sample_one(&mut rng);
        let stats = simulate(&theta, &mut rng);
        if stats.len() != channels.len() {
            return Err(Error::DimensionMismatch {
                expected: channels.len(),
                got: stats.len(),
            });
        }
        channels.iter().zip(&stats).map(|(c, s)| c.raw(s)).collect()
    });
    let raws: Vec<Vec<f64>> = raws.into_iter().collect::<Result<_>>()?;
    let n = n_pilot as f64;
    channels
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let mean = raws.iter().map(|r| r[m]).sum::<f64>() / n;
            let var = raws.iter().map(|r| (r[m] - mean) * (r[m] - mean)).sum::<f64>() / (n - 1.0);
            let sd = libm::sqrt(var);
            if sd > 0.0 && sd.is_finite() {
                Ok(sd)
            } else {
                Err(Error::ZeroSpread { name: c.name.clone() })
            }
        })
        .collect()
}

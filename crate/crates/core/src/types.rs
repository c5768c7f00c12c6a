//! Particles and weighted populations.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// A point in parameter space. Every coordinate is finite.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(dim) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { dim });
        }
        Ok(Self(values))
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(alloc::vec![value])
    }

    /// Callers guarantee finiteness (draws from finite kernels and boxes).
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One parameter vector with its importance weight and realized distance ρ.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Particle {
    pub theta: ParamVector,
    pub weight: f64,
    pub distance: f64,
}

impl Particle {
    pub fn new(theta: ParamVector, weight: f64, distance: f64) -> Self {
        debug_assert!(weight.is_finite() && weight >= 0.0, "weight {weight}");
        debug_assert!(distance >= 0.0, "distance {distance}");
        Self {
            theta,
            weight,
            distance,
        }
    }
}

/// A population at one tolerance level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeightedSample {
    pub particles: Vec<Particle>,
    pub epsilon: f64,
    pub iteration: usize,
}

impl WeightedSample {
    pub fn new(particles: Vec<Particle>, epsilon: f64, iteration: usize) -> Self {
        Self {
            particles,
            epsilon,
            iteration,
        }
    }

    /// Equal unit weights, as produced by rejection sampling.
    pub fn unweighted(thetas: Vec<ParamVector>) -> Self {
        let particles = thetas
            .into_iter()
            .map(|theta| Particle::new(theta, 1.0, 0.0))
            .collect();
        Self::new(particles, f64::INFINITY, 0)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles.first().map_or(0, |p| p.theta.dim())
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Weights divided by their sum. Fails when every weight is zero.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        if self.particles.is_empty() {
            return Err(Error::Empty);
        }
        let total = self.total_weight();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroWeight);
        }
        Ok(self.particles.iter().map(|p| p.weight / total).collect())
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.weight)
    }

    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.distance)
    }

    pub fn max_distance(&self) -> f64 {
        self.distances().fold(0.0, f64::max)
    }

    /// Checks that all thetas share one dimension.
    pub fn check_dim(&self) -> Result<usize> {
        let d = self.dim();
        for p in &self.particles {
            if p.theta.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.theta.dim(),
                });
            }
        }
        Ok(d)
    }
}

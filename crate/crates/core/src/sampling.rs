//! Randomized primitives shared by the samplers.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::prior::PriorSpec;
use crate::types::{ParamVector, Particle, WeightedSample};

/// Latin hypercube design over the prior box.
///
/// Each dimension is cut into `n` equal strata; every stratum receives exactly
/// one point, strata are permuted independently per dimension and the position
/// inside a stratum is uniform.
pub fn latin_hypercube<R: Rng + ?Sized>(
    prior: &PriorSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<ParamVector>> {
    if n == 0 {
        return Err(Error::config("latin hypercube size must be at least 1"));
    }
    let d = prior.dim();
    let mut coords = alloc::vec![0.0; n * d];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, &(lower, upper)) in prior.bounds().iter().enumerate() {
        strata.shuffle(rng);
        let width = (upper - lower) / n as f64;
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            coords[i * d + j] = lower + (s as f64 + u) * width;
        }
    }
    Ok(coords
        .chunks_exact(d)
        .map(|c| ParamVector::from_finite(c.to_vec()))
        .collect())
}

/// `Q(α) = inf{x ∈ X | F(x) ≥ α}` with `F(x) = #{x_k ≤ x} / n`.
///
/// Always returns a member of `values`; no interpolation.
pub fn alpha_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config("quantile level must lie in (0, 1]"));
    }
    if let Some(dim) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { dim });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Smallest count k with k/n ≥ α; the k-th order statistic is the infimum.
    let k = (1..=n)
        .find(|&k| k as f64 / n as f64 >= alpha)
        .unwrap_or(n);
    Ok(sorted[k - 1])
}

/// Draws indices with probability proportional to a weight vector.
#[derive(Debug, Clone)]
pub struct WeightedPicker {
    index: WeightedIndex<f64>,
}

impl WeightedPicker {
    pub fn new<I: IntoIterator<Item = f64>>(weights: I) -> Result<Self> {
        WeightedIndex::new(weights)
            .map(|index| Self { index })
            .map_err(|e| match e {
                rand::distr::weighted::Error::InvalidInput => Error::Empty,
                _ => Error::ZeroWeight,
            })
    }

    pub fn from_sample(sample: &WeightedSample) -> Result<Self> {
        Self::new(sample.weights())
    }

    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// One particle, chosen with probability `w_j / Σ w_k`.
pub fn weighted_pick<'a, R: Rng + ?Sized>(
    sample: &'a WeightedSample,
    rng: &mut R,
) -> Result<&'a Particle> {
    let picker = WeightedPicker::from_sample(sample)?;
    Ok(&sample.particles[picker.pick(rng)])
}

/// `n` draws with replacement, proportional to weight; output weights are `1/n`.
pub fn multinomial_resample<R: Rng + ?Sized>(
    sample: &WeightedSample,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Particle>> {
    Ok(multinomial_indices(sample.weights(), n, rng)?
        .into_iter()
        .map(|i| {
            let mut p = sample.particles[i].clone();
            p.weight = 1.0 / n as f64;
            p
        })
        .collect())
}

/// Indices of a multinomial resample of `weights`.
pub fn multinomial_indices<I, R>(weights: I, n: usize, rng: &mut R) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    let picker = WeightedPicker::new(weights)?;
    Ok((0..n).map(|_| picker.pick(rng)).collect())
}

/// Indices of the particles kept at tolerance `epsilon`: every distance `≤ epsilon`,
/// at most `keep` of them. Strictly-below particles always stay; when exact ties
/// at `epsilon` overflow the quota, the earliest tied particles win.
pub fn select_within(distances: &[f64], epsilon: f64, keep: usize) -> Vec<usize> {
    let below = distances.iter().filter(|&&d| d < epsilon).count();
    let mut tie_room = keep.saturating_sub(below);
    let mut chosen = Vec::with_capacity(keep.min(distances.len()));
    for (i, &d) in distances.iter().enumerate() {
        if d < epsilon {
            chosen.push(i);
        } else if d == epsilon && tie_room > 0 {
            chosen.push(i);
            tie_room -= 1;
        }
    }
    chosen.truncate(keep);
    chosen
}

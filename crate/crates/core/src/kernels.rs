//! Gaussian perturbation kernels and the importance weights that correct for
//! sampling from them instead of the prior.
//!
//! A kernel is built from a weighted population as twice its weighted
//! (co)variance. New particles are drawn by picking a parent in proportion to its
//! weight and perturbing it, so their density is the weight-mixture
//!
//! ```text
//! d(θ) = Σ_j (w_j / Σ_k w_k) · N(θ; θ_j, Σ)
//! ```
//!
//! and the bias-correcting weight is `π(θ) / d(θ)`. APMC keeps that ratio
//! unnormalized so particles from different generations share one scale.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::prior::PriorSpec;
use crate::types::{ParamVector, WeightedSample};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Weighted mean and biased weighted covariance (`Σ w̄ (θ−μ)(θ−μ)ᵀ`).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Row-major `d × d`.
    pub covariance: Vec<f64>,
}

impl Moments {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance[i * self.dim() + i]
    }
}

pub fn weighted_moments(sample: &WeightedSample) -> Result<Moments> {
    let d = sample.check_dim()?;
    let w = sample.normalized_weights()?;
    let mut mean = alloc::vec![0.0; d];
    for (p, &wi) in sample.particles.iter().zip(&w) {
        for (m, x) in mean.iter_mut().zip(p.theta.iter()) {
            *m += wi * x;
        }
    }
    let mut covariance = alloc::vec![0.0; d * d];
    let mut centered = alloc::vec![0.0; d];
    for (p, &wi) in sample.particles.iter().zip(&w) {
        for ((c, x), m) in centered.iter_mut().zip(p.theta.iter()).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            for j in 0..=i {
                covariance[i * d + j] += wi * centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            covariance[j * d + i] = covariance[i * d + j];
        }
    }
    Ok(Moments { mean, covariance })
}

/// Per-dimension independent kernel or full-covariance kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KernelVariant {
    /// Diagonal variances only; in one dimension this is the scalar
    /// `σ⁻¹ φ(σ⁻¹ (θ − θ_j))` form.
    Diagonal,
    #[default]
    Full,
}

/// A centered Gaussian perturbation with covariance `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    variant: KernelVariant,
    dim: usize,
    /// Row-major `d × d`; zero off-diagonal for the diagonal variant.
    scale: Vec<f64>,
    /// Cholesky factor of `scale` (per-dimension σ on the diagonal for the
    /// diagonal variant).
    factor: Vec<f64>,
    /// `-½ (d ln 2π + ln |scale|)`.
    log_norm: f64,
}

impl Kernel {
    /// Kernel with an explicit covariance; must be symmetric positive definite.
    pub fn new(variant: KernelVariant, scale: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || scale.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: scale.len(),
            });
        }
        let scale = match variant {
            KernelVariant::Full => scale,
            KernelVariant::Diagonal => {
                let mut diag = alloc::vec![0.0; dim * dim];
                for i in 0..dim {
                    diag[i * dim + i] = scale[i * dim + i];
                }
                diag
            }
        };
        for i in 0..dim {
            for j in 0..i {
                if scale[i * dim + j] != scale[j * dim + i] {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let factor = linalg::cholesky(&scale, dim)?;
        let log_det: f64 = (0..dim).map(|i| 2.0 * libm::log(factor[i * dim + i])).sum();
        Ok(Self {
            variant,
            dim,
            scale,
            factor,
            log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
        })
    }

    /// One-dimensional kernel with variance `variance`.
    pub fn univariate(variance: f64) -> Result<Self> {
        Self::new(KernelVariant::Diagonal, alloc::vec![variance], 1)
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major covariance.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Draw from `N(center, scale)`.
    pub fn perturb<R: Rng + ?Sized>(&self, center: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        if center.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: center.dim(),
            });
        }
        let d = self.dim;
        let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut out = alloc::vec![0.0; d];
        linalg::lower_mul(&self.factor, d, &z, &mut out);
        for (o, c) in out.iter_mut().zip(center.iter()) {
            *o += c;
        }
        Ok(ParamVector::from_finite(out))
    }

    /// `N(x; center, scale)`.
    pub fn density(&self, x: &[f64], center: &[f64]) -> f64 {
        let d = self.dim;
        if d == 1 && self.variant == KernelVariant::Diagonal {
            let sigma = self.factor[0];
            let z = (x[0] - center[0]) / sigma;
            return INV_SQRT_2PI * libm::exp(-0.5 * z * z) / sigma;
        }
        match self.variant {
            KernelVariant::Diagonal => {
                let mut q = 0.0;
                for i in 0..d {
                    let z = (x[i] - center[i]) / self.factor[i * d + i];
                    q += z * z;
                }
                libm::exp(self.log_norm - 0.5 * q)
            }
            KernelVariant::Full => {
                let mut r: [f64; 8] = [0.0; 8];
                let mut heap;
                let buf: &mut [f64] = if d <= 8 {
                    &mut r[..d]
                } else {
                    heap = alloc::vec![0.0; d];
                    &mut heap
                };
                for i in 0..d {
                    buf[i] = x[i] - center[i];
                }
                linalg::forward_substitute(&self.factor, d, buf);
                let q: f64 = buf.iter().map(|v| v * v).sum();
                libm::exp(self.log_norm - 0.5 * q)
            }
        }
    }
}

/// Kernel with covariance twice the weighted covariance of `sample`.
///
/// Fails with [`Error::DegenerateKernel`] when any dimension has zero weighted
/// variance.
pub fn kernel_from_sample(sample: &WeightedSample, variant: KernelVariant) -> Result<Kernel> {
    let m = weighted_moments(sample)?;
    let d = m.dim();
    if let Some(dim) = (0..d).find(|&i| !(m.variance(i) > 0.0)) {
        return Err(Error::DegenerateKernel { dim });
    }
    let scale: Vec<f64> = m.covariance.iter().map(|c| 2.0 * c).collect();
    Kernel::new(variant, scale, d)
}

/// The weight-mixture of kernels centered on a previous population.
#[derive(Debug, Clone)]
pub struct MixtureProposal<'a> {
    sample: &'a WeightedSample,
    weights: Vec<f64>,
    kernel: &'a Kernel,
}

impl<'a> MixtureProposal<'a> {
    pub fn new(sample: &'a WeightedSample, kernel: &'a Kernel) -> Result<Self> {
        let d = sample.check_dim()?;
        if d != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: d,
            });
        }
        Ok(Self {
            sample,
            weights: sample.normalized_weights()?,
            kernel,
        })
    }

    pub fn density(&self, theta: &[f64]) -> f64 {
        self.sample
            .particles
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| w * self.kernel.density(theta, &p.theta))
            .sum()
    }

    /// `π(θ) / d(θ)`, unnormalized.
    pub fn importance_weight(&self, theta: &[f64], prior: &PriorSpec) -> ImportanceWeight {
        let pi = prior.density_unchecked(theta);
        if pi == 0.0 {
            return ImportanceWeight::OutsidePrior;
        }
        let d = self.density(theta);
        if d > 0.0 {
            let w = pi / d;
            if w.is_finite() {
                return ImportanceWeight::Finite(w);
            }
        }
        ImportanceWeight::Underflow
    }
}

/// Outcome of an importance-weight evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImportanceWeight {
    Finite(f64),
    /// `π(θ) = 0`.
    OutsidePrior,
    /// The proposal density underflowed to zero; the particle is given weight 0.
    Underflow,
}

impl ImportanceWeight {
    pub fn value(self) -> f64 {
        match self {
            ImportanceWeight::Finite(w) => w,
            ImportanceWeight::OutsidePrior | ImportanceWeight::Underflow => 0.0,
        }
    }

    pub fn underflowed(self) -> bool {
        matches!(self, ImportanceWeight::Underflow)
    }
}

/// `d(θ) = Σ_j w̄_j N(θ; θ_j, Σ)`.
pub fn proposal_density(theta: &ParamVector, sample: &WeightedSample, kernel: &Kernel) -> Result<f64> {
    let mix = MixtureProposal::new(sample, kernel)?;
    if theta.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: theta.dim(),
        });
    }
    Ok(mix.density(theta))
}

/// APMC weight `π(θ) / d(θ)`, kept on the absolute scale.
pub fn apmc_weight(
    theta: &ParamVector,
    sample: &WeightedSample,
    kernel: &Kernel,
    prior: &PriorSpec,
) -> Result<ImportanceWeight> {
    prior.check_dim(theta)?;
    let mix = MixtureProposal::new(sample, kernel)?;
    Ok(mix.importance_weight(theta, prior))
}

/// PMC weight: the same ratio, before the caller's per-generation renormalization.
pub fn pmc_weight(
    theta: &ParamVector,
    sample: &WeightedSample,
    kernel: &Kernel,
    prior: &PriorSpec,
) -> Result<ImportanceWeight> {
    apmc_weight(theta, sample, kernel, prior)
}

/// Scales `weights` in place to sum to one.
pub fn normalize(weights: &mut [f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeight);
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

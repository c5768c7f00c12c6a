//! Product-of-uniforms priors.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::ParamVector;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PriorSpec {
    bounds: Vec<(f64, f64)>,
    density: f64,
}

impl PriorSpec {
    /// One `(lower, upper)` pair per dimension; `lower < upper` everywhere.
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Empty);
        }
        for (dim, &(lower, upper)) in bounds.iter().enumerate() {
            if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                return Err(Error::InvalidBounds { dim, lower, upper });
            }
        }
        let volume: f64 = bounds.iter().map(|(l, u)| u - l).product();
        Ok(Self {
            bounds,
            density: 1.0 / volume,
        })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(alloc::vec![(lower, upper)])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        1.0 / self.density
    }

    /// Closed box membership.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.bounds)
                .all(|(&x, &(l, u))| x >= l && x <= u)
    }

    /// `1/∏(upper − lower)` inside the box, `0` outside.
    pub fn density(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        Ok(self.density_unchecked(theta))
    }

    pub(crate) fn density_unchecked(&self, theta: &[f64]) -> f64 {
        if self.contains(theta) {
            self.density
        } else {
            0.0
        }
    }

    pub fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        ParamVector::from_finite(
            self.bounds
                .iter()
                .map(|&(l, u)| l + rng.random::<f64>() * (u - l))
                .collect(),
        )
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<ParamVector>> {
        if n == 0 {
            return Err(Error::config("prior sample size must be at least 1"));
        }
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;
    use alloc::vec;

    #[test]
    fn density_inside_and_outside() {
        let p = PriorSpec::uniform(-10.0, 10.0).unwrap();
        assert_eq!(p.density(&[0.0]).unwrap(), 0.05);
        assert_eq!(p.density(&[11.0]).unwrap(), 0.0);
    }

    #[test]
    fn four_dimensional_box_density() {
        let p = PriorSpec::new(vec![(0.0, 4.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.5)]).unwrap();
        assert_eq!(p.density(&[1.0, 0.5, 0.5, 0.1]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = PriorSpec::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            p.density(&[0.5, 0.5]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(matches!(
            PriorSpec::uniform(0.0, 0.0),
            Err(Error::InvalidBounds { dim: 0, .. })
        ));
        assert!(PriorSpec::new(vec![(0.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn draws_stay_in_box() {
        let p = PriorSpec::new(vec![(0.0, 4.0), (-1.0, 1.0)]).unwrap();
        let mut rng = StreamSeed::new(1, 0).stream(0, 0);
        let draws = p.sample(5, &mut rng).unwrap();
        assert_eq!(draws.len(), 5);
        assert!(draws.iter().all(|t| p.contains(t)));
    }

    #[test]
    fn empirical_mean_near_center() {
        // 3σ/√n with σ = 20/√12 and n = 1000 is about 0.55; the bound is 1.0.
        let p = PriorSpec::uniform(-10.0, 10.0).unwrap();
        let mut rng = StreamSeed::new(2, 0).stream(0, 0);
        let draws = p.sample(1000, &mut rng).unwrap();
        let mean = draws.iter().map(|t| t[0]).sum::<f64>() / 1000.0;
        assert!(mean.abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn density_integrates_to_one_in_two_dimensions() {
        let p = PriorSpec::new(vec![(-1.0, 2.0), (0.0, 0.5)]).unwrap();
        // Midpoint rule on a grid padded beyond the box.
        let (ax, bx, ay, by) = (-2.0, 3.0, -0.25, 0.75);
        let n = 1000;
        let (hx, hy) = ((bx - ax) / n as f64, (by - ay) / n as f64);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = ax + (i as f64 + 0.5) * hx;
                let y = ay + (j as f64 + 0.5) * hy;
                total += p.density(&[x, y]).unwrap() * hx * hy;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}

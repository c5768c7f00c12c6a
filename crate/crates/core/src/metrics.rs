//! Posterior-quality and degeneracy diagnostics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::WeightedSample;

/// Regular grid over a box: `bins[j]` equal cells along dimension `j`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub bins: Vec<usize>,
}

impl GridSpec {
    pub fn new(bounds: Vec<(f64, f64)>, bins: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != bins.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: bins.len(),
            });
        }
        for (dim, (&(lower, upper), &b)) in bounds.iter().zip(&bins).enumerate() {
            if !(lower < upper) || b == 0 {
                return Err(Error::InvalidBounds { dim, lower, upper });
            }
        }
        Ok(Self { bounds, bins })
    }

    /// Same bin count along every dimension of `bounds`.
    pub fn uniform(bounds: Vec<(f64, f64)>, bins: usize) -> Result<Self> {
        let n = bounds.len();
        Self::new(bounds, alloc::vec![bins; n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn cells(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn width(&self, j: usize) -> f64 {
        let (l, u) = self.bounds[j];
        (u - l) / self.bins[j] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    /// Row-major cell index of `x`; the upper face belongs to the last cell.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut index = 0;
        for (j, &v) in x.iter().enumerate() {
            let (l, u) = self.bounds[j];
            if !(v >= l && v <= u) {
                return Err(Error::OutsideGrid { dim: j, value: v });
            }
            let k = (((v - l) / self.width(j)) as usize).min(self.bins[j] - 1);
            index = index * self.bins[j] + k;
        }
        Ok(index)
    }

    /// Per-dimension bin indices of a row-major cell index.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            out[j] = index % self.bins[j];
            index /= self.bins[j];
        }
        out
    }

    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        self.unravel(index)
            .iter()
            .enumerate()
            .map(|(j, &k)| self.bounds[j].0 + (k as f64 + 0.5) * self.width(j))
            .collect()
    }
}

/// Piecewise-constant density on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistogramGrid {
    pub spec: GridSpec,
    /// Density per unit volume, row-major.
    pub values: Vec<f64>,
}

impl HistogramGrid {
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }
}

/// Cell density = (weight in cell / total weight) / cell volume.
///
/// Zero-weight particles are ignored; a weighted particle outside the grid is an
/// error.
pub fn weighted_histogram(sample: &WeightedSample, spec: &GridSpec) -> Result<HistogramGrid> {
    let total = sample.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let mut values = alloc::vec![0.0; spec.cells()];
    for p in sample.particles.iter().filter(|p| p.weight > 0.0) {
        values[spec.locate(&p.theta)?] += p.weight;
    }
    let scale = 1.0 / (total * spec.cell_volume());
    for v in &mut values {
        *v *= scale;
    }
    Ok(HistogramGrid {
        spec: spec.clone(),
        values,
    })
}

/// Average of `density` over each cell, by a midpoint rule with `subpoints`
/// nodes per cell per dimension.
pub fn cell_averages<F: Fn(&[f64]) -> f64>(spec: &GridSpec, density: F, subpoints: usize) -> HistogramGrid {
    let d = spec.dim();
    let sub = subpoints.max(1);
    let nodes = sub.pow(d as u32);
    let mut x = alloc::vec![0.0; d];
    let values = (0..spec.cells())
        .map(|cell| {
            let bins = spec.unravel(cell);
            let mut acc = 0.0;
            for node in 0..nodes {
                let mut rem = node;
                for j in (0..d).rev() {
                    let s = rem % sub;
                    rem /= sub;
                    let w = spec.width(j);
                    x[j] = spec.bounds[j].0 + bins[j] as f64 * w + (s as f64 + 0.5) * w / sub as f64;
                }
                acc += density(&x);
            }
            acc / nodes as f64
        })
        .collect();
    HistogramGrid {
        spec: spec.clone(),
        values,
    }
}

/// Default midpoint nodes per cell per dimension for [`l2_distance`].
pub const L2_SUBPOINTS: usize = 32;

/// `sqrt(Σ_cells (h − p̄)² · cell volume)` where `p̄` is the exact density's
/// cell average.
pub fn l2_distance<F: Fn(&[f64]) -> f64>(h: &HistogramGrid, exact: F) -> f64 {
    let reference = cell_averages(&h.spec, exact, L2_SUBPOINTS);
    l2_between(h, &reference).expect("same grid")
}

/// Discretized L2 distance between two histograms on one grid.
pub fn l2_between(a: &HistogramGrid, b: &HistogramGrid) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::DimensionMismatch {
            expected: a.spec.cells(),
            got: b.spec.cells(),
        });
    }
    let ss: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(libm::sqrt(ss * a.spec.cell_volume()))
}

/// Number of bitwise-distinct parameter vectors.
pub fn distinct_count(sample: &WeightedSample) -> usize {
    let mut keys: Vec<Vec<u64>> = sample
        .particles
        .iter()
        .map(|p| p.theta.iter().map(|x| x.to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// `n_sims · L2²`; lower is better.
pub fn efficiency_criterion(n_sims: u64, l2: f64) -> f64 {
    n_sims as f64 * l2 * l2
}

//! Exact toy posterior on a histogram grid, for plotting against run output.

use apmc_core::metrics::{GridSpec, L2_SUBPOINTS};
use apmc_core::models::BuiltinModel;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub bin_center: f64,
    /// Cell-averaged exact density.
    pub density: f64,
}

/// `(bin center, exact density)` for `bins` equal cells over the prior box.
pub fn export_exact_posterior(model: &BuiltinModel, bins: usize) -> HarnessResult<Vec<PosteriorRow>> {
    let Some(post) = model.exact_posterior() else {
        return Err(HarnessError::config(format!(
            "model `{}` has no closed-form posterior",
            model.name()
        )));
    };
    if bins == 0 {
        return Err(HarnessError::config("bins must be positive"));
    }
    let spec = GridSpec::uniform(model.prior().bounds().to_vec(), bins)?;
    let averages = apmc_core::metrics::cell_averages(&spec, |x| post.density(x[0]), L2_SUBPOINTS);
    Ok(averages
        .values
        .iter()
        .enumerate()
        .map(|(i, &density)| PosteriorRow {
            bin_center: spec.cell_center(i)[0],
            density,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_posterior_table() {
        let toy = BuiltinModel::by_name("toy").unwrap();
        let rows = export_exact_posterior(&toy, 300).unwrap();
        assert_eq!(rows.len(), 300);
        let width = 20.0 / 300.0;
        let mass: f64 = rows.iter().map(|r| r.density * width).sum();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        for (a, b) in rows.iter().zip(rows.iter().rev()) {
            assert!((a.bin_center + b.bin_center).abs() < 1e-12);
            assert!((a.density - b.density).abs() <= 1e-12 * a.density.max(1e-300));
        }
    }

    #[test]
    fn synthetic_model_is_unsupported() {
        let m = BuiltinModel::by_name("synthetic4").unwrap();
        assert!(matches!(export_exact_posterior(&m, 10), Err(HarnessError::Config(_))));
    }
}

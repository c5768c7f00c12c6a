//! Built-in simulators and the summary-statistic distance.

pub mod channels;
pub mod synthetic;
pub mod toy;

use crate::error::{Error, Result};
use crate::metrics::GridSpec;
use crate::prior::PriorSpec;
use crate::rng::RandomStream;
use crate::simulator::Simulator;
use crate::types::ParamVector;

pub use channels::{calibrate_channel_scales, infinity_norm_distance, Discrepancy, StatChannel};
pub use synthetic::SyntheticModel;
pub use toy::{toy_simulate, ToyModel, ToyPosterior};

/// Registry names accepted by [`BuiltinModel::by_name`].
pub const MODEL_NAMES: [&str; 2] = ["toy", "synthetic4"];

/// Toy-example histogram resolution.
pub const TOY_BINS: usize = 300;
/// Per-dimension bins for the multi-parameter model (`4⁴ = 256` cells).
pub const SYNTHETIC_BINS: usize = 4;

#[derive(Debug, Clone)]
pub enum BuiltinModel {
    Toy(ToyModel),
    Synthetic(SyntheticModel),
}

impl BuiltinModel {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "toy" => Ok(BuiltinModel::Toy(ToyModel::new())),
            "synthetic4" => Ok(BuiltinModel::Synthetic(SyntheticModel::new()?)),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown model `{other}` (expected one of {MODEL_NAMES:?})"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::Toy(_) => "toy",
            BuiltinModel::Synthetic(_) => "synthetic4",
        }
    }

    pub fn prior(&self) -> PriorSpec {
        match self {
            BuiltinModel::Toy(m) => m.prior(),
            BuiltinModel::Synthetic(m) => m.prior().clone(),
        }
    }

    /// Grid used for the L2 quality metric.
    pub fn grid(&self) -> GridSpec {
        let (bounds, bins) = match self {
            BuiltinModel::Toy(_) => (self.prior().bounds().to_vec(), TOY_BINS),
            BuiltinModel::Synthetic(_) => (self.prior().bounds().to_vec(), SYNTHETIC_BINS),
        };
        GridSpec::uniform(bounds, bins).expect("prior box is a valid grid")
    }

    /// The exact posterior, when known in closed form.
    pub fn exact_posterior(&self) -> Option<ToyPosterior> {
        match self {
            BuiltinModel::Toy(m) => Some(*m.posterior()),
            BuiltinModel::Synthetic(_) => None,
        }
    }
}

impl Simulator for BuiltinModel {
    fn distance(&self, theta: &ParamVector, rng: &mut RandomStream) -> f64 {
        match self {
            BuiltinModel::Toy(m) => m.distance(theta, rng),
            BuiltinModel::Synthetic(m) => m.distance(theta, rng),
        }
    }

    fn statistics(&self, theta: &ParamVector, rng: &mut RandomStream) -> Option<alloc::vec::Vec<f64>> {
        match self {
            BuiltinModel::Toy(_) => None,
            BuiltinModel::Synthetic(m) => m.statistics(theta, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        for name in MODEL_NAMES {
            assert_eq!(BuiltinModel::by_name(name).unwrap().name(), name);
        }
        assert!(matches!(BuiltinModel::by_name("simvillages"), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn grids() {
        assert_eq!(BuiltinModel::by_name("toy").unwrap().grid().cells(), 300);
        assert_eq!(BuiltinModel::by_name("synthetic4").unwrap().grid().cells(), 256);
    }
}

//! Per-iteration run records.

use alloc::string::String;
use alloc::vec::Vec;

/// One row of a run's history.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub iteration: usize,
    pub epsilon: f64,
    /// `p_acc` for APMC and RSMC, accepted/simulated for rejection and PMC,
    /// MH acceptance rate for SMC.
    pub acceptance: f64,
    /// Cumulative simulator calls up to and including this iteration.
    pub simulations: u64,
    pub distinct: usize,
    pub ess: f64,
    pub population: usize,
    /// Seconds since the start of the run; zero without the `std` feature.
    pub wall_time: f64,
    /// RSMC: MH trials per replenished particle used in this round.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub mh_trials: Option<u64>,
    /// RSMC: trial count computed for the next round.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub next_mh_trials: Option<u64>,
    /// RSMC: no move accepted, trial count left unchanged.
    #[cfg_attr(feature = "serde", serde(default))]
    pub stagnant: bool,
    /// SMC: population resampled in this iteration.
    #[cfg_attr(feature = "serde", serde(default))]
    pub resampled: bool,
    /// SMC: MH moves attempted in this iteration.
    #[cfg_attr(feature = "serde", serde(default))]
    pub moves: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn total_simulations(&self) -> u64 {
        self.records.last().map_or(0, |r| r.simulations)
    }

    pub fn epsilons(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.epsilon)
    }

    /// `ε_t ≤ ε_{t-1}` along the whole trace.
    pub fn epsilon_non_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].epsilon <= w[0].epsilon)
    }

    pub fn simulations_strictly_increasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].simulations > w[0].simulations)
    }

    pub(crate) fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Elapsed-seconds clock that degrades to zero without `std`.
pub(crate) struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

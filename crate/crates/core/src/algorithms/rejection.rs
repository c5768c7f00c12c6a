use alloc::vec::Vec;

use super::{check_population, check_positive, draw_until, Budget, Run, DEFAULT_BUDGET};
use crate::error::Result;
use crate::metrics::distinct_count;
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::StreamSeed;
use crate::simulator::Simulator;
use crate::trace::{IterationRecord, RunTrace, Stopwatch};
use crate::types::{Particle, WeightedSample};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RejectionConfig {
    pub n: usize,
    pub epsilon: f64,
    pub seed: StreamSeed,
    pub budget: u64,
}

impl RejectionConfig {
    pub fn new(n: usize, epsilon: f64) -> Self {
        Self {
            n,
            epsilon,
            seed: StreamSeed::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_population(self.n)?;
        check_positive("epsilon", self.epsilon)
    }
}

/// Plain rejection ABC: `n` prior draws with `ρ < ε`, unit weights.
pub fn run_rejection<S: Simulator + ?Sized>(
    prior: &PriorSpec,
    simulator: &S,
    config: &RejectionConfig,
) -> Result<Run> {
    config.validate()?;
    let clock = Stopwatch::start();
    let budget = Budget::new(config.budget);
    let eps = config.epsilon;
    let draws = map_indexed(config.n, |i| {
        let mut rng = config.seed.stream(1, i as u64);
        draw_until(prior, simulator, |rho| rho < eps, &mut rng, &budget)
    });
    let draws: Vec<_> = draws.into_iter().collect::<Result<_>>()?;
    let simulations: u64 = draws.iter().map(|d| d.2).sum();
    let particles = draws
        .into_iter()
        .map(|(theta, rho, _)| Particle::new(theta, 1.0, rho))
        .collect();
    let sample = WeightedSample::new(particles, eps, 1);
    let mut trace = RunTrace::default();
    trace.records.push(IterationRecord {
        iteration: 1,
        epsilon: eps,
        acceptance: config.n as f64 / simulations as f64,
        simulations,
        distinct: distinct_count(&sample),
        ess: config.n as f64,
        population: config.n,
        wall_time: clock.seconds(),
        ..Default::default()
    });
    Ok(Run { sample, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::models::ToyModel;

    #[test]
    fn infinite_tolerance_accepts_everything() {
        let toy = ToyModel::new();
        let run = run_rejection(&toy.prior(), &toy, &RejectionConfig::new(200, f64::INFINITY)).unwrap();
        assert_eq!(run.simulations(), 200);
        assert_eq!(run.sample.len(), 200);
        assert!(run.sample.particles.iter().all(|p| p.weight == 1.0));
    }

    #[test]
    fn accepted_particles_beat_tolerance() {
        let toy = ToyModel::new();
        let run = run_rejection(&toy.prior(), &toy, &RejectionConfig::new(300, 0.5)).unwrap();
        assert!(run.sample.particles.iter().all(|p| p.distance < 0.5));
        assert!(run.simulations() >= 300);
    }

    #[test]
    fn unreachable_tolerance_hits_budget() {
        let prior = PriorSpec::uniform(0.0, 1.0).unwrap();
        let far = |_: &crate::ParamVector, _: &mut crate::RandomStream| 5.0;
        let mut cfg = RejectionConfig::new(10, 1.0);
        cfg.budget = 1000;
        assert!(matches!(
            run_rejection(&prior, &far, &cfg),
            Err(Error::BudgetExhausted { limit: 1000, .. })
        ));
    }
}

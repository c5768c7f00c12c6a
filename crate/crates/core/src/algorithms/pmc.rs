//! Population Monte Carlo ABC with a fixed tolerance schedule.

use alloc::format;
use alloc::vec::Vec;

use super::{check_population, checked_distance, draw_until, ess, Budget, Run, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::kernels::{kernel_from_sample, normalize, KernelVariant, MixtureProposal};
use crate::metrics::distinct_count;
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::StreamSeed;
use crate::sampling::WeightedPicker;
use crate::simulator::Simulator;
use crate::trace::{IterationRecord, RunTrace, Stopwatch};
use crate::types::{Particle, WeightedSample};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PmcConfig {
    pub n: usize,
    /// `ε_1 ≥ … ≥ ε_T`.
    pub schedule: Vec<f64>,
    pub kernel: KernelVariant,
    pub seed: StreamSeed,
    pub budget: u64,
}

impl PmcConfig {
    pub fn new(n: usize, schedule: Vec<f64>) -> Self {
        Self {
            n,
            schedule,
            kernel: KernelVariant::default(),
            seed: StreamSeed::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    /// `count` tolerances spaced evenly on a log scale from `first` to `last`.
    pub fn geometric_schedule(first: f64, last: f64, count: usize) -> Result<Vec<f64>> {
        if !(first >= last && last > 0.0 && first.is_finite()) || count == 0 {
            return Err(Error::config(format!(
                "need first >= last > 0 and count >= 1, got {first}, {last}, {count}"
            )));
        }
        if count == 1 {
            return Ok(alloc::vec![last]);
        }
        let ratio = libm::log(last / first) / (count - 1) as f64;
        let mut out: Vec<f64> = (0..count).map(|k| first * libm::exp(ratio * k as f64)).collect();
        out[0] = first;
        out[count - 1] = last;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        check_population(self.n)?;
        if self.schedule.is_empty() {
            return Err(Error::config("tolerance schedule is empty"));
        }
        if !self.schedule.iter().all(|&e| e > 0.0 && !e.is_nan()) {
            return Err(Error::config("tolerances must be positive"));
        }
        if self.schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::config("tolerance schedule must be non-increasing"));
        }
        Ok(())
    }
}

/// Runs every tolerance of the schedule. Generation `t > 1` draws each particle
/// by picking a parent from generation `t − 1` with its weight, perturbing it, and
/// retrying until `ρ < ε_t`; weights are then renormalized to sum to one.
///
/// Proposals that land outside the prior support are redrawn before any
/// simulation, since their weight would be zero.
pub fn run_pmc<S: Simulator + ?Sized>(prior: &PriorSpec, simulator: &S, config: &PmcConfig) -> Result<Run> {
    config.validate()?;
    let clock = Stopwatch::start();
    let budget = Budget::new(config.budget);
    let mut trace = RunTrace::default();
    let n = config.n;

    let eps = config.schedule[0];
    let first: Vec<_> = map_indexed(n, |i| {
        let mut rng = config.seed.stream(1, i as u64);
        draw_until(prior, simulator, |rho| rho < eps, &mut rng, &budget)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut simulations: u64 = first.iter().map(|d| d.2).sum();
    let uniform = 1.0 / n as f64;
    let mut sample = WeightedSample::new(
        first
            .into_iter()
            .map(|(theta, rho, _)| Particle::new(theta, uniform, rho))
            .collect(),
        eps,
        1,
    );
    record(&mut trace, &sample, n as f64 / simulations as f64, simulations, &clock)?;

    for (k, &eps) in config.schedule.iter().enumerate().skip(1) {
        let t = k + 1;
        let kernel = kernel_from_sample(&sample, config.kernel)?;
        let picker = WeightedPicker::from_sample(&sample)?;
        let mixture = MixtureProposal::new(&sample, &kernel)?;
        let drawn: Vec<(Particle, u64, bool)> = map_indexed(n, |i| {
            let mut rng = config.seed.stream(t as u64, i as u64);
            let mut spent = 0u64;
            loop {
                let parent = &sample.particles[picker.pick(&mut rng)];
                let theta = kernel.perturb(&parent.theta, &mut rng)?;
                if !prior.contains(&theta) {
                    continue;
                }
                budget.charge(1)?;
                spent += 1;
                let rho = checked_distance(simulator, &theta, &mut rng)?;
                if rho < eps {
                    let w = mixture.importance_weight(&theta, prior);
                    return Ok((Particle::new(theta, w.value(), rho), spent, w.underflowed()));
                }
            }
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let spent: u64 = drawn.iter().map(|d| d.1).sum();
        simulations += spent;
        let underflows = drawn.iter().filter(|d| d.2).count();
        if underflows > 0 {
            trace.warn(format!(
                "generation {t}: proposal density underflowed for {underflows} particles; weights set to 0"
            ));
        }
        let mut particles: Vec<Particle> = drawn.into_iter().map(|d| d.0).collect();
        let mut weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
        normalize(&mut weights)?;
        for (p, w) in particles.iter_mut().zip(weights) {
            p.weight = w;
        }
        sample = WeightedSample::new(particles, eps, t);
        record(&mut trace, &sample, n as f64 / spent as f64, simulations, &clock)?;
    }
    Ok(Run { sample, trace })
}

fn record(
    trace: &mut RunTrace,
    sample: &WeightedSample,
    acceptance: f64,
    simulations: u64,
    clock: &Stopwatch,
) -> Result<()> {
    let weights: Vec<f64> = sample.weights().collect();
    trace.records.push(IterationRecord {
        iteration: sample.iteration,
        epsilon: sample.epsilon,
        acceptance,
        simulations,
        distinct: distinct_count(sample),
        ess: ess(&weights)?,
        population: sample.len(),
        wall_time: clock.seconds(),
        ..Default::default()
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run_rejection, RejectionConfig};
    use crate::models::ToyModel;

    #[test]
    fn schedule_validation() {
        assert!(PmcConfig::new(10, alloc::vec![]).validate().is_err());
        assert!(PmcConfig::new(10, alloc::vec![1.0, 2.0]).validate().is_err());
        assert!(PmcConfig::new(10, alloc::vec![1.0, 0.0]).validate().is_err());
        assert!(PmcConfig::new(10, alloc::vec![2.0, 1.0, 1.0]).validate().is_ok());
    }

    #[test]
    fn geometric_schedule_endpoints() {
        let s = PmcConfig::geometric_schedule(2.0, 0.01, 11).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s[0], 2.0);
        assert_eq!(s[10], 0.01);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert!(PmcConfig::geometric_schedule(0.01, 2.0, 3).is_err());
    }

    #[test]
    fn single_tolerance_matches_rejection() {
        let toy = ToyModel::new();
        let mut pmc = PmcConfig::new(100, alloc::vec![0.5]);
        pmc.seed = StreamSeed::new(4, 0);
        let mut rej = RejectionConfig::new(100, 0.5);
        rej.seed = StreamSeed::new(4, 0);
        let a = run_pmc(&toy.prior(), &toy, &pmc).unwrap();
        let b = run_rejection(&toy.prior(), &toy, &rej).unwrap();
        assert_eq!(a.simulations(), b.simulations());
        for (p, q) in a.sample.particles.iter().zip(&b.sample.particles) {
            assert_eq!(p.theta, q.theta);
            assert_eq!(p.weight, 0.01);
        }
    }

    #[test]
    fn generations_follow_schedule() {
        let toy = ToyModel::new();
        let schedule = PmcConfig::geometric_schedule(2.0, 0.1, 5).unwrap();
        let mut cfg = PmcConfig::new(300, schedule.clone());
        cfg.seed = StreamSeed::new(8, 1);
        let run = run_pmc(&toy.prior(), &toy, &cfg).unwrap();
        assert_eq!(run.trace.records.len(), 5);
        assert!(run.trace.epsilon_non_increasing());
        for (r, e) in run.trace.records.iter().zip(&schedule) {
            assert_eq!(r.epsilon, *e);
            assert_eq!(r.distinct, 300);
        }
        assert!(run.sample.particles.iter().all(|p| p.distance < 0.1));
        assert!((run.sample.total_weight() - 1.0).abs() < 1e-12);
    }
}

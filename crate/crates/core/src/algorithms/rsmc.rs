//! Replenishment SMC ABC.
//!
//! Keeps a population of `N` particles sorted by distance. Each round drops the
//! `N_α` worst, sets the next tolerance to the largest remaining distance, refills
//! the dropped slots by copying random survivors and moves each copy with `R`
//! Metropolis-Hastings trials. `R` is retuned from the observed acceptance rate so
//! that a copy moves at least once with probability `1 − c`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{check_population, check_unit_open, checked_distance, draw_until, Budget, Run, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::kernels::{kernel_from_sample, KernelVariant};
use crate::metrics::distinct_count;
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::StreamSeed;
use crate::simulator::Simulator;
use crate::trace::{IterationRecord, RunTrace, Stopwatch};
use crate::types::{Particle, WeightedSample};

/// Consecutive rounds without a single accepted move before giving up.
pub const STAGNATION_LIMIT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RsmcConfig {
    pub n: usize,
    /// Fraction of the population dropped each round.
    pub alpha: f64,
    pub epsilon_initial: f64,
    pub epsilon_target: f64,
    pub c: f64,
    pub initial_trials: u64,
    pub kernel: KernelVariant,
    pub seed: StreamSeed,
    pub budget: u64,
}

impl RsmcConfig {
    pub fn new(n: usize, alpha: f64, epsilon_target: f64) -> Self {
        Self {
            n,
            alpha,
            epsilon_initial: f64::INFINITY,
            epsilon_target,
            c: 0.01,
            initial_trials: 10,
            kernel: KernelVariant::default(),
            seed: StreamSeed::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn dropped(&self) -> usize {
        libm::floor(self.alpha * self.n as f64) as usize
    }

    pub fn validate(&self) -> Result<()> {
        check_population(self.n)?;
        check_unit_open("alpha", self.alpha)?;
        check_unit_open("c", self.c)?;
        let drop = self.dropped();
        if drop < 1 || drop >= self.n - 1 {
            return Err(Error::config(format!(
                "need 1 <= floor(alpha * n) < n - 1, got {drop} of {}",
                self.n
            )));
        }
        if !(self.epsilon_target > 0.0) || self.epsilon_target > self.epsilon_initial || self.epsilon_target.is_nan() {
            return Err(Error::config(format!(
                "need 0 < epsilon_target <= epsilon_initial, got {} and {}",
                self.epsilon_target, self.epsilon_initial
            )));
        }
        if self.initial_trials < 1 {
            return Err(Error::config("initial_trials must be at least 1"));
        }
        Ok(())
    }
}

/// `R = ⌈ln c / ln(1 − p_acc)⌉`, at least 1. `None` when `p_acc = 0`, where the
/// update is undefined.
pub fn mh_trials_for(p_acc: f64, c: f64) -> Option<u64> {
    if !(p_acc > 0.0) {
        return None;
    }
    let r = libm::ceil(libm::log(c) / libm::log(1.0 - p_acc.min(1.0)));
    Some(if r >= 1.0 { r as u64 } else { 1 })
}

pub fn run_rsmc<S: Simulator + ?Sized>(prior: &PriorSpec, simulator: &S, config: &RsmcConfig) -> Result<Run> {
    config.validate()?;
    let clock = Stopwatch::start();
    let budget = Budget::new(config.budget);
    let mut trace = RunTrace::default();
    let n = config.n;
    let drop = config.dropped();
    let keep = n - drop;

    let eps1 = config.epsilon_initial;
    let first: Vec<_> = map_indexed(n, |i| {
        let mut rng = config.seed.stream(1, i as u64);
        draw_until(prior, simulator, |rho| rho <= eps1, &mut rng, &budget)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut simulations: u64 = first.iter().map(|d| d.2).sum();
    let mut particles: Vec<Particle> = first
        .into_iter()
        .map(|(theta, rho, _)| Particle::new(theta, 1.0, rho))
        .collect();
    sort_by_distance(&mut particles);
    let mut eps_max = particles[n - 1].distance;
    let mut trials = config.initial_trials;
    let mut stagnant = 0usize;
    let mut t = 1usize;
    trace.records.push(IterationRecord {
        iteration: t,
        epsilon: eps_max,
        acceptance: n as f64 / simulations as f64,
        simulations,
        distinct: distinct_count(&WeightedSample::new(particles.clone(), eps_max, t)),
        ess: n as f64,
        population: n,
        wall_time: clock.seconds(),
        next_mh_trials: Some(trials),
        ..Default::default()
    });

    while eps_max > config.epsilon_target {
        t += 1;
        particles.truncate(keep);
        let eps_next = particles[keep - 1].distance;
        let survivors = WeightedSample::new(particles, eps_next, t);
        let kernel = kernel_from_sample(&survivors, config.kernel)?;
        let r = trials;
        let moved: Vec<(Particle, u64, u64)> = map_indexed(drop, |j| {
            let mut rng = config.seed.stream(t as u64, j as u64);
            let mut current = survivors.particles[rng.random_range(0..keep)].clone();
            let mut accepted = 0u64;
            let mut spent = 0u64;
            for _ in 0..r {
                let proposal = kernel.perturb(&current.theta, &mut rng)?;
                let pi_new = prior.density_unchecked(&proposal);
                let u: f64 = rng.random();
                if pi_new == 0.0 {
                    continue;
                }
                budget.charge(1)?;
                spent += 1;
                let rho = checked_distance(simulator, &proposal, &mut rng)?;
                let ratio = pi_new / prior.density_unchecked(&current.theta);
                if rho <= eps_next && u <= ratio.min(1.0) {
                    current = Particle::new(proposal, 1.0, rho);
                    accepted += 1;
                }
            }
            Ok((current, accepted, spent))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        particles = survivors.particles;
        let mut accepted = 0u64;
        for (p, acc, spent) in moved {
            accepted += acc;
            simulations += spent;
            particles.push(p);
        }
        let p_acc = accepted as f64 / (r * drop as u64) as f64;
        let is_stagnant = match mh_trials_for(p_acc, config.c) {
            Some(next) => {
                trials = next;
                stagnant = 0;
                false
            }
            None => {
                stagnant += 1;
                trace.warn(format!("round {t}: no move accepted; keeping R = {trials}"));
                true
            }
        };
        sort_by_distance(&mut particles);
        eps_max = particles[n - 1].distance;
        let snapshot = WeightedSample::new(particles, eps_max, t);
        trace.records.push(IterationRecord {
            iteration: t,
            epsilon: eps_max,
            acceptance: p_acc,
            simulations,
            distinct: distinct_count(&snapshot),
            ess: n as f64,
            population: n,
            wall_time: clock.seconds(),
            mh_trials: Some(r),
            next_mh_trials: Some(trials),
            stagnant: is_stagnant,
            ..Default::default()
        });
        particles = snapshot.particles;
        if stagnant >= STAGNATION_LIMIT {
            return Err(Error::Stagnation { rounds: stagnant });
        }
    }
    Ok(Run {
        sample: WeightedSample::new(particles, eps_max, t),
        trace,
    })
}

fn sort_by_distance(particles: &mut [Particle]) {
    particles.sort_by(|a, b| a.distance.total_cmp(&b.distance));
}

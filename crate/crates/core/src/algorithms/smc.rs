//! Adaptive SMC ABC in the style of Del Moral, Doucet and Jasra.
//!
//! Every particle carries `M` simulated distances. The next tolerance is the one
//! at which the reweighted population keeps a fraction `α` of the previous
//! effective sample size; weights are `W_i · hits_i(ε_t) / hits_i(ε_{t−1})`,
//! where `hits_i(ε)` counts the particle's stored distances below `ε`. The
//! population is resampled when the ESS falls under `N_T`, and living particles
//! are then moved by one Metropolis-Hastings step.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{check_population, check_positive, check_unit_open, checked_distance, ess, Budget, Run, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::kernels::{kernel_from_sample, KernelVariant};
use crate::metrics::distinct_count;
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::{StreamSeed, SHARED};
use crate::sampling::{latin_hypercube, multinomial_indices};
use crate::simulator::Simulator;
use crate::trace::{IterationRecord, RunTrace, Stopwatch};
use crate::types::{ParamVector, Particle, WeightedSample};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmcConfig {
    pub n: usize,
    /// Simulations per particle.
    pub m: usize,
    /// ESS decay per iteration.
    pub alpha: f64,
    pub epsilon_target: f64,
    /// Resampling threshold `N_T`; `None` means `N / 2`.
    pub resample_threshold: Option<usize>,
    pub kernel: KernelVariant,
    pub seed: StreamSeed,
    pub budget: u64,
}

impl SmcConfig {
    pub fn new(n: usize, m: usize, alpha: f64, epsilon_target: f64) -> Self {
        Self {
            n,
            m,
            alpha,
            epsilon_target,
            resample_threshold: None,
            kernel: KernelVariant::default(),
            seed: StreamSeed::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn threshold(&self) -> usize {
        self.resample_threshold.unwrap_or((self.n / 2).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        check_population(self.n)?;
        check_unit_open("alpha", self.alpha)?;
        check_positive("epsilon_target", self.epsilon_target)?;
        if self.m < 1 {
            return Err(Error::config("m must be at least 1"));
        }
        let nt = self.threshold();
        if nt < 1 || nt > self.n {
            return Err(Error::config(format!("resample threshold must lie in [1, {}], got {nt}", self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Walker {
    theta: ParamVector,
    distances: Vec<f64>,
    weight: f64,
}

impl Walker {
    fn hits(&self, epsilon: f64) -> usize {
        self.distances.iter().filter(|&&d| d < epsilon).count()
    }
}

fn reweight(walkers: &[Walker], eps: f64, eps_prev: f64) -> Vec<f64> {
    walkers
        .iter()
        .map(|w| {
            if w.weight == 0.0 {
                return 0.0;
            }
            let before = w.hits(eps_prev);
            if before == 0 {
                0.0
            } else {
                w.weight * w.hits(eps) as f64 / before as f64
            }
        })
        .collect()
}

fn ess_or_zero(weights: &[f64]) -> f64 {
    ess(weights).unwrap_or(0.0)
}

/// Smallest stored distance `c < ε_prev` (or `ε_prev` itself) whose reweighted
/// ESS still reaches `goal`. Returns `None` when only `ε_prev` qualifies.
fn next_tolerance(walkers: &[Walker], eps_prev: f64, goal: f64) -> (Vec<f64>, Option<f64>) {
    let mut candidates: Vec<f64> = walkers
        .iter()
        .filter(|w| w.weight > 0.0)
        .flat_map(|w| w.distances.iter().copied())
        .filter(|&d| d < eps_prev)
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // ESS is evaluated with strict `<`, so candidate `c` drops distances equal to `c`.
    let (mut lo, mut hi) = (0usize, candidates.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ess_or_zero(&reweight(walkers, candidates[mid], eps_prev)) >= goal {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let found = candidates.get(lo).copied();
    (candidates, found)
}

pub fn run_smc<S: Simulator + ?Sized>(prior: &PriorSpec, simulator: &S, config: &SmcConfig) -> Result<Run> {
    config.validate()?;
    let clock = Stopwatch::start();
    let budget = Budget::new(config.budget);
    let mut trace = RunTrace::default();
    let (n, m) = (config.n, config.m);
    let n_t = config.threshold() as f64;

    let mut design_rng = config.seed.stream(0, SHARED);
    let thetas = if prior.dim() > 1 {
        latin_hypercube(prior, n, &mut design_rng)?
    } else {
        prior.sample(n, &mut design_rng)?
    };
    budget.charge((n * m) as u64)?;
    let mut walkers: Vec<Walker> = map_indexed(n, |i| -> Result<Walker> {
        let mut rng = config.seed.stream(0, i as u64);
        let distances = (0..m)
            .map(|_| checked_distance(simulator, &thetas[i], &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Walker {
            theta: thetas[i].clone(),
            distances,
            weight: 1.0 / n as f64,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    drop(thetas);
    let mut simulations = (n * m) as u64;
    let mut eps_prev = f64::INFINITY;
    let mut ess_prev = n as f64;
    let mut t = 0usize;
    trace.records.push(IterationRecord {
        iteration: 0,
        epsilon: eps_prev,
        acceptance: 1.0,
        simulations,
        distinct: distinct_alive(&walkers),
        ess: ess_prev,
        population: n,
        wall_time: clock.seconds(),
        ..Default::default()
    });

    while eps_prev > config.epsilon_target {
        t += 1;
        let goal = config.alpha * ess_prev;
        let (candidates, found) = next_tolerance(&walkers, eps_prev, goal);
        let mut eps = match found {
            Some(c) => c,
            None => match candidates.last() {
                Some(&c) => {
                    trace.warn(format!(
                        "iteration {t}: ESS target {goal:.3} unreachable below {eps_prev}; using {c}"
                    ));
                    c
                }
                None => return Err(Error::WeightCollapse),
            },
        };
        if eps < config.epsilon_target {
            eps = config.epsilon_target;
        }
        let weights = reweight(&walkers, eps, eps_prev);
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::WeightCollapse);
        }
        for (w, x) in walkers.iter_mut().zip(&weights) {
            w.weight = x / total;
        }
        let mut current_ess = ess_or_zero(&weights);

        let resampled = current_ess < n_t;
        if resampled {
            let mut rng = config.seed.stream(t as u64, SHARED);
            let picks = multinomial_indices(walkers.iter().map(|w| w.weight), n, &mut rng)?;
            walkers = picks
                .into_iter()
                .map(|j| Walker {
                    weight: 1.0 / n as f64,
                    ..walkers[j].clone()
                })
                .collect();
            current_ess = n as f64;
        }

        let alive = WeightedSample::new(
            walkers
                .iter()
                .filter(|w| w.weight > 0.0)
                .map(|w| Particle::new(w.theta.clone(), w.weight, 0.0))
                .collect(),
            eps,
            t,
        );
        let kernel = kernel_from_sample(&alive, config.kernel)?;
        drop(alive);
        let moves = walkers.iter().filter(|w| w.weight > 0.0).count() as u64;
        budget.charge(moves * m as u64)?;
        let stepped: Vec<(Walker, bool)> = map_indexed(n, |i| -> Result<(Walker, bool)> {
            let w = &walkers[i];
            if w.weight == 0.0 {
                return Ok((w.clone(), false));
            }
            let mut rng = config.seed.stream(t as u64, i as u64);
            let proposal = kernel.perturb(&w.theta, &mut rng)?;
            let distances = (0..m)
                .map(|_| checked_distance(simulator, &proposal, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let u: f64 = rng.random();
            let hits_new = distances.iter().filter(|&&d| d < eps).count() as f64;
            let num = hits_new * prior.density_unchecked(&proposal);
            let den = w.hits(eps) as f64 * prior.density_unchecked(&w.theta);
            if num > 0.0 && u * den <= num {
                Ok((
                    Walker {
                        theta: proposal,
                        distances,
                        weight: w.weight,
                    },
                    true,
                ))
            } else {
                Ok((w.clone(), false))
            }
        })
        .into_iter()
        .collect::<Result<_>>()?;
        simulations += moves * m as u64;
        let accepted = stepped.iter().filter(|s| s.1).count();
        walkers = stepped.into_iter().map(|s| s.0).collect();

        trace.records.push(IterationRecord {
            iteration: t,
            epsilon: eps,
            acceptance: if moves > 0 { accepted as f64 / moves as f64 } else { 0.0 },
            simulations,
            distinct: distinct_alive(&walkers),
            ess: current_ess,
            population: walkers.iter().filter(|w| w.weight > 0.0).count(),
            wall_time: clock.seconds(),
            resampled,
            moves,
            ..Default::default()
        });
        eps_prev = eps;
        ess_prev = current_ess;
    }

    let particles = walkers
        .into_iter()
        .filter(|w| w.weight > 0.0)
        .map(|w| {
            let best = w.distances.iter().copied().fold(f64::INFINITY, f64::min);
            Particle::new(w.theta, w.weight, best)
        })
        .collect();
    Ok(Run {
        sample: WeightedSample::new(particles, eps_prev, t),
        trace,
    })
}

fn distinct_alive(walkers: &[Walker]) -> usize {
    let alive = WeightedSample::new(
        walkers
            .iter()
            .filter(|w| w.weight > 0.0)
            .map(|w| Particle::new(w.theta.clone(), w.weight, 0.0))
            .collect(),
        0.0,
        0,
    );
    distinct_count(&alive)
}

//! Adaptive population Monte Carlo ABC.
//!
//! Each generation keeps the `N_α = ⌊αN⌋` particles closest to the data and
//! proposes `N − N_α` new ones by perturbing weighted picks from them. Newcomers
//! carry the unnormalized weight `π(θ) / d(θ)`, which puts them on the same scale
//! as the survivors they are pooled with. The next tolerance is the α-quantile of
//! the pooled distances, so the schedule is never chosen by hand. The run stops
//! once the share of newcomers beating the previous tolerance, `p_acc`, is no
//! longer above `p_acc_min`.

use alloc::format;
use alloc::vec::Vec;

use super::{check_population, checked_distance, ess, Budget, Run, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::kernels::{kernel_from_sample, KernelVariant, MixtureProposal};
use crate::metrics::distinct_count;
use crate::parallel::map_indexed;
use crate::prior::PriorSpec;
use crate::rng::{StreamSeed, SHARED};
use crate::sampling::{alpha_quantile, latin_hypercube, select_within, WeightedPicker};
use crate::simulator::Simulator;
use crate::trace::{IterationRecord, RunTrace, Stopwatch};
use crate::types::{Particle, WeightedSample};

/// How the first `N` parameters are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InitialDesign {
    /// i.i.d. in one dimension, Latin hypercube otherwise.
    #[default]
    Auto,
    Iid,
    LatinHypercube,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApmcConfig {
    /// Particles per generation.
    pub n: usize,
    /// Survivor fraction.
    pub alpha: f64,
    pub p_acc_min: f64,
    pub kernel: KernelVariant,
    pub init: InitialDesign,
    pub seed: StreamSeed,
    pub budget: u64,
}

impl ApmcConfig {
    pub fn new(n: usize, alpha: f64, p_acc_min: f64) -> Self {
        Self {
            n,
            alpha,
            p_acc_min,
            kernel: KernelVariant::default(),
            init: InitialDesign::default(),
            seed: StreamSeed::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    /// `N_α = ⌊αN⌋`.
    pub fn survivors(&self) -> usize {
        libm::floor(self.alpha * self.n as f64) as usize
    }

    pub fn validate(&self) -> Result<()> {
        check_population(self.n)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let keep = self.survivors();
        if keep < 1 || keep >= self.n {
            return Err(Error::config(format!(
                "need 1 <= floor(alpha * n) < n, got {keep} of {}",
                self.n
            )));
        }
        if !(self.p_acc_min >= 0.0 && self.p_acc_min < 1.0) {
            return Err(Error::config(format!(
                "p_acc_min must lie in [0, 1), got {}",
                self.p_acc_min
            )));
        }
        Ok(())
    }
}

pub fn run_apmc<S: Simulator + ?Sized>(prior: &PriorSpec, simulator: &S, config: &ApmcConfig) -> Result<Run> {
    config.validate()?;
    let clock = Stopwatch::start();
    let budget = Budget::new(config.budget);
    let mut trace = RunTrace::default();

    let n = config.n;
    let keep = config.survivors();
    let fresh = n - keep;
    // Quantile level N_α/N: exactly N_α distances sit at or below it, so the
    // tolerance can never rise even when αN is fractional.
    let level = keep as f64 / n as f64;

    let mut design_rng = config.seed.stream(0, SHARED);
    let lhs = match config.init {
        InitialDesign::Auto => prior.dim() > 1,
        InitialDesign::Iid => false,
        InitialDesign::LatinHypercube => true,
    };
    let thetas = if lhs {
        latin_hypercube(prior, n, &mut design_rng)?
    } else {
        prior.sample(n, &mut design_rng)?
    };
    budget.charge(n as u64)?;
    let dists: Vec<f64> = map_indexed(n, |i| {
        checked_distance(simulator, &thetas[i], &mut config.seed.stream(0, i as u64))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut simulations = n as u64;

    let mut epsilon = alpha_quantile(&dists, level)?;
    let chosen = select_within(&dists, epsilon, keep);
    let mut survivors = WeightedSample::new(
        chosen
            .iter()
            .map(|&i| Particle::new(thetas[i].clone(), 1.0, dists[i]))
            .collect(),
        epsilon,
        1,
    );
    drop(thetas);
    let mut kernel = kernel_from_sample(&survivors, config.kernel)?;
    let mut p_acc = 1.0;
    let mut t = 1usize;
    record(&mut trace, &survivors, p_acc, simulations, &clock)?;

    while p_acc > config.p_acc_min {
        t += 1;
        budget.charge(fresh as u64)?;
        let picker = WeightedPicker::from_sample(&survivors)?;
        let mixture = MixtureProposal::new(&survivors, &kernel)?;
        let newcomers: Vec<(Particle, bool)> = map_indexed(fresh, |j| {
            let mut rng = config.seed.stream(t as u64, j as u64);
            let parent = &survivors.particles[picker.pick(&mut rng)];
            let theta = kernel.perturb(&parent.theta, &mut rng)?;
            let rho = checked_distance(simulator, &theta, &mut rng)?;
            let w = mixture.importance_weight(&theta, prior);
            Ok((Particle::new(theta, w.value(), rho), w.underflowed()))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        simulations += fresh as u64;

        let underflows = newcomers.iter().filter(|(_, u)| *u).count();
        if underflows > 0 {
            trace.warn(format!(
                "generation {t}: proposal density underflowed for {underflows} particles; weights set to 0"
            ));
        }
        let accepted = newcomers.iter().filter(|(p, _)| p.distance < epsilon).count();
        p_acc = accepted as f64 / fresh as f64;

        let mut pool = core::mem::take(&mut survivors.particles);
        pool.extend(newcomers.into_iter().map(|(p, _)| p));
        let dists: Vec<f64> = pool.iter().map(|p| p.distance).collect();
        epsilon = alpha_quantile(&dists, level)?;
        let mut chosen = select_within(&dists, epsilon, keep).into_iter().peekable();
        let kept: Vec<Particle> = pool
            .into_iter()
            .enumerate()
            .filter_map(|(i, p)| chosen.next_if_eq(&i).map(|_| p))
            .collect();
        survivors = WeightedSample::new(kept, epsilon, t);
        record(&mut trace, &survivors, p_acc, simulations, &clock)?;

        if p_acc > config.p_acc_min {
            kernel = kernel_from_sample(&survivors, config.kernel)?;
        }
    }
    Ok(Run {
        sample: survivors,
        trace,
    })
}

fn record(
    trace: &mut RunTrace,
    survivors: &WeightedSample,
    p_acc: f64,
    simulations: u64,
    clock: &Stopwatch,
) -> Result<()> {
    let weights: Vec<f64> = survivors.weights().collect();
    trace.records.push(IterationRecord {
        iteration: survivors.iteration,
        epsilon: survivors.epsilon,
        acceptance: p_acc,
        simulations,
        distinct: distinct_count(survivors),
        ess: ess(&weights)?,
        population: survivors.len(),
        wall_time: clock.seconds(),
        ..Default::default()
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ToyModel;

    fn toy_run(n: usize, alpha: f64, p_acc_min: f64, seed: u64) -> Run {
        let toy = ToyModel::new();
        let mut cfg = ApmcConfig::new(n, alpha, p_acc_min);
        cfg.seed = StreamSeed::new(seed, 0);
        run_apmc(&toy.prior(), &toy, &cfg).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ApmcConfig::new(10, 0.05, 0.1).validate().is_err());
        assert!(ApmcConfig::new(10, 1.0, 0.1).validate().is_err());
        assert!(ApmcConfig::new(10, 0.5, 1.0).validate().is_err());
        assert!(ApmcConfig::new(10, 0.5, -0.1).validate().is_err());
        assert!(ApmcConfig::new(1, 0.5, 0.1).validate().is_err());
        assert!(ApmcConfig::new(10, 0.5, 0.0).validate().is_ok());
    }

    #[test]
    fn survivor_discipline_and_monotone_tolerance() {
        let run = toy_run(400, 0.5, 0.05, 3);
        let keep = 200;
        assert_eq!(run.sample.len(), keep);
        assert!(run.sample.particles.iter().all(|p| p.distance <= run.sample.epsilon));
        assert!(run.trace.epsilon_non_increasing());
        assert!(run.trace.simulations_strictly_increasing());
        for r in &run.trace.records {
            assert_eq!(r.population, keep);
            assert_eq!(r.distinct, keep);
        }
        let last = run.trace.records.last().unwrap();
        assert!(last.acceptance <= 0.05);
        assert_eq!(last.simulations, 400 + 200 * (run.trace.records.len() as u64 - 1));
    }

    #[test]
    fn high_threshold_stops_after_one_refinement() {
        // p_acc starts at 1, so one generation always runs; any observed
        // p_acc ≤ 0.999 then ends the loop.
        let run = toy_run(200, 0.5, 0.999, 1);
        assert_eq!(run.trace.records.len(), 2);
        assert_eq!(run.trace.records[0].acceptance, 1.0);
    }

    #[test]
    fn fractional_alpha_n_keeps_tolerance_monotone() {
        let run = toy_run(7 * 31, 0.5, 0.1, 9);
        assert_eq!(run.sample.len(), 108);
        assert!(run.trace.epsilon_non_increasing());
    }

    #[test]
    fn reproducible() {
        let a = toy_run(300, 0.4, 0.1, 21);
        let b = toy_run(300, 0.4, 0.1, 21);
        assert_eq!(a.sample, b.sample);
        let c = toy_run(300, 0.4, 0.1, 22);
        assert_ne!(a.sample, c.sample);
    }

    #[test]
    fn single_survivor_gives_degenerate_kernel() {
        let prior = PriorSpec::uniform(0.0, 1.0).unwrap();
        let sim = |_: &crate::ParamVector, _: &mut crate::RandomStream| 0.0;
        let cfg = ApmcConfig::new(4, 0.25, 0.0);
        assert!(matches!(run_apmc(&prior, &sim, &cfg), Err(Error::DegenerateKernel { dim: 0 })));
    }

    #[test]
    fn budget_guard() {
        let toy = ToyModel::new();
        let mut cfg = ApmcConfig::new(500, 0.5, 0.0);
        cfg.budget = 2000;
        assert!(matches!(
            run_apmc(&toy.prior(), &toy, &cfg),
            Err(Error::BudgetExhausted { limit: 2000, .. })
        ));
    }
}

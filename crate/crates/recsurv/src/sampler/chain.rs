//! Chain orchestration: configuration, the iteration loop, thinning, and
//! progress reporting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Hyperparams;
use crate::sampler::state::ModelState;
use crate::sampler::updates::gibbs_sweep;
use crate::sampler::{chain_rng, PreparedData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total Gibbs sweeps.
    pub iterations: u64,
    /// Sweeps discarded before any state is stored.
    pub burn_in: u64,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: u64,
    pub seed: u64,
    /// Base slice width; linear-scale parameters multiply it by their prior
    /// standard deviation, log-scale parameters use it directly.
    pub slice_width: f64,
    /// Stepping-out budget per side before the sampler reports an error.
    pub slice_max_steps: u32,
    /// Auxiliary atoms per reassignment in the cluster update.
    pub aux_components: usize,
    /// Probability of proposing a latent-event birth for each censored
    /// individual per sweep.
    pub birth_prob: f64,
    /// Probability of proposing a latent-event death; the remainder after
    /// birth and death refreshes the imputed survival time and gaps.
    pub death_prob: f64,
    /// Optional hard cap on event counts, which truncates and renormalizes
    /// the count distribution. Intended for validation harnesses.
    pub max_events: Option<u32>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 20_000,
            burn_in: 2_000,
            thin: 10,
            seed: 1,
            slice_width: 1.0,
            slice_max_steps: 50,
            aux_components: 3,
            birth_prob: 0.35,
            death_prob: 0.35,
            max_events: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter {
                name: "iterations",
                reason: "must be positive".into(),
            });
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Parameter {
                name: "burn_in",
                reason: format!(
                    "burn-in {} must be below iterations {}",
                    self.burn_in, self.iterations
                ),
            });
        }
        if self.thin == 0 {
            return Err(Error::Parameter {
                name: "thin",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.slice_width.is_finite() && self.slice_width > 0.0) {
            return Err(Error::Parameter {
                name: "slice_width",
                reason: format!("must be positive and finite, got {}", self.slice_width),
            });
        }
        if self.slice_max_steps == 0 {
            return Err(Error::Parameter {
                name: "slice_max_steps",
                reason: "must be at least 1".into(),
            });
        }
        if self.aux_components == 0 {
            return Err(Error::Parameter {
                name: "aux_components",
                reason: "must be at least 1".into(),
            });
        }
        for (name, p) in [("birth_prob", self.birth_prob), ("death_prob", self.death_prob)] {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::Parameter {
                    name,
                    reason: format!("must lie in [0, 1], got {p}"),
                });
            }
        }
        if self.birth_prob + self.death_prob >= 1.0 {
            return Err(Error::Parameter {
                name: "death_prob",
                reason: "birth and death probabilities must leave room for refresh moves".into(),
            });
        }
        Ok(())
    }

    /// Number of states a full run stores.
    pub fn stored_samples(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Tallies of the latent-history moves across a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub birth_proposed: u64,
    pub birth_accepted: u64,
    pub death_proposed: u64,
    pub death_accepted: u64,
    pub refreshed: u64,
}

impl MoveCounts {
    pub fn merge(&mut self, other: &MoveCounts) {
        self.birth_proposed += other.birth_proposed;
        self.birth_accepted += other.birth_accepted;
        self.death_proposed += other.death_proposed;
        self.death_accepted += other.death_accepted;
        self.refreshed += other.refreshed;
    }

    pub fn birth_rate(&self) -> f64 {
        rate(self.birth_accepted, self.birth_proposed)
    }

    pub fn death_rate(&self) -> f64 {
        rate(self.death_accepted, self.death_proposed)
    }
}

fn rate(accepted: u64, proposed: u64) -> f64 {
    if proposed == 0 {
        0.0
    } else {
        accepted as f64 / proposed as f64
    }
}

/// Periodic snapshot of a running chain.
#[derive(Debug, Clone, Copy)]
pub struct ProgressRecord {
    pub iteration: u64,
    pub elapsed_secs: f64,
    pub occupied_clusters: usize,
    pub birth_accept_rate: f64,
    pub death_accept_rate: f64,
}

/// A completed run: stored states plus everything needed to reproduce or
/// interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub config: SamplerConfig,
    pub hyper: Hyperparams,
    pub stream: u64,
    pub n_individuals: usize,
    pub covariate_dim: usize,
    pub move_counts: MoveCounts,
    pub samples: Vec<ModelState>,
}

/// Runs a single chain on stream zero.
pub fn run_chain(data: &Dataset, hyper: &Hyperparams, config: &SamplerConfig) -> Result<Chain> {
    run_chain_with(data, hyper, config, 0, |_| {})
}

/// Runs a single chain on the given RNG stream; chains of one experiment
/// share a seed and differ only by stream.
pub fn run_chain_with_stream(
    data: &Dataset,
    hyper: &Hyperparams,
    config: &SamplerConfig,
    stream: u64,
) -> Result<Chain> {
    run_chain_with(data, hyper, config, stream, |_| {})
}

/// Full-control variant with a progress callback, invoked about a hundred
/// times over the run and always on the final iteration.
pub fn run_chain_with(
    data: &Dataset,
    hyper: &Hyperparams,
    config: &SamplerConfig,
    stream: u64,
    mut on_progress: impl FnMut(&ProgressRecord),
) -> Result<Chain> {
    config.validate()?;
    hyper.validate()?;
    let prep = PreparedData::new(data)?;
    if let Some(cap) = config.max_events {
        for (i, ind) in prep.individuals().iter().enumerate() {
            if ind.obs_n > cap {
                return Err(Error::Individual {
                    index: i,
                    reason: format!(
                        "observed {} events but the count cap is {cap}",
                        ind.obs_n
                    ),
                });
            }
        }
    }
    let mut rng = chain_rng(config.seed, stream);
    let mut state = ModelState::init(&prep);
    state.check_invariants(&prep)?;

    let mut samples = Vec::with_capacity(config.stored_samples() as usize);
    let mut move_counts = MoveCounts::default();
    let cadence = (config.iterations / 100).clamp(1, 5_000);
    let start = Instant::now();

    for t in 1..=config.iterations {
        let counts = gibbs_sweep(&mut state, &prep, hyper, config, &mut rng)
            .map_err(|e| at_iteration(t, e))?;
        move_counts.merge(&counts);
        if t > config.burn_in && (t - config.burn_in) % config.thin == 0 {
            state.check_invariants(&prep).map_err(|e| at_iteration(t, e))?;
            samples.push(state.clone());
        }
        if t % cadence == 0 || t == config.iterations {
            on_progress(&ProgressRecord {
                iteration: t,
                elapsed_secs: start.elapsed().as_secs_f64(),
                occupied_clusters: state.occupied_clusters(),
                birth_accept_rate: move_counts.birth_rate(),
                death_accept_rate: move_counts.death_rate(),
            });
        }
    }
    Ok(Chain {
        config: config.clone(),
        hyper: hyper.clone(),
        stream,
        n_individuals: data.len(),
        covariate_dim: data.covariate_dim(),
        move_counts,
        samples,
    })
}

fn at_iteration(iteration: u64, source: Error) -> Error {
    Error::AtIteration {
        iteration,
        source: Box::new(source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Individual;

    fn tiny_dataset() -> Dataset {
        let inds = vec![
            Individual::new(vec![0.3], vec![0.5, 1.4], 2.2, true).unwrap(),
            Individual::new(vec![0.9], vec![0.7], 1.5, false).unwrap(),
            Individual::new(vec![0.1], vec![], 1.0, false).unwrap(),
        ];
        Dataset::new(1, inds).unwrap()
    }

    fn quick_config() -> SamplerConfig {
        SamplerConfig {
            iterations: 120,
            burn_in: 20,
            thin: 10,
            seed: 5,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn config_validation_catches_inconsistencies() {
        let mut c = SamplerConfig::default();
        assert!(c.validate().is_ok());
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::default();
        c.thin = 0;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::default();
        c.birth_prob = 0.6;
        c.death_prob = 0.5;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::default();
        c.slice_width = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn run_stores_the_expected_number_of_samples() {
        let data = tiny_dataset();
        let chain = run_chain(&data, &Hyperparams::default(), &quick_config()).unwrap();
        assert_eq!(chain.samples.len(), 10);
        assert_eq!(chain.n_individuals, 3);
        assert_eq!(chain.covariate_dim, 1);
        assert_eq!(chain.stream, 0);
    }

    #[test]
    fn same_seed_reproduces_the_chain_exactly() {
        let data = tiny_dataset();
        let cfg = quick_config();
        let a = run_chain(&data, &Hyperparams::default(), &cfg).unwrap();
        let b = run_chain(&data, &Hyperparams::default(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_chain_with_stream(&data, &Hyperparams::default(), &cfg, 1).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn progress_callback_fires_and_finishes_at_the_end() {
        let data = tiny_dataset();
        let mut records = Vec::new();
        run_chain_with(&data, &Hyperparams::default(), &quick_config(), 0, |r| {
            records.push(*r)
        })
        .unwrap();
        assert!(!records.is_empty());
        assert_eq!(records.last().unwrap().iteration, 120);
        assert!(records.last().unwrap().occupied_clusters >= 1);
    }

    #[test]
    fn count_cap_below_observed_events_is_rejected() {
        let data = tiny_dataset();
        let mut cfg = quick_config();
        cfg.max_events = Some(1);
        let out = run_chain(&data, &Hyperparams::default(), &cfg);
        assert!(matches!(out, Err(Error::Individual { index: 0, .. })));
    }
}

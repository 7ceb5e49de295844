//! Blocked Gibbs sampler. One sweep updates, in order: latent event
//! histories of censored individuals (reversible-jump count moves plus a
//! survival/gap refresh), cluster assignments and atoms, the concentration
//! parameter, and the global parameters.

mod chain;
mod slice;
mod state;
mod updates;

pub use chain::{
    run_chain, run_chain_with, run_chain_with_stream, Chain, MoveCounts, ProgressRecord,
    SamplerConfig,
};
pub use slice::slice_sample;
pub use state::{IndividualLatent, ModelState};
pub use updates::{
    gibbs_sweep, neal8_sweep, update_censored_latents, update_concentration, update_globals,
    update_random_effects,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::data::{to_log_gaps, Dataset};
use crate::error::{Error, Result};

/// Deterministic generator for one chain: `seed` picks the experiment,
/// `stream` separates parallel chains of the same experiment.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child generator carved off a parent, so per-item draws do not depend on
/// how many draws other items consumed.
pub(crate) fn derive_rng<R: Rng + ?Sized>(parent: &mut R) -> ChaCha20Rng {
    let mut seed = [0u8; 32];
    parent.fill_bytes(&mut seed);
    ChaCha20Rng::from_seed(seed)
}

/// Dataset transformed once for sampling: observed log gaps and the pieces
/// of each individual the updates read repeatedly.
#[derive(Debug, Clone)]
pub struct PreparedData {
    covariate_dim: usize,
    individuals: Vec<PreparedIndividual>,
}

#[derive(Debug, Clone)]
pub(crate) struct PreparedIndividual {
    pub(crate) covariates: Vec<f64>,
    /// Log gaps of the observed events.
    pub(crate) obs_gaps: Vec<f64>,
    pub(crate) obs_n: u32,
    /// Time of the last observed event; zero when there is none.
    pub(crate) obs_last: f64,
    pub(crate) censor_time: f64,
    pub(crate) survival_observed: bool,
}

impl PreparedData {
    pub fn new(data: &Dataset) -> Result<Self> {
        let mut individuals = Vec::with_capacity(data.len());
        for (i, ind) in data.individuals().iter().enumerate() {
            let gaps = to_log_gaps(ind.event_times()).map_err(|e| Error::Individual {
                index: i,
                reason: e.to_string(),
            })?;
            individuals.push(PreparedIndividual {
                covariates: ind.covariates().to_vec(),
                obs_n: gaps.len() as u32,
                obs_last: ind.event_times().last().copied().unwrap_or(0.0),
                obs_gaps: gaps.into_inner(),
                censor_time: ind.censor_time(),
                survival_observed: ind.survival_observed(),
            });
        }
        Ok(PreparedData {
            covariate_dim: data.covariate_dim(),
            individuals,
        })
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub(crate) fn ind(&self, i: usize) -> &PreparedIndividual {
        &self.individuals[i]
    }

    pub(crate) fn individuals(&self) -> &[PreparedIndividual] {
        &self.individuals
    }
}

/// Samples an index proportional to exp(weights), tolerating -inf entries.
pub(crate) fn sample_index_from_log_weights<R: Rng + ?Sized>(
    weights: &[f64],
    rng: &mut R,
) -> Result<usize> {
    let total = crate::stats::log_sum_exp(weights);
    if !total.is_finite() {
        return Err(Error::Parameter {
            name: "log_weights",
            reason: "no candidate has positive probability".into(),
        });
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (idx, &w) in weights.iter().enumerate() {
        let p = (w - total).exp();
        if p > 0.0 {
            last_valid = idx;
        }
        acc += p;
        if u < acc {
            return Ok(idx);
        }
    }
    // Rounding can leave acc marginally below one; fall back to the last
    // candidate with mass.
    Ok(last_valid)
}

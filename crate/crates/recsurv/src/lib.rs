//! Bayesian joint modelling of recurrent events and survival, with the
//! number of recurrences treated as a latent random variable.
//!
//! Each individual experiences a random number of events with lognormal,
//! AR(1)-dependent gap times, followed by a lognormal terminal event that
//! must come after the last recurrence. Event counts are negative binomial.
//! Covariates shift both the gap and survival scales; residual
//! heterogeneity is a three-dimensional random effect drawn from a
//! Dirichlet-process mixture, which clusters individuals. Censored
//! individuals have their unseen events, survival time, and total count
//! imputed inside the Gibbs sampler, so the count posterior is available
//! for every individual.
//!
//! Modules, in pipeline order:
//! - [`data`]: cohort containers and validation.
//! - [`simulate`]: synthetic cohorts with known ground truth and censoring.
//! - [`model`]: densities, the count pmf, and the moment-matched
//!   normalization constant for the ordering restriction.
//! - [`sampler`]: the blocked Gibbs sampler (reversible-jump count moves,
//!   auxiliary-component clustering, slice-sampled globals).
//! - [`posterior`]: chain summaries, partition point estimates, predictive
//!   draws, survival curves.
//! - [`io`]: dataset CSV, chain files, summary tables, run configuration.
//! - [`stats`]: log-scale numeric helpers shared by the above.

pub mod data;
pub mod error;
pub mod io;
pub mod model;
pub mod posterior;
pub mod sampler;
pub mod simulate;
pub mod stats;

pub use data::{Dataset, Individual, LogGapVector};
pub use error::{Error, Result};
pub use model::{Globals, Hyperparams, RandomEffect};
pub use posterior::{
    binder_partition, coclustering_matrix, kaplan_meier, predictive_outcome_draws,
    predictive_random_effect_draws, summarize_scalar, OutcomeDraw, Partition,
};
pub use sampler::{
    run_chain, run_chain_with_stream, Chain, IndividualLatent, ModelState, PreparedData,
    SamplerConfig,
};
pub use simulate::{apply_censoring, simulate_dataset, GroundTruth, SimulationConfig};

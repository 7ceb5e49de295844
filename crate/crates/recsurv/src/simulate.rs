//! Synthetic data generation from the model: fixed cluster atoms assigned
//! round-robin, counts from the negative binomial, gap/survival pairs drawn
//! by rejection under the ordering constraint, and a censoring mechanism
//! that hides events after a uniformly drawn censoring time.

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Normal as NormalDist, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Individual};
use crate::error::{Error, Result};
use crate::model::RandomEffect;
use crate::sampler::derive_rng;
use crate::stats::dot;

/// Attempts allowed when drawing one individual's constrained (gaps,
/// survival) pair before giving up.
pub const REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_individuals: usize,
    pub covariate_dim: usize,
    pub gap_coefs: Vec<f64>,
    pub surv_coefs: Vec<f64>,
    pub gap_var: f64,
    pub surv_var: f64,
    pub nb_shape: f64,
    pub nb_mean: f64,
    /// Individual `i` uses atom `i % cluster_atoms.len()`.
    pub cluster_atoms: Vec<RandomEffect>,
    /// Fraction of individuals to censor (rounded to a count).
    pub censor_rate: f64,
    pub seed: u64,
}

impl SimulationConfig {
    /// Benchmark scenario: three well-separated clusters whose gap level,
    /// gap autocorrelation, and survival shift all increase together, with
    /// unit coefficient scale and a mean of seven events per individual.
    pub fn three_cluster(n_individuals: usize) -> Self {
        SimulationConfig {
            n_individuals,
            covariate_dim: 2,
            gap_coefs: vec![-1.0, 1.0],
            surv_coefs: vec![-1.0, 1.0],
            gap_var: 1.0,
            surv_var: 1.0,
            nb_shape: 1.0,
            nb_mean: 7.0,
            cluster_atoms: (1..=3)
                .map(|h| RandomEffect {
                    gap_level: h as f64,
                    gap_ar: 0.8 * (h as f64 - 2.0),
                    surv_shift: h as f64 + 4.0,
                })
                .collect(),
            censor_rate: 0.5,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_individuals == 0 {
            return Err(Error::Parameter {
                name: "n_individuals",
                reason: "must be positive".into(),
            });
        }
        if self.covariate_dim == 0 {
            return Err(Error::Parameter {
                name: "covariate_dim",
                reason: "must be positive".into(),
            });
        }
        if self.gap_coefs.len() != self.covariate_dim || self.surv_coefs.len() != self.covariate_dim
        {
            return Err(Error::Parameter {
                name: "gap_coefs",
                reason: format!(
                    "coefficient lengths {} and {} must equal covariate_dim {}",
                    self.gap_coefs.len(),
                    self.surv_coefs.len(),
                    self.covariate_dim
                ),
            });
        }
        if self.cluster_atoms.is_empty() {
            return Err(Error::Parameter {
                name: "cluster_atoms",
                reason: "need at least one atom".into(),
            });
        }
        for (name, v) in [
            ("gap_var", self.gap_var),
            ("surv_var", self.surv_var),
            ("nb_shape", self.nb_shape),
            ("nb_mean", self.nb_mean),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if !(0.0..1.0).contains(&self.censor_rate) {
            return Err(Error::Parameter {
                name: "censor_rate",
                reason: format!("must lie in [0, 1), got {}", self.censor_rate),
            });
        }
        Ok(())
    }
}

/// True latent values behind one simulated individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueIndividual {
    pub cluster: usize,
    pub n_events: u32,
    pub log_gaps: Vec<f64>,
    pub surv_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub atoms: Vec<RandomEffect>,
    pub individuals: Vec<TrueIndividual>,
}

/// Negative-binomial count draw via its gamma-Poisson mixture.
pub(crate) fn sample_count<R: Rng + ?Sized>(shape: f64, mean: f64, rng: &mut R) -> u32 {
    let gamma = GammaDist::new(shape, mean / shape).expect("validated parameters");
    let g: f64 = gamma.sample(rng);
    if g <= 0.0 || !g.is_finite() {
        return 0;
    }
    let pois = Poisson::new(g).expect("positive finite mean");
    let draw: f64 = pois.sample(rng);
    draw.min(u32::MAX as f64) as u32
}

/// One (log gaps, survival time) pair given the count, drawn by rejection
/// under the constraint that the last event precedes the survival time.
/// `index` only labels the rejection-cap error.
pub(crate) fn draw_constrained_outcome<R: Rng + ?Sized>(
    n: u32,
    gap_mean: f64,
    ar: f64,
    gap_var: f64,
    surv_mean: f64,
    surv_var: f64,
    index: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let gap_noise = NormalDist::new(0.0, gap_var.sqrt()).expect("validated");
    let surv_noise = NormalDist::new(surv_mean, surv_var.sqrt()).expect("validated");
    for _ in 0..REJECTION_CAP {
        let mut gaps = Vec::with_capacity(n as usize);
        let mut total = 0.0;
        let mut prev = f64::NAN;
        for j in 0..n {
            let mean = if j == 0 {
                gap_mean
            } else {
                gap_mean + ar * (prev - gap_mean)
            };
            let y = mean + gap_noise.sample(rng);
            total += y.exp();
            prev = y;
            gaps.push(y);
        }
        let surv = surv_noise.sample(rng).exp();
        if total <= surv && surv.is_finite() {
            return Ok((gaps, surv));
        }
    }
    Err(Error::RejectionCap {
        index,
        cap: REJECTION_CAP,
        min_rate: 1.0 / REJECTION_CAP as f64,
    })
}

/// Draws a complete cohort with known ground truth. Every individual is
/// fully observed (censoring is a separate step); event counts are exactly
/// negative binomial because the constraint rejection redraws gaps and
/// survival but never the count.
pub fn simulate_dataset<R: Rng + ?Sized>(
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut individuals = Vec::with_capacity(config.n_individuals);
    let mut truths = Vec::with_capacity(config.n_individuals);
    for i in 0..config.n_individuals {
        let mut sub = derive_rng(rng);
        let cluster = i % config.cluster_atoms.len();
        let atom = &config.cluster_atoms[cluster];
        let covariates: Vec<f64> = (0..config.covariate_dim)
            .map(|_| sub.random::<f64>())
            .collect();
        let n = sample_count(config.nb_shape, config.nb_mean, &mut sub);
        let gap_mean = dot(&covariates, &config.gap_coefs) + atom.gap_level;
        let surv_mean = dot(&covariates, &config.surv_coefs) + atom.surv_shift;
        let (log_gaps, surv_time) = draw_constrained_outcome(
            n,
            gap_mean,
            atom.gap_ar,
            config.gap_var,
            surv_mean,
            config.surv_var,
            i,
            &mut sub,
        )?;
        let mut times = Vec::with_capacity(log_gaps.len());
        let mut acc = 0.0;
        for y in &log_gaps {
            acc += y.exp();
            times.push(acc);
        }
        individuals.push(
            Individual::new(covariates, times, surv_time, true).map_err(|e| {
                Error::Individual {
                    index: i,
                    reason: e.to_string(),
                }
            })?,
        );
        truths.push(TrueIndividual {
            cluster,
            n_events: n,
            log_gaps,
            surv_time,
        });
    }
    let dataset = Dataset::new(config.covariate_dim, individuals)?;
    Ok((
        dataset,
        GroundTruth {
            atoms: config.cluster_atoms.clone(),
            individuals: truths,
        },
    ))
}

/// Censors exactly `round(rate * L)` uniformly chosen individuals of a
/// fully observed cohort. A censored individual gets a censoring time
/// uniform between its first event (or zero if it has none) and its
/// survival time; events after that time are hidden.
pub fn apply_censoring<R: Rng + ?Sized>(
    dataset: &Dataset,
    truth: &GroundTruth,
    rate: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter {
            name: "censor_rate",
            reason: format!("must lie in [0, 1), got {rate}"),
        });
    }
    let l = dataset.len();
    if truth.individuals.len() != l {
        return Err(Error::Parameter {
            name: "ground_truth",
            reason: format!(
                "{} truth records for {l} individuals",
                truth.individuals.len()
            ),
        });
    }
    let n_censor = (rate * l as f64).round() as usize;
    let mut censor = vec![false; l];
    for idx in rand::seq::index::sample(rng, l, n_censor) {
        censor[idx] = true;
    }
    let mut out = Vec::with_capacity(l);
    for (i, ind) in dataset.individuals().iter().enumerate() {
        if !ind.survival_observed() {
            return Err(Error::Individual {
                index: i,
                reason: "censoring applies to a fully observed cohort".into(),
            });
        }
        if !censor[i] {
            out.push(ind.clone());
            continue;
        }
        let surv = truth.individuals[i].surv_time;
        let lower = ind.event_times().first().copied().unwrap_or(0.0);
        let c = rng.random_range(lower..surv);
        let kept: Vec<f64> = ind
            .event_times()
            .iter()
            .copied()
            .filter(|&t| t <= c)
            .collect();
        out.push(
            Individual::new(ind.covariates().to_vec(), kept, c, false).map_err(|e| {
                Error::Individual {
                    index: i,
                    reason: e.to_string(),
                }
            })?,
        );
    }
    Dataset::new(dataset.covariate_dim(), out)
}

//! Posterior summaries over a stored chain: scalar credible intervals,
//! co-clustering probabilities, a Binder-loss point partition, predictive
//! draws of random effects and outcomes, and Kaplan-Meier curves.

use rand::Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RandomEffect;
use crate::sampler::{derive_rng, Chain, ModelState};
use crate::simulate::{draw_constrained_outcome, sample_count};
use crate::stats::dot;

fn require_samples(chain: &Chain) -> Result<&[ModelState]> {
    if chain.samples.is_empty() {
        return Err(Error::Parameter {
            name: "chain",
            reason: "chain holds no stored samples".into(),
        });
    }
    Ok(&chain.samples)
}

/// Linear-interpolation quantile of an ascending sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Posterior mean and equal-tailed credible interval of a scalar read off
/// each stored sample. `level` is the interval mass, e.g. 0.95.
pub fn summarize_scalar<F: FnMut(&ModelState) -> f64>(
    chain: &Chain,
    mut extract: F,
    level: f64,
) -> Result<(f64, f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter {
            name: "level",
            reason: format!("interval mass must lie in (0, 1), got {level}"),
        });
    }
    let samples = require_samples(chain)?;
    let mut values: Vec<f64> = samples.iter().map(&mut extract).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter {
            name: "extract",
            reason: "extracted values must be finite".into(),
        });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let tail = (1.0 - level) / 2.0;
    Ok((mean, quantile(&values, tail), quantile(&values, 1.0 - tail)))
}

/// Matrix of posterior probabilities that two individuals share a cluster.
/// Symmetric with unit diagonal.
pub fn coclustering_matrix(chain: &Chain) -> Result<Vec<Vec<f64>>> {
    let samples = require_samples(chain)?;
    let l = chain.n_individuals;
    let mut counts = vec![vec![0u64; l]; l];
    for state in samples {
        for i in 0..l {
            for j in (i + 1)..l {
                if state.assignments[i] == state.assignments[j] {
                    counts[i][j] += 1;
                }
            }
        }
    }
    let total = samples.len() as f64;
    let mut out = vec![vec![0.0; l]; l];
    for i in 0..l {
        out[i][i] = 1.0;
        for j in (i + 1)..l {
            let p = counts[i][j] as f64 / total;
            out[i][j] = p;
            out[j][i] = p;
        }
    }
    Ok(out)
}

/// A hard clustering with canonical labels: cluster ids run 0.. in order
/// of first appearance, so relabelings of the same grouping compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    pub fn new(raw: &[usize]) -> Self {
        let mut map = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let id = match map.iter().position(|&m| m == r) {
                Some(id) => id,
                None => {
                    map.push(r);
                    map.len() - 1
                }
            };
            labels.push(id);
        }
        Partition {
            labels,
            n_clusters: map.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }
}

fn binder_loss(assignments: &[usize], coclust: &[Vec<f64>]) -> f64 {
    let l = assignments.len();
    let mut loss = 0.0;
    for i in 0..l {
        for j in (i + 1)..l {
            let p = coclust[i][j];
            loss += if assignments[i] == assignments[j] {
                1.0 - p
            } else {
                p
            };
        }
    }
    loss
}

/// Point-estimate partition minimizing Binder loss against the
/// co-clustering matrix, searched over the sampled partitions only. Ties
/// resolve to the earliest sample.
pub fn binder_partition(chain: &Chain) -> Result<Partition> {
    let samples = require_samples(chain)?;
    let coclust = coclustering_matrix(chain)?;
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for (s, state) in samples.iter().enumerate() {
        let loss = binder_loss(&state.assignments, &coclust);
        if loss < best_loss {
            best_loss = loss;
            best = s;
        }
    }
    debug_assert!(samples
        .iter()
        .all(|s| binder_loss(&s.assignments, &coclust) >= best_loss));
    Ok(Partition::new(&samples[best].assignments))
}

/// Random effect for a hypothetical new individual: with probability
/// M/(M+L) a fresh draw from the base measure, otherwise the effect of an
/// existing individual chosen uniformly. Each draw first picks a stored
/// sample uniformly, so parameter uncertainty propagates.
pub fn predictive_random_effect_draws<R: Rng + ?Sized>(
    chain: &Chain,
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<RandomEffect>> {
    let samples = require_samples(chain)?;
    let gap_sd = chain.hyper.re_gap_var.sqrt();
    let surv_sd = chain.hyper.re_surv_var.sqrt();
    let gap_base = NormalDist::new(0.0, gap_sd).expect("validated hyperparameter");
    let surv_base = NormalDist::new(0.0, surv_sd).expect("validated hyperparameter");
    let mut out = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let state = &samples[rng.random_range(0..samples.len())];
        let l = state.assignments.len();
        let mass = state.globals.dp_mass;
        let fresh = l == 0 || rng.random::<f64>() < mass / (mass + l as f64);
        if fresh {
            out.push(RandomEffect {
                gap_level: gap_base.sample(rng),
                gap_ar: gap_base.sample(rng),
                surv_shift: surv_base.sample(rng),
            });
        } else {
            let j = rng.random_range(0..l);
            out.push(state.atoms[state.assignments[j]]);
        }
    }
    Ok(out)
}

/// One predictive draw of a new individual's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDraw {
    pub n_events: u32,
    pub surv_time: f64,
    pub log_gaps: Vec<f64>,
}

/// Predictive outcomes for a new individual with covariates `x_new`. Each
/// draw picks a stored sample, a random effect as in
/// [`predictive_random_effect_draws`], a count, and then gaps and survival
/// by rejection under the ordering constraint. Counts are drawn before
/// anything covariate-dependent from a per-draw generator, so the count
/// marginal does not depend on `x_new`.
pub fn predictive_outcome_draws<R: Rng + ?Sized>(
    chain: &Chain,
    x_new: &[f64],
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<OutcomeDraw>> {
    if x_new.len() != chain.covariate_dim {
        return Err(Error::Parameter {
            name: "x_new",
            reason: format!(
                "expected {} covariates, got {}",
                chain.covariate_dim,
                x_new.len()
            ),
        });
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter {
            name: "x_new",
            reason: "covariates must be finite".into(),
        });
    }
    require_samples(chain)?;
    let mut out = Vec::with_capacity(n_draws);
    for d in 0..n_draws {
        let mut sub = derive_rng(rng);
        let state = &chain.samples[sub.random_range(0..chain.samples.len())];
        let effect = predictive_effect_from(state, chain, &mut sub);
        let n = sample_count(state.globals.nb_shape, state.globals.nb_mean, &mut sub);
        let gap_mean = dot(x_new, &state.globals.gap_coefs) + effect.gap_level;
        let surv_mean = dot(x_new, &state.globals.surv_coefs) + effect.surv_shift;
        let (log_gaps, surv_time) = draw_constrained_outcome(
            n,
            gap_mean,
            effect.gap_ar,
            state.globals.gap_var,
            surv_mean,
            state.globals.surv_var,
            d,
            &mut sub,
        )?;
        out.push(OutcomeDraw {
            n_events: n,
            surv_time,
            log_gaps,
        });
    }
    Ok(out)
}

fn predictive_effect_from<R: Rng + ?Sized>(
    state: &ModelState,
    chain: &Chain,
    rng: &mut R,
) -> RandomEffect {
    let l = state.assignments.len();
    let mass = state.globals.dp_mass;
    let fresh = l == 0 || rng.random::<f64>() < mass / (mass + l as f64);
    if fresh {
        let gap_sd = chain.hyper.re_gap_var.sqrt();
        let surv_sd = chain.hyper.re_surv_var.sqrt();
        let gap_base = NormalDist::new(0.0, gap_sd).expect("validated hyperparameter");
        let surv_base = NormalDist::new(0.0, surv_sd).expect("validated hyperparameter");
        RandomEffect {
            gap_level: gap_base.sample(rng),
            gap_ar: gap_base.sample(rng),
            surv_shift: surv_base.sample(rng),
        }
    } else {
        let j = rng.random_range(0..l);
        state.atoms[state.assignments[j]]
    }
}

/// Product-limit survival curve. Returns one point per distinct event
/// time: the time and the survival probability just after it. Tied events
/// and censorings resolve with events first.
pub fn kaplan_meier(times: &[f64], event_flags: &[bool]) -> Result<Vec<(f64, f64)>> {
    if times.is_empty() {
        return Err(Error::Parameter {
            name: "times",
            reason: "need at least one observation".into(),
        });
    }
    if times.len() != event_flags.len() {
        return Err(Error::Parameter {
            name: "event_flags",
            reason: format!("{} flags for {} times", event_flags.len(), times.len()),
        });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Parameter {
            name: "times",
            reason: "times must be finite".into(),
        });
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).expect("finite times"));
    let mut curve = Vec::new();
    let mut surv = 1.0;
    let mut at_risk = times.len() as f64;
    let mut k = 0;
    while k < order.len() {
        let t = times[order[k]];
        let mut events = 0.0;
        let mut removed = 0.0;
        while k < order.len() && times[order[k]] == t {
            if event_flags[order[k]] {
                events += 1.0;
            }
            removed += 1.0;
            k += 1;
        }
        if events > 0.0 {
            surv *= 1.0 - events / at_risk;
            curve.push((t, surv));
        }
        at_risk -= removed;
    }
    Ok(curve)
}

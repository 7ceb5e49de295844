//! Sampler state: global parameters, the clustering of random effects, and
//! per-individual latent quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Globals, RandomEffect};
use crate::sampler::PreparedData;

/// Latent quantities for one individual. For an individual with observed
/// survival these mirror the data exactly; for a censored individual the
/// event count, the log gaps after the censoring time, and the survival
/// time are imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualLatent {
    /// Total number of events, observed plus imputed.
    pub n_events: u32,
    /// Log gaps of the imputed events (those after the censoring time).
    pub tail_gaps: Vec<f64>,
    /// Survival time: the observed death time, or an imputed time beyond
    /// the censoring time.
    pub surv_time: f64,
}

/// Full sampler state. `assignments[i]` indexes into `atoms`, which holds
/// one random effect per occupied cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub globals: Globals,
    pub assignments: Vec<usize>,
    pub atoms: Vec<RandomEffect>,
    pub latents: Vec<IndividualLatent>,
}

// Sums of exponentials are evaluated in different orders in different
// updates, so constraint re-checks allow a relative slack.
const TIME_SLACK: f64 = 1e-9;

impl ModelState {
    /// Deterministic starting point: zero coefficients, unit variances, a
    /// single cluster at the origin, counts at their observed values, and
    /// censored survival times pushed past the censoring time.
    pub fn init(data: &PreparedData) -> ModelState {
        let q = data.covariate_dim();
        let l = data.len();
        let mean_count = if l == 0 {
            0.0
        } else {
            data.individuals()
                .iter()
                .map(|ind| ind.obs_n as f64)
                .sum::<f64>()
                / l as f64
        };
        let latents = data
            .individuals()
            .iter()
            .map(|ind| IndividualLatent {
                n_events: ind.obs_n,
                tail_gaps: Vec::new(),
                surv_time: if ind.survival_observed {
                    ind.censor_time
                } else {
                    1.5 * ind.censor_time.max(ind.obs_last)
                },
            })
            .collect();
        ModelState {
            globals: Globals {
                gap_coefs: vec![0.0; q],
                surv_coefs: vec![0.0; q],
                gap_var: 1.0,
                surv_var: 1.0,
                nb_shape: 1.0,
                nb_mean: mean_count + 1.0,
                dp_mass: 1.0,
            },
            assignments: vec![0; l],
            atoms: vec![RandomEffect {
                gap_level: 0.0,
                gap_ar: 0.0,
                surv_shift: 0.0,
            }],
            latents,
        }
    }

    /// Last event time for individual `i` under the current latents.
    pub(crate) fn total_event_time(&self, data: &PreparedData, i: usize) -> f64 {
        data.ind(i).obs_last
            + self.latents[i]
                .tail_gaps
                .iter()
                .map(|y| y.exp())
                .sum::<f64>()
    }

    pub fn occupied_clusters(&self) -> usize {
        self.atoms.len()
    }

    /// Verifies every structural invariant the updates rely on. Run on each
    /// stored sample.
    pub fn check_invariants(&self, data: &PreparedData) -> Result<()> {
        let l = data.len();
        if self.assignments.len() != l || self.latents.len() != l {
            return Err(Error::Parameter {
                name: "state",
                reason: format!(
                    "state covers {} assignments and {} latents for {l} individuals",
                    self.assignments.len(),
                    self.latents.len()
                ),
            });
        }
        self.globals.validate(data.covariate_dim())?;
        let k = self.atoms.len();
        if l > 0 && k == 0 {
            return Err(Error::Parameter {
                name: "atoms",
                reason: "no clusters for a non-empty cohort".into(),
            });
        }
        let mut occupied = vec![false; k];
        for (i, &a) in self.assignments.iter().enumerate() {
            if a >= k {
                return Err(Error::Individual {
                    index: i,
                    reason: format!("assigned to cluster {a} of {k}"),
                });
            }
            occupied[a] = true;
        }
        if l > 0 && occupied.iter().any(|&o| !o) {
            return Err(Error::Parameter {
                name: "atoms",
                reason: "unoccupied cluster atom retained".into(),
            });
        }
        for (c, atom) in self.atoms.iter().enumerate() {
            if ![atom.gap_level, atom.gap_ar, atom.surv_shift]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::Parameter {
                    name: "atoms",
                    reason: format!("cluster {c} atom is not finite"),
                });
            }
        }
        for i in 0..l {
            self.check_individual(data, i)?;
        }
        Ok(())
    }

    fn check_individual(&self, data: &PreparedData, i: usize) -> Result<()> {
        let ind = data.ind(i);
        let latent = &self.latents[i];
        let fail = |reason: String| Err(Error::Individual { index: i, reason });
        if !latent.surv_time.is_finite() || latent.surv_time <= 0.0 {
            return fail(format!("survival time {} invalid", latent.surv_time));
        }
        if latent.tail_gaps.iter().any(|y| !y.is_finite()) {
            return fail("imputed log gap is not finite".into());
        }
        if ind.survival_observed {
            if latent.n_events != ind.obs_n
                || !latent.tail_gaps.is_empty()
                || latent.surv_time != ind.censor_time
            {
                return fail("latents for an observed death must match the data".into());
            }
        } else {
            if latent.n_events != ind.obs_n + latent.tail_gaps.len() as u32 {
                return fail(format!(
                    "count {} disagrees with {} observed + {} imputed events",
                    latent.n_events,
                    ind.obs_n,
                    latent.tail_gaps.len()
                ));
            }
            if latent.surv_time < ind.censor_time {
                return fail(format!(
                    "imputed survival {} before censoring time {}",
                    latent.surv_time, ind.censor_time
                ));
            }
            if let Some(&first) = latent.tail_gaps.first() {
                // The first imputed event must land beyond the censoring
                // time, otherwise it would have been observed.
                let t = ind.obs_last + first.exp();
                if t < ind.censor_time * (1.0 - TIME_SLACK) {
                    return fail(format!(
                        "first imputed event at {t} before censoring time {}",
                        ind.censor_time
                    ));
                }
            }
        }
        let total = self.total_event_time(data, i);
        if total > latent.surv_time * (1.0 + TIME_SLACK) {
            return fail(format!(
                "last event at {total} after survival time {}",
                latent.surv_time
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Individual};

    fn small_data() -> PreparedData {
        let a = Individual::new(vec![1.0], vec![0.5, 1.2], 2.0, true).unwrap();
        let b = Individual::new(vec![0.0], vec![0.8], 1.5, false).unwrap();
        PreparedData::new(&Dataset::new(1, vec![a, b]).unwrap()).unwrap()
    }

    #[test]
    fn init_is_feasible_and_deterministic() {
        let data = small_data();
        let s1 = ModelState::init(&data);
        let s2 = ModelState::init(&data);
        assert_eq!(s1, s2);
        s1.check_invariants(&data).unwrap();
        assert_eq!(s1.latents[0].surv_time, 2.0);
        assert!(s1.latents[1].surv_time > 1.5);
        // Starting count mean: average observed count plus one.
        assert!((s1.globals.nb_mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn init_handles_empty_cohort() {
        let data = PreparedData::new(&Dataset::new(2, vec![]).unwrap()).unwrap();
        let s = ModelState::init(&data);
        s.check_invariants(&data).unwrap();
        assert_eq!(s.globals.nb_mean, 1.0);
    }

    #[test]
    fn invariants_catch_count_mismatch_and_ordering() {
        let data = small_data();
        let mut s = ModelState::init(&data);
        s.latents[1].n_events = 3;
        assert!(s.check_invariants(&data).is_err());

        let mut s = ModelState::init(&data);
        s.latents[1].n_events = 2;
        s.latents[1].tail_gaps = vec![10.0]; // event far past survival time
        assert!(s.check_invariants(&data).is_err());

        // A consistent imputation passes: one extra event between censoring
        // and survival time.
        let mut s = ModelState::init(&data);
        s.latents[1].surv_time = 3.0;
        s.latents[1].n_events = 2;
        s.latents[1].tail_gaps = vec![(1.0f64).ln()]; // event at 1.8
        s.check_invariants(&data).unwrap();
    }

    #[test]
    fn invariants_pin_observed_individuals_to_their_data() {
        let data = small_data();
        let mut s = ModelState::init(&data);
        s.latents[0].surv_time = 2.5;
        assert!(s.check_invariants(&data).is_err());
        let mut s = ModelState::init(&data);
        s.latents[0].tail_gaps = vec![0.0];
        s.latents[0].n_events = 3;
        assert!(s.check_invariants(&data).is_err());
    }

    #[test]
    fn invariants_reject_dangling_cluster_structure() {
        let data = small_data();
        let mut s = ModelState::init(&data);
        s.assignments[0] = 4;
        assert!(s.check_invariants(&data).is_err());
        let mut s = ModelState::init(&data);
        s.atoms.push(RandomEffect {
            gap_level: 0.0,
            gap_ar: 0.0,
            surv_shift: 0.0,
        });
        assert!(s.check_invariants(&data).is_err());
    }

    #[test]
    fn first_imputed_event_must_clear_censoring_time() {
        let data = small_data();
        let mut s = ModelState::init(&data);
        // Individual 1: censored at 1.5 with last observed event at 0.8.
        // An imputed event at 0.8 + 0.3 = 1.1 would have been observed.
        s.latents[1].n_events = 2;
        s.latents[1].tail_gaps = vec![(0.3f64).ln()];
        s.latents[1].surv_time = 3.0;
        assert!(s.check_invariants(&data).is_err());
    }
}

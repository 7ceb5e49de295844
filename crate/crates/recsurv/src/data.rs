//! Observed data types: per-individual event histories with a terminal
//! censoring or death time, and the log gap-time transform the model works
//! on.

use crate::error::{Error, Result, RowIssue};

/// Log gap times ln(t_j - t_{j-1}) for one individual, with t_0 = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGapVector(Vec<f64>);

impl LogGapVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter {
                name: "log_gaps",
                reason: format!("entry {bad} is not finite"),
            });
        }
        Ok(LogGapVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Strictly increasing event times mapped to log gaps.
pub fn to_log_gaps(event_times: &[f64]) -> Result<LogGapVector> {
    let mut gaps = Vec::with_capacity(event_times.len());
    let mut prev = 0.0;
    for (j, &t) in event_times.iter().enumerate() {
        if !t.is_finite() || t <= prev {
            return Err(Error::Parameter {
                name: "event_times",
                reason: format!(
                    "time {t} at position {j} does not exceed its predecessor {prev}"
                ),
            });
        }
        gaps.push((t - prev).ln());
        prev = t;
    }
    LogGapVector::new(gaps)
}

/// Inverse of [`to_log_gaps`]: cumulative sums of exponentiated gaps.
pub fn from_log_gaps(gaps: &LogGapVector) -> Result<Vec<f64>> {
    let mut times = Vec::with_capacity(gaps.len());
    let mut acc = 0.0;
    for (j, &y) in gaps.as_slice().iter().enumerate() {
        acc += y.exp();
        if !acc.is_finite() {
            return Err(Error::Overflow {
                context: format!("cumulative event time at gap {j}"),
            });
        }
        times.push(acc);
    }
    Ok(times)
}

/// One observed individual: covariates, the events seen before the terminal
/// time, and whether that terminal time is a death (`survival_observed`) or
/// a censoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    covariates: Vec<f64>,
    event_times: Vec<f64>,
    censor_time: f64,
    survival_observed: bool,
}

impl Individual {
    pub fn new(
        covariates: Vec<f64>,
        event_times: Vec<f64>,
        censor_time: f64,
        survival_observed: bool,
    ) -> Result<Self> {
        check_individual(&covariates, &event_times, censor_time)?;
        Ok(Individual {
            covariates,
            event_times,
            censor_time,
            survival_observed,
        })
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// Observed event count; a lower bound for censored individuals.
    pub fn n_events(&self) -> usize {
        self.event_times.len()
    }

    /// Death time when `survival_observed`, otherwise the censoring time.
    pub fn censor_time(&self) -> f64 {
        self.censor_time
    }

    pub fn survival_observed(&self) -> bool {
        self.survival_observed
    }
}

fn check_individual(covariates: &[f64], event_times: &[f64], censor_time: f64) -> Result<()> {
    if covariates.is_empty() {
        return Err(Error::Parameter {
            name: "covariates",
            reason: "at least one covariate is required".into(),
        });
    }
    if let Some(k) = covariates.iter().position(|x| !x.is_finite()) {
        return Err(Error::Parameter {
            name: "covariates",
            reason: format!("entry {k} is not finite"),
        });
    }
    if !censor_time.is_finite() || censor_time <= 0.0 {
        return Err(Error::Parameter {
            name: "censor_time",
            reason: format!("must be positive and finite, got {censor_time}"),
        });
    }
    let mut prev = 0.0;
    for (j, &t) in event_times.iter().enumerate() {
        if !t.is_finite() || t <= prev {
            return Err(Error::Parameter {
                name: "event_times",
                reason: format!("time {t} at position {j} does not exceed {prev}"),
            });
        }
        prev = t;
    }
    if prev > censor_time {
        return Err(Error::Parameter {
            name: "event_times",
            reason: format!("last event {prev} exceeds terminal time {censor_time}"),
        });
    }
    Ok(())
}

/// A study cohort with a common covariate dimension. May be empty, which is
/// useful for prior-only runs; file ingestion rejects empty cohorts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariate_dim: usize,
    individuals: Vec<Individual>,
}

impl Dataset {
    pub fn new(covariate_dim: usize, individuals: Vec<Individual>) -> Result<Self> {
        if covariate_dim == 0 {
            return Err(Error::Parameter {
                name: "covariate_dim",
                reason: "must be at least 1".into(),
            });
        }
        for (i, ind) in individuals.iter().enumerate() {
            if ind.covariates.len() != covariate_dim {
                return Err(Error::Individual {
                    index: i,
                    reason: format!(
                        "has {} covariates, dataset expects {covariate_dim}",
                        ind.covariates.len()
                    ),
                });
            }
        }
        Ok(Dataset {
            covariate_dim,
            individuals,
        })
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }
}

/// Unvalidated individual as read from disk. Event times may arrive in any
/// order; validation sorts them and then demands strict increase.
#[derive(Debug, Clone, PartialEq)]
pub struct RawIndividual {
    pub id: String,
    pub covariates: Vec<f64>,
    pub event_times: Vec<f64>,
    pub censor_time: f64,
    pub survival_observed: bool,
}

/// Checks every row and reports all problems at once rather than stopping at
/// the first. Requires a non-empty cohort with a consistent covariate
/// dimension.
pub fn validate_dataset(rows: &[RawIndividual]) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::Parameter {
            name: "dataset",
            reason: "no individuals".into(),
        });
    }
    let dim = rows[0].covariates.len();
    let mut issues = Vec::new();
    let mut individuals = Vec::with_capacity(rows.len());
    for row in rows {
        match validate_row(row, dim) {
            Ok(ind) => individuals.push(ind),
            Err(reason) => issues.push(RowIssue {
                id: row.id.clone(),
                reason,
            }),
        }
    }
    if !issues.is_empty() {
        return Err(Error::DatasetRows { issues });
    }
    Dataset::new(dim, individuals)
}

fn validate_row(row: &RawIndividual, dim: usize) -> std::result::Result<Individual, String> {
    if row.covariates.len() != dim {
        return Err(format!(
            "has {} covariates, expected {dim}",
            row.covariates.len()
        ));
    }
    if row.event_times.iter().any(|t| !t.is_finite()) {
        return Err("event time is not finite".into());
    }
    let mut times = row.event_times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times compare"));
    if times.windows(2).any(|w| w[0] == w[1]) {
        return Err("duplicate event times".into());
    }
    Individual::new(
        row.covariates.clone(),
        times,
        row.censor_time,
        row.survival_observed,
    )
    .map_err(|e| e.to_string())
}

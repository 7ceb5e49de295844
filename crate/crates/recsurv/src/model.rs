//! Model parameters, densities, and the lognormal moment-matching
//! approximation of the event/survival ordering probability.
//!
//! For one individual with covariates x, random effect (m, d), and latent
//! event count N, the complete-data joint is
//!
//! ```text
//! p(N | r, lambda) * f(Y | x, beta, m, sigma2) * f(S | x, gamma, d, eta2)
//!     * 1(T_N <= S) / C(x, theta, N)
//! ```
//!
//! where Y are the N log gap times with an AR(1) mean structure, T_N is the
//! last event time, S is lognormal, and C is the probability of the ordering
//! constraint under the unconstrained pair (Y, S).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::stats::{
    dot, gamma_lpdf, inv_gamma_lpdf, log_normal_cdf, lognormal_lpdf, normal_lpdf, LogSumAcc,
};

/// Population-level parameters shared by every individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Globals {
    /// Regression coefficients for the log gap-time mean.
    pub gap_coefs: Vec<f64>,
    /// Regression coefficients for the log survival-time mean.
    pub surv_coefs: Vec<f64>,
    /// Innovation variance of the log gap times.
    pub gap_var: f64,
    /// Variance of the log survival time.
    pub surv_var: f64,
    /// Negative-binomial shape of the event count.
    pub nb_shape: f64,
    /// Negative-binomial mean of the event count.
    pub nb_mean: f64,
    /// Dirichlet process concentration.
    pub dp_mass: f64,
}

impl Globals {
    pub fn validate(&self, covariate_dim: usize) -> Result<()> {
        if self.gap_coefs.len() != covariate_dim || self.surv_coefs.len() != covariate_dim {
            return Err(Error::Parameter {
                name: "coefficients",
                reason: format!(
                    "expected {covariate_dim} gap and survival coefficients, got {} and {}",
                    self.gap_coefs.len(),
                    self.surv_coefs.len()
                ),
            });
        }
        let positives: [(&'static str, f64); 5] = [
            ("gap_var", self.gap_var),
            ("surv_var", self.surv_var),
            ("nb_shape", self.nb_shape),
            ("nb_mean", self.nb_mean),
            ("dp_mass", self.dp_mass),
        ];
        for (name, v) in positives {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.gap_coefs.iter().chain(&self.surv_coefs).any(|c| !c.is_finite()) {
            return Err(Error::Parameter {
                name: "coefficients",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Individual-level random effect, shared within a cluster: a level shift
/// and an AR(1) coefficient for the log gap times, and a level shift for the
/// log survival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomEffect {
    pub gap_level: f64,
    pub gap_ar: f64,
    pub surv_shift: f64,
}

/// Fixed prior settings. Variance parameters use inverse-gamma priors
/// specified by (df, scale) so that the prior is InvGamma(df/2, df*scale/2);
/// positive rates use shape/rate gamma priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub gap_coef_var: f64,
    pub surv_coef_var: f64,
    /// Variance of the base measure for (gap_level, gap_ar).
    pub re_gap_var: f64,
    /// Variance of the base measure for surv_shift.
    pub re_surv_var: f64,
    pub gap_var_df: f64,
    pub gap_var_scale: f64,
    pub surv_var_df: f64,
    pub surv_var_scale: f64,
    pub dp_mass_shape: f64,
    pub dp_mass_rate: f64,
    pub nb_shape_prior_shape: f64,
    pub nb_shape_prior_rate: f64,
    pub nb_mean_prior_shape: f64,
    pub nb_mean_prior_rate: f64,
}

impl Default for Hyperparams {
    /// Weakly informative defaults: coefficient and random-effect variances
    /// of 100, variance priors with mean 1 and variance 100, unit-mean
    /// priors on the concentration and count shape, and a count mean prior
    /// with mean 10.
    fn default() -> Self {
        Hyperparams {
            gap_coef_var: 100.0,
            surv_coef_var: 100.0,
            re_gap_var: 100.0,
            re_surv_var: 100.0,
            gap_var_df: 4.02,
            gap_var_scale: 1.01 / 2.01,
            surv_var_df: 4.02,
            surv_var_scale: 1.01 / 2.01,
            dp_mass_shape: 1.0,
            dp_mass_rate: 1.0,
            nb_shape_prior_shape: 1.0,
            nb_shape_prior_rate: 1.0,
            nb_mean_prior_shape: 1.0,
            nb_mean_prior_rate: 0.1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 14] = [
            ("gap_coef_var", self.gap_coef_var),
            ("surv_coef_var", self.surv_coef_var),
            ("re_gap_var", self.re_gap_var),
            ("re_surv_var", self.re_surv_var),
            ("gap_var_df", self.gap_var_df),
            ("gap_var_scale", self.gap_var_scale),
            ("surv_var_df", self.surv_var_df),
            ("surv_var_scale", self.surv_var_scale),
            ("dp_mass_shape", self.dp_mass_shape),
            ("dp_mass_rate", self.dp_mass_rate),
            ("nb_shape_prior_shape", self.nb_shape_prior_shape),
            ("nb_shape_prior_rate", self.nb_shape_prior_rate),
            ("nb_mean_prior_shape", self.nb_mean_prior_shape),
            ("nb_mean_prior_rate", self.nb_mean_prior_rate),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Log pmf of the event count: negative binomial with shape `shape` and
/// mean `mean`, support {0, 1, 2, ...}.
pub fn nb_log_pmf(n: u32, shape: f64, mean: f64) -> f64 {
    let nf = n as f64;
    ln_gamma(nf + shape) - ln_gamma(shape) - ln_gamma(nf + 1.0)
        + shape * (shape / (shape + mean)).ln()
        + nf * (mean / (shape + mean)).ln()
}

/// Same distribution renormalized to {0, ..., max_n}; -inf above the cap.
pub fn nb_log_pmf_truncated(n: u32, shape: f64, mean: f64, max_n: u32) -> f64 {
    if n > max_n {
        return f64::NEG_INFINITY;
    }
    let mut acc = LogSumAcc::new();
    for k in 0..=max_n {
        acc.add(nb_log_pmf(k, shape, mean));
    }
    nb_log_pmf(n, shape, mean) - acc.value()
}

pub(crate) fn count_log_pmf(n: u32, shape: f64, mean: f64, cap: Option<u32>) -> f64 {
    match cap {
        None => nb_log_pmf(n, shape, mean),
        Some(c) => nb_log_pmf_truncated(n, shape, mean, c),
    }
}

/// AR(1) Gaussian log density of a gap sequence split into two contiguous
/// pieces (observed head, imputed tail). The first gap is unconditionally
/// Normal(level, var); each later gap regresses toward the level with
/// coefficient `ar`. Empty input has density one.
pub(crate) fn ar1_log_density(head: &[f64], tail: &[f64], level: f64, ar: f64, var: f64) -> f64 {
    let mut lp = 0.0;
    let mut prev = f64::NAN;
    for (j, &y) in head.iter().chain(tail).enumerate() {
        let mean = if j == 0 { level } else { level + ar * (prev - level) };
        lp += normal_lpdf(y, mean, var);
        prev = y;
    }
    lp
}

/// Log density of an individual's log gap times given covariates,
/// coefficients, and a random effect.
pub fn log_gap_density(
    log_gaps: &[f64],
    covariates: &[f64],
    gap_coefs: &[f64],
    re: &RandomEffect,
    gap_var: f64,
) -> f64 {
    ar1_log_density(
        log_gaps,
        &[],
        dot(covariates, gap_coefs) + re.gap_level,
        re.gap_ar,
        gap_var,
    )
}

/// Lognormal log density of the survival time.
pub fn log_surv_density(
    surv_time: f64,
    covariates: &[f64],
    surv_coefs: &[f64],
    re: &RandomEffect,
    surv_var: f64,
) -> Result<f64> {
    if !(surv_time > 0.0) || !surv_time.is_finite() {
        return Err(Error::Parameter {
            name: "surv_time",
            reason: format!("must be positive and finite, got {surv_time}"),
        });
    }
    Ok(lognormal_lpdf(
        surv_time,
        dot(covariates, surv_coefs) + re.surv_shift,
        surv_var,
    ))
}

/// Covariate-free part of the moment-matched lognormal approximation to the
/// last event time T_N. The mean enters both matched parameters through a
/// shift, so a shape computed once per (ar, var, n) serves every mean.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FwShape {
    /// log E[T_N] minus the shared mean.
    log_scale: f64,
    /// Matched log-scale variance, log(E[T^2] / E[T]^2).
    spread: f64,
}

impl FwShape {
    pub(crate) fn new(ar: f64, var: f64, n: u32) -> Result<Self> {
        debug_assert!(n >= 1);
        let n = n as usize;
        // Marginal log-gap variances under the AR(1) recursion, and the
        // covariances cov(Y_j, Y_k) = ar^{|j-k|} v_{min(j,k)}.
        let mut v = vec![0.0f64; n];
        v[0] = var;
        for j in 1..n {
            v[j] = var + ar * ar * v[j - 1];
        }
        if !v[n - 1].is_finite() {
            return Err(Error::Overflow {
                context: "moment matching gap variances".into(),
            });
        }
        let mut first = LogSumAcc::new();
        for &vj in &v {
            first.add(0.5 * vj);
        }
        let log_scale = first.value();
        let mut second = LogSumAcc::new();
        let mut ar_pow = vec![0.0f64; n];
        for (d, p) in ar_pow.iter_mut().enumerate() {
            *p = ar.powi(d as i32);
        }
        for j in 0..n {
            second.add(v[j] + v[j]); // diagonal: (v_j + v_j)/2 + v_j
            for k in (j + 1)..n {
                let term = 0.5 * (v[j] + v[k]) + ar_pow[k - j] * v[j];
                second.add(term + std::f64::consts::LN_2);
            }
        }
        let lse2 = second.value();
        if !log_scale.is_finite() || !lse2.is_finite() {
            return Err(Error::Overflow {
                context: "moment matching sums".into(),
            });
        }
        // Jensen guarantees positivity; the floor guards cancellation when
        // var is at the edge of precision.
        let spread = (lse2 - 2.0 * log_scale).max(1e-15);
        Ok(FwShape { log_scale, spread })
    }

    /// Matched lognormal parameters for the given shared gap mean.
    pub(crate) fn lognormal_params(&self, mean: f64) -> (f64, f64) {
        (mean + self.log_scale - 0.5 * self.spread, self.spread)
    }
}

/// Lognormal parameters (location, log-scale variance) matched to the first
/// two moments of the last event time T_N for an individual with n >= 1
/// events. Exact when n = 1.
pub fn fenton_wilkinson(
    covariates: &[f64],
    gap_coefs: &[f64],
    re: &RandomEffect,
    gap_var: f64,
    n: u32,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Parameter {
            name: "n",
            reason: "moment matching needs at least one event".into(),
        });
    }
    let shape = FwShape::new(re.gap_ar, gap_var, n)?;
    Ok(shape.lognormal_params(dot(covariates, gap_coefs) + re.gap_level))
}

pub(crate) fn log_norm_constant_from_parts(
    shape: &FwShape,
    gap_mean: f64,
    surv_mean: f64,
    surv_var: f64,
) -> f64 {
    let (mu_t, s2_t) = shape.lognormal_params(gap_mean);
    log_normal_cdf((surv_mean - mu_t) / (s2_t + surv_var).sqrt()).min(0.0)
}

/// Log of the approximate ordering probability P(T_N <= S); zero when n = 0.
pub fn log_norm_constant(
    covariates: &[f64],
    gap_coefs: &[f64],
    surv_coefs: &[f64],
    re: &RandomEffect,
    gap_var: f64,
    surv_var: f64,
    n: u32,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let shape = FwShape::new(re.gap_ar, gap_var, n)?;
    Ok(log_norm_constant_from_parts(
        &shape,
        dot(covariates, gap_coefs) + re.gap_level,
        dot(covariates, surv_coefs) + re.surv_shift,
        surv_var,
    ))
}

/// Complete-data log joint for one individual (count pmf excluded): gap and
/// survival densities, the ordering indicator, and the normalizing constant.
/// Returns -inf when the constraint T_N <= S fails or S is not positive.
pub fn log_joint(
    log_gaps: &[f64],
    surv_time: f64,
    covariates: &[f64],
    globals: &Globals,
    re: &RandomEffect,
) -> Result<f64> {
    if !(surv_time > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let total: f64 = log_gaps.iter().map(|y| y.exp()).sum();
    if total > surv_time {
        return Ok(f64::NEG_INFINITY);
    }
    let gap = log_gap_density(log_gaps, covariates, globals.gap_coefs.as_slice(), re, globals.gap_var);
    let surv = log_surv_density(
        surv_time,
        covariates,
        globals.surv_coefs.as_slice(),
        re,
        globals.surv_var,
    )?;
    let lnc = log_norm_constant(
        covariates,
        &globals.gap_coefs,
        &globals.surv_coefs,
        re,
        globals.gap_var,
        globals.surv_var,
        log_gaps.len() as u32,
    )?;
    Ok(gap + surv - lnc)
}

/// Log prior density of the global parameters.
pub fn log_prior(globals: &Globals, hyper: &Hyperparams) -> f64 {
    let mut lp = 0.0;
    for &b in &globals.gap_coefs {
        lp += normal_lpdf(b, 0.0, hyper.gap_coef_var);
    }
    for &g in &globals.surv_coefs {
        lp += normal_lpdf(g, 0.0, hyper.surv_coef_var);
    }
    lp += inv_gamma_lpdf(
        globals.gap_var,
        0.5 * hyper.gap_var_df,
        0.5 * hyper.gap_var_df * hyper.gap_var_scale,
    );
    lp += inv_gamma_lpdf(
        globals.surv_var,
        0.5 * hyper.surv_var_df,
        0.5 * hyper.surv_var_df * hyper.surv_var_scale,
    );
    lp += gamma_lpdf(
        globals.nb_shape,
        hyper.nb_shape_prior_shape,
        hyper.nb_shape_prior_rate,
    );
    lp += gamma_lpdf(
        globals.nb_mean,
        hyper.nb_mean_prior_shape,
        hyper.nb_mean_prior_rate,
    );
    lp += gamma_lpdf(globals.dp_mass, hyper.dp_mass_shape, hyper.dp_mass_rate);
    lp
}

/// Log density of a random effect under the base measure.
pub fn log_base_measure(re: &RandomEffect, hyper: &Hyperparams) -> f64 {
    normal_lpdf(re.gap_level, 0.0, hyper.re_gap_var)
        + normal_lpdf(re.gap_ar, 0.0, hyper.re_gap_var)
        + normal_lpdf(re.surv_shift, 0.0, hyper.re_surv_var)
}

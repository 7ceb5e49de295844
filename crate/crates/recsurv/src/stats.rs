//! Log-scale density and tail-probability helpers shared across the model
//! and sampler. Everything here works in log space so chains of products
//! stay finite.

use rand::Rng;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837877066409345483560659472811;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log(sum(exp(terms))), stable under large offsets. Empty input gives -inf.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Streaming log-sum-exp: feeds terms one at a time without storing them.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl LogSumAcc {
    pub(crate) fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub(crate) fn add(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.sum += (term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn normal_lpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// Density of X with ln X ~ Normal(mu, var), evaluated at x > 0.
pub fn lognormal_lpdf(x: f64, mu: f64, var: f64) -> f64 {
    let lx = x.ln();
    normal_lpdf(lx, mu, var) - lx
}

/// Gamma density with shape-rate parameterization (mean = shape / rate).
pub fn gamma_lpdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Inverse-gamma density with shape a and scale b (mean = b / (a - 1)).
pub fn inv_gamma_lpdf(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

// Below this point erfc underflows and the continued-fraction expansion of
// the Mills ratio takes over.
const TAIL_SWITCH: f64 = -37.0;

/// ln Phi(z), finite for any finite z (Phi underflows to 0 near z = -38).
pub fn log_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        // ln(1 - Q(z)) with the upper tail Q computed stably.
        return (-0.5 * erfc(z / SQRT_2)).ln_1p();
    }
    if z > TAIL_SWITCH {
        return (0.5 * erfc(-z / SQRT_2)).ln();
    }
    // Asymptotic series Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - ...).
    let zi = 1.0 / (z * z);
    let series = 1.0 + zi * (-1.0 + zi * (3.0 + zi * (-15.0 + zi * 105.0)));
    -0.5 * z * z - (-z).ln() - 0.5 * LN_2PI + series.ln()
}

/// Solves ln P(Z > z) = log_tail for z, where Z is standard normal.
/// Requires log_tail < 0; the deeper the tail, the larger the root.
pub fn normal_tail_quantile_from_log(log_tail: f64) -> f64 {
    assert!(log_tail < 0.0, "log tail probability must be negative");
    // g(z) = ln Q(z) - log_tail is strictly decreasing; bracket then apply
    // safeguarded Newton. For very small tails start from the asymptotic
    // inversion of ln Q(z) ~ -z^2/2 - ln z - ln sqrt(2pi).
    let mut lo = -38.0;
    let mut hi = if log_tail > -700.0 {
        40.0
    } else {
        let t = -2.0 * log_tail;
        (t - (t).ln()).sqrt() + 2.0
    };
    debug_assert!(log_normal_cdf(-hi) <= log_tail);
    let g = |z: f64| log_normal_cdf(-z) - log_tail;
    let mut z = 0.5 * (lo + hi);
    if log_tail < -3.0 {
        let t = -2.0 * log_tail;
        z = (t - t.ln()).sqrt().clamp(lo, hi);
    }
    for _ in 0..200 {
        let gz = g(z);
        if gz > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        // d/dz ln Q(z) = -phi(z)/Q(z)
        let ln_phi = -0.5 * z * z - 0.5 * LN_2PI;
        let deriv = -(ln_phi - log_normal_cdf(-z)).exp();
        let step = gz / deriv;
        let mut next = z - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-14 * (1.0 + z.abs()) {
            return next;
        }
        z = next;
    }
    z
}

/// Draws S with ln S ~ Normal(mu, var) conditioned on S > lower.
/// A non-positive lower bound means no truncation.
pub fn truncated_lognormal_draw<R: Rng + ?Sized>(
    mu: f64,
    var: f64,
    lower: f64,
    rng: &mut R,
) -> f64 {
    let sd = var.sqrt();
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    if lower <= 0.0 {
        return (mu + sd * standard_normal_quantile(u)).exp();
    }
    let a = (lower.ln() - mu) / sd;
    let ln_tail = log_normal_cdf(-a) + u.ln();
    let z = normal_tail_quantile_from_log(ln_tail);
    (mu + sd * z.max(a)).exp()
}

/// Phi^{-1}(p) for p in (0, 1), via the tail solver for symmetry.
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1)");
    if p < 0.5 {
        -normal_tail_quantile_from_log(p.ln())
    } else {
        normal_tail_quantile_from_log((1.0 - p).ln())
    }
}

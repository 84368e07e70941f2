//! Numerical building blocks shared by the model modules.

pub mod normal;
pub mod quadrature;
pub mod roots;
pub mod simplex;

use statrs::function::factorial::ln_binomial as statrs_ln_binomial;

/// `ln(sum(exp(x)))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `exp(x) / (1 + exp(x))`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    statrs_ln_binomial(n as u64, k as u64)
}

/// Binomial(n, logistic(logit)) probability mass function over `0..=n`.
///
/// Works from the logit so that success probabilities extremely close to
/// 0 or 1 keep full relative precision.
pub fn binomial_pmf_logit(n: usize, logit: f64) -> Vec<f64> {
    if logit.is_infinite() {
        let mut out = vec![0.0; n + 1];
        out[if logit > 0.0 { n } else { 0 }] = 1.0;
        return out;
    }
    let ln_p = -softplus(-logit);
    let ln_q = -softplus(logit);
    (0..=n)
        .map(|k| (ln_binomial(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q).exp())
        .collect()
}

/// Linear convolution of two probability vectors.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub fn zero() -> Self {
        Self {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
        }
    }

    pub fn from_parts(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            Self::zero()
        } else {
            Self {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    pub fn add(self, other: Self) -> Self {
        if self.sign == 0.0 {
            return other;
        }
        if other.sign == 0.0 {
            return self;
        }
        if self.sign == other.sign {
            return Self::from_parts(self.sign, log_add_exp(self.ln_abs, other.ln_abs));
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let diff = small.ln_abs - big.ln_abs;
        if diff == 0.0 {
            return Self::zero();
        }
        // ln(1 - exp(diff)) with diff < 0
        let ln_rest = if diff > -std::f64::consts::LN_2 {
            (-diff.exp_m1()).ln()
        } else {
            (-diff.exp()).ln_1p()
        };
        Self::from_parts(big.sign, big.ln_abs + ln_rest)
    }

    pub fn value(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

/// Total variation distance between two probability vectors.
///
/// Missing trailing entries are treated as zero.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

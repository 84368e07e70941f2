//! Univariate and bivariate standard normal functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::OnceLock;

use libm::erfc;
use statrs::function::erf::erfc_inv;

use super::quadrature::gauss_legendre;

const TWO_PI: f64 = 2.0 * PI;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / TWO_PI.sqrt()
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF, polished by one Halley step.
pub fn inv_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let d = pdf(x);
    if d == 0.0 {
        return x;
    }
    // Residual taken in the tail closer to p to avoid cancellation.
    let u = if x < 0.0 { (cdf(x) - p) / d } else { ((1.0 - p) - cdf(-x)) / d };
    x - u / (1.0 + 0.5 * x * u)
}

fn genz_rules() -> &'static [(Vec<f64>, Vec<f64>); 3] {
    static RULES: OnceLock<[(Vec<f64>, Vec<f64>); 3]> = OnceLock::new();
    RULES.get_or_init(|| {
        // Genz uses the negative half of the 6-, 12- and 20-point rules.
        let half = |n: usize| {
            let (x, w) = gauss_legendre(n);
            (x[..n / 2].to_vec(), w[..n / 2].to_vec())
        };
        [half(6), half(12), half(20)]
    })
}

/// Upper orthant probability `P(X > h, Y > k)` for a standard bivariate
/// normal pair with correlation `r`.
///
/// Port of Genz's BVND (Drezner–Wesolowsky with Gauss–Legendre
/// refinements); absolute accuracy is around `1e-15`.
pub fn bivariate_upper(h: f64, k: f64, r: f64) -> f64 {
    let rules = genz_rules();
    let (xs, ws) = if r.abs() < 0.3 {
        (&rules[0].0, &rules[0].1)
    } else if r.abs() < 0.75 {
        (&rules[1].0, &rules[1].1)
    } else {
        (&rules[2].0, &rules[2].1)
    };

    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (x, w) in xs.iter().zip(ws) {
            let sn = (asr * (x + 1.0) / 2.0).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            let sn = (asr * (-x + 1.0) / 2.0).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        return bvn * asr / (2.0 * TWO_PI) + cdf(-h) * cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * TWO_PI.sqrt()
                * cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (x, w) in xs.iter().zip(ws) {
            for is in [-1.0, 1.0] {
                let xs_ = (a * (is * x + 1.0)).powi(2);
                let rs = (1.0 - xs_).sqrt();
                bvn += a
                    * w
                    * ((-bs / (2.0 * xs_) - hk / (1.0 + rs)).exp() / rs
                        - (-(bs / xs_ + hk) / 2.0).exp() * (1.0 + c * xs_ * (1.0 + d * xs_)));
            }
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn += cdf(-h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += cdf(k) - cdf(h);
            } else {
                bvn += cdf(-h) - cdf(-k);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Bivariate normal CDF `P(X <= a, Y <= b)` with correlation `rho`.
pub fn bivariate_cdf(a: f64, b: f64, rho: f64) -> f64 {
    bivariate_upper(-a, -b, rho)
}

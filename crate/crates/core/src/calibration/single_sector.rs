//! The single-sector root equation for the firm weight.
//!
//! With one sector of `N` firms, `Pr(X_1 = 1) = q` holds exactly when
//!
//! ```text
//! g(e^x) + e^{eta_S} g(e^{eta_FS + x}) = 0,   g(y) = (1 - (1-q)/q * y)(1+y)^{N-1}
//! ```
//!
//! The factor `(1+y)^{N-1}` overflows for realistic `N`, so each term is
//! kept as a sign and a log-magnitude and only the sign of the sum is used.

use crate::error::{Error, Result};
use crate::numeric::roots::bisect_sign;
use crate::numeric::{softplus, SignedLog};

const BRACKET: (f64, f64) = (-50.0, 50.0);

/// `ln|g(e^x)|` with its sign.
fn log_g(x: f64, ln_c: f64, n: usize) -> SignedLog {
    let first = SignedLog::from_parts(1.0, 0.0).add(SignedLog::from_parts(-1.0, ln_c + x));
    SignedLog::from_parts(first.sign, first.ln_abs + (n - 1) as f64 * softplus(x))
}

fn residual_sign(x: f64, q: f64, n: usize, eta_s: f64, eta_fs: f64) -> f64 {
    let ln_c = ((1.0 - q) / q).ln();
    let a = log_g(x, ln_c, n);
    let b = log_g(eta_fs + x, ln_c, n);
    a.add(SignedLog::from_parts(b.sign, b.ln_abs + eta_s)).sign
}

/// Solves for the firm weight that gives every firm default probability
/// `q` in a single sector of `n` firms.
pub fn solve_eta_f(q: f64, n: usize, eta_s: f64, eta_fs: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("default probability {q} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::domain("sector needs at least one firm"));
    }
    if !(eta_s.is_finite() && eta_fs.is_finite()) {
        return Err(Error::invalid("weights must be finite"));
    }
    if eta_fs == 0.0 {
        return Ok((q / (1.0 - q)).ln());
    }
    bisect_sign(
        |x| residual_sign(x, q, n, eta_s, eta_fs),
        BRACKET.0,
        BRACKET.1,
        1e-10,
        "single-sector marginal equation",
    )
}

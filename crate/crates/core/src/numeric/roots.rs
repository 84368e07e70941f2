//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on a sign oracle.
///
/// `sign(x)` must return the sign of the function (`-1`, `0` or `1`); this
/// lets callers evaluate the sign in log space where the function value
/// itself would overflow. Stops once the bracket is narrower than `xtol`.
pub fn bisect_sign<F>(mut sign: F, lo: f64, hi: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let sa = sign(a);
    let sb = sign(b);
    if sa == 0.0 {
        return Ok(a);
    }
    if sb == 0.0 {
        return Ok(b);
    }
    if sa == sb || sa.is_nan() || sb.is_nan() {
        return Err(Error::Bracket { what, lo, hi });
    }
    // 200 halvings shrink any finite bracket below f64 resolution.
    for _ in 0..200 {
        if (b - a).abs() < xtol {
            break;
        }
        let mid = 0.5 * (a + b);
        let sm = sign(mid);
        if sm.is_nan() {
            return Err(Error::Numeric(format!("{what}: NaN at {mid}")));
        }
        if sm == 0.0 {
            return Ok(mid);
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection on a real-valued function.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    bisect_sign(|x| f(x).signum_or_zero(), lo, hi, xtol, what)
}

/// Scans `grid` for the first sign change of `f` and bisects inside it.
pub fn first_root_on_grid<F>(mut f: F, grid: &[f64], xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (Some(&first), Some(&last)) = (grid.first(), grid.last()) else {
        return Err(Error::invalid("empty search grid"));
    };
    let mut prev_x = first;
    let mut prev = f(first).signum_or_zero();
    if prev == 0.0 {
        return Ok(first);
    }
    for &x in &grid[1..] {
        let s = f(x).signum_or_zero();
        if s == 0.0 {
            return Ok(x);
        }
        if !s.is_nan() && !prev.is_nan() && s != prev {
            return bisect(&mut f, prev_x, x, xtol, what);
        }
        prev = s;
        prev_x = x;
    }
    Err(Error::Bracket {
        what,
        lo: first,
        hi: last,
    })
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, "x^2-2").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_missing_sign_change() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, "x^2+1").unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn grid_scan_picks_first_root() {
        // roots at 1 and 3
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let r = first_root_on_grid(|x| (x - 1.05) * (x - 3.05), &grid, 1e-12, "quad").unwrap();
        assert!((r - 1.05).abs() < 1e-10);
    }
}

//! Parameter search that corrects the copula correlation smile.
//!
//! For a rating class the copula gives baseline tranche spreads. The
//! search looks for chain parameters `(eta_FS, eta_S, p_R)` whose spreads
//! match the copula on the mezzanine tranche while pricing the equity
//! tranche lower and every senior tranche higher. `eta_F` is always
//! re-solved so that one period's default probability equals the rating's
//! per-period probability.

use serde::{Deserialize, Serialize};

use crate::copula::{semi_analytic_spreads, CopulaSpec};
use crate::error::{Error, Result};
use crate::multiperiod::{calibrated_spec, loss_term_structure, per_step_default_probability, transition_matrix};
use crate::numeric::roots::bisect;
use crate::numeric::simplex::{minimize, NelderMeadOptions};
use crate::pricing::{price_all, standard_tranches, CdoContract, LossTermStructure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingConfig {
    pub label: String,
    /// One-year default probability.
    pub q_one_year: f64,
    /// Copula asset correlation.
    pub rho_a: f64,
    pub recovery: f64,
    pub n: usize,
    pub maturity: f64,
    pub gamma: f64,
    pub rate: f64,
    /// Apply `1 - R` to the graphical model's losses too.
    pub lgd: bool,
}

impl RatingConfig {
    /// One-year default probability 0.001, asset correlation 0.2.
    pub fn high_rating() -> Self {
        Self {
            label: "high".into(),
            q_one_year: 0.001,
            rho_a: 0.2,
            recovery: 0.4,
            n: 50,
            maturity: 5.0,
            gamma: 0.5,
            rate: 0.05,
            lgd: true,
        }
    }

    /// One-year default probability 0.015, asset correlation 0.3.
    pub fn low_rating() -> Self {
        Self {
            label: "low".into(),
            q_one_year: 0.015,
            rho_a: 0.3,
            ..Self::high_rating()
        }
    }

    pub fn contract(&self) -> Result<CdoContract> {
        CdoContract::flat_rate(1.0, self.maturity, self.gamma, self.rate, standard_tranches())
    }

    pub fn copula(&self) -> Result<CopulaSpec> {
        CopulaSpec::from_one_year_probability(self.n, self.rho_a, self.q_one_year, self.recovery)
    }

    pub fn step_probability(&self) -> f64 {
        per_step_default_probability(self.q_one_year, self.gamma)
    }

    fn periods(&self) -> usize {
        (self.maturity / self.gamma).round() as usize
    }
}

/// Tranche spreads of the chain at `(eta_FS, eta_S, p_R)`.
pub fn graphical_spreads(config: &RatingConfig, eta_fs: f64, eta_s: f64, p_r: f64) -> Result<(f64, Vec<f64>)> {
    let spec = calibrated_spec(config.n, eta_s, eta_fs, config.step_probability(), p_r)?;
    let kernel = transition_matrix(&spec)?;
    let laws = loss_term_structure(&kernel, config.periods());
    let lgd = if config.lgd { 1.0 - config.recovery } else { 1.0 };
    let term = LossTermStructure::from_default_counts(&laws, config.n, lgd)?;
    let prices = price_all(&config.contract()?, &term)?;
    Ok((spec.eta_f, prices.into_iter().map(|p| p.spread).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileOptions {
    /// Bounds for `(eta_FS, eta_S, p_R)`.
    pub bounds: [(f64, f64); 3],
    /// Starting points; chosen automatically when empty.
    pub starts: Vec<[f64; 3]>,
    pub max_evaluations: usize,
    /// Finish by solving `eta_S` for an exact mezzanine match.
    pub polish: bool,
}

impl Default for SmileOptions {
    fn default() -> Self {
        Self {
            bounds: [(0.0, 20.0), (-200.0, 20.0), (0.0, 1.0)],
            starts: Vec::new(),
            max_evaluations: 300,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileFit {
    pub eta_f: f64,
    pub eta_fs: f64,
    pub eta_s: f64,
    pub p_r: f64,
    pub labels: Vec<String>,
    pub copula: Vec<f64>,
    pub graphical: Vec<f64>,
    /// Mezzanine within 1%, equity lower, seniors higher.
    pub feasible: bool,
    pub mezzanine_relative_error: f64,
    pub evaluations: usize,
}

const EQUITY: usize = 0;
const MEZZANINE: usize = 1;

fn is_feasible(c: &[f64], g: &[f64]) -> bool {
    ((g[MEZZANINE] - c[MEZZANINE]) / c[MEZZANINE]).abs() <= 0.01
        && g[EQUITY] < c[EQUITY]
        && g.iter().zip(c).skip(2).all(|(a, b)| a > b)
}

/// Minimised objective: the negative smile correction in basis points,
/// scaled by the mezzanine spread, plus penalties for missing the
/// mezzanine and for violating the required orderings.
fn objective(c: &[f64], g: &[f64]) -> f64 {
    let bps = 1e4;
    let gain = (c[EQUITY] - g[EQUITY]) * bps + g.iter().zip(c).skip(2).map(|(a, b)| (a - b) * bps).sum::<f64>();
    let scale = c[MEZZANINE] * bps;
    let mezz = (g[MEZZANINE] - c[MEZZANINE]) / c[MEZZANINE];
    let hinge = |x: f64| (0.01 - x).max(0.0);
    let order = hinge((c[EQUITY] - g[EQUITY]) / c[EQUITY])
        + g.iter().zip(c).skip(2).map(|(a, b)| hinge((a - b) / b)).sum::<f64>();
    -gain / scale + 1e3 * mezz * mezz + 1e2 * order
}

/// `eta_S` matching the copula mezzanine spread at fixed `(eta_FS, p_R)`,
/// searched upward from the lower bound.
fn match_mezzanine(config: &RatingConfig, target: f64, eta_fs: f64, p_r: f64, lo: f64, hi: f64, step: f64) -> Option<f64> {
    let f = |eta_s: f64| {
        graphical_spreads(config, eta_fs, eta_s, p_r)
            .map(|(_, g)| g[MEZZANINE] - target)
            .unwrap_or(f64::NAN)
    };
    let mut x0 = lo;
    let mut f0 = f(x0);
    let mut x = lo + step;
    while x <= hi + 1e-12 {
        let fx = f(x);
        if f0.is_finite() && fx.is_finite() && f0.signum() != fx.signum() {
            return bisect(f, x0, x, 1e-9, "mezzanine spread in eta_S").ok();
        }
        x0 = x;
        f0 = fx;
        x += step;
    }
    None
}

/// Searches `(eta_FS, eta_S, p_R)` for the rating class.
pub fn fit_smile_params(config: &RatingConfig, options: &SmileOptions) -> Result<SmileFit> {
    let contract = config.contract()?;
    let copula = semi_analytic_spreads(&config.copula()?, &contract)?;
    let labels: Vec<String> = copula.iter().map(|p| p.label.clone()).collect();
    let c: Vec<f64> = copula.iter().map(|p| p.spread).collect();
    if c.len() < 3 {
        return Err(Error::invalid("smile search needs equity, mezzanine and senior tranches"));
    }
    let b = options.bounds;
    let pinned = b.iter().all(|(lo, hi)| lo == hi);

    let mut starts = options.starts.clone();
    if starts.is_empty() && !pinned {
        for eta_fs in [4.0f64, 8.0, 12.0] {
            let eta_fs = eta_fs.clamp(b[0].0, b[0].1);
            let p_r = 0.5f64.clamp(b[2].0, b[2].1);
            if let Some(eta_s) = match_mezzanine(config, c[MEZZANINE], eta_fs, p_r, b[1].0, b[1].1, 2.0) {
                starts.push([eta_fs, eta_s, p_r]);
            }
        }
        if starts.is_empty() {
            starts.push([0.5 * (b[0].0 + b[0].1), 0.5 * (b[1].0 + b[1].1), 0.5 * (b[2].0 + b[2].1)]);
        }
    }
    if pinned {
        starts = vec![[b[0].0, b[1].0, b[2].0]];
    }

    let eval = |x: &[f64]| -> f64 {
        match graphical_spreads(config, x[0], x[1], x[2]) {
            Ok((_, g)) => objective(&c, &g),
            Err(_) => f64::INFINITY,
        }
    };
    let nm = NelderMeadOptions {
        max_evaluations: options.max_evaluations,
        f_tolerance: 1e-9,
        x_tolerance: 1e-7,
        initial_step: 0.05,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    for s in &starts {
        let r = minimize(eval, s, &b, &nm);
        evaluations += r.evaluations;
        if best.as_ref().is_none_or(|(_, v)| r.value < *v) {
            best = Some((r.x, r.value));
        }
    }
    let (mut x, _) = best.expect("at least one start");

    if options.polish && !pinned {
        let (lo, hi) = ((x[1] - 5.0).max(b[1].0), (x[1] + 5.0).min(b[1].1));
        if let Some(eta_s) = match_mezzanine(config, c[MEZZANINE], x[0], x[2], lo, hi, 0.25) {
            x[1] = eta_s;
        }
    }
    let (eta_f, g) = graphical_spreads(config, x[0], x[1], x[2])?;
    Ok(SmileFit {
        eta_f,
        eta_fs: x[0],
        eta_s: x[1],
        p_r: x[2],
        labels,
        feasible: is_feasible(&c, &g),
        mezzanine_relative_error: (g[MEZZANINE] - c[MEZZANINE]) / c[MEZZANINE],
        copula: c,
        graphical: g,
        evaluations,
    })
}

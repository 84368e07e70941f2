//! One-factor normal copula.
//!
//! Firm `i` has latent variable `M_i = sqrt(rho_A) Y + sqrt(1 - rho_A) e_i`
//! with `Y`, `e_i` independent standard normals, and default time
//! `tau_i = -ln(1 - Phi(M_i)) / lambda`, so each `tau_i` is exponential
//! with intensity `lambda`. This module prices tranches under that model
//! by Monte Carlo and by conditional-binomial quadrature, converts between
//! asset and default correlation, and implies `rho_A` from spreads.

use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::normal::{bivariate_cdf, cdf, inv_cdf, pdf};
use crate::numeric::quadrature::{integrate_adaptive, GaussLegendre};
use crate::numeric::roots::bisect;
use crate::numeric::binomial_pmf_logit;
use crate::pricing::{price_all, tranche_loss, CdoContract, LossTermStructure, TranchePrice, TrancheSpec};
use crate::rng::path_rng;
use crate::sector::LossDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    /// Asset correlation `rho_A`.
    pub rho_a: f64,
    /// Default intensity.
    pub lambda: f64,
    pub recovery: f64,
    /// Number of firms.
    pub n: usize,
}

impl CopulaSpec {
    pub fn new(n: usize, rho_a: f64, lambda: f64, recovery: f64) -> Result<Self> {
        let s = Self {
            rho_a,
            lambda,
            recovery,
            n,
        };
        s.validate()?;
        Ok(s)
    }

    /// Intensity from a one-year default probability: `lambda = -ln(1 - q)`.
    pub fn from_one_year_probability(n: usize, rho_a: f64, q: f64, recovery: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("default probability {q} outside (0, 1)")));
        }
        Self::new(n, rho_a, -(-q).ln_1p(), recovery)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho_a) {
            return Err(Error::invalid(format!("asset correlation {} outside [0, 1)", self.rho_a)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("intensity must be positive"));
        }
        if !(0.0..1.0).contains(&self.recovery) {
            return Err(Error::invalid(format!("recovery {} outside [0, 1)", self.recovery)));
        }
        if self.n == 0 {
            return Err(Error::invalid("empty pool"));
        }
        Ok(())
    }

    /// `Pr(tau <= t)`.
    pub fn default_probability(&self, t: f64) -> f64 {
        -(-self.lambda * t).exp_m1()
    }

    pub fn with_rho(&self, rho_a: f64) -> Self {
        Self { rho_a, ..self.clone() }
    }
}

/// Conditional default probability given the factor value `y`.
fn conditional_pd(threshold: f64, rho_a: f64, y: f64) -> f64 {
    cdf((threshold - rho_a.sqrt() * y) / (1.0 - rho_a).sqrt())
}

fn check_q_rho(rho_a: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("default probability {q} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&rho_a) {
        return Err(Error::domain(format!("asset correlation {rho_a} outside [0, 1)")));
    }
    Ok(())
}

/// Default-indicator correlation implied by asset correlation `rho_a` at
/// marginal default probability `q`, by adaptive quadrature over the factor.
pub fn default_correlation(rho_a: f64, q: f64) -> Result<f64> {
    check_q_rho(rho_a, q)?;
    if rho_a == 0.0 {
        return Ok(0.0);
    }
    let k = inv_cdf(q);
    let joint = integrate_adaptive(
        |y| {
            let p = conditional_pd(k, rho_a, y);
            pdf(y) * p * p
        },
        -12.0,
        12.0,
        1e-13,
    )?;
    Ok((joint - q * q) / (q * (1.0 - q)))
}

/// Same quantity through the bivariate normal distribution function.
pub fn default_correlation_bivariate(rho_a: f64, q: f64) -> Result<f64> {
    check_q_rho(rho_a, q)?;
    let k = inv_cdf(q);
    Ok((bivariate_cdf(k, k, rho_a) - q * q) / (q * (1.0 - q)))
}

/// Largest asset correlation searched when inverting.
const RHO_A_MAX: f64 = 0.999_999;

/// Asset correlation giving default correlation `rho` at probability `q`.
pub fn asset_corr_from_default_corr(rho: f64, q: f64) -> Result<f64> {
    check_q_rho(0.0, q)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let hi = default_correlation(RHO_A_MAX, q)?;
    if !(rho > 0.0 && rho <= hi) {
        return Err(Error::Bracket {
            what: "default correlation in rho_A",
            lo: 0.0,
            hi: RHO_A_MAX,
        });
    }
    let f = |x: f64| default_correlation(x, q).map(|r| r - rho).unwrap_or(f64::NAN);
    bisect(f, 0.0, RHO_A_MAX, 1e-13, "default correlation in rho_A")
}

/// Composite Gauss-Legendre nodes on `[-10, 10]` with weights times the
/// normal density.
fn factor_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        GaussLegendre::new(20)
            .composite_points(-10.0, 10.0, 200)
            .into_iter()
            .map(|(y, w)| (y, w * pdf(y)))
            .collect()
    })
}

fn logit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        p.ln() - (-p).ln_1p()
    }
}

/// Number of defaults among `n` firms with default probability `q` and
/// asset correlation `rho_a`, integrated over the factor.
pub fn loss_distribution(q: f64, rho_a: f64, n: usize) -> Result<LossDistribution> {
    check_q_rho(rho_a, q)?;
    Ok(LossDistribution::from_raw(conditional_binomial_mix(inv_cdf(q), rho_a, n)))
}

fn conditional_binomial_mix(threshold: f64, rho_a: f64, n: usize) -> Vec<f64> {
    // Fixed chunks merged in order keep the sum independent of the
    // thread count.
    let partial: Vec<Vec<f64>> = factor_nodes()
        .par_chunks(SUM_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n + 1];
            for &(y, w) in chunk {
                let p = conditional_pd(threshold, rho_a, y);
                for (a, b) in acc.iter_mut().zip(binomial_pmf_logit(n, logit(p))) {
                    *a += w * b;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n + 1];
    for part in partial {
        for (x, y) in out.iter_mut().zip(part) {
            *x += y;
        }
    }
    out
}

/// Work items per parallel partial sum.
const SUM_CHUNK: usize = 64;

/// Loss term structure on the payment dates by conditional-binomial
/// quadrature; losses are `(1 - R) m / N`.
pub fn semi_analytic_term_structure(spec: &CopulaSpec, contract: &CdoContract) -> Result<LossTermStructure> {
    spec.validate()?;
    contract.validate()?;
    let n = spec.n;
    let mut laws = vec![LossDistribution::point_mass(n, 0)];
    for &t in &contract.payment_times {
        let k = inv_cdf(spec.default_probability(t));
        let mut probs = conditional_binomial_mix(k, spec.rho_a, n);
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        laws.push(LossDistribution::from_raw(probs));
    }
    LossTermStructure::from_default_counts(&laws, n, 1.0 - spec.recovery)
}

/// Tranche spreads by conditional-binomial quadrature.
pub fn semi_analytic_spreads(spec: &CopulaSpec, contract: &CdoContract) -> Result<Vec<TranchePrice>> {
    price_all(contract, &semi_analytic_term_structure(spec, contract)?)
}

/// Simulated default times, `n` per path.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultTimes {
    pub n: usize,
    times: Vec<f64>,
}

impl DefaultTimes {
    pub fn path_count(&self) -> usize {
        self.times.len() / self.n
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.times[p * self.n..(p + 1) * self.n]
    }

    pub fn all(&self) -> &[f64] {
        &self.times
    }
}

/// Draws `Y` then `e_1..e_n` for path `p`.
fn draw_path(seed: u64, p: usize, n: usize, out: &mut Vec<f64>) -> f64 {
    let mut rng = path_rng(seed, p as u64);
    let y: f64 = StandardNormal.sample(&mut rng);
    out.clear();
    out.extend((0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
    y
}

pub fn simulate_default_times(spec: &CopulaSpec, n_paths: usize, seed: u64) -> Result<DefaultTimes> {
    spec.validate()?;
    if n_paths == 0 {
        return Err(Error::invalid("at least one path required"));
    }
    let (a, b) = (spec.rho_a.sqrt(), (1.0 - spec.rho_a).sqrt());
    let times = (0..n_paths)
        .into_par_iter()
        .flat_map_iter(|p| {
            let mut eps = Vec::with_capacity(spec.n);
            let y = draw_path(seed, p, spec.n, &mut eps);
            eps.into_iter()
                .map(move |e| -cdf(-(a * y + b * e)).ln() / spec.lambda)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(DefaultTimes { n: spec.n, times })
}

/// Kolmogorov-Smirnov distance between samples and `Exponential(lambda)`.
pub fn ks_statistic_exponential(samples: &[f64], lambda: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-lambda * x).exp_m1();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Pre-drawn factor and idiosyncratic normals, reused across asset
/// correlations so that spreads are smooth in `rho_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaScenarioSet {
    n: usize,
    factors: Vec<f64>,
    idio: Vec<f64>,
}

impl CopulaScenarioSet {
    pub fn draw(n: usize, n_paths: usize, seed: u64) -> Result<Self> {
        if n == 0 || n_paths == 0 {
            return Err(Error::invalid("need at least one firm and one path"));
        }
        let drawn: Vec<(f64, Vec<f64>)> = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let mut eps = Vec::with_capacity(n);
                let y = draw_path(seed, p, n, &mut eps);
                (y, eps)
            })
            .collect();
        let mut factors = Vec::with_capacity(n_paths);
        let mut idio = Vec::with_capacity(n_paths * n);
        for (y, e) in drawn {
            factors.push(y);
            idio.extend(e);
        }
        Ok(Self { n, factors, idio })
    }

    pub fn path_count(&self) -> usize {
        self.factors.len()
    }

    pub fn firm_count(&self) -> usize {
        self.n
    }

    /// Tranche spreads and standard errors at the given parameters.
    pub fn spreads(&self, spec: &CopulaSpec, contract: &CdoContract) -> Result<Vec<McSpread>> {
        spec.validate()?;
        contract.validate()?;
        if spec.n != self.n {
            return Err(Error::invalid("scenario set and spec disagree on pool size"));
        }
        let thresholds: Vec<f64> = contract
            .payment_times
            .iter()
            .map(|&t| inv_cdf(spec.default_probability(t)))
            .collect();
        let (a, b) = (spec.rho_a.sqrt(), (1.0 - spec.rho_a).sqrt());
        let lgd = 1.0 - spec.recovery;
        let per_path = |p: usize| -> Vec<(f64, f64)> {
            let y = self.factors[p];
            let mut counts = vec![0usize; thresholds.len()];
            for &e in &self.idio[p * self.n..(p + 1) * self.n] {
                let m = a * y + b * e;
                // Thresholds increase with t, so the first date with
                // m <= threshold is the default date.
                if let Some(k) = thresholds.iter().position(|&c| m <= c) {
                    counts[k] += 1;
                }
            }
            let mut cum = 0usize;
            let losses: Vec<f64> = counts
                .iter()
                .map(|c| {
                    cum += c;
                    lgd * cum as f64 / self.n as f64
                })
                .collect();
            path_legs(contract, &losses)
        };
        let paths = self.path_count();
        let sums = (0..paths.div_ceil(SUM_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::new(contract.tranches.len());
                for p in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(paths) {
                    m.add(&per_path(p));
                }
                m
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Moments::new(contract.tranches.len()), Moments::merge);
        contract
            .tranches
            .iter()
            .enumerate()
            .map(|(j, t)| sums.spread(j, &t.label, self.path_count()))
            .collect()
    }
}

/// Per tranche `(protection, premium per unit spread)` on one path.
fn path_legs(contract: &CdoContract, losses: &[f64]) -> Vec<(f64, f64)> {
    contract
        .tranches
        .iter()
        .map(|t| {
            let mut prev = 0.0;
            let (mut prot, mut prem) = (0.0, 0.0);
            for (k, &c) in losses.iter().enumerate() {
                let beta = contract.discount_factors[k];
                let l = tranche_loss(c, t);
                prot += beta * contract.notional * (l - prev);
                prem += beta * contract.gamma * contract.notional * (t.width() - l);
                prev = l;
            }
            (prot, prem)
        })
        .collect()
}

/// Running first and second moments of the two legs per tranche.
#[derive(Debug, Clone)]
struct Moments {
    a: Vec<f64>,
    b: Vec<f64>,
    aa: Vec<f64>,
    bb: Vec<f64>,
    ab: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self {
            a: vec![0.0; k],
            b: vec![0.0; k],
            aa: vec![0.0; k],
            bb: vec![0.0; k],
            ab: vec![0.0; k],
        }
    }

    fn add(&mut self, legs: &[(f64, f64)]) {
        for (j, &(a, b)) in legs.iter().enumerate() {
            self.a[j] += a;
            self.b[j] += b;
            self.aa[j] += a * a;
            self.bb[j] += b * b;
            self.ab[j] += a * b;
        }
    }

    fn merge(mut self, o: Self) -> Self {
        for j in 0..self.a.len() {
            self.a[j] += o.a[j];
            self.b[j] += o.b[j];
            self.aa[j] += o.aa[j];
            self.bb[j] += o.bb[j];
            self.ab[j] += o.ab[j];
        }
        self
    }

    /// Ratio estimator with a delta-method standard error.
    fn spread(&self, j: usize, label: &str, n: usize) -> Result<McSpread> {
        let nf = n as f64;
        let (ma, mb) = (self.a[j] / nf, self.b[j] / nf);
        if !(mb > 0.0) {
            return Err(Error::DegenerateTranche(format!(
                "tranche {label} has no outstanding notional to pay premium on"
            )));
        }
        let s = ma / mb;
        let var_a = (self.aa[j] / nf - ma * ma).max(0.0);
        let var_b = (self.bb[j] / nf - mb * mb).max(0.0);
        let cov = self.ab[j] / nf - ma * mb;
        let var_s = (var_a - 2.0 * s * cov + s * s * var_b).max(0.0) / (nf * mb * mb);
        Ok(McSpread {
            label: label.to_string(),
            spread: s,
            stderr: var_s.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpread {
    pub label: String,
    pub spread: f64,
    pub stderr: f64,
}

/// Monte Carlo tranche spreads under the copula.
pub fn mc_tranche_spreads(spec: &CopulaSpec, contract: &CdoContract, n_paths: usize, seed: u64) -> Result<Vec<McSpread>> {
    spec.validate()?;
    CopulaScenarioSet::draw(spec.n, n_paths, seed)?.spreads(spec, contract)
}

/// Grid on which implied correlations are bracketed.
fn implied_grid() -> Vec<f64> {
    (0..=99).map(|i| i as f64 / 100.0).collect()
}

/// Asset correlation at which the Monte Carlo spread of `tranche` equals
/// `observed`, on a fixed scenario set. The first crossing on a grid over
/// `[0, 0.99]` is refined by bisection to `1e-3`.
pub fn implied_correlation(
    observed: f64,
    tranche: &TrancheSpec,
    contract: &CdoContract,
    base: &CopulaSpec,
    scenarios: &CopulaScenarioSet,
) -> Result<f64> {
    let single = CdoContract {
        tranches: vec![tranche.clone()],
        ..contract.clone()
    };
    let spread_at = |rho: f64| -> Result<f64> {
        Ok(scenarios.spreads(&base.with_rho(rho), &single)?[0].spread)
    };
    let grid = implied_grid();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&r| spread_at(r).map(|s| s - observed).unwrap_or(f64::NAN))
        .collect();
    for (i, w) in values.windows(2).enumerate() {
        if w[0] == 0.0 {
            return Ok(grid[i]);
        }
        if w[0].is_finite() && w[1].is_finite() && w[0].signum() != w[1].signum() {
            return bisect(
                |r| spread_at(r).map(|s| s - observed).unwrap_or(f64::NAN),
                grid[i],
                grid[i + 1],
                1e-3,
                "implied correlation",
            );
        }
    }
    if values.last() == Some(&0.0) {
        return Ok(*grid.last().unwrap());
    }
    let attained: Vec<f64> = values.iter().filter(|v| v.is_finite()).map(|v| v + observed).collect();
    Err(Error::Range {
        target: observed,
        lo: attained.iter().copied().fold(f64::INFINITY, f64::min),
        hi: attained.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedEntry {
    pub label: String,
    pub observed: f64,
    pub implied_rho_a: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedCorrelationReport {
    pub entries: Vec<ImpliedEntry>,
}

/// Implied correlation for every tranche of the contract, in order.
pub fn implied_correlation_report(
    observed: &[f64],
    contract: &CdoContract,
    base: &CopulaSpec,
    scenarios: &CopulaScenarioSet,
) -> Result<ImpliedCorrelationReport> {
    if observed.len() != contract.tranches.len() {
        return Err(Error::invalid("one observed spread per tranche required"));
    }
    let entries = contract
        .tranches
        .iter()
        .zip(observed)
        .map(|(t, &s)| match implied_correlation(s, t, contract, base, scenarios) {
            Ok(r) => ImpliedEntry {
                label: t.label.clone(),
                observed: s,
                implied_rho_a: Some(r),
                status: "ok".into(),
            },
            Err(e) => ImpliedEntry {
                label: t.label.clone(),
                observed: s,
                implied_rho_a: None,
                status: e.to_string(),
            },
        })
        .collect();
    Ok(ImpliedCorrelationReport { entries })
}

//! Homogeneous sector model.
//!
//! Firms are grouped into `S` sectors. Every firm in sector `j` carries the
//! node weight `eta_F_j` and is linked only to its sector node, which has
//! weight `eta_S_j`; the firm-sector edge weight is `eta_FS_j`. Sector
//! nodes may be linked to each other. Conditional on the sector states
//! `s in {0,1}^S` firms are independent, so the loss distribution is a
//! `2^S`-component mixture of convolved binomials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::solve_eta_f;
use crate::error::{Error, Result};
use crate::model::{pairwise_correlation, FirmGraph, ModelParams, NodeKind};
use crate::numeric::roots::first_root_on_grid;
use crate::numeric::{binomial_pmf_logit, convolve, ln_binomial, log_sum_exp, logistic, softplus};

/// Largest sector count handled by enumerating sector states.
pub const SECTOR_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorParams {
    /// Firms per sector, `N_j`.
    pub sizes: Vec<usize>,
    pub eta_s: Vec<f64>,
    pub eta_f: Vec<f64>,
    pub eta_fs: Vec<f64>,
    /// Sector-sector edge weights for pairs `(u, v)`, `u < v`, in
    /// lexicographic order. Empty means all zero.
    #[serde(default)]
    pub eta_sector_edge: Vec<f64>,
}

impl SectorParams {
    /// One sector of `n` firms.
    pub fn single(n: usize, eta_s: f64, eta_fs: f64, eta_f: f64) -> Self {
        Self {
            sizes: vec![n],
            eta_s: vec![eta_s],
            eta_f: vec![eta_f],
            eta_fs: vec![eta_fs],
            eta_sector_edge: Vec::new(),
        }
    }

    pub fn sector_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn firm_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sizes.len();
        if s == 0 {
            return Err(Error::invalid("at least one sector required"));
        }
        if self.eta_s.len() != s || self.eta_f.len() != s || self.eta_fs.len() != s {
            return Err(Error::invalid(format!("expected {s} weights per sector field")));
        }
        let pairs = s * (s - 1) / 2;
        if !self.eta_sector_edge.is_empty() && self.eta_sector_edge.len() != pairs {
            return Err(Error::invalid(format!(
                "expected {pairs} sector edge weights, got {}",
                self.eta_sector_edge.len()
            )));
        }
        let all = self.eta_s.iter().chain(&self.eta_f).chain(&self.eta_fs).chain(&self.eta_sector_edge);
        if let Some(x) = all.clone().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite weight {x}")));
        }
        if s > SECTOR_CAP {
            return Err(Error::Capacity {
                what: "sector count",
                size: s,
                limit: SECTOR_CAP,
            });
        }
        Ok(())
    }

    fn sector_edge(&self, u: usize, v: usize) -> f64 {
        if self.eta_sector_edge.is_empty() {
            return 0.0;
        }
        let s = self.sizes.len();
        // Offset of row u in the packed upper triangle.
        let idx = u * (2 * s - u - 1) / 2 + (v - u - 1);
        self.eta_sector_edge[idx]
    }

    /// Log-weight of sector state `s` after summing out the firms.
    fn log_state_weight(&self, s: usize) -> f64 {
        let k = self.sizes.len();
        let on = |j: usize| (s >> j) & 1 == 1;
        let mut lw = 0.0;
        for j in 0..k {
            if on(j) {
                lw += self.eta_s[j];
                for v in j + 1..k {
                    if on(v) {
                        lw += self.sector_edge(j, v);
                    }
                }
            }
            lw += self.sizes[j] as f64 * softplus(self.firm_logit(j, on(j)));
        }
        lw
    }

    fn firm_logit(&self, j: usize, sector_on: bool) -> f64 {
        self.eta_f[j] + if sector_on { self.eta_fs[j] } else { 0.0 }
    }

    /// `ln Z_S`.
    pub fn log_partition(&self) -> Result<f64> {
        self.validate()?;
        let lw: Vec<f64> = (0..1usize << self.sizes.len()).map(|s| self.log_state_weight(s)).collect();
        Ok(log_sum_exp(&lw))
    }

    /// The same model as an explicit graph: firms first (sector by sector),
    /// then one node per sector.
    pub fn to_model(&self) -> Result<(FirmGraph, ModelParams)> {
        self.validate()?;
        let n = self.firm_count();
        let s = self.sector_count();
        let mut edges = Vec::new();
        let mut eta_edge = Vec::new();
        let mut eta_node = Vec::new();
        let mut kinds = Vec::new();
        let mut first = 0;
        for (j, &size) in self.sizes.iter().enumerate() {
            for i in first..first + size {
                edges.push((i, n + j));
                eta_edge.push(self.eta_fs[j]);
                eta_node.push(self.eta_f[j]);
                kinds.push(NodeKind::Firm);
            }
            first += size;
        }
        for u in 0..s {
            for v in u + 1..s {
                edges.push((n + u, n + v));
                eta_edge.push(self.sector_edge(u, v));
            }
        }
        eta_node.extend(&self.eta_s);
        kinds.extend(std::iter::repeat_n(NodeKind::Sector, s));
        let graph = FirmGraph::new(n + s, edges)?.with_kinds(kinds)?;
        Ok((graph, ModelParams::new(eta_node, eta_edge)))
    }
}

/// Distribution of the number of defaults over `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    probs: Vec<f64>,
}

impl LossDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty loss distribution"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("loss probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("loss probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn point_mass(n_max: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n_max + 1];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probabilities(self) -> Vec<f64> {
        self.probs
    }

    /// Largest representable loss count.
    pub fn max_count(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `Pr(L >= n)`.
    pub fn tail(&self, n: usize) -> f64 {
        self.probs.iter().skip(n).sum()
    }

    /// `Pr(lo <= L <= hi)`.
    pub fn range(&self, lo: usize, hi: usize) -> f64 {
        self.probs.iter().enumerate().filter(|(n, _)| (lo..=hi).contains(n)).map(|(_, p)| p).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        (0..n).map(|i| (self.prob(i) - other.prob(i)).abs()).fold(0.0, f64::max)
    }
}

/// Loss distribution for any number of sectors.
pub fn loss_distribution(params: &SectorParams) -> Result<LossDistribution> {
    params.validate()?;
    let k = params.sector_count();
    let states = 1usize << k;
    let lw: Vec<f64> = (0..states).map(|s| params.log_state_weight(s)).collect();
    let log_z = log_sum_exp(&lw);
    let pmfs: Vec<[Vec<f64>; 2]> = (0..k)
        .map(|j| {
            [
                binomial_pmf_logit(params.sizes[j], params.firm_logit(j, false)),
                binomial_pmf_logit(params.sizes[j], params.firm_logit(j, true)),
            ]
        })
        .collect();
    let mut out = vec![0.0; params.firm_count() + 1];
    for (s, lws) in lw.iter().enumerate() {
        let weight = (lws - log_z).exp();
        if weight == 0.0 {
            continue;
        }
        let mut conv = vec![1.0];
        for (j, pair) in pmfs.iter().enumerate() {
            conv = convolve(&conv, &pair[(s >> j) & 1]);
        }
        for (o, c) in out.iter_mut().zip(conv) {
            *o += weight * c;
        }
    }
    Ok(LossDistribution { probs: out })
}

/// Probability of one specific firm outcome. `defaults` lists, per sector,
/// the default indicators of its firms; only the counts matter.
pub fn firm_joint_probability(params: &SectorParams, defaults: &[Vec<bool>]) -> Result<f64> {
    params.validate()?;
    if defaults.len() != params.sector_count()
        || defaults.iter().zip(&params.sizes).any(|(d, &n)| d.len() != n)
    {
        return Err(Error::invalid("outcome does not match sector sizes"));
    }
    let counts: Vec<usize> = defaults.iter().map(|d| d.iter().filter(|x| **x).count()).collect();
    let k = params.sector_count();
    let terms: Vec<f64> = (0..1usize << k)
        .map(|s| {
            let on = |j: usize| (s >> j) & 1 == 1;
            let mut e = 0.0;
            for j in 0..k {
                if on(j) {
                    e += params.eta_s[j];
                    for v in j + 1..k {
                        if on(v) {
                            e += params.sector_edge(j, v);
                        }
                    }
                }
                e += counts[j] as f64 * params.firm_logit(j, on(j));
            }
            e
        })
        .collect();
    Ok((log_sum_exp(&terms) - params.log_partition()?).exp())
}

/// Closed-form single-sector loss law,
/// `C(N,n) (e^{eta_F n} + e^{eta_S + (eta_F + eta_FS) n}) / Z_1`.
pub fn single_sector_pmf(params: &SectorParams) -> Result<LossDistribution> {
    let (n, eta_s, eta_fs, eta_f) = single_parts(params)?;
    let log_z1 = log_add(n as f64 * softplus(eta_f), eta_s + n as f64 * softplus(eta_f + eta_fs));
    let probs = (0..=n)
        .map(|k| {
            let kf = k as f64;
            let inner = log_add(eta_f * kf, eta_s + (eta_f + eta_fs) * kf);
            (ln_binomial(n, k) + inner - log_z1).exp()
        })
        .collect();
    Ok(LossDistribution { probs })
}

fn log_add(a: f64, b: f64) -> f64 {
    crate::numeric::log_add_exp(a, b)
}

fn single_parts(params: &SectorParams) -> Result<(usize, f64, f64, f64)> {
    params.validate()?;
    if params.sector_count() != 1 {
        return Err(Error::domain(format!(
            "single-sector operation on {} sectors",
            params.sector_count()
        )));
    }
    Ok((params.sizes[0], params.eta_s[0], params.eta_fs[0], params.eta_f[0]))
}

/// `L = Y B1 + (1 - Y) B2` with `Y` Bernoulli and `B1`, `B2` binomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialMixture {
    /// `Pr(Y = 1)`: probability that the sector node is in default.
    pub y_weight: f64,
    pub trials: usize,
    /// Success probability of `B1` (sector in default).
    pub success_b1: f64,
    /// Success probability of `B2` (sector healthy).
    pub success_b2: f64,
    pub logit_b1: f64,
    pub logit_b2: f64,
}

impl BinomialMixture {
    pub fn pmf(&self) -> LossDistribution {
        let b1 = binomial_pmf_logit(self.trials, self.logit_b1);
        let b2 = binomial_pmf_logit(self.trials, self.logit_b2);
        let probs = b1
            .iter()
            .zip(&b2)
            .map(|(a, b)| self.y_weight * a + (1.0 - self.y_weight) * b)
            .collect();
        LossDistribution { probs }
    }

    /// `Pr(X_i = 1)`.
    pub fn default_probability(&self) -> f64 {
        self.y_weight * self.success_b1 + (1.0 - self.y_weight) * self.success_b2
    }

    /// Correlation of two distinct firms:
    /// `Var(Y) E[V]^2 / Var(X_i)` with `V = R_i - U_i`.
    pub fn pair_correlation(&self) -> Result<f64> {
        let p = self.default_probability();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("degenerate default probability {p}")));
        }
        let y = self.y_weight;
        let ev = self.success_b1 - self.success_b2;
        Ok(y * (1.0 - y) * ev * ev / (p * (1.0 - p)))
    }
}

pub fn binomial_decomposition(params: &SectorParams) -> Result<BinomialMixture> {
    let (n, eta_s, eta_fs, eta_f) = single_parts(params)?;
    let l1 = eta_s + n as f64 * softplus(eta_f + eta_fs);
    let l0 = n as f64 * softplus(eta_f);
    Ok(BinomialMixture {
        y_weight: logistic(l1 - l0),
        trials: n,
        success_b1: logistic(eta_f + eta_fs),
        success_b2: logistic(eta_f),
        logit_b1: eta_f + eta_fs,
        logit_b2: eta_f,
    })
}

pub fn pair_correlation_single_sector(params: &SectorParams) -> Result<f64> {
    if params.sector_count() == 1 && params.sizes[0] < 2 {
        return Err(Error::domain("pair correlation needs at least two firms"));
    }
    binomial_decomposition(params)?.pair_correlation()
}

/// `(Pr(X_1 = 1), Pr(X_1 = X_2 = 1))` for one sector.
pub fn single_sector_marginals(params: &SectorParams) -> Result<(f64, f64)> {
    let m = binomial_decomposition(params)?;
    let (y, r, u) = (m.y_weight, m.success_b1, m.success_b2);
    Ok((y * r + (1.0 - y) * u, y * r * r + (1.0 - y) * u * u))
}

/// Correlation from the exact pair marginals.
pub fn single_sector_correlation_from_marginals(params: &SectorParams) -> Result<f64> {
    let (p1, p12) = single_sector_marginals(params)?;
    pairwise_correlation(p1, p1, p12)
}

/// Single-sector parameters matching a default probability and pairwise
/// correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCalibration {
    pub eta_s: f64,
    pub eta_fs: f64,
    pub eta_f: f64,
    pub rho: f64,
}

impl CorrelationCalibration {
    pub fn params(&self, n: usize) -> SectorParams {
        SectorParams::single(n, self.eta_s, self.eta_fs, self.eta_f)
    }
}

/// Correlation at `(eta_S, eta_FS)` with `eta_F` solved for marginal `q`.
pub fn correlation_at(q: f64, n: usize, eta_s: f64, eta_fs: f64) -> Result<(f64, f64)> {
    let eta_f = solve_eta_f(q, n, eta_s, eta_fs)?;
    let rho = pair_correlation_single_sector(&SectorParams::single(n, eta_s, eta_fs, eta_f))?;
    Ok((eta_f, rho))
}

/// Default search grid for the sector weight.
pub fn default_eta_s_grid() -> Vec<f64> {
    (0..=400).map(|i| -100.0 + 0.5 * i as f64).collect()
}

/// Finds `eta_S` (and the matching `eta_F`) so that one sector of `n`
/// firms has default probability `q` and pairwise correlation `rho` at the
/// given `eta_FS`.
///
/// The correlation is not monotone in `eta_S`; the smallest `eta_S` on the
/// grid that attains `rho` is returned.
pub fn calibrate_to_correlation(q: f64, rho: f64, n: usize, eta_fs: f64) -> Result<CorrelationCalibration> {
    calibrate_to_correlation_on(q, rho, n, eta_fs, &default_eta_s_grid())
}

pub fn calibrate_to_correlation_on(
    q: f64,
    rho: f64,
    n: usize,
    eta_fs: f64,
    grid: &[f64],
) -> Result<CorrelationCalibration> {
    let f = |eta_s: f64| correlation_at(q, n, eta_s, eta_fs).map(|(_, r)| r - rho).unwrap_or(f64::NAN);
    match first_root_on_grid(f, grid, 1e-10, "correlation in eta_S") {
        Ok(eta_s) => {
            let (eta_f, achieved) = correlation_at(q, n, eta_s, eta_fs)?;
            Ok(CorrelationCalibration {
                eta_s,
                eta_fs,
                eta_f,
                rho: achieved,
            })
        }
        Err(Error::Bracket { .. }) => {
            let attained: Vec<f64> = grid
                .iter()
                .filter_map(|&x| correlation_at(q, n, x, eta_fs).ok().map(|r| r.1))
                .collect();
            let lo = attained.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = attained.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Err(Error::Range { target: rho, lo, hi })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub eta_s: f64,
    pub eta_fs: f64,
    pub eta_f_star: Option<f64>,
    pub rho: Option<f64>,
    pub error: Option<String>,
}

/// Correlation on the grid `eta_s x eta_fs`, row-major in `eta_fs`.
/// Failures are reported per point.
pub fn correlation_surface(q: f64, n: usize, eta_s: &[f64], eta_fs: &[f64]) -> Vec<SurfacePoint> {
    let points: Vec<(f64, f64)> = eta_fs.iter().flat_map(|&b| eta_s.iter().map(move |&a| (a, b))).collect();
    points
        .par_iter()
        .map(|&(a, b)| match correlation_at(q, n, a, b) {
            Ok((f, r)) => SurfacePoint {
                eta_s: a,
                eta_fs: b,
                eta_f_star: Some(f),
                rho: Some(r),
                error: None,
            },
            Err(e) => SurfacePoint {
                eta_s: a,
                eta_fs: b,
                eta_f_star: None,
                rho: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{joint_distribution, marginals_from_params};

    /// Loss law by enumerating every firm and sector configuration.
    fn brute_force(params: &SectorParams) -> Vec<f64> {
        let (g, p) = params.to_model().unwrap();
        let d = joint_distribution(&g, &p).unwrap();
        let n = params.firm_count();
        let mut out = vec![0.0; n + 1];
        for (w, pw) in d.probabilities().iter().enumerate() {
            let k = (0..n).filter(|&i| g.bit(w, i)).count();
            out[k] += pw;
        }
        out
    }

    #[test]
    fn matches_enumeration_with_three_sectors() {
        let params = SectorParams {
            sizes: vec![3, 2, 4],
            eta_s: vec![-1.0, 0.5, -2.0],
            eta_f: vec![-1.5, -0.7, -2.2],
            eta_fs: vec![1.3, -0.4, 2.5],
            eta_sector_edge: vec![0.8, -0.3, 1.1],
        };
        let a = loss_distribution(&params).unwrap();
        let b = brute_force(&params);
        for (x, y) in a.probabilities().iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_single_sector() {
        let p = SectorParams::single(4, 0.0, 0.0, 0.0);
        let x = vec![vec![true, false, false, true]];
        assert!((firm_joint_probability(&p, &x).unwrap() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn firm_probability_matches_closed_form() {
        let (eta_s, eta_fs, eta_f) = (1.2, -0.8, -1.1);
        let p = SectorParams::single(5, eta_s, eta_fs, eta_f);
        let x = vec![vec![true, true, false, false, true]];
        let k = 3.0;
        let z1 = (1.0 + eta_f.exp()).powi(5) + eta_s.exp() * (1.0 + (eta_f + eta_fs).exp()).powi(5);
        let expected = ((eta_f * k).exp() + (eta_s + (eta_fs + eta_f) * k).exp()) / z1;
        assert!((firm_joint_probability(&p, &x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_sectors_factorize() {
        let both = SectorParams {
            sizes: vec![2, 3],
            eta_s: vec![0.4, -1.0],
            eta_f: vec![-0.5, -1.5],
            eta_fs: vec![1.0, 2.0],
            eta_sector_edge: vec![0.0],
        };
        let a = SectorParams::single(2, 0.4, 1.0, -0.5);
        let b = SectorParams::single(3, -1.0, 2.0, -1.5);
        let x = vec![vec![true, false], vec![true, true, false]];
        let joint = firm_joint_probability(&both, &x).unwrap();
        let pa = firm_joint_probability(&a, &x[..1]).unwrap();
        let pb = firm_joint_probability(&b, &x[1..]).unwrap();
        assert!((joint - pa * pb).abs() < 1e-15);
    }

    #[test]
    fn healthy_sector_gives_binomial() {
        let p = SectorParams::single(20, -800.0, 3.0, -1.0);
        let l = loss_distribution(&p).unwrap();
        let b = binomial_pmf_logit(20, -1.0);
        for (x, y) in l.probabilities().iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_matches_closed_form_at_published_parameters() {
        let p = SectorParams::single(125, 15.0, -2.1, -2.0);
        let mix = binomial_decomposition(&p).unwrap().pmf();
        let closed = single_sector_pmf(&p).unwrap();
        assert!(mix.max_abs_diff(&closed) < 1e-12);
        assert!((closed.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_collapses_mixture() {
        let m = binomial_decomposition(&SectorParams::single(10, 2.0, 0.0, -1.0)).unwrap();
        assert_eq!(m.success_b1, m.success_b2);
        assert_eq!(m.pair_correlation().unwrap(), 0.0);
    }

    #[test]
    fn strong_sector_weight_selects_first_binomial() {
        let p = SectorParams::single(10, 50.0, -2.0, 0.0);
        let m = binomial_decomposition(&p).unwrap();
        assert!(1.0 - m.y_weight < 1e-15);
        let b = binomial_pmf_logit(10, -2.0);
        for (x, y) in m.pmf().probabilities().iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn decomposition_requires_one_sector() {
        let p = SectorParams {
            sizes: vec![1, 1],
            eta_s: vec![0.0; 2],
            eta_f: vec![0.0; 2],
            eta_fs: vec![0.0; 2],
            eta_sector_edge: vec![],
        };
        assert!(matches!(binomial_decomposition(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_correlation_matches_enumeration() {
        for (eta_s, eta_fs, eta_f) in [(0.3, 1.7, -0.9), (-2.0, -1.4, 0.5), (1.1, 2.5, -3.0)] {
            let p = SectorParams::single(2, eta_s, eta_fs, eta_f);
            let (g, mp) = p.to_model().unwrap();
            let m = marginals_from_params(&g, &mp).unwrap();
            let e = g.edge_index(0, 1);
            assert!(e.is_none());
            // Pair (1,2) is not an edge of the star; enumerate it directly.
            let d = joint_distribution(&g, &mp).unwrap();
            let p12: f64 = d
                .probabilities()
                .iter()
                .enumerate()
                .filter(|(w, _)| g.bit(*w, 0) && g.bit(*w, 1))
                .map(|(_, x)| x)
                .sum();
            let brute = pairwise_correlation(m.single[0], m.single[1], p12).unwrap();
            let closed = pair_correlation_single_sector(&p).unwrap();
            assert!((brute - closed).abs() < 1e-12, "{brute} vs {closed}");
        }
    }

    #[test]
    fn published_correlation_level() {
        let eta_f = solve_eta_f(0.05, 125, 15.0, -2.1).unwrap();
        let rho = pair_correlation_single_sector(&SectorParams::single(125, 15.0, -2.1, eta_f)).unwrap();
        assert!((rho - 0.05).abs() < 0.005, "{rho}");
    }

    #[test]
    fn solved_firm_weight_reproduces_marginal_by_enumeration() {
        let (q, n) = (0.07, 9);
        for (eta_s, eta_fs) in [(1.0, -1.5), (-3.0, 2.0), (0.0, 0.7)] {
            let eta_f = solve_eta_f(q, n, eta_s, eta_fs).unwrap();
            let (g, mp) = SectorParams::single(n, eta_s, eta_fs, eta_f).to_model().unwrap();
            let m = marginals_from_params(&g, &mp).unwrap();
            assert!((m.single[0] - q).abs() < 1e-8);
        }
    }

    #[test]
    fn calibration_to_correlation_round_trips() {
        let c = calibrate_to_correlation(0.05, 0.05, 125, -2.1).unwrap();
        assert!((c.rho - 0.05).abs() < 1e-8);
        assert!((c.eta_s - 15.0).abs() < 1.0, "{}", c.eta_s);
        let err = calibrate_to_correlation(0.05, 0.07, 125, -2.1).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
    }

    #[test]
    fn surface_zero_coupling_row_is_zero() {
        let pts = correlation_surface(0.01, 125, &[-5.0, 0.0, 5.0], &[0.0, 1.0]);
        assert_eq!(pts.len(), 6);
        for p in pts.iter().filter(|p| p.eta_fs == 0.0) {
            assert_eq!(p.rho, Some(0.0));
        }
        assert!(pts.iter().all(|p| p.error.is_none()));
    }

    #[test]
    fn surface_point_matches_small_enumeration() {
        let (q, n, eta_s, eta_fs) = (0.05, 10, 2.0, 1.5);
        let pt = &correlation_surface(q, n, &[eta_s], &[eta_fs])[0];
        let p = SectorParams::single(n, eta_s, eta_fs, pt.eta_f_star.unwrap());
        let (g, mp) = p.to_model().unwrap();
        let d = joint_distribution(&g, &mp).unwrap();
        let (mut p1, mut p12) = (0.0, 0.0);
        for (w, x) in d.probabilities().iter().enumerate() {
            if g.bit(w, 0) {
                p1 += x;
                if g.bit(w, 1) {
                    p12 += x;
                }
            }
        }
        let brute = pairwise_correlation(p1, p1, p12).unwrap();
        assert!((brute - pt.rho.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn strong_coupling_gives_high_correlation_at_low_default_rate() {
        let c = calibrate_to_correlation(0.01, 0.2, 125, 5.0).unwrap();
        assert!((c.rho - 0.2).abs() < 1e-8);
    }

    #[test]
    fn raising_coupling_at_fixed_weight_fattens_tail() {
        let n = 50usize;
        let eta_f = -3.0;
        let y: f64 = 0.05;
        let base_b1 = logistic(eta_f + 1.0);
        let threshold = (0.8 * n as f64 * base_b1).ceil() as usize;
        let mut last = 0.0;
        for eta_fs in [1.0, 1.5, 2.0, 2.5] {
            let eta_s = (y / (1.0 - y)).ln() - n as f64 * (softplus(eta_f + eta_fs) - softplus(eta_f));
            let p = SectorParams::single(n, eta_s, eta_fs, eta_f);
            let m = binomial_decomposition(&p).unwrap();
            assert!((m.y_weight - y).abs() < 1e-12);
            let tail = loss_distribution(&p).unwrap().tail(threshold);
            assert!(tail > last, "{eta_fs}: {tail} <= {last}");
            last = tail;
        }
    }
}

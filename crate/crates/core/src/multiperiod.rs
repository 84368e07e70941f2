//! Multi-period default dynamics.
//!
//! Time is discrete. The chain state is `(D, I)`: `D` cumulative defaults
//! and `I` defaulted firms still attached to the graph. Each step every
//! attached defaulted firm leaves with probability `p_R`; then the healthy
//! firms default according to the single-sector law conditioned on the
//! attached defaulted firms, which tilts the sector weight to
//! `eta_S + m * eta_FS`. New defaults start out attached.
//!
//! The number of firms still in the graph is `N_rem = N - D + I`.

use rand::RngExt;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::solve_eta_f;
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf_logit, logistic, softplus};
use crate::rng::path_rng;
use crate::sector::{binomial_decomposition, LossDistribution, SectorParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainState {
    /// Cumulative defaults.
    pub d: usize,
    /// Firms still in the graph.
    pub n_rem: usize,
}

impl ChainState {
    /// Defaulted firms still in the graph.
    pub fn in_system_defaulted(&self, n: usize) -> usize {
        self.d + self.n_rem - n
    }
}

/// Which attached-default count tilts the sector weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltConvention {
    /// Removals happen first; the tilt uses the survivors `I - r`.
    #[default]
    RemovalFirst,
    /// The tilt uses the attached count before this step's removals.
    PreRemoval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: usize,
    pub eta_s: f64,
    pub eta_fs: f64,
    pub eta_f: f64,
    pub p_r: f64,
    #[serde(default)]
    pub tilt: TiltConvention,
}

impl ChainSpec {
    pub fn new(n: usize, eta_s: f64, eta_fs: f64, eta_f: f64, p_r: f64) -> Self {
        Self {
            n,
            eta_s,
            eta_fs,
            eta_f,
            p_r,
            tilt: TiltConvention::RemovalFirst,
        }
    }

    pub fn from_sector(params: &SectorParams, p_r: f64) -> Result<Self> {
        params.validate()?;
        if params.sector_count() != 1 {
            return Err(Error::domain("the chain is defined for a single sector"));
        }
        Ok(Self::new(params.sizes[0], params.eta_s[0], params.eta_fs[0], params.eta_f[0], p_r))
    }

    pub fn with_tilt(mut self, tilt: TiltConvention) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_r) {
            return Err(Error::invalid(format!("removal probability {} outside [0, 1]", self.p_r)));
        }
        if !(self.eta_s.is_finite() && self.eta_fs.is_finite() && self.eta_f.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        if self.n > u16::MAX as usize {
            return Err(Error::Capacity {
                what: "firm count",
                size: self.n,
                limit: u16::MAX as usize,
            });
        }
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    /// Index of `(D, I)`.
    pub fn index(&self, d: usize, i: usize) -> usize {
        debug_assert!(i <= d && d <= self.n);
        d * (d + 1) / 2 + i
    }

    /// `(D, I)` of an index.
    pub fn decode(&self, idx: usize) -> (usize, usize) {
        let mut d = (((8 * idx + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while (d + 1) * (d + 2) / 2 <= idx {
            d += 1;
        }
        while d * (d + 1) / 2 > idx {
            d -= 1;
        }
        (d, idx - d * (d + 1) / 2)
    }

    pub fn state(&self, idx: usize) -> ChainState {
        let (d, i) = self.decode(idx);
        ChainState {
            d,
            n_rem: self.n - d + i,
        }
    }

    pub fn state_index(&self, s: ChainState) -> Result<usize> {
        if s.d > self.n || s.n_rem > self.n || s.d + s.n_rem < self.n {
            return Err(Error::domain(format!("invalid chain state {s:?}")));
        }
        let i = s.in_system_defaulted(self.n);
        if i > s.d.min(s.n_rem) {
            return Err(Error::domain(format!("invalid chain state {s:?}")));
        }
        Ok(self.index(s.d, i))
    }

    /// Log-odds that the sector node defaults given `healthy` healthy
    /// firms and a tilt of `m` attached defaults.
    fn sector_logit(&self, healthy: usize, m: usize) -> f64 {
        let h = healthy as f64;
        self.eta_s + m as f64 * self.eta_fs + h * (softplus(self.eta_f + self.eta_fs) - softplus(self.eta_f))
    }
}

/// Law of the number of new defaults among the `n_cur - m` healthy firms
/// given `m` attached defaulted firms.
pub fn increment_distribution(spec: &ChainSpec, m: usize, n_cur: usize) -> Result<LossDistribution> {
    if m > n_cur {
        return Err(Error::domain(format!("{m} attached defaults exceed {n_cur} firms")));
    }
    let params = SectorParams::single(n_cur - m, spec.eta_s + m as f64 * spec.eta_fs, spec.eta_fs, spec.eta_f);
    Ok(binomial_decomposition(&params)?.pmf())
}

/// Sparse one-step (or k-step) kernel over chain states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    steps: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn firm_count(&self) -> usize {
        self.n
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, from: usize) -> &[(usize, f64)] {
        &self.rows[from]
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().find(|(j, _)| *j == to).map(|(_, p)| *p).unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(_, p)| p).sum()).collect()
    }

    /// `x P` for a row vector `x` over states.
    pub fn propagate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for &(j, p) in &self.rows[i] {
                out[j] += xi * p;
            }
        }
        out
    }

    /// `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let rows = self
            .rows
            .par_iter()
            .map(|r| {
                let mut acc = vec![0.0; other.rows.len()];
                let mut touched = Vec::new();
                for &(k, a) in r {
                    for &(j, b) in &other.rows[k] {
                        if acc[j] == 0.0 {
                            touched.push(j);
                        }
                        acc[j] += a * b;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                touched.into_iter().map(|j| (j, acc[j])).filter(|(_, p)| *p != 0.0).collect()
            })
            .collect();
        Self {
            n: self.n,
            steps: self.steps + other.steps,
            rows,
        }
    }

    /// `P^k` by repeated squaring.
    pub fn power(&self, k: usize) -> Self {
        let mut result = Self::identity(self.n);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base);
            }
        }
        result
    }

    pub fn identity(n: usize) -> Self {
        let count = (n + 1) * (n + 2) / 2;
        Self {
            n,
            steps: 0,
            rows: (0..count).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Cumulative-default law implied by a distribution over states.
    pub fn default_marginal(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for d in 0..=self.n {
            let base = d * (d + 1) / 2;
            out[d] = x[base..=base + d].iter().sum();
        }
        out
    }
}

pub fn transition_matrix(spec: &ChainSpec) -> Result<TransitionMatrix> {
    spec.validate()?;
    let n = spec.n;
    let count = spec.state_count();
    let rows = (0..count)
        .into_par_iter()
        .map(|idx| {
            let (d, i) = spec.decode(idx);
            let healthy = n - d;
            let removal = binomial_pmf_logit(i, logit(spec.p_r));
            let mut acc = vec![0.0; count];
            let mut touched = Vec::new();
            for (r, pr) in removal.iter().enumerate() {
                if *pr == 0.0 {
                    continue;
                }
                let kept = i - r;
                let m = match spec.tilt {
                    TiltConvention::RemovalFirst => kept,
                    TiltConvention::PreRemoval => i,
                };
                let inc = increment_pmf(spec, healthy, m);
                for (k, pk) in inc.iter().enumerate() {
                    let p = pr * pk;
                    if p == 0.0 {
                        continue;
                    }
                    let j = spec.index(d + k, kept + k);
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += p;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            touched.into_iter().map(|j| (j, acc[j])).collect::<Vec<_>>()
        })
        .collect();
    Ok(TransitionMatrix { n, steps: 1, rows })
}

fn logit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        (p / (1.0 - p)).ln()
    }
}

/// New-default law among `healthy` firms with tilt `m`.
fn increment_pmf(spec: &ChainSpec, healthy: usize, m: usize) -> Vec<f64> {
    let params = SectorParams::single(healthy, spec.eta_s + m as f64 * spec.eta_fs, spec.eta_fs, spec.eta_f);
    binomial_decomposition(&params).expect("valid single sector").pmf().into_probabilities()
}

/// Law over states after `k` steps from `(0, N)`.
pub fn k_step_state_distribution(kernel: &TransitionMatrix, k: usize) -> Vec<f64> {
    let mut x = vec![0.0; kernel.state_count()];
    x[0] = 1.0;
    for _ in 0..k {
        x = kernel.propagate(&x);
    }
    x
}

/// Law of cumulative defaults after `k` steps.
pub fn k_step_loss(spec: &ChainSpec, k: usize) -> Result<LossDistribution> {
    let kernel = transition_matrix(spec)?;
    Ok(k_step_loss_with(&kernel, k))
}

pub fn k_step_loss_with(kernel: &TransitionMatrix, k: usize) -> LossDistribution {
    LossDistribution::from_raw(kernel.default_marginal(&k_step_state_distribution(kernel, k)))
}

/// Cumulative-default laws at steps `0..=k`.
pub fn loss_term_structure(kernel: &TransitionMatrix, k: usize) -> Vec<LossDistribution> {
    let mut x = vec![0.0; kernel.state_count()];
    x[0] = 1.0;
    let mut out = vec![LossDistribution::from_raw(kernel.default_marginal(&x))];
    for _ in 0..k {
        x = kernel.propagate(&x);
        out.push(LossDistribution::from_raw(kernel.default_marginal(&x)));
    }
    out
}

/// Simulated cumulative-default paths; `paths[p][t]` is `D` after `t` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    pub n: usize,
    pub steps: usize,
    data: Vec<u16>,
}

impl PathSet {
    pub fn path_count(&self) -> usize {
        self.data.len() / (self.steps + 1)
    }

    pub fn path(&self, p: usize) -> &[u16] {
        &self.data[p * (self.steps + 1)..(p + 1) * (self.steps + 1)]
    }

    /// Empirical law of `D` after `step` steps.
    pub fn empirical_loss(&self, step: usize) -> LossDistribution {
        let mut counts = vec![0u64; self.n + 1];
        for p in 0..self.path_count() {
            counts[self.path(p)[step] as usize] += 1;
        }
        let total = self.path_count() as f64;
        LossDistribution::from_raw(counts.into_iter().map(|c| c as f64 / total).collect())
    }
}

/// Simulates `n_paths` paths of `k` steps from `(0, N)`.
///
/// Each step draws the removals, then the sector state, then the new
/// defaults among healthy firms. Path `p` uses its own random stream, so
/// results do not depend on the thread count.
pub fn simulate_paths(spec: &ChainSpec, k: usize, n_paths: usize, seed: u64) -> Result<PathSet> {
    let start = ChainState { d: 0, n_rem: spec.n };
    simulate_paths_from(spec, start, k, n_paths, seed)
}

pub fn simulate_paths_from(
    spec: &ChainSpec,
    start: ChainState,
    k: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    spec.validate()?;
    spec.state_index(start)?;
    if n_paths == 0 {
        return Err(Error::invalid("at least one path required"));
    }
    let n = spec.n;
    let data: Vec<u16> = (0..n_paths)
        .into_par_iter()
        .flat_map_iter(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut d = start.d;
            let mut i = start.in_system_defaulted(n);
            let mut path = Vec::with_capacity(k + 1);
            path.push(d as u16);
            for _ in 0..k {
                let removed = draw_binomial(&mut rng, i, spec.p_r);
                let kept = i - removed;
                let m = match spec.tilt {
                    TiltConvention::RemovalFirst => kept,
                    TiltConvention::PreRemoval => i,
                };
                let healthy = n - d;
                let y = rng.random::<f64>() < logistic(spec.sector_logit(healthy, m));
                let firm_logit = spec.eta_f + if y { spec.eta_fs } else { 0.0 };
                let new = draw_binomial(&mut rng, healthy, logistic(firm_logit));
                d += new;
                i = kept + new;
                path.push(d as u16);
            }
            path
        })
        .collect();
    Ok(PathSet { n, steps: k, data })
}

fn draw_binomial<R: rand::Rng>(rng: &mut R, n: usize, p: f64) -> usize {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as usize
}

/// Per-period default probability matching a horizon probability `q`
/// over `periods_per_horizon` periods.
pub fn per_step_default_probability(q: f64, period_fraction: f64) -> f64 {
    1.0 - (1.0 - q).powf(period_fraction)
}

/// Re-solves `eta_F` so that a single step has default probability `q_step`.
pub fn calibrated_spec(n: usize, eta_s: f64, eta_fs: f64, q_step: f64, p_r: f64) -> Result<ChainSpec> {
    let eta_f = solve_eta_f(q_step, n, eta_s, eta_fs)?;
    Ok(ChainSpec::new(n, eta_s, eta_fs, eta_f, p_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{joint_distribution, FirmGraph, ModelParams};
    use crate::sector::loss_distribution;

    fn spec6() -> ChainSpec {
        ChainSpec::new(6, 0.7, 1.3, -1.6, 0.35)
    }

    #[test]
    fn index_round_trip() {
        let s = ChainSpec::new(9, 0.0, 0.0, 0.0, 0.5);
        for idx in 0..s.state_count() {
            let (d, i) = s.decode(idx);
            assert!(i <= d && d <= 9);
            assert_eq!(s.index(d, i), idx);
            assert_eq!(s.state_index(s.state(idx)).unwrap(), idx);
        }
    }

    #[test]
    fn untilted_increment_is_the_sector_law() {
        let spec = spec6();
        let a = increment_distribution(&spec, 0, 6).unwrap();
        let b = loss_distribution(&SectorParams::single(6, 0.7, 1.3, -1.6)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        assert_eq!(increment_distribution(&spec, 2, 6).unwrap().max_count(), 4);
        assert!(matches!(increment_distribution(&spec, 7, 6), Err(Error::Domain(_))));
    }

    #[test]
    fn increment_matches_conditioned_enumeration() {
        let spec = spec6();
        let m = 2;
        // Star graph with six firms around one sector node.
        let edges: Vec<(usize, usize)> = (0..6).map(|i| (i, 6)).collect();
        let g = FirmGraph::new(7, edges).unwrap();
        let params = ModelParams::new(
            [vec![spec.eta_f; 6], vec![spec.eta_s]].concat(),
            vec![spec.eta_fs; 6],
        );
        let d = joint_distribution(&g, &params).unwrap();
        let mut cond = vec![0.0; 5];
        for (w, p) in d.probabilities().iter().enumerate() {
            if g.bit(w, 0) && g.bit(w, 1) {
                let extra = (2..6).filter(|&i| g.bit(w, i)).count();
                cond[extra] += p;
            }
        }
        let total: f64 = cond.iter().sum();
        let inc = increment_distribution(&spec, m, 6).unwrap();
        for (k, c) in cond.iter().enumerate() {
            assert!((c / total - inc.prob(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_are_stochastic_and_monotone() {
        for tilt in [TiltConvention::RemovalFirst, TiltConvention::PreRemoval] {
            let spec = spec6().with_tilt(tilt);
            let p = transition_matrix(&spec).unwrap();
            for (from, s) in p.row_sums().iter().enumerate() {
                assert!((s - 1.0).abs() < 1e-10);
                let a = spec.state(from);
                for &(to, _) in p.row(from) {
                    let b = spec.state(to);
                    assert!(b.d >= a.d && b.n_rem <= a.n_rem);
                }
            }
        }
    }

    #[test]
    fn no_removal_keeps_everyone() {
        let spec = ChainSpec::new(6, 0.7, 1.3, -1.6, 0.0);
        let x = k_step_state_distribution(&transition_matrix(&spec).unwrap(), 4);
        for (idx, p) in x.iter().enumerate() {
            if *p > 0.0 {
                assert_eq!(spec.state(idx).n_rem, 6);
            }
        }
    }

    #[test]
    fn certain_removal_never_tilts() {
        let spec = ChainSpec::new(6, 0.7, 1.3, -1.6, 1.0);
        let p = transition_matrix(&spec).unwrap();
        let from = spec.index(3, 3);
        for &(to, pr) in p.row(from) {
            let (d, i) = spec.decode(to);
            let inc = increment_distribution(&spec, 0, 3).unwrap();
            assert!((pr - inc.prob(d - 3)).abs() < 1e-15);
            assert_eq!(i, d - 3);
        }
    }

    #[test]
    fn zero_steps_is_point_mass() {
        let l = k_step_loss(&spec6(), 0).unwrap();
        assert_eq!(l.prob(0), 1.0);
    }

    /// Sum over every removal/default sequence of two steps.
    fn two_step_paths(spec: &ChainSpec) -> Vec<f64> {
        let n = spec.n;
        let mut out = vec![0.0; n + 1];
        let first = increment_distribution(spec, 0, n).unwrap();
        for (a, pa) in first.probabilities().iter().enumerate() {
            let rem = crate::numeric::binomial_pmf_logit(a, logit(spec.p_r));
            for (r, pr) in rem.iter().enumerate() {
                let kept = a - r;
                let m = match spec.tilt {
                    TiltConvention::RemovalFirst => kept,
                    TiltConvention::PreRemoval => a,
                };
                let healthy = n - a;
                let params = SectorParams::single(healthy, spec.eta_s + m as f64 * spec.eta_fs, spec.eta_fs, spec.eta_f);
                let second = binomial_decomposition(&params).unwrap().pmf();
                for (b, pb) in second.probabilities().iter().enumerate() {
                    out[a + b] += pa * pr * pb;
                }
            }
        }
        out
    }

    #[test]
    fn two_steps_match_path_sum() {
        for tilt in [TiltConvention::RemovalFirst, TiltConvention::PreRemoval] {
            let spec = ChainSpec::new(5, -0.3, 1.8, -1.2, 0.4).with_tilt(tilt);
            let kernel = k_step_loss(&spec, 2).unwrap();
            let paths = two_step_paths(&spec);
            for (a, b) in kernel.probabilities().iter().zip(&paths) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let spec = ChainSpec::new(12, 0.5, 1.1, -2.0, 0.3);
        let p = transition_matrix(&spec).unwrap();
        let p2 = p.power(2);
        let p3 = p.power(3);
        let p5 = p.power(5);
        let composed = p2.compose(&p3);
        for i in 0..p.state_count() {
            for &(j, v) in p5.row(i) {
                assert!((v - composed.get(i, j)).abs() < 1e-10);
            }
            let s: f64 = p5.row(i).iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        let direct = k_step_loss_with(&p, 5);
        let via_power = p5.default_marginal(&p5.rows[0].iter().fold(vec![0.0; p.state_count()], |mut v, &(j, x)| {
            v[j] = x;
            v
        }));
        for (a, b) in direct.probabilities().iter().zip(&via_power) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let spec = spec6();
        let a = simulate_paths(&spec, 5, 2000, 11).unwrap();
        let b = simulate_paths(&spec, 5, 2000, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&spec, 5, 2000, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn one_step_frequencies_match_kernel() {
        let spec = spec6();
        let kernel = transition_matrix(&spec).unwrap();
        let start = ChainState { d: 3, n_rem: 5 };
        let from = spec.state_index(start).unwrap();
        let n_paths = 200_000;
        // Track the full state by simulating one step and re-deriving I is
        // not possible from D alone; compare the D marginal of the row.
        let sims = simulate_paths_from(&spec, start, 1, n_paths, 5).unwrap();
        let emp = sims.empirical_loss(1);
        let mut row = vec![0.0; spec.n + 1];
        for &(to, p) in kernel.row(from) {
            row[spec.decode(to).0] += p;
        }
        for (d, p) in row.iter().enumerate() {
            let se = (p * (1.0 - p) / n_paths as f64).sqrt();
            assert!((emp.prob(d) - p).abs() <= 4.0 * se + 1e-12, "D={d}: {} vs {p}", emp.prob(d));
        }
    }

    #[test]
    fn high_removal_thins_tail() {
        let lo = k_step_loss(&ChainSpec::new(30, 3.0, -3.0, -2.5, 0.1), 8).unwrap();
        let hi = k_step_loss(&ChainSpec::new(30, 3.0, -3.0, -2.5, 0.999), 8).unwrap();
        assert!(hi.tail(10) < lo.tail(10));
    }
}

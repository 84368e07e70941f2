//! CDO tranche pricing from a term structure of portfolio loss laws.
//!
//! A tranche `[K_L, K_U]` absorbs `min(C, K_U) - min(C, K_L)` of the
//! portfolio loss fraction `C`. The premium leg pays `s * gamma` on the
//! outstanding tranche notional at each payment date; the protection leg
//! pays the increase in expected tranche loss. The fair spread equates
//! the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiperiod::TransitionMatrix;
use crate::sector::LossDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrancheSpec {
    pub label: String,
    /// Attachment point.
    pub k_l: f64,
    /// Detachment point.
    pub k_u: f64,
}

impl TrancheSpec {
    pub fn new(label: impl Into<String>, k_l: f64, k_u: f64) -> Result<Self> {
        let t = Self {
            label: label.into(),
            k_l,
            k_u,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.k_l && self.k_l < self.k_u && self.k_u <= 1.0) {
            return Err(Error::invalid(format!(
                "tranche {} needs 0 <= K_L < K_U <= 1, got [{}, {}]",
                self.label, self.k_l, self.k_u
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.k_u - self.k_l
    }
}

/// Equity 0-3%, mezzanine 3-7%, then 7-10%, 10-15% and 15-30%.
pub fn standard_tranches() -> Vec<TrancheSpec> {
    [
        ("equity", 0.0, 0.03),
        ("mezzanine", 0.03, 0.07),
        ("senior_1", 0.07, 0.10),
        ("senior_2", 0.10, 0.15),
        ("super_senior", 0.15, 0.30),
    ]
    .into_iter()
    .map(|(l, a, b)| TrancheSpec {
        label: l.into(),
        k_l: a,
        k_u: b,
    })
    .collect()
}

pub fn tranche_loss(c: f64, tranche: &TrancheSpec) -> f64 {
    c.min(tranche.k_u) - c.min(tranche.k_l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdoContract {
    pub notional: f64,
    /// Payment times `t_1 < ... < t_K` in years.
    pub payment_times: Vec<f64>,
    /// Discount factors `beta(t_0, t_k)`, one per payment time.
    pub discount_factors: Vec<f64>,
    /// Period length `gamma`.
    pub gamma: f64,
    pub tranches: Vec<TrancheSpec>,
}

impl CdoContract {
    /// Evenly spaced payments every `gamma` years up to `maturity`,
    /// discounted continuously at flat `rate`.
    pub fn flat_rate(notional: f64, maturity: f64, gamma: f64, rate: f64, tranches: Vec<TrancheSpec>) -> Result<Self> {
        if !(gamma > 0.0 && maturity >= gamma) {
            return Err(Error::invalid("need 0 < gamma <= maturity"));
        }
        let k = (maturity / gamma).round() as usize;
        if ((k as f64) * gamma - maturity).abs() > 1e-9 {
            return Err(Error::invalid("maturity must be a whole number of periods"));
        }
        let payment_times: Vec<f64> = (1..=k).map(|i| i as f64 * gamma).collect();
        let discount_factors = payment_times.iter().map(|t| (-rate * t).exp()).collect();
        let c = Self {
            notional,
            payment_times,
            discount_factors,
            gamma,
            tranches,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn periods(&self) -> usize {
        self.payment_times.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(Error::invalid("notional must be positive"));
        }
        if self.payment_times.is_empty() || self.payment_times.len() != self.discount_factors.len() {
            return Err(Error::invalid("one discount factor per payment time required"));
        }
        if self.payment_times.windows(2).any(|w| w[1] <= w[0]) || self.payment_times[0] <= 0.0 {
            return Err(Error::invalid("payment times must be positive and strictly increasing"));
        }
        if self
            .payment_times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - self.gamma).abs() > 1e-9)
        {
            return Err(Error::invalid("payment times must be spaced by gamma"));
        }
        if self.discount_factors.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
            return Err(Error::invalid("discount factors must lie in (0, 1]"));
        }
        for t in &self.tranches {
            t.validate()?;
        }
        Ok(())
    }
}

/// Portfolio loss-fraction laws at `t_0, t_1, ..., t_K` on a shared support.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTermStructure {
    support: Vec<f64>,
    slices: Vec<Vec<f64>>,
}

impl LossTermStructure {
    pub fn new(support: Vec<f64>, slices: Vec<Vec<f64>>) -> Result<Self> {
        if support.is_empty() || slices.is_empty() {
            return Err(Error::invalid("empty term structure"));
        }
        if support.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::invalid("loss fractions must lie in [0, 1]"));
        }
        for (k, s) in slices.iter().enumerate() {
            if s.len() != support.len() {
                return Err(Error::domain(format!("slice {k} does not match the support")));
            }
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > 1e-9 || s.iter().any(|p| *p < 0.0) {
                return Err(Error::invalid(format!("slice {k} is not a distribution (sum {total})")));
            }
        }
        if slices[0].iter().zip(&support).any(|(p, c)| *p > 0.0 && *c != 0.0) {
            return Err(Error::invalid("the loss at inception must be zero"));
        }
        Ok(Self { support, slices })
    }

    /// From default-count laws at `t_0..t_K` in a pool of `n` names, each
    /// default costing `lgd / n` of notional.
    pub fn from_default_counts(laws: &[LossDistribution], n: usize, lgd: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lgd) {
            return Err(Error::invalid(format!("loss given default {lgd} outside [0, 1]")));
        }
        if n == 0 {
            return Err(Error::invalid("empty pool"));
        }
        let support = (0..=n).map(|m| lgd * m as f64 / n as f64).collect();
        let slices = laws
            .iter()
            .map(|l| (0..=n).map(|m| l.prob(m)).collect())
            .collect();
        Self::new(support, slices)
    }

    /// A term structure with no losses at any date.
    pub fn zero_loss(periods: usize) -> Self {
        Self {
            support: vec![0.0],
            slices: vec![vec![1.0]; periods + 1],
        }
    }

    pub fn periods(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.slices[k]
    }

    /// `E[C_{l, t_k}]`.
    pub fn expected_tranche_loss(&self, tranche: &TrancheSpec, k: usize) -> f64 {
        self.slices[k]
            .iter()
            .zip(&self.support)
            .map(|(p, c)| p * tranche_loss(*c, tranche))
            .sum()
    }

    pub fn expected_loss(&self, k: usize) -> f64 {
        self.slices[k].iter().zip(&self.support).map(|(p, c)| p * c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Legs {
    /// Premium leg value per unit of spread.
    pub premium: f64,
    pub protection: f64,
}

impl Legs {
    pub fn spread(&self, label: &str) -> Result<f64> {
        if !(self.premium > 0.0) {
            return Err(Error::DegenerateTranche(format!(
                "tranche {label} has no outstanding notional to pay premium on"
            )));
        }
        Ok(self.protection / self.premium)
    }
}

fn check_coverage(contract: &CdoContract, periods: usize) -> Result<()> {
    if periods < contract.periods() {
        return Err(Error::domain(format!(
            "term structure covers {periods} periods, contract needs {}",
            contract.periods()
        )));
    }
    Ok(())
}

/// Legs from expected tranche losses `e[0..=K]`.
fn legs_from_expectations(contract: &CdoContract, tranche: &TrancheSpec, e: &[f64]) -> Legs {
    let mut premium = 0.0;
    let mut protection = 0.0;
    for k in 1..=contract.periods() {
        let beta = contract.discount_factors[k - 1];
        premium += beta * contract.gamma * contract.notional * (tranche.width() - e[k]);
        protection += beta * contract.notional * (e[k] - e[k - 1]);
    }
    Legs { premium, protection }
}

pub fn legs(contract: &CdoContract, tranche: &TrancheSpec, term: &LossTermStructure) -> Result<Legs> {
    contract.validate()?;
    tranche.validate()?;
    check_coverage(contract, term.periods())?;
    let e: Vec<f64> = (0..=contract.periods())
        .map(|k| term.expected_tranche_loss(tranche, k))
        .collect();
    Ok(legs_from_expectations(contract, tranche, &e))
}

pub fn spread(contract: &CdoContract, tranche: &TrancheSpec, term: &LossTermStructure) -> Result<f64> {
    legs(contract, tranche, term)?.spread(&tranche.label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranchePrice {
    pub label: String,
    pub spread: f64,
    pub legs: Legs,
}

impl TranchePrice {
    pub fn spread_bps(&self) -> f64 {
        self.spread * 1e4
    }
}

/// Prices every tranche of the contract.
pub fn price_all(contract: &CdoContract, term: &LossTermStructure) -> Result<Vec<TranchePrice>> {
    contract
        .tranches
        .iter()
        .map(|t| {
            let l = legs(contract, t, term)?;
            Ok(TranchePrice {
                label: t.label.clone(),
                spread: l.spread(&t.label)?,
                legs: l,
            })
        })
        .collect()
}

/// Spread straight from the chain kernel: expected tranche losses are
/// read off the first row of `P^k`, computed by repeated
/// matrix multiplication.
pub fn spread_from_kernel(
    contract: &CdoContract,
    tranche: &TrancheSpec,
    kernel: &TransitionMatrix,
    lgd: f64,
) -> Result<f64> {
    contract.validate()?;
    tranche.validate()?;
    let n = kernel.firm_count();
    let mut e = vec![0.0; contract.periods() + 1];
    let mut pk = TransitionMatrix::identity(n);
    for ek in e.iter_mut().skip(1) {
        pk = pk.compose(kernel);
        *ek = pk
            .row(0)
            .iter()
            .map(|&(j, p)| {
                let d = default_count_of(j);
                p * tranche_loss(lgd * d as f64 / n as f64, tranche)
            })
            .sum();
    }
    legs_from_expectations(contract, tranche, &e).spread(&tranche.label)
}

/// Cumulative defaults of a chain state index.
fn default_count_of(idx: usize) -> usize {
    let mut d = (((8 * idx + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    while (d + 1) * (d + 2) / 2 <= idx {
        d += 1;
    }
    while d * (d + 1) / 2 > idx {
        d -= 1;
    }
    d
}

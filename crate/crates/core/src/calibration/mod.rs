//! Inversion of the marginal map.
//!
//! For a target in the interior of the marginal polytope there is exactly
//! one parameter vector whose model reproduces it, and it is also the
//! maximum-entropy distribution with those marginals. [`fit`] finds it with
//! either iterative proportional fitting or a damped Newton solver on the
//! concave log-likelihood.

mod ipf;
mod newton;
mod polytope;
mod single_sector;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{joint_distribution, FirmGraph, MarginalSpec, ModelParams, ENUMERATION_CAP};

pub use polytope::{membership, membership_report, Membership, MembershipReport, LP_MEMBERSHIP_MAX_NODES};
pub use single_sector::solve_eta_f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Iterative proportional fitting.
    #[default]
    Ipf,
    /// Damped Newton ascent on the log-likelihood.
    MaxEntGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// L-infinity tolerance on the marginals.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub backend: Backend,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            backend: Backend::Ipf,
        }
    }
}

impl CalibrationConfig {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub achieved: MarginalSpec,
    pub iterations: usize,
    /// Largest absolute marginal error at the returned parameters.
    pub residual: f64,
    /// Mean log-likelihood `eta . P - ln Z` after each iteration.
    pub objective_trace: Vec<f64>,
}

/// Finds the parameters whose marginals equal `target`.
pub fn fit(graph: &FirmGraph, target: &MarginalSpec, config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    if graph.node_count() > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "node count",
            size: graph.node_count(),
            limit: ENUMERATION_CAP,
        });
    }
    target.validate_shape(graph)?;
    let report = membership_report(graph, target)?;
    if report.status != Membership::Interior {
        return Err(Error::NotInterior {
            status: report.status,
            violated: report.violated.unwrap_or_else(|| "unknown".into()),
        });
    }
    let raw = match config.backend {
        Backend::Ipf => ipf::run(graph, target, config)?,
        Backend::MaxEntGradient => newton::run(graph, target, config)?,
    };
    let achieved = crate::model::marginals_from_params(graph, &raw.params)?;
    let residual = achieved.max_abs_diff(target);
    Ok(CalibrationResult {
        params: raw.params,
        achieved,
        iterations: raw.iterations,
        residual,
        objective_trace: raw.trace,
    })
}

struct RawFit {
    params: ModelParams,
    iterations: usize,
    trace: Vec<f64>,
}

/// `sum_w counts[w] ln p_w`.
pub fn log_likelihood(graph: &FirmGraph, params: &ModelParams, counts: &[f64]) -> Result<f64> {
    let dist = joint_distribution(graph, params)?;
    if counts.len() != dist.probabilities().len() {
        return Err(Error::invalid(format!(
            "expected {} counts, got {}",
            dist.probabilities().len(),
            counts.len()
        )));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("counts must be finite and nonnegative"));
    }
    Ok(counts
        .iter()
        .zip(dist.probabilities())
        .filter(|(c, _)| **c > 0.0)
        .map(|(c, p)| c * p.ln())
        .sum())
}

/// Mean log-likelihood of data with sufficient-statistic means `target`:
/// `eta . P - ln Z(eta)`.
pub(crate) fn mean_log_likelihood(eta: &[f64], target: &[f64], log_partition: f64) -> f64 {
    eta.iter().zip(target).map(|(a, b)| a * b).sum::<f64>() - log_partition
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::marginals_from_params;

    #[test]
    fn uniform_target_gives_zero_parameters() {
        let g = FirmGraph::triangle();
        let target = MarginalSpec::new(vec![0.5; 3], vec![0.25; 3]);
        for backend in [Backend::Ipf, Backend::MaxEntGradient] {
            let r = fit(&g, &target, &CalibrationConfig::with_backend(backend)).unwrap();
            assert!(r.params.to_vector().iter().all(|x| x.abs() < 1e-12), "{backend:?}");
            assert!(r.residual <= 1e-10);
        }
    }

    #[test]
    fn triangle_round_trip() {
        let g = FirmGraph::triangle();
        let truth = ModelParams::new(vec![0.3, -0.7, 1.1], vec![0.5, -0.2, 0.9]);
        let target = marginals_from_params(&g, &truth).unwrap();
        for backend in [Backend::Ipf, Backend::MaxEntGradient] {
            let r = fit(&g, &target, &CalibrationConfig::with_backend(backend)).unwrap();
            for (a, b) in r.params.to_vector().iter().zip(truth.to_vector()) {
                assert!((a - b).abs() < 1e-6, "{backend:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pair_above_single_is_rejected() {
        let g = FirmGraph::triangle();
        let target = MarginalSpec::new(vec![0.2, 0.5, 0.5], vec![0.3, 0.1, 0.25]);
        match fit(&g, &target, &CalibrationConfig::default()) {
            Err(Error::NotInterior { status, violated }) => {
                assert_eq!(status, Membership::Outside);
                assert!(violated.contains("P1 >= P12"), "{violated}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ipf_objective_is_nondecreasing() {
        let g = FirmGraph::complete(4).unwrap();
        let truth = ModelParams::new(vec![-1.0, 0.4, -0.3, 0.8], vec![1.2, -0.6, 0.3, 0.9, -1.1, 0.5]);
        let target = marginals_from_params(&g, &truth).unwrap();
        let r = fit(&g, &target, &CalibrationConfig::default()).unwrap();
        assert!(r.objective_trace.len() > 2);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-13, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn budget_error_reports_residual() {
        let g = FirmGraph::complete(4).unwrap();
        let truth = ModelParams::new(vec![-1.0, 0.4, -0.3, 0.8], vec![1.2, -0.6, 0.3, 0.9, -1.1, 0.5]);
        let target = marginals_from_params(&g, &truth).unwrap();
        let cfg = CalibrationConfig {
            max_iterations: 2,
            ..CalibrationConfig::default()
        };
        assert!(matches!(fit(&g, &target, &cfg), Err(Error::Budget { iterations: 2, .. })));
    }

    #[test]
    fn log_likelihood_examples() {
        let g = FirmGraph::triangle();
        let zero = ModelParams::zeros(&g);
        let mut one = vec![0.0; 8];
        one[0] = 1.0;
        assert!((log_likelihood(&g, &zero, &one).unwrap() - (1.0f64 / 8.0).ln()).abs() < 1e-15);
        let all = vec![1.0; 8];
        assert!((log_likelihood(&g, &zero, &all).unwrap() - 8.0 * (1.0f64 / 8.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn ml_estimate_matches_empirical_marginals() {
        let g = FirmGraph::triangle();
        let counts = [7.0, 3.0, 2.0, 4.0, 5.0, 1.0, 2.0, 6.0];
        let total: f64 = counts.iter().sum();
        let emp = crate::model::JointDistribution::from_probabilities(
            3,
            counts.iter().map(|c| c / total).collect(),
        )
        .unwrap();
        let target = crate::model::marginals_of(&g, &emp).unwrap();
        let r = fit(&g, &target, &CalibrationConfig::default()).unwrap();
        assert!(r.achieved.max_abs_diff(&target) < 1e-10);
        let best = log_likelihood(&g, &r.params, &counts).unwrap();
        let mut eta = r.params.to_vector();
        for k in 0..eta.len() {
            for d in [-1e-3, 1e-3] {
                eta[k] += d;
                let p = ModelParams::from_vector(&g, &eta).unwrap();
                assert!(log_likelihood(&g, &p, &counts).unwrap() <= best + 1e-12);
                eta[k] -= d;
            }
        }
    }
}

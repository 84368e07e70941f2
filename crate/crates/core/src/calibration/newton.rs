//! Damped Newton ascent on the concave log-likelihood.
//!
//! The gradient is `P - E[T]` and the Hessian is `-Cov(T)`, both computed
//! exactly by enumeration. Steps are backtracked until the Armijo condition
//! holds; a ridge is added if the covariance is numerically singular.

use nalgebra::{DMatrix, DVector};

use super::{mean_log_likelihood, CalibrationConfig, RawFit};
use crate::error::{Error, Result};
use crate::model::{energies, FirmGraph, MarginalSpec, ModelParams};
use crate::numeric::log_sum_exp;

struct Evaluation {
    objective: f64,
    mean: Vec<f64>,
    cov: DMatrix<f64>,
}

fn evaluate(graph: &FirmGraph, eta: &[f64], goal: &[f64], with_cov: bool) -> Result<Evaluation> {
    let params = ModelParams::from_vector(graph, eta)?;
    let e = energies(graph, &params);
    let log_z = log_sum_exp(&e);
    let d = eta.len();
    let mut mean = vec![0.0; d];
    let mut second = DMatrix::<f64>::zeros(if with_cov { d } else { 0 }, if with_cov { d } else { 0 });
    let mut active = Vec::with_capacity(d);
    for (w, ew) in e.iter().enumerate() {
        let p = (ew - log_z).exp();
        active.clear();
        active.extend(
            graph
                .statistics(w)
                .into_iter()
                .enumerate()
                .filter(|(_, t)| *t)
                .map(|(j, _)| j),
        );
        for &j in &active {
            mean[j] += p;
        }
        if with_cov {
            for &a in &active {
                for &b in &active {
                    second[(a, b)] += p;
                }
            }
        }
    }
    let cov = if with_cov {
        let mu = DVector::from_column_slice(&mean);
        second - &mu * mu.transpose()
    } else {
        second
    };
    Ok(Evaluation {
        objective: mean_log_likelihood(eta, goal, log_z),
        mean,
        cov,
    })
}

pub(super) fn run(graph: &FirmGraph, target: &MarginalSpec, config: &CalibrationConfig) -> Result<RawFit> {
    let goal = target.as_vector();
    let d = goal.len();
    let mut eta = vec![0.0; d];
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;

    for iter in 0..config.max_iterations {
        let ev = evaluate(graph, &eta, &goal, true)?;
        if iter > 0 {
            trace.push(ev.objective);
        }
        let grad: Vec<f64> = goal.iter().zip(&ev.mean).map(|(a, b)| a - b).collect();
        residual = grad.iter().fold(0.0, |m, g| m.max(g.abs()));
        if residual <= config.tolerance {
            return Ok(RawFit {
                params: ModelParams::from_vector(graph, &eta)?,
                iterations: iter,
                trace,
            });
        }
        let g = DVector::from_column_slice(&grad);
        let step = newton_direction(&ev.cov, &g)?;
        let slope = g.dot(&step);
        // Near the optimum the predicted ascent is below the rounding error
        // of the objective and Armijo cannot judge it; take the full step.
        if slope <= 1e3 * f64::EPSILON * ev.objective.abs().max(1.0) {
            for (e, s) in eta.iter_mut().zip(step.iter()) {
                *e += s;
            }
            continue;
        }

        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = eta.iter().zip(step.iter()).map(|(e, s)| e + t * s).collect();
            let obj = evaluate(graph, &trial, &goal, false)?.objective;
            if obj >= ev.objective + 1e-4 * t * slope {
                eta = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // No ascent possible at working precision.
                return Err(Error::Budget {
                    iterations: iter,
                    residual,
                });
            }
        }
    }
    Err(Error::Budget {
        iterations: config.max_iterations,
        residual,
    })
}

fn newton_direction(cov: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = cov.diagonal().max().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..30 {
        let mut h = cov.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += ridge;
        }
        if let Some(ch) = h.cholesky() {
            return Ok(ch.solve(g));
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 10.0 };
    }
    Err(Error::Numeric("statistic covariance is not positive definite".into()))
}

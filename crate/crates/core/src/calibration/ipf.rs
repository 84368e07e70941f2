//! Iterative proportional fitting.
//!
//! Each step rescales the current distribution so that one sufficient
//! statistic hits its target exactly. In exponential-family terms this is
//! exact coordinate ascent on the log-likelihood: the statistic's weight
//! moves by `logit(target) - logit(current)`, so the likelihood never
//! decreases.

use super::{mean_log_likelihood, CalibrationConfig, RawFit};
use crate::error::{Error, Result};
use crate::model::{energies, expected_statistics, FirmGraph, MarginalSpec, ModelParams};
use crate::numeric::log_sum_exp;

pub(super) fn run(graph: &FirmGraph, target: &MarginalSpec, config: &CalibrationConfig) -> Result<RawFit> {
    let m = graph.node_count();
    let states = 1usize << m;
    let goal = target.as_vector();
    let mut eta = vec![0.0; goal.len()];
    let mut trace = Vec::new();

    let in_event = |j: usize, w: usize| -> bool {
        if j < m {
            graph.bit(w, j)
        } else {
            let (u, v) = graph.edges()[j - m];
            graph.bit(w, u) && graph.bit(w, v)
        }
    };

    let mut residual = f64::INFINITY;
    for sweep in 0..config.max_iterations {
        let params = ModelParams::from_vector(graph, &eta)?;
        let e = energies(graph, &params);
        let log_z = log_sum_exp(&e);
        let mut p: Vec<f64> = e.iter().map(|x| (x - log_z).exp()).collect();
        if sweep > 0 {
            trace.push(mean_log_likelihood(&eta, &goal, log_z));
        }
        let current = expected_statistics(graph, &p);
        residual = current
            .iter()
            .zip(&goal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= config.tolerance {
            return Ok(RawFit {
                params,
                iterations: sweep,
                trace,
            });
        }
        for (j, &t) in goal.iter().enumerate() {
            let mass: f64 = (0..states).filter(|&w| in_event(j, w)).map(|w| p[w]).sum();
            if !(mass > 0.0 && mass < 1.0) {
                return Err(Error::Numeric(format!(
                    "statistic {j} has degenerate model mass {mass}"
                )));
            }
            let up = t / mass;
            let down = (1.0 - t) / (1.0 - mass);
            eta[j] += up.ln() - down.ln();
            for (w, pw) in p.iter_mut().enumerate() {
                *pw *= if in_event(j, w) { up } else { down };
            }
        }
    }
    Err(Error::Budget {
        iterations: config.max_iterations,
        residual,
    })
}

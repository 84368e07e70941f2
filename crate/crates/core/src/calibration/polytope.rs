//! Membership of a marginal vector in the marginal polytope.
//!
//! The polytope is the convex hull of the columns of `A_G`. A target is
//! interior exactly when some strictly positive distribution reproduces
//! it, which is decided by the linear program
//!
//! ```text
//! maximize t  subject to  A_G p = (P, 1),  p_w >= t  for all w
//! ```
//!
//! with `t* > 0` interior, `t* = 0` boundary and `t* < 0` outside (within
//! `1e-9`). For the triangle the answer is read off the sixteen facet
//! inequalities directly. Pairwise and triangle inequalities are also used
//! to name the violated direction in error messages.

use std::fmt;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_marginal_map, FirmGraph, MarginalSpec, ENUMERATION_CAP};

/// Largest node count decided by the linear program (`2^16` variables).
pub const LP_MEMBERSHIP_MAX_NODES: usize = 16;

const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::Interior => "inside",
            Membership::Boundary => "on the boundary of",
            Membership::Outside => "outside",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub status: Membership,
    /// The most violated (or tight) valid inequality, if any.
    pub violated: Option<String>,
    /// Optimal `t` of the LP, or the smallest inequality slack when the
    /// decision was made from inequalities alone.
    pub margin: f64,
}

pub fn membership(graph: &FirmGraph, target: &MarginalSpec) -> Result<Membership> {
    membership_report(graph, target).map(|r| r.status)
}

pub fn membership_report(graph: &FirmGraph, target: &MarginalSpec) -> Result<MembershipReport> {
    if graph.node_count() > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "node count",
            size: graph.node_count(),
            limit: ENUMERATION_CAP,
        });
    }
    if target.single.len() != graph.node_count() || target.pair.len() != graph.edge_count() {
        return Err(Error::invalid("marginal vector does not match the graph"));
    }
    let slacks = valid_inequalities(graph, target);
    let (worst_name, worst) = slacks
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, s)| (n.clone(), *s))
        .unwrap_or_else(|| (String::new(), f64::INFINITY));
    let classify = |x: f64| {
        if x > SLACK_TOL {
            Membership::Interior
        } else if x >= -SLACK_TOL {
            Membership::Boundary
        } else {
            Membership::Outside
        }
    };

    if graph.is_triangle() || (graph.edge_count() == 0) {
        // Pairwise and triangle inequalities are the complete facet list here.
        let status = classify(worst);
        return Ok(MembershipReport {
            status,
            violated: (status != Membership::Interior).then_some(worst_name),
            margin: worst,
        });
    }
    if worst < -SLACK_TOL {
        return Ok(MembershipReport {
            status: Membership::Outside,
            violated: Some(worst_name),
            margin: worst,
        });
    }
    if graph.node_count() > LP_MEMBERSHIP_MAX_NODES {
        return Err(Error::Capacity {
            what: "node count for the membership program",
            size: graph.node_count(),
            limit: LP_MEMBERSHIP_MAX_NODES,
        });
    }
    let t = max_min_probability(graph, target)?;
    let status = classify(t);
    let violated = match status {
        Membership::Interior => None,
        Membership::Boundary if worst <= SLACK_TOL => Some(worst_name),
        _ => Some("a facet of the marginal polytope beyond the pairwise and triangle inequalities".into()),
    };
    Ok(MembershipReport {
        status,
        violated,
        margin: t,
    })
}

/// Solves the membership program; returns `t*`, or `-inf` if even the
/// relaxed equality system is infeasible.
fn max_min_probability(graph: &FirmGraph, target: &MarginalSpec) -> Result<f64> {
    let a = build_marginal_map(graph)?;
    let mut rhs = target.as_vector();
    rhs.push(1.0);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (-1.0, 1.0));
    let p: Vec<_> = (0..a.col_count()).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    for (r, b) in rhs.iter().enumerate() {
        let expr: Vec<_> = a
            .row(r)
            .iter()
            .zip(&p)
            .filter(|(x, _)| **x == 1)
            .map(|(_, v)| (*v, 1.0))
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, *b);
    }
    for v in &p {
        lp.add_constraint([(*v, 1.0), (t, -1.0)].as_slice(), ComparisonOp::Ge, 0.0);
    }
    match lp.solve() {
        Ok(outcome) => {
            let sol = outcome
                .into_solution()
                .map_err(|e| Error::Numeric(format!("membership program interrupted: {e:?}")))?;
            Ok(sol.objective())
        }
        Err(microlp::Error::Infeasible) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(Error::Numeric(format!("membership program failed: {e}"))),
    }
}

/// Valid inequalities `slack >= 0` of the marginal polytope with readable
/// names, using 1-based node labels.
fn valid_inequalities(graph: &FirmGraph, target: &MarginalSpec) -> Vec<(String, f64)> {
    let s = &target.single;
    let mut out = Vec::new();
    for (i, &p) in s.iter().enumerate() {
        if graph.edges().iter().all(|&(u, v)| u != i && v != i) {
            out.push((format!("P{} >= 0", i + 1), p));
            out.push((format!("P{} <= 1", i + 1), 1.0 - p));
        }
    }
    for (k, &(u, v)) in graph.edges().iter().enumerate() {
        let puv = target.pair[k];
        let (a, b) = (u + 1, v + 1);
        out.push((format!("P{a} >= P{a}{b}"), s[u] - puv));
        out.push((format!("P{b} >= P{a}{b}"), s[v] - puv));
        out.push((format!("P{a}{b} >= 0"), puv));
        out.push((format!("P{a} + P{b} <= P{a}{b} + 1"), 1.0 + puv - s[u] - s[v]));
    }
    let n = graph.node_count();
    for a in 0..n {
        for b in a + 1..n {
            let Some(ab) = graph.edge_index(a, b) else { continue };
            for c in b + 1..n {
                let (Some(ac), Some(bc)) = (graph.edge_index(a, c), graph.edge_index(b, c)) else {
                    continue;
                };
                let (pab, pac, pbc) = (target.pair[ab], target.pair[ac], target.pair[bc]);
                let (x, y, z) = (a + 1, b + 1, c + 1);
                out.push((format!("P{x}{y} + P{x}{z} <= P{x} + P{y}{z}"), s[a] + pbc - pab - pac));
                out.push((format!("P{x}{y} + P{y}{z} <= P{y} + P{x}{z}"), s[b] + pac - pab - pbc));
                out.push((format!("P{x}{z} + P{y}{z} <= P{z} + P{x}{y}"), s[c] + pab - pac - pbc));
                out.push((
                    format!("P{x} + P{y} + P{z} <= P{x}{y} + P{x}{z} + P{y}{z} + 1"),
                    pab + pac + pbc + 1.0 - s[a] - s[b] - s[c],
                ));
            }
        }
    }
    out
}

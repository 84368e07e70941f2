//! Interchange formats: the JSON graph document and CSV tables.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical inputs give byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::copula::{ImpliedCorrelationReport, McSpread};
use crate::error::{Error, Result};
use crate::model::{FirmGraph, JointDistribution, ModelParams};
use crate::pricing::TranchePrice;
use crate::sector::{LossDistribution, SurfacePoint};

/// Graph plus optional parameters, with 1-based node indices.
///
/// ```json
/// {"nodes": 3, "edges": [[1, 2], [2, 3]], "eta_node": [0, 0, 0], "eta_edge": [1, 1]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_node: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_edge: Vec<f64>,
}

impl GraphDocument {
    pub fn from_model(graph: &FirmGraph, params: Option<&ModelParams>) -> Self {
        Self {
            nodes: graph.node_count(),
            edges: graph.edges().iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
            eta_node: params.map(|p| p.eta_node.clone()).unwrap_or_default(),
            eta_edge: params.map(|p| p.eta_edge.clone()).unwrap_or_default(),
        }
    }

    pub fn graph(&self) -> Result<FirmGraph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[u, v] in &self.edges {
            if u == 0 || v == 0 {
                return Err(Error::invalid(format!("edge [{u}, {v}]: node indices are 1-based")));
            }
            edges.push((u - 1, v - 1));
        }
        FirmGraph::new(self.nodes, edges)
    }

    /// Parameters, when both weight vectors are present. A graph without
    /// edges needs only `eta_node`.
    pub fn params(&self, graph: &FirmGraph) -> Result<Option<ModelParams>> {
        if self.eta_node.is_empty() && self.eta_edge.is_empty() {
            return Ok(None);
        }
        let p = ModelParams::new(self.eta_node.clone(), self.eta_edge.clone());
        p.validate(graph)?;
        Ok(Some(p))
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> std::io::Result<()> {
    w.flush()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `w,p` with `w` as a bitstring, node 1 first.
pub fn write_joint_csv<W: Write>(out: W, dist: &JointDistribution) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["w", "p"])?;
    for (i, p) in dist.probabilities().iter().enumerate() {
        w.write_record([dist.bitstring(i), p.to_string()])?;
    }
    finish(w)
}

/// `n,prob`.
pub fn write_loss_csv<W: Write>(out: W, dist: &LossDistribution) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["n", "prob"])?;
    for (n, p) in dist.probabilities().iter().enumerate() {
        w.write_record([n.to_string(), p.to_string()])?;
    }
    finish(w)
}

/// `eta_S,eta_FS,eta_F_star,rho`; unsolvable points leave the last two
/// columns empty.
pub fn write_surface_csv<W: Write>(out: W, points: &[SurfacePoint]) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["eta_S", "eta_FS", "eta_F_star", "rho"])?;
    for pt in points {
        w.write_record([pt.eta_s.to_string(), pt.eta_fs.to_string(), opt(pt.eta_f_star), opt(pt.rho)])?;
    }
    finish(w)
}

/// One block of a multi-period loss table.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLossBlock {
    pub p_r: f64,
    pub k: usize,
    pub dist: LossDistribution,
}

/// `p_R,k,m,prob`, where `m` is the cumulative default count.
pub fn write_multi_loss_csv<W: Write>(out: W, blocks: &[MultiLossBlock]) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["p_R", "k", "m", "prob"])?;
    for b in blocks {
        for (m, p) in b.dist.probabilities().iter().enumerate() {
            w.write_record([b.p_r.to_string(), b.k.to_string(), m.to_string(), p.to_string()])?;
        }
    }
    finish(w)
}

/// `tranche,spread_bps,stderr_bps` for analytic prices; the error column
/// is empty.
pub fn write_prices_csv<W: Write>(out: W, prices: &[TranchePrice]) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["tranche", "spread_bps", "stderr_bps"])?;
    for p in prices {
        w.write_record([p.label.clone(), p.spread_bps().to_string(), String::new()])?;
    }
    finish(w)
}

/// `tranche,spread_bps,stderr_bps` for Monte Carlo prices.
pub fn write_mc_spreads_csv<W: Write>(out: W, spreads: &[McSpread]) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["tranche", "spread_bps", "stderr_bps"])?;
    for s in spreads {
        w.write_record([s.label.clone(), (s.spread * 1e4).to_string(), (s.stderr * 1e4).to_string()])?;
    }
    finish(w)
}

/// `tranche,implied_rho_A`; tranches without a solution leave the value
/// empty.
pub fn write_implied_csv<W: Write>(out: W, report: &ImpliedCorrelationReport) -> std::io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["tranche", "implied_rho_A"])?;
    for e in &report.entries {
        w.write_record([e.label.clone(), opt(e.implied_rho_a)])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::joint_distribution;

    #[test]
    fn graph_document_round_trip() {
        let g = FirmGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let p = ModelParams::new(vec![0.1, -0.2, 0.3], vec![0.5, -0.5]);
        let doc = GraphDocument::from_model(&g, Some(&p));
        assert_eq!(doc.edges, vec![[1, 2], [2, 3]]);
        let g2 = doc.graph().unwrap();
        assert_eq!(g2.edges(), g.edges());
        assert_eq!(doc.params(&g2).unwrap(), Some(p));
    }

    #[test]
    fn zero_based_edge_is_rejected() {
        let doc = GraphDocument {
            nodes: 2,
            edges: vec![[0, 1]],
            eta_node: vec![],
            eta_edge: vec![],
        };
        assert!(matches!(doc.graph(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn joint_csv_layout() {
        let g = FirmGraph::new(2, []).unwrap();
        let d = joint_distribution(&g, &ModelParams::zeros(&g)).unwrap();
        let mut buf = Vec::new();
        write_joint_csv(&mut buf, &d).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "w,p\n00,0.25\n01,0.25\n10,0.25\n11,0.25\n");
    }

    #[test]
    fn surface_csv_leaves_failures_blank() {
        let pts = [SurfacePoint {
            eta_s: 1.0,
            eta_fs: 2.0,
            eta_f_star: None,
            rho: None,
            error: Some("x".into()),
        }];
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eta_S,eta_FS,eta_F_star,rho\n1,2,,\n");
    }
}

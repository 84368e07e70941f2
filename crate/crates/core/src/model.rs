//! Exact evaluation of the pairwise binary graphical model.
//!
//! States `w` in `{0,1}^M` are indexed by the integer whose binary
//! expansion is `w_1 w_2 ... w_M`, with `w_1` the most significant bit.
//! This is also the column order of the marginal map matrix `A_G`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Largest node count served by exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Firm,
    Sector,
}

/// Undirected simple graph on nodes `0..node_count`.
///
/// Edges keep the order in which they were supplied; edge parameters and
/// pair marginals are indexed in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    kinds: Option<Vec<NodeKind>>,
}

impl FirmGraph {
    /// Builds a graph from zero-based edges. Each edge is normalized to
    /// `(min, max)`.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {}", a + 1)));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) references a node outside 1..={node_count}",
                    a + 1,
                    b + 1
                )));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::invalid(format!("duplicate edge ({}, {})", e.0 + 1, e.1 + 1)));
            }
            out.push(e);
        }
        Ok(Self {
            node_count,
            edges: out,
            kinds: None,
        })
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let edges = (0..node_count).flat_map(|u| (u + 1..node_count).map(move |v| (u, v)));
        Self::new(node_count, edges.collect::<Vec<_>>())
    }

    /// The triangle on three nodes with edges 12, 13, 23.
    pub fn triangle() -> Self {
        Self::new(3, [(0, 1), (0, 2), (1, 2)]).expect("triangle is valid")
    }

    pub fn with_kinds(mut self, kinds: Vec<NodeKind>) -> Result<Self> {
        if kinds.len() != self.node_count {
            return Err(Error::invalid("one node kind per node required"));
        }
        self.kinds = Some(kinds);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kinds(&self) -> Option<&[NodeKind]> {
        self.kinds.as_deref()
    }

    /// Number of sufficient statistics, `M + |E|`.
    pub fn statistic_count(&self) -> usize {
        self.node_count + self.edges.len()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.iter().position(|&x| x == e)
    }

    /// True when the graph is the three-node triangle.
    pub fn is_triangle(&self) -> bool {
        self.node_count == 3
            && self.edges.len() == 3
            && [(0, 1), (0, 2), (1, 2)].iter().all(|&(u, v)| self.edge_index(u, v).is_some())
    }

    /// Connected components as sorted node lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..self.node_count {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }

    fn check_enumerable(&self) -> Result<()> {
        if self.node_count > ENUMERATION_CAP {
            return Err(Error::Capacity {
                what: "node count",
                size: self.node_count,
                limit: ENUMERATION_CAP,
            });
        }
        Ok(())
    }

    /// Value of node `i` in state index `w`.
    #[inline]
    pub fn bit(&self, w: usize, i: usize) -> bool {
        (w >> (self.node_count - 1 - i)) & 1 == 1
    }

    /// Sufficient statistic vector `T(w)`: node indicators then edge products.
    pub fn statistics(&self, w: usize) -> Vec<bool> {
        let mut t: Vec<bool> = (0..self.node_count).map(|i| self.bit(w, i)).collect();
        let edge_bits: Vec<bool> = self.edges.iter().map(|&(u, v)| t[u] && t[v]).collect();
        t.extend(edge_bits);
        t
    }
}

/// Node and edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub eta_node: Vec<f64>,
    pub eta_edge: Vec<f64>,
}

impl ModelParams {
    pub fn new(eta_node: Vec<f64>, eta_edge: Vec<f64>) -> Self {
        Self { eta_node, eta_edge }
    }

    pub fn zeros(graph: &FirmGraph) -> Self {
        Self {
            eta_node: vec![0.0; graph.node_count()],
            eta_edge: vec![0.0; graph.edge_count()],
        }
    }

    /// Builds parameters from a single vector laid out like the statistics.
    pub fn from_vector(graph: &FirmGraph, v: &[f64]) -> Result<Self> {
        if v.len() != graph.statistic_count() {
            return Err(Error::invalid("parameter vector length mismatch"));
        }
        let (n, e) = v.split_at(graph.node_count());
        Ok(Self::new(n.to_vec(), e.to_vec()))
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.eta_node.iter().chain(&self.eta_edge).copied().collect()
    }

    /// `theta = exp(eta)` for nodes then edges.
    pub fn theta(&self) -> Vec<f64> {
        self.to_vector().into_iter().map(f64::exp).collect()
    }

    pub fn validate(&self, graph: &FirmGraph) -> Result<()> {
        if self.eta_node.len() != graph.node_count() {
            return Err(Error::invalid(format!(
                "expected {} node weights, got {}",
                graph.node_count(),
                self.eta_node.len()
            )));
        }
        if self.eta_edge.len() != graph.edge_count() {
            return Err(Error::invalid(format!(
                "expected {} edge weights, got {}",
                graph.edge_count(),
                self.eta_edge.len()
            )));
        }
        if let Some(x) = self.eta_node.iter().chain(&self.eta_edge).find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite parameter {x}")));
        }
        Ok(())
    }

    /// `sum_i eta_i w_i + sum_uv eta_uv w_u w_v` for state `w`.
    pub fn energy(&self, graph: &FirmGraph, w: usize) -> f64 {
        let mut e = 0.0;
        for (i, eta) in self.eta_node.iter().enumerate() {
            if graph.bit(w, i) {
                e += eta;
            }
        }
        for (&(u, v), eta) in graph.edges().iter().zip(&self.eta_edge) {
            if graph.bit(w, u) && graph.bit(w, v) {
                e += eta;
            }
        }
        e
    }
}

/// Single-node and pairwise joint default probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    /// `P_i = Pr(X_i = 1)` per node.
    pub single: Vec<f64>,
    /// `P_uv = Pr(X_u = X_v = 1)` per edge, in graph edge order.
    pub pair: Vec<f64>,
}

impl MarginalSpec {
    pub fn new(single: Vec<f64>, pair: Vec<f64>) -> Self {
        Self { single, pair }
    }

    /// Marginals from target default probabilities and correlations on the
    /// graph edges, inverting the correlation formula.
    pub fn from_correlations(graph: &FirmGraph, single: Vec<f64>, rho: &[f64]) -> Result<Self> {
        if single.len() != graph.node_count() || rho.len() != graph.edge_count() {
            return Err(Error::invalid("marginal/correlation length mismatch"));
        }
        let pair = graph
            .edges()
            .iter()
            .zip(rho)
            .map(|(&(u, v), r)| {
                let (pu, pv) = (single[u], single[v]);
                pu * pv + r * (pu * (1.0 - pu) * pv * (1.0 - pv)).sqrt()
            })
            .collect();
        Ok(Self { single, pair })
    }

    pub fn as_vector(&self) -> Vec<f64> {
        self.single.iter().chain(&self.pair).copied().collect()
    }

    pub fn from_vector(graph: &FirmGraph, v: &[f64]) -> Result<Self> {
        if v.len() != graph.statistic_count() {
            return Err(Error::invalid("marginal vector length mismatch"));
        }
        let (s, p) = v.split_at(graph.node_count());
        Ok(Self::new(s.to_vec(), p.to_vec()))
    }

    /// Shape and range checks: one value per node and edge, each in `[0, 1]`.
    pub fn validate_shape(&self, graph: &FirmGraph) -> Result<()> {
        if self.single.len() != graph.node_count() || self.pair.len() != graph.edge_count() {
            return Err(Error::invalid(format!(
                "expected {} single and {} pair marginals, got {} and {}",
                graph.node_count(),
                graph.edge_count(),
                self.single.len(),
                self.pair.len()
            )));
        }
        if let Some(x) = self.as_vector().into_iter().find(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid(format!("marginal {x} outside [0, 1]")));
        }
        Ok(())
    }

    /// Pairwise default correlation of an edge.
    pub fn pair_correlation(&self, graph: &FirmGraph, u: usize, v: usize) -> Result<f64> {
        let e = graph
            .edge_index(u, v)
            .ok_or_else(|| Error::domain(format!("({}, {}) is not an edge", u + 1, v + 1)))?;
        pairwise_correlation(self.single[u], self.single[v], self.pair[e])
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_vector()
            .iter()
            .zip(other.as_vector())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Linear default correlation from single and joint default probabilities.
pub fn pairwise_correlation(p_u: f64, p_v: f64, p_uv: f64) -> Result<f64> {
    let degenerate = |p: f64| p <= 0.0 || p >= 1.0;
    if degenerate(p_u) || degenerate(p_v) {
        return Err(Error::domain(format!(
            "correlation undefined for degenerate marginals ({p_u}, {p_v})"
        )));
    }
    Ok((p_uv - p_u * p_v) / (p_u * (1.0 - p_u) * p_v * (1.0 - p_v)).sqrt())
}

/// Probabilities of all `2^M` states plus the log partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    node_count: usize,
    probs: Vec<f64>,
    log_partition: f64,
}

impl JointDistribution {
    /// Wraps an arbitrary (e.g. empirical) distribution. `log_partition`
    /// is set to zero.
    pub fn from_probabilities(node_count: usize, probs: Vec<f64>) -> Result<Self> {
        if node_count > ENUMERATION_CAP || probs.len() != 1usize << node_count {
            return Err(Error::invalid(format!(
                "expected 2^{node_count} probabilities, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            node_count,
            probs,
            log_partition: 0.0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// State index as a bitstring, `w_1` first.
    pub fn bitstring(&self, w: usize) -> String {
        (0..self.node_count)
            .map(|i| if (w >> (self.node_count - 1 - i)) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

/// The `(M + |E| + 1) x 2^M` zero-one matrix mapping state probabilities
/// to marginals; its last row is all ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalMapMatrix {
    rows: Vec<RowLabel>,
    cols: usize,
    entries: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    Node(usize),
    Edge(usize, usize),
    Total,
}

impl MarginalMapMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn legend(&self) -> &[RowLabel] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<u8> {
        (0..self.rows.len()).map(|r| self.get(r, col)).collect()
    }

    /// `A_G p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.cols, "vector length must equal 2^M");
        (0..self.rows.len())
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(p)
                    .filter(|(a, _)| **a == 1)
                    .map(|(_, x)| x)
                    .sum()
            })
            .collect()
    }
}

pub fn build_marginal_map(graph: &FirmGraph) -> Result<MarginalMapMatrix> {
    graph.check_enumerable()?;
    let cols = 1usize << graph.node_count();
    let mut rows: Vec<RowLabel> = (0..graph.node_count()).map(RowLabel::Node).collect();
    rows.extend(graph.edges().iter().map(|&(u, v)| RowLabel::Edge(u, v)));
    rows.push(RowLabel::Total);
    let mut entries = vec![0u8; rows.len() * cols];
    for w in 0..cols {
        for (r, t) in graph.statistics(w).into_iter().enumerate() {
            entries[r * cols + w] = t as u8;
        }
        entries[(rows.len() - 1) * cols + w] = 1;
    }
    Ok(MarginalMapMatrix { rows, cols, entries })
}

/// Log-weights `energy(w)` for every state.
pub(crate) fn energies(graph: &FirmGraph, params: &ModelParams) -> Vec<f64> {
    (0..1usize << graph.node_count())
        .map(|w| params.energy(graph, w))
        .collect()
}

pub fn joint_distribution(graph: &FirmGraph, params: &ModelParams) -> Result<JointDistribution> {
    graph.check_enumerable()?;
    params.validate(graph)?;
    let e = energies(graph, params);
    let log_partition = log_sum_exp(&e);
    let probs = e.iter().map(|x| (x - log_partition).exp()).collect();
    Ok(JointDistribution {
        node_count: graph.node_count(),
        probs,
        log_partition,
    })
}

/// Expected sufficient statistics of an arbitrary state distribution.
pub(crate) fn expected_statistics(graph: &FirmGraph, probs: &[f64]) -> Vec<f64> {
    let m = graph.node_count();
    let mut out = vec![0.0; graph.statistic_count()];
    for (w, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for i in 0..m {
            if graph.bit(w, i) {
                out[i] += p;
            }
        }
        for (k, &(u, v)) in graph.edges().iter().enumerate() {
            if graph.bit(w, u) && graph.bit(w, v) {
                out[m + k] += p;
            }
        }
    }
    out
}

pub fn marginals_from_params(graph: &FirmGraph, params: &ModelParams) -> Result<MarginalSpec> {
    let dist = joint_distribution(graph, params)?;
    MarginalSpec::from_vector(graph, &expected_statistics(graph, dist.probabilities()))
}

/// Marginals of an arbitrary distribution over the graph's states.
pub fn marginals_of(graph: &FirmGraph, dist: &JointDistribution) -> Result<MarginalSpec> {
    if dist.node_count() != graph.node_count() {
        return Err(Error::invalid("distribution and graph disagree on node count"));
    }
    MarginalSpec::from_vector(graph, &expected_statistics(graph, dist.probabilities()))
}

/// `p000 p011 p101 p110 - p001 p010 p100 p111`, the binomial cutting out
/// the triangle model inside the probability simplex.
pub fn toric_relation_residual(dist: &JointDistribution) -> Result<f64> {
    if dist.node_count() != 3 {
        return Err(Error::domain(format!(
            "toric relation is defined for three nodes, got {}",
            dist.node_count()
        )));
    }
    let p = dist.probabilities();
    Ok(p[0b000] * p[0b011] * p[0b101] * p[0b110] - p[0b001] * p[0b010] * p[0b100] * p[0b111])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_rejects_self_loops_and_duplicates() {
        assert!(FirmGraph::new(3, [(1, 1)]).is_err());
        assert!(FirmGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(FirmGraph::new(2, [(0, 2)]).is_err());
        assert!(FirmGraph::new(0, []).is_err());
    }

    #[test]
    fn triangle_marginal_map_matches_display() {
        let a = build_marginal_map(&FirmGraph::triangle()).unwrap();
        let expected: [[u8; 8]; 7] = [
            [0, 0, 0, 0, 1, 1, 1, 1],
            [0, 0, 1, 1, 0, 0, 1, 1],
            [0, 1, 0, 1, 0, 1, 0, 1],
            [0, 0, 0, 0, 0, 0, 1, 1],
            [0, 0, 0, 0, 0, 1, 0, 1],
            [0, 0, 0, 1, 0, 0, 0, 1],
            [1, 1, 1, 1, 1, 1, 1, 1],
        ];
        assert_eq!(a.row_count(), 7);
        assert_eq!(a.col_count(), 8);
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(a.row(r), row, "row {r}");
        }
        assert_eq!(a.legend()[3], RowLabel::Edge(0, 1));
        assert_eq!(a.legend()[6], RowLabel::Total);
    }

    #[test]
    fn single_node_marginal_map() {
        let a = build_marginal_map(&FirmGraph::new(1, []).unwrap()).unwrap();
        assert_eq!(a.row(0), &[0, 1]);
        assert_eq!(a.row(1), &[1, 1]);
    }

    #[test]
    fn two_node_edge_row() {
        let a = build_marginal_map(&FirmGraph::new(2, [(0, 1)]).unwrap()).unwrap();
        assert_eq!(a.col_count(), 4);
        assert_eq!(a.row(2), &[0, 0, 0, 1]);
    }

    #[test]
    fn capacity_error_above_cap() {
        let g = FirmGraph::new(ENUMERATION_CAP + 1, []).unwrap();
        assert!(matches!(build_marginal_map(&g), Err(Error::Capacity { .. })));
        let p = ModelParams::zeros(&g);
        assert!(matches!(joint_distribution(&g, &p), Err(Error::Capacity { .. })));
    }

    #[test]
    fn uniform_triangle() {
        let g = FirmGraph::triangle();
        let d = joint_distribution(&g, &ModelParams::zeros(&g)).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 0.125).abs() < 1e-15));
        assert!((d.log_partition() - 8f64.ln()).abs() < 1e-15);
        let m = marginals_from_params(&g, &ModelParams::zeros(&g)).unwrap();
        assert!(m.single.iter().all(|p| (p - 0.5).abs() < 1e-15));
        assert!(m.pair.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn triangle_monomials() {
        let g = FirmGraph::triangle();
        let params = ModelParams::new(vec![0.3, -0.4, 0.9], vec![0.2, -1.1, 0.7]);
        let d = joint_distribution(&g, &params).unwrap();
        let t: Vec<f64> = params.theta();
        let (t1, t2, t3, t12, t13, t23) = (t[0], t[1], t[2], t[3], t[4], t[5]);
        let mono = [
            1.0,
            t3,
            t2,
            t2 * t3 * t23,
            t1,
            t1 * t3 * t13,
            t1 * t2 * t12,
            t1 * t2 * t3 * t12 * t13 * t23,
        ];
        let z: f64 = mono.iter().sum();
        for (p, m) in d.probabilities().iter().zip(mono) {
            assert!((p - m / z).abs() < 1e-15);
        }
        assert!((d.log_partition() - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn two_node_enumeration() {
        let g = FirmGraph::new(2, [(0, 1)]).unwrap();
        let params = ModelParams::new(vec![0.0, 0.0], vec![2f64.ln()]);
        let d = joint_distribution(&g, &params).unwrap();
        let expected = [0.2, 0.2, 0.2, 0.4];
        for (p, e) in d.probabilities().iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
        let m = marginals_from_params(&g, &params).unwrap();
        assert!((m.single[0] - 0.6).abs() < 1e-15);
        assert!((m.single[1] - 0.6).abs() < 1e-15);
        assert!((m.pair[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(pairwise_correlation(0.5, 0.5, 0.25).unwrap(), 0.0);
        assert!((pairwise_correlation(0.5, 0.5, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((pairwise_correlation(0.05, 0.05, 0.004875).unwrap() - 0.05).abs() < 1e-12);
        assert!(matches!(pairwise_correlation(0.0, 0.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pairwise_correlation(0.5, 1.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn toric_residual_cases() {
        let g = FirmGraph::triangle();
        let d = joint_distribution(&g, &ModelParams::zeros(&g)).unwrap();
        assert_eq!(toric_relation_residual(&d).unwrap(), 0.0);

        let empirical =
            JointDistribution::from_probabilities(3, vec![0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        // 0.3 * 0.1^3 - 0.1^3 * 0.1
        assert!((toric_relation_residual(&empirical).unwrap() - 2e-4).abs() < 1e-17);

        let two = FirmGraph::new(2, [(0, 1)]).unwrap();
        let d2 = joint_distribution(&two, &ModelParams::zeros(&two)).unwrap();
        assert!(matches!(toric_relation_residual(&d2), Err(Error::Domain(_))));
    }

    #[test]
    fn bitstrings_put_first_node_first() {
        let g = FirmGraph::triangle();
        let d = joint_distribution(&g, &ModelParams::zeros(&g)).unwrap();
        assert_eq!(d.bitstring(0b100), "100");
        assert_eq!(d.bitstring(0b011), "011");
    }

    #[test]
    fn from_correlations_inverts_pairwise_correlation() {
        let g = FirmGraph::new(2, [(0, 1)]).unwrap();
        let m = MarginalSpec::from_correlations(&g, vec![0.05, 0.05], &[0.05]).unwrap();
        assert!((m.pair[0] - 0.004875).abs() < 1e-15);
        assert!((m.pair_correlation(&g, 0, 1).unwrap() - 0.05).abs() < 1e-14);
    }

    #[test]
    fn components_of_disconnected_graph() {
        let g = FirmGraph::new(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1], vec![2], vec![3, 4]]);
    }
}

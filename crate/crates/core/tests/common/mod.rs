//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, RngExt};
use toric_credit::model::{FirmGraph, ModelParams};
use toric_credit::sector::SectorParams;

/// Loss law of a sector model by summing over every joint firm/sector
/// outcome. Written directly from the energy function, without going
/// through any library conditioning.
pub fn brute_sector_loss(p: &SectorParams) -> Vec<f64> {
    let n: usize = p.sizes.iter().sum();
    let s = p.sizes.len();
    let mut sector_of = Vec::with_capacity(n);
    for (j, &size) in p.sizes.iter().enumerate() {
        sector_of.extend(std::iter::repeat_n(j, size));
    }
    let edge = |u: usize, v: usize| -> f64 {
        if p.eta_sector_edge.is_empty() {
            return 0.0;
        }
        // lexicographic (u, v), u < v
        let idx = u * (2 * s - u - 1) / 2 + (v - u - 1);
        p.eta_sector_edge[idx]
    };
    let mut weights = vec![Vec::new(); n + 1];
    for sectors in 0..1usize << s {
        let on = |j: usize| (sectors >> j) & 1 == 1;
        let mut base = 0.0;
        for j in 0..s {
            if on(j) {
                base += p.eta_s[j];
                for v in j + 1..s {
                    if on(v) {
                        base += edge(j, v);
                    }
                }
            }
        }
        for firms in 0..1usize << n {
            let mut e = base;
            for (i, &j) in sector_of.iter().enumerate() {
                if (firms >> i) & 1 == 1 {
                    e += p.eta_f[j] + if on(j) { p.eta_fs[j] } else { 0.0 };
                }
            }
            weights[firms.count_ones() as usize].push(e);
        }
    }
    let all: Vec<f64> = weights.iter().flatten().copied().collect();
    let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = all.iter().map(|e| (e - max).exp()).sum();
    weights
        .iter()
        .map(|ws| ws.iter().map(|e| (e - max).exp()).sum::<f64>() / z)
        .collect()
}

/// Exact joint law of an Ising model by direct summation, indexed like the
/// library (node 0 is the most significant bit).
pub fn brute_joint(graph: &FirmGraph, params: &ModelParams) -> Vec<f64> {
    let m = graph.node_count();
    let energies: Vec<f64> = (0..1usize << m)
        .map(|w| {
            let x = |i: usize| (w >> (m - 1 - i)) & 1 == 1;
            let mut e = 0.0;
            for i in 0..m {
                if x(i) {
                    e += params.eta_node[i];
                }
            }
            for (k, &(u, v)) in graph.edges().iter().enumerate() {
                if x(u) && x(v) {
                    e += params.eta_edge[k];
                }
            }
            e
        })
        .collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = energies.iter().map(|e| (e - max).exp()).sum();
    energies.iter().map(|e| (e - max).exp() / z).collect()
}

/// Random simple graph on `m` nodes with edge probability `density`.
pub fn random_graph<R: Rng>(rng: &mut R, m: usize, density: f64) -> FirmGraph {
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if rng.random::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    FirmGraph::new(m, edges).expect("valid graph")
}

pub fn random_params<R: Rng>(rng: &mut R, graph: &FirmGraph, scale: f64) -> ModelParams {
    let mut draw = || scale * (2.0 * rng.random::<f64>() - 1.0);
    let eta_node = (0..graph.node_count()).map(|_| draw()).collect();
    let eta_edge = (0..graph.edge_count()).map(|_| draw()).collect();
    ModelParams::new(eta_node, eta_edge)
}

pub fn random_sector_params<R: Rng>(rng: &mut R, max_firms: usize, max_sectors: usize) -> SectorParams {
    let s = 1 + (rng.random::<u32>() as usize) % max_sectors;
    let mut sizes = vec![1; s];
    let mut left = max_firms.saturating_sub(s);
    for size in sizes.iter_mut() {
        let extra = (rng.random::<u32>() as usize) % (left + 1);
        *size += extra;
        left -= extra;
    }
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    SectorParams {
        eta_s: (0..s).map(|_| u(-3.0, 3.0)).collect(),
        eta_f: (0..s).map(|_| u(-3.0, 1.0)).collect(),
        eta_fs: (0..s).map(|_| u(-3.0, 3.0)).collect(),
        eta_sector_edge: (0..s * (s - 1) / 2).map(|_| u(-1.0, 1.0)).collect(),
        sizes,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

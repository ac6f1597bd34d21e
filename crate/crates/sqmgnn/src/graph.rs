//! Interference-graph view of a D2D network plus feature preparation: every
//! transmitter-receiver pair is a node, every ordered pair of nodes carries
//! the interference gain between them, and gains become rotation angles via
//! log10 + logistic squashing fitted on the training split.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{contract, data_err, Result};

/// Complete directed interference graph. `edge_gain(j, k)` is the channel
/// gain from transmitter j to receiver k (j ≠ k); `node_gain(k)` the desired
/// link's own gain h_kk. Gains are linear power ratios, strictly positive.
#[derive(Debug, Clone)]
pub struct WirelessGraph {
    n: usize,
    gains: Vec<f64>, // row-major n×n; diagonal = node gains
}

impl WirelessGraph {
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn node_gain(&self, k: usize) -> f64 {
        assert!(k < self.n);
        self.gains[k * self.n + k]
    }

    pub fn edge_gain(&self, j: usize, k: usize) -> f64 {
        assert!(j < self.n && k < self.n && j != k, "edge requires two distinct nodes");
        self.gains[j * self.n + k]
    }

    /// Node degree in the complete interference graph.
    pub fn degree(&self, _k: usize) -> usize {
        self.n - 1
    }
}

/// Wraps a strictly positive K×K gain matrix (row j = transmitter j).
pub fn build_graph(h: &[f64], n: usize) -> Result<WirelessGraph> {
    if n == 0 {
        return Err(contract("graph needs at least one node"));
    }
    if h.len() != n * n {
        return Err(contract(format!("gain matrix length {} is not {n}×{n}", h.len())));
    }
    if let Some(pos) = h.iter().position(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(data_err(format!(
            "non-positive or non-finite gain {} at row {} col {}",
            h[pos],
            pos / n,
            pos % n
        )));
    }
    Ok(WirelessGraph { n, gains: h.to_vec() })
}

/// log10-domain statistics for angle encoding, fitted on training graphs
/// only. Node (direct) and edge (interference) gains get separate scales
/// because they differ by orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub node_mean: f64,
    pub node_std: f64,
    pub edge_mean: f64,
    pub edge_std: f64,
}

pub fn fit_normalization(graphs: &[WirelessGraph]) -> Result<NormStats> {
    if graphs.is_empty() {
        return Err(contract("cannot fit normalization on an empty training set"));
    }
    let mut node_logs = Vec::new();
    let mut edge_logs = Vec::new();
    for g in graphs {
        for k in 0..g.n_nodes() {
            node_logs.push(g.node_gain(k).log10());
            for j in 0..g.n_nodes() {
                if j != k {
                    edge_logs.push(g.edge_gain(j, k).log10());
                }
            }
        }
    }
    let (node_mean, node_std) = mean_std(&node_logs);
    let (edge_mean, edge_std) = if edge_logs.is_empty() {
        (0.0, 1.0) // single-node graphs have no edges
    } else {
        mean_std(&edge_logs)
    };
    Ok(NormStats { node_mean, node_std, edge_mean, edge_std })
}

/// Population mean and std; a degenerate std collapses to 1 so the angle
/// map stays defined.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

/// π·logistic((log10 g − mean)/std) ∈ (0, π); monotone in g.
pub fn gain_to_angle(g: f64, mean: f64, std: f64) -> Result<f64> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(data_err(format!("gain must be positive and finite, got {g}")));
    }
    let z = (g.log10() - mean) / std;
    Ok(std::f64::consts::PI / (1.0 + (-z).exp()))
}

impl NormStats {
    pub fn node_angle(&self, g: f64) -> Result<f64> {
        gain_to_angle(g, self.node_mean, self.node_std)
    }

    pub fn edge_angle(&self, g: f64) -> Result<f64> {
        gain_to_angle(g, self.edge_mean, self.edge_std)
    }
}

/// Precomputed encoding angles of incoming interference: `incoming(c)[j]` is
/// the angle for the gain from transmitter j into receiver c (entry j = c is
/// unused and zero).
#[derive(Debug, Clone)]
pub struct EdgeAngles {
    n: usize,
    angles: Vec<f64>, // [c·n + j]
}

impl EdgeAngles {
    pub fn from_graph(g: &WirelessGraph, stats: &NormStats) -> Result<Self> {
        let n = g.n_nodes();
        let mut angles = vec![0.0; n * n];
        for c in 0..n {
            for j in 0..n {
                if j != c {
                    angles[c * n + j] = stats.edge_angle(g.edge_gain(j, c))?;
                }
            }
        }
        Ok(EdgeAngles { n, angles })
    }

    pub fn incoming(&self, center: usize) -> &[f64] {
        assert!(center < self.n);
        &self.angles[center * self.n..(center + 1) * self.n]
    }
}

/// How star subgraphs pick their k neighbor slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Uniform k-subset without replacement, order randomized.
    Random,
    /// All neighbors in ascending id order; requires degree ≤ k. Used for
    /// the exact permutation-equivariance property.
    Deterministic,
}

/// One slot of a star subgraph: a real neighbor with its two encoding
/// angles, or zero-angle padding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSlot {
    pub neighbor: Option<usize>,
    pub node_angle: f64,
    pub edge_angle: f64,
}

impl StarSlot {
    const PADDING: StarSlot = StarSlot { neighbor: None, node_angle: 0.0, edge_angle: 0.0 };
}

/// k-slot star around a center node; the quantum layer's unit of work.
#[derive(Debug, Clone)]
pub struct StarSubgraph {
    pub center: usize,
    pub center_angle: f64,
    pub slots: Vec<StarSlot>,
    pub layer_index: usize,
}

/// Samples a star subgraph. `node_angles[v]` supplies the encoding angle of
/// every node (the center's included); `edge_angles[j]` the incoming-edge
/// angle from j to the center, as produced by [`EdgeAngles::incoming`].
/// Degrees below k are padded with zero-angle slots.
#[allow(clippy::too_many_arguments)]
pub fn sample_star(
    graph: &WirelessGraph,
    center: usize,
    k: usize,
    node_angles: &[f64],
    edge_angles: &[f64],
    layer_index: usize,
    mode: SampleMode,
    rng: &mut impl Rng,
) -> Result<StarSubgraph> {
    let n = graph.n_nodes();
    if center >= n {
        return Err(contract(format!("center {center} out of range for {n} nodes")));
    }
    if k == 0 {
        return Err(contract("star subgraph needs at least one slot"));
    }
    if node_angles.len() != n || edge_angles.len() != n {
        return Err(contract("angle vectors must have one entry per node"));
    }

    let mut neighbors: Vec<usize> = (0..n).filter(|&v| v != center).collect();
    let chosen: &[usize] = match mode {
        SampleMode::Random => {
            // Partial Fisher-Yates: the first min(k, d) entries become a
            // uniform ordered sample without replacement.
            let take = k.min(neighbors.len());
            for i in 0..take {
                let j = rng.gen_range(i..neighbors.len());
                neighbors.swap(i, j);
            }
            &neighbors[..take]
        }
        SampleMode::Deterministic => {
            if neighbors.len() > k {
                return Err(contract(format!(
                    "deterministic sampling needs k ≥ degree ({k} < {})",
                    neighbors.len()
                )));
            }
            &neighbors
        }
    };

    let mut slots = Vec::with_capacity(k);
    for &u in chosen {
        slots.push(StarSlot {
            neighbor: Some(u),
            node_angle: node_angles[u],
            edge_angle: edge_angles[u],
        });
    }
    slots.resize(k, StarSlot::PADDING);
    debug_assert!(slots
        .iter()
        .all(|s| (0.0..=std::f64::consts::PI).contains(&s.node_angle)
            && (0.0..=std::f64::consts::PI).contains(&s.edge_angle)));
    Ok(StarSubgraph { center, center_angle: node_angles[center], slots, layer_index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn graph_k(n: usize) -> WirelessGraph {
        let mut h = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                h[j * n + k] = if j == k { 1e-9 } else { 1e-12 * (1.0 + j as f64 + k as f64) };
            }
        }
        build_graph(&h, n).unwrap()
    }

    #[test]
    fn build_graph_validates() {
        assert!(build_graph(&[2.0], 1).is_ok());
        assert!(build_graph(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(build_graph(&[1.0, -1.0, 1.0, 1.0], 2).is_err());
        assert!(build_graph(&[1.0, 0.0, 1.0, 1.0], 2).is_err());
        assert!(build_graph(&[], 0).is_err());
    }

    #[test]
    fn twenty_nodes_have_380_ordered_edges() {
        let g = graph_k(20);
        let mut count = 0;
        for j in 0..20 {
            for k in 0..20 {
                if j != k {
                    assert!(g.edge_gain(j, k) > 0.0);
                    count += 1;
                }
            }
        }
        assert_eq!(count, 380);
    }

    #[test]
    fn normalization_degenerate_and_two_point() {
        let g = build_graph(&[1e-2], 1).unwrap();
        let s = fit_normalization(&[g]).unwrap();
        assert!((s.node_mean + 2.0).abs() < 1e-12);
        assert_eq!(s.node_std, 1.0); // degenerate → 1

        let g2 = build_graph(&[1e-1, 1.0, 1.0, 1e-3], 2).unwrap();
        let s2 = fit_normalization(&[g2]).unwrap();
        assert!((s2.node_mean + 2.0).abs() < 1e-12);
        assert!((s2.node_std - 1.0).abs() < 1e-12); // population std of {−1,−3}
    }

    #[test]
    fn angle_map_midpoint_limits_monotone() {
        let a = gain_to_angle(1e-2, -2.0, 1.0).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-12);
        assert!(gain_to_angle(1e30, -2.0, 1.0).unwrap() > PI - 1e-10);
        assert!(gain_to_angle(1e-300, -2.0, 1.0).unwrap() < 1e-10);
        let mut prev = 0.0;
        for e in -8..8 {
            let a = gain_to_angle(10f64.powi(e), -2.0, 1.0).unwrap();
            assert!(a > prev);
            prev = a;
        }
        assert!(gain_to_angle(0.0, 0.0, 1.0).is_err());
        assert!(gain_to_angle(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sample_star_shapes_and_padding() {
        let g = graph_k(4); // degree 3
        let s = fit_normalization(&[g.clone()]).unwrap();
        let node_angles: Vec<f64> =
            (0..4).map(|v| s.node_angle(g.node_gain(v)).unwrap()).collect();
        let ea = EdgeAngles::from_graph(&g, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);

        let sub = sample_star(&g, 0, 6, &node_angles, ea.incoming(0), 0, SampleMode::Random, &mut rng)
            .unwrap();
        assert_eq!(sub.slots.len(), 6);
        let real: Vec<usize> = sub.slots.iter().filter_map(|s| s.neighbor).collect();
        assert_eq!(real.len(), 3);
        let mut sorted = real.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
        assert!(!real.contains(&0));
        for s in &sub.slots[3..] {
            assert_eq!(s.neighbor, None);
            assert_eq!((s.node_angle, s.edge_angle), (0.0, 0.0));
        }
        assert_eq!(sub.center_angle, node_angles[0]);
    }

    #[test]
    fn sample_star_without_replacement_and_determinism() {
        let g = graph_k(8);
        let s = fit_normalization(&[g.clone()]).unwrap();
        let node_angles: Vec<f64> =
            (0..8).map(|v| s.node_angle(g.node_gain(v)).unwrap()).collect();
        let ea = EdgeAngles::from_graph(&g, &s).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sub =
                sample_star(&g, 3, 4, &node_angles, ea.incoming(3), 1, SampleMode::Random, &mut rng)
                    .unwrap();
            let ids: Vec<usize> = sub.slots.iter().filter_map(|s| s.neighbor).collect();
            assert_eq!(ids.len(), 4);
            let mut uniq = ids.clone();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), 4, "duplicate neighbor in sample");

            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            let sub2 =
                sample_star(&g, 3, 4, &node_angles, ea.incoming(3), 1, SampleMode::Random, &mut rng2)
                    .unwrap();
            assert_eq!(sub.slots, sub2.slots);
        }
    }

    #[test]
    fn sample_star_coverage_is_uniform() {
        // Inclusion frequency of each neighbor → k/d within 3 standard errors.
        let g = graph_k(7); // degree 6
        let s = fit_normalization(&[g.clone()]).unwrap();
        let node_angles: Vec<f64> =
            (0..7).map(|v| s.node_angle(g.node_gain(v)).unwrap()).collect();
        let ea = EdgeAngles::from_graph(&g, &s).unwrap();
        let (k, d, trials) = (2usize, 6usize, 6000usize);
        let p = k as f64 / d as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut hits = vec![0usize; 7];
        for _ in 0..trials {
            let sub =
                sample_star(&g, 0, k, &node_angles, ea.incoming(0), 0, SampleMode::Random, &mut rng)
                    .unwrap();
            for s in &sub.slots {
                hits[s.neighbor.unwrap()] += 1;
            }
        }
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for v in 1..7 {
            let freq = hits[v] as f64 / trials as f64;
            assert!(
                (freq - p).abs() < 3.0 * se,
                "node {v}: frequency {freq} vs expected {p} (se {se})"
            );
        }
    }

    #[test]
    fn deterministic_mode_sorted_or_error() {
        let g = graph_k(5);
        let s = fit_normalization(&[g.clone()]).unwrap();
        let node_angles: Vec<f64> =
            (0..5).map(|v| s.node_angle(g.node_gain(v)).unwrap()).collect();
        let ea = EdgeAngles::from_graph(&g, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sub = sample_star(
            &g,
            2,
            6,
            &node_angles,
            ea.incoming(2),
            0,
            SampleMode::Deterministic,
            &mut rng,
        )
        .unwrap();
        let ids: Vec<Option<usize>> = sub.slots.iter().map(|s| s.neighbor).collect();
        assert_eq!(ids, vec![Some(0), Some(1), Some(3), Some(4), None, None]);
        assert!(sample_star(
            &g,
            2,
            3,
            &node_angles,
            ea.incoming(2),
            0,
            SampleMode::Deterministic,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn sample_star_contract_errors() {
        let g = graph_k(3);
        let angles = vec![0.1; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(
            sample_star(&g, 9, 2, &angles, &angles, 0, SampleMode::Random, &mut rng).is_err()
        );
        assert!(
            sample_star(&g, 0, 0, &angles, &angles, 0, SampleMode::Random, &mut rng).is_err()
        );
        assert!(
            sample_star(&g, 0, 2, &angles[..2], &angles, 0, SampleMode::Random, &mut rng).is_err()
        );
    }
}

//! Random-partition graphs with a target node homophily and average degree,
//! neighborhood-distribution-controlled graphs, hypercube-centered Gaussian
//! features, and random node splits.
//!
//! All samplers are pure functions of (spec, seed): identical inputs give
//! bit-identical graphs and masks.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, SplitMasks};
use crate::kernels::DenseMatrix;
use crate::metrics::distribution_distinguishability;
use crate::rng::{derive_seed, seeded_rng, stream};

fn default_num_classes() -> usize {
    7
}
fn default_nodes_per_class() -> usize {
    400
}
fn default_avg_degree() -> f64 {
    10.0
}
fn default_feature_dim() -> usize {
    1433
}
fn default_scale() -> f64 {
    1.0
}

/// Community-structured random graph controlled by node homophily and
/// average degree. Defaults mirror a Cora-sized setup: 7 classes of 400
/// nodes, degree 10, 1433 features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(default = "default_num_classes")]
    pub num_classes: usize,
    #[serde(default = "default_nodes_per_class")]
    pub nodes_per_class: usize,
    #[serde(default = "default_avg_degree")]
    pub avg_degree: f64,
    pub homophily_target: f64,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_scale")]
    pub center_scale: f64,
    #[serde(default = "default_scale")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            num_classes: default_num_classes(),
            nodes_per_class: default_nodes_per_class(),
            avg_degree: default_avg_degree(),
            homophily_target: 0.5,
            feature_dim: default_feature_dim(),
            center_scale: 1.0,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl PartitionSpec {
    pub fn num_nodes(&self) -> usize {
        self.num_classes * self.nodes_per_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.nodes_per_class == 0 || self.feature_dim == 0 {
            return Err(Error::DimensionMismatch(
                "all counts must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.homophily_target) {
            return Err(Error::ProbabilityOutOfRange {
                which: "homophily_target",
                value: self.homophily_target,
            });
        }
        if self.avg_degree < 0.0 || self.avg_degree >= (self.num_nodes() - 1) as f64 {
            return Err(Error::ProbabilityOutOfRange {
                which: "avg_degree",
                value: self.avg_degree,
            });
        }
        Ok(())
    }
}

/// Graph whose per-class neighbor-label distributions are steered toward
/// the rows of a target row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborDistributionSpec {
    /// Row c is the target neighbor-label distribution of class c.
    pub m: Vec<Vec<f64>>,
    #[serde(default = "default_nodes_per_class")]
    pub nodes_per_class: usize,
    #[serde(default = "default_avg_degree")]
    pub avg_degree: f64,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_scale")]
    pub center_scale: f64,
    #[serde(default = "default_scale")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NeighborDistributionSpec {
    pub fn num_classes(&self) -> usize {
        self.m.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_classes() * self.nodes_per_class
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.m.len();
        if c == 0 || self.nodes_per_class == 0 || self.feature_dim == 0 {
            return Err(Error::DimensionMismatch(
                "all counts must be at least 1".into(),
            ));
        }
        for (i, row) in self.m.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch(format!(
                    "neighbor distribution row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::ProbabilityOutOfRange {
                    which: "neighbor distribution entry",
                    value: *row.iter().find(|&&v| v < 0.0).unwrap(),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::DimensionMismatch(format!(
                    "neighbor distribution row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// The distribution the undirected sampler can actually realize: row
    /// sums of (M + M^T)/2, renormalized. Equal to M when M is symmetric.
    pub fn realizable_rows(&self) -> DenseMatrix {
        let c = self.num_classes();
        let mut rows = DenseMatrix::zeros(c, c);
        for a in 0..c {
            let mut sum = 0.0;
            for b in 0..c {
                let v = 0.5 * (self.m[a][b] + self.m[b][a]);
                rows.set(a, b, v);
                sum += v;
            }
            if sum > 0.0 {
                for v in rows.row_mut(a) {
                    *v /= sum;
                }
            }
        }
        rows
    }
}

/// The target split sizes of the node-level random split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        // 160 : 500 : 1000.
        Self {
            train: 160,
            val: 500,
            test: 1000,
        }
    }
}

/// Closed-form intra/inter-class edge probabilities: p_in = h*d/(n-1) and
/// p_out = (1-h)*d/(N-n). The expected same-class neighbor count is then
/// h*d and the expected degree d, so the realized node homophily
/// concentrates on h.
pub fn partition_probabilities(spec: &PartitionSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let h = spec.homophily_target;
    let d = spec.avg_degree;
    let n = spec.nodes_per_class as f64;
    let total = spec.num_nodes() as f64;

    let p_in = if spec.nodes_per_class == 1 {
        0.0
    } else {
        h * d / (n - 1.0)
    };
    let p_out = if spec.num_classes == 1 {
        0.0
    } else {
        (1.0 - h) * d / (total - n)
    };
    for (which, value) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(Error::ProbabilityOutOfRange { which, value });
        }
    }
    Ok((p_in, p_out))
}

/// Labels in contiguous blocks of `nodes_per_class`.
fn block_labels(num_classes: usize, nodes_per_class: usize) -> Vec<usize> {
    (0..num_classes * nodes_per_class)
        .map(|v| v / nodes_per_class)
        .collect()
}

/// Bernoulli edge sampling over all unordered pairs, with the probability
/// of a (u, v) pair looked up from the class pair.
fn sample_pairwise_edges(
    labels: &[usize],
    class_pair_prob: &DenseMatrix,
    seed: u64,
) -> Vec<(usize, usize)> {
    let n = labels.len();
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = class_pair_prob.get(labels[u], labels[v]);
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

pub fn sample_partition_graph(spec: &PartitionSpec) -> Result<Graph> {
    let (p_in, p_out) = partition_probabilities(spec)?;
    let c = spec.num_classes;
    let mut prob = DenseMatrix::zeros(c, c);
    for a in 0..c {
        for b in 0..c {
            prob.set(a, b, if a == b { p_in } else { p_out });
        }
    }
    let labels = block_labels(c, spec.nodes_per_class);
    let edges = sample_pairwise_edges(&labels, &prob, derive_seed(spec.seed, stream::EDGES));
    let centers = hypercube_centers(c, spec.feature_dim, spec.center_scale)?;
    let features = sample_features(
        &labels,
        &centers,
        spec.noise_sigma,
        derive_seed(spec.seed, stream::FEATURES),
    );
    build_graph(&edges, c, labels, features)
}

/// Samples a graph whose class-pair edge probability is
/// p(c, c') = d/2 * (M[c][c']/n + M[c'][c]/n), the symmetric rate at which
/// the undirected construction can honor both classes' targets. The
/// realized per-class neighbor distributions approximate
/// [`NeighborDistributionSpec::realizable_rows`] (equal to M itself
/// whenever M is symmetric).
pub fn sample_neighbor_distribution_graph(spec: &NeighborDistributionSpec) -> Result<Graph> {
    spec.validate()?;
    let c = spec.num_classes();
    let n = spec.nodes_per_class as f64;
    let d = spec.avg_degree;
    let mut prob = DenseMatrix::zeros(c, c);
    for a in 0..c {
        for b in 0..c {
            let p = 0.5 * d * (spec.m[a][b] / n + spec.m[b][a] / n);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange {
                    which: "class pair probability",
                    value: p,
                });
            }
            prob.set(a, b, p);
        }
    }
    let labels = block_labels(c, spec.nodes_per_class);
    let edges = sample_pairwise_edges(&labels, &prob, derive_seed(spec.seed, stream::EDGES));
    let centers = hypercube_centers(c, spec.feature_dim, spec.center_scale)?;
    let features = sample_features(
        &labels,
        &centers,
        spec.noise_sigma,
        derive_seed(spec.seed, stream::FEATURES),
    );
    build_graph(&edges, c, labels, features)
}

/// The target matrix of the maximally heterophilous yet distinguishable
/// case: class c's neighbors all carry label c+1 (mod C).
pub fn cyclic_shift_matrix(num_classes: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; num_classes]; num_classes];
    for c in 0..num_classes {
        m[c][(c + 1) % num_classes] = 1.0;
    }
    m
}

/// Pairwise total-variation distance between rows of a target matrix.
pub fn target_row_distinguishability(m: &[Vec<f64>]) -> DenseMatrix {
    let c = m.len();
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    distribution_distinguishability(&DenseMatrix::from_vec(c, c, flat).expect("square target"))
}

/// Class centers at the hypercube vertices scale * e_c: pairwise
/// equidistant (distance scale * sqrt(2)).
pub fn hypercube_centers(
    num_classes: usize,
    feature_dim: usize,
    center_scale: f64,
) -> Result<DenseMatrix> {
    if feature_dim < num_classes {
        return Err(Error::DimensionTooSmall {
            needed: num_classes,
            got: feature_dim,
        });
    }
    let mut centers = DenseMatrix::zeros(num_classes, feature_dim);
    for c in 0..num_classes {
        centers.set(c, c, center_scale);
    }
    Ok(centers)
}

/// Row v ~ Normal(center[label_v], sigma^2 I), independent per node and
/// coordinate. Values are rounded to f32 at generation so a dataset
/// round-trips the binary feature format bit-exactly.
pub fn sample_features(
    labels: &[usize],
    centers: &DenseMatrix,
    noise_sigma: f64,
    seed: u64,
) -> DenseMatrix {
    let dim = centers.cols();
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = DenseMatrix::zeros(labels.len(), dim);
    for (v, &label) in labels.iter().enumerate() {
        let center = centers.row(label);
        let row = features.row_mut(v);
        if noise_sigma == 0.0 {
            row.copy_from_slice(center);
            for x in row.iter_mut() {
                *x = *x as f32 as f64;
            }
        } else {
            for (x, &c) in row.iter_mut().zip(center) {
                let value = c + noise_sigma * normal.sample(&mut rng);
                *x = value as f32 as f64;
            }
        }
    }
    features
}

/// Uniformly random disjoint train/val/test index sets of the exact
/// requested sizes; remaining nodes stay unassigned.
pub fn random_split(num_nodes: usize, counts: SplitCounts, seed: u64) -> Result<SplitMasks> {
    let requested = counts.train + counts.val + counts.test;
    if requested > num_nodes {
        return Err(Error::CountsExceedNodes {
            requested,
            available: num_nodes,
        });
    }
    let mut rng = seeded_rng(seed);
    let mut nodes: Vec<usize> = (0..num_nodes).collect();
    // Partial Fisher-Yates: only the first `requested` slots are needed.
    for i in 0..requested {
        let j = rng.random_range(i..num_nodes);
        nodes.swap(i, j);
    }
    let mut train: Vec<usize> = nodes[..counts.train].to_vec();
    let mut val: Vec<usize> = nodes[counts.train..counts.train + counts.val].to_vec();
    let mut test: Vec<usize> = nodes[counts.train + counts.val..requested].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitMasks { train, val, test })
}

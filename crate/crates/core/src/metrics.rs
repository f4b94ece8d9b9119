//! Graph-structure and model-quality diagnostics: node homophily,
//! neighbor-label distributions and their distinguishability, embedding
//! cosine similarity, accuracy, and confusion matrices.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::DenseMatrix;
use crate::rng::seeded_rng;

/// Fraction of same-label neighbors, averaged over all nodes. Isolated
/// nodes contribute 0 and still count in the denominator, which keeps the
/// metric total and conservative.
pub fn node_homophily(graph: &Graph) -> f64 {
    if graph.num_nodes == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for v in 0..graph.num_nodes {
        let neighbors = graph.adjacency.neighbors(v);
        if neighbors.is_empty() {
            continue;
        }
        let same = neighbors
            .iter()
            .filter(|&&w| graph.labels[w] == graph.labels[v])
            .count();
        total += same as f64 / neighbors.len() as f64;
    }
    total / graph.num_nodes as f64
}

/// Row c = neighbor-label frequency vector averaged over class-c nodes
/// that have at least one neighbor. Classes with no such node get an
/// all-zero row.
pub fn neighbor_label_distribution(graph: &Graph) -> DenseMatrix {
    let c = graph.num_classes;
    let mut rows = DenseMatrix::zeros(c, c);
    let mut contributors = vec![0usize; c];
    for v in 0..graph.num_nodes {
        let neighbors = graph.adjacency.neighbors(v);
        if neighbors.is_empty() {
            continue;
        }
        let inv = 1.0 / neighbors.len() as f64;
        let row = rows.row_mut(graph.labels[v]);
        for &w in neighbors {
            row[graph.labels[w]] += inv;
        }
        contributors[graph.labels[v]] += 1;
    }
    for (label, &count) in contributors.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            for v in rows.row_mut(label) {
                *v *= inv;
            }
        }
    }
    rows
}

/// Pairwise total-variation distances between the rows of a row-stochastic
/// matrix: entry (a, b) = 0.5 * sum_k |M[a][k] - M[b][k]|.
pub fn distribution_distinguishability(m: &DenseMatrix) -> DenseMatrix {
    let c = m.rows();
    let mut tv = DenseMatrix::zeros(c, c);
    for a in 0..c {
        for b in (a + 1)..c {
            let d = 0.5
                * m.row(a)
                    .iter()
                    .zip(m.row(b))
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>();
            tv.set(a, b, d);
            tv.set(b, a, d);
        }
    }
    tv
}

/// Cosine of the angle between two vectors; 0 when either norm is below
/// 1e-12 so the result is always defined.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (&x, &y) in u.iter().zip(v) {
        dot += x * y;
        nu += x * x;
        nv += y * y;
    }
    let (nu, nv) = (nu.sqrt(), nv.sqrt());
    if nu < 1e-12 || nv < 1e-12 {
        return 0.0;
    }
    dot / (nu * nv)
}

/// Aggregated embedding cosine similarity for same-label and
/// different-label node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub in_class_mean: f64,
    pub across_class_mean: f64,
    /// in_class_mean - across_class_mean.
    pub gap: f64,
    /// Mean cosine per (class, class) pair; symmetric, diagonal = in-class.
    pub per_class_pair: Vec<Vec<f64>>,
    pub pairs_sampled: usize,
}

/// Mean pairwise embedding cosine within and across classes.
///
/// Each bucket (same-label pairs, different-label pairs) is enumerated
/// exhaustively when it holds at most `max_pairs_per_bucket` pairs and
/// sampled uniformly without replacement otherwise.
pub fn class_similarity_report(
    embeddings: &DenseMatrix,
    labels: &[usize],
    num_classes: usize,
    max_pairs_per_bucket: usize,
    seed: u64,
) -> Result<SimilarityReport> {
    if embeddings.rows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} embedding rows for {} labels",
            embeddings.rows(),
            labels.len()
        )));
    }
    let n = labels.len();
    let mut class_sizes = vec![0usize; num_classes];
    for &l in labels {
        class_sizes[l] += 1;
    }
    let in_count: usize = class_sizes.iter().map(|&s| s * (s - 1) / 2).sum();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let across_count = total_pairs - in_count;
    if in_count == 0 {
        return Err(Error::TooFewNodes { bucket: "in-class" });
    }
    if across_count == 0 {
        return Err(Error::TooFewNodes {
            bucket: "across-class",
        });
    }

    let mut acc = BucketAccumulator::new(num_classes);
    if in_count <= max_pairs_per_bucket && across_count <= max_pairs_per_bucket {
        for i in 0..n {
            for j in (i + 1)..n {
                acc.add(embeddings, labels, i, j);
            }
        }
    } else {
        let mut rng = seeded_rng(seed);
        for (bucket_count, same) in [(in_count, true), (across_count, false)] {
            if bucket_count <= max_pairs_per_bucket {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (labels[i] == labels[j]) == same {
                            acc.add(embeddings, labels, i, j);
                        }
                    }
                }
            } else {
                // Rejection sampling without replacement; both buckets are a
                // sizeable fraction of all pairs whenever sampling kicks in.
                let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(max_pairs_per_bucket);
                let mut taken = 0;
                while taken < max_pairs_per_bucket {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    if a == b || (labels[a] == labels[b]) != same {
                        continue;
                    }
                    let key = ((a.min(b)) as u32, (a.max(b)) as u32);
                    if !seen.insert(key) {
                        continue;
                    }
                    acc.add(embeddings, labels, key.0 as usize, key.1 as usize);
                    taken += 1;
                }
            }
        }
    }
    Ok(acc.finish())
}

struct BucketAccumulator {
    num_classes: usize,
    in_sum: f64,
    in_n: usize,
    across_sum: f64,
    across_n: usize,
    pair_sum: DenseMatrix,
    pair_n: Vec<usize>,
}

impl BucketAccumulator {
    fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            in_sum: 0.0,
            in_n: 0,
            across_sum: 0.0,
            across_n: 0,
            pair_sum: DenseMatrix::zeros(num_classes, num_classes),
            pair_n: vec![0; num_classes * num_classes],
        }
    }

    fn add(&mut self, embeddings: &DenseMatrix, labels: &[usize], i: usize, j: usize) {
        let c = cosine_similarity(embeddings.row(i), embeddings.row(j));
        let (a, b) = (labels[i], labels[j]);
        if a == b {
            self.in_sum += c;
            self.in_n += 1;
        } else {
            self.across_sum += c;
            self.across_n += 1;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let v = self.pair_sum.get(lo, hi) + c;
        self.pair_sum.set(lo, hi, v);
        self.pair_n[lo * self.num_classes + hi] += 1;
    }

    fn finish(self) -> SimilarityReport {
        let c = self.num_classes;
        let mut per_class_pair = vec![vec![0.0; c]; c];
        for lo in 0..c {
            for hi in lo..c {
                let n = self.pair_n[lo * c + hi];
                if n > 0 {
                    let mean = self.pair_sum.get(lo, hi) / n as f64;
                    per_class_pair[lo][hi] = mean;
                    per_class_pair[hi][lo] = mean;
                }
            }
        }
        let in_class_mean = self.in_sum / self.in_n as f64;
        let across_class_mean = self.across_sum / self.across_n as f64;
        SimilarityReport {
            in_class_mean,
            across_class_mean,
            gap: in_class_mean - across_class_mean,
            per_class_pair,
            pairs_sampled: self.in_n + self.across_n,
        }
    }
}

/// Fraction of masked nodes whose prediction matches the label.
pub fn accuracy(predictions: &[usize], labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let correct = mask
        .iter()
        .filter(|&&v| predictions[v] == labels[v])
        .count();
    Ok(correct as f64 / mask.len() as f64)
}

/// Class-by-class prediction counts over a node mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// counts[true_class][predicted_class].
    pub counts: Vec<Vec<u64>>,
    /// Rows of `counts` normalized to sum to 1; all-zero rows for classes
    /// absent from the mask.
    pub row_normalized: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Fraction of all counted nodes on the diagonal (overall accuracy).
    pub fn diagonal_mass(&self) -> f64 {
        let diag: u64 = (0..self.counts.len()).map(|c| self.counts[c][c]).sum();
        diag as f64 / self.total() as f64
    }

    /// CSV with a header row of predicted classes and one row per true class.
    pub fn to_csv(&self) -> String {
        let c = self.counts.len();
        let mut out = String::from("true_class");
        for j in 0..c {
            out.push_str(&format!(",pred_{j}"));
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(
    predictions: &[usize],
    labels: &[usize],
    mask: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for &v in mask {
        counts[labels[v]][predictions[v]] += 1;
    }
    let row_normalized = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; num_classes]
            } else {
                row.iter().map(|&v| v as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(ConfusionMatrix {
        counts,
        row_normalized,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

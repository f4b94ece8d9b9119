//! The two-layer GCN: softmax(conv2(dropout(ELU(conv1(X))))) with
//! symmetric-normalized convolutions, Glorot initialization, hand-derived
//! backward pass, and a full-batch Adam training loop.

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrAdjacency, Graph, SplitMasks};
use crate::kernels::{
    adam_step, dropout, elu, elu_grad, masked_cross_entropy, matmul, matmul_at_b, matmul_bt,
    normalize_adjacency, softmax_rows, spmm, AdamHyper, AdamState, DenseMatrix, DropoutMask,
};
use crate::metrics::{
    accuracy, class_similarity_report, confusion, ConfusionMatrix, SimilarityReport,
};
use crate::rng::{derive_seed, seeded_rng, stream};

/// Learnable state: two weight matrices and their biases.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
}

impl GcnParams {
    pub fn tensors(&self) -> [&DenseMatrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }
}

/// Gradients aligned with [`GcnParams`].
#[derive(Debug, Clone)]
pub struct GcnGradients {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
}

impl GcnGradients {
    pub fn tensors(&self) -> [&DenseMatrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }
}

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
pub fn init_params(feature_dim: usize, hidden: usize, num_classes: usize, seed: u64) -> GcnParams {
    let mut rng = seeded_rng(seed);
    let mut glorot = |rows: usize, cols: usize| {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        DenseMatrix::from_vec(rows, cols, data).expect("sized data")
    };
    GcnParams {
        w1: glorot(feature_dim, hidden),
        b1: DenseMatrix::zeros(1, hidden),
        w2: glorot(hidden, num_classes),
        b2: DenseMatrix::zeros(1, num_classes),
    }
}

/// The propagated inputs that stay fixed across a training run:
/// ax = normalized adjacency times features, plus its transpose (the
/// backward pass's heaviest product wants contiguous rows).
#[derive(Debug, Clone)]
pub struct PropagatedFeatures {
    pub ax: DenseMatrix,
    pub ax_t: DenseMatrix,
}

impl PropagatedFeatures {
    pub fn new(a_hat: &CsrAdjacency, features: &DenseMatrix) -> Result<Self> {
        let ax = spmm(a_hat, features)?;
        let ax_t = ax.transpose();
        Ok(Self { ax, ax_t })
    }
}

/// Every intermediate of a forward pass, kept for backward.
#[derive(Debug, Clone)]
pub struct ForwardCache<'a> {
    pub a_hat: &'a CsrAdjacency,
    pub ax: Cow<'a, DenseMatrix>,
    pub ax_t: Cow<'a, DenseMatrix>,
    pub h1_pre: DenseMatrix,
    pub h1: DenseMatrix,
    pub h1_dropped: DenseMatrix,
    pub dropout_mask: DropoutMask,
    pub logits: DenseMatrix,
    pub probs: DenseMatrix,
    /// Copy of the second-layer weights at forward time; backward's
    /// signature only sees the cache.
    pub w2: DenseMatrix,
    pub training: bool,
}

/// Full forward pass. In eval mode dropout is the identity, so two calls
/// with the same inputs produce identical caches.
pub fn forward<'a>(
    graph: &Graph,
    a_hat: &'a CsrAdjacency,
    params: &GcnParams,
    dropout_rate: f64,
    training: bool,
    seed: u64,
) -> Result<ForwardCache<'a>> {
    let propagated = PropagatedFeatures::new(a_hat, &graph.features)?;
    forward_propagated(
        Cow::Owned(propagated.ax),
        Cow::Owned(propagated.ax_t),
        a_hat,
        params,
        dropout_rate,
        training,
        seed,
    )
}

/// Forward pass over precomputed propagated features; the training loop
/// uses this to avoid redoing the sparse product every epoch. Operations
/// and their order match [`forward`] exactly.
fn forward_propagated<'a>(
    ax: Cow<'a, DenseMatrix>,
    ax_t: Cow<'a, DenseMatrix>,
    a_hat: &'a CsrAdjacency,
    params: &GcnParams,
    dropout_rate: f64,
    training: bool,
    seed: u64,
) -> Result<ForwardCache<'a>> {
    let mut h1_pre = matmul(&ax, &params.w1)?;
    h1_pre.add_bias_row(params.b1.data());
    let h1 = elu(&h1_pre);
    let (h1_dropped, dropout_mask) = dropout(&h1, dropout_rate, seed, training);
    let mut logits = spmm(a_hat, &matmul(&h1_dropped, &params.w2)?)?;
    logits.add_bias_row(params.b2.data());
    let probs = softmax_rows(&logits);
    Ok(ForwardCache {
        a_hat,
        ax,
        ax_t,
        h1_pre,
        h1,
        h1_dropped,
        dropout_mask,
        logits,
        probs,
        w2: params.w2.clone(),
        training,
    })
}

/// Masked cross-entropy loss and exact gradients for all four parameter
/// tensors, by the chain rule through conv2, dropout, ELU, and conv1.
/// Uses the symmetry of the normalized adjacency (A_hat^T = A_hat).
pub fn backward(
    cache: &ForwardCache<'_>,
    labels: &[usize],
    train_mask: &[usize],
) -> Result<(f64, GcnGradients)> {
    if !cache.training {
        return Err(Error::CacheMissing);
    }
    let (loss, d_logits) = masked_cross_entropy(&cache.logits, labels, train_mask)?;

    let gb2 = DenseMatrix::row_vector(d_logits.column_sums());
    let g2 = spmm(cache.a_hat, &d_logits)?;
    let gw2 = matmul_at_b(&cache.h1_dropped, &g2)?;
    let dh1_dropped = matmul_bt(&g2, &cache.w2)?;
    let dh1 = cache.dropout_mask.apply(&dh1_dropped)?;
    let dh1_pre = dh1.hadamard(&elu_grad(&cache.h1_pre))?;
    let gw1 = matmul(&cache.ax_t, &dh1_pre)?;
    let gb1 = DenseMatrix::row_vector(dh1_pre.column_sums());

    Ok((
        loss,
        GcnGradients {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
        },
    ))
}

/// Eval-mode first-layer embeddings: ELU(A_hat X W1 + b1), no dropout.
/// Identical to `forward(.., training: false).h1`.
pub fn extract_embeddings(
    graph: &Graph,
    a_hat: &CsrAdjacency,
    params: &GcnParams,
) -> Result<DenseMatrix> {
    let ax = spmm(a_hat, &graph.features)?;
    let mut h1_pre = matmul(&ax, &params.w1)?;
    h1_pre.add_bias_row(params.b1.data());
    Ok(elu(&h1_pre))
}

fn default_epochs() -> usize {
    300
}
fn default_hidden() -> usize {
    128
}
fn default_lr() -> f64 {
    0.01
}
fn default_weight_decay() -> f64 {
    5e-4
}
fn default_dropout() -> f64 {
    0.5
}
fn default_eval_every() -> usize {
    1
}
fn default_max_pairs() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default)]
    pub seed: u64,
    /// Validation cadence in epochs; 1 evaluates every epoch.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Pair budget per bucket for the final similarity report.
    #[serde(default = "default_max_pairs")]
    pub max_similarity_pairs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            hidden: default_hidden(),
            lr: default_lr(),
            weight_decay: default_weight_decay(),
            dropout_rate: default_dropout(),
            seed: 0,
            eval_every: default_eval_every(),
            max_similarity_pairs: default_max_pairs(),
        }
    }
}

/// One row of the per-epoch series. Training loss and accuracy come from
/// the training-mode forward of that epoch (before the parameter update);
/// validation accuracy is computed in eval mode at the same parameters,
/// every `eval_every` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

/// End-of-training metrics, all at the final parameters in eval mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub final_train_acc: f64,
    pub final_val_acc: f64,
    pub final_test_acc: f64,
    pub confusion: ConfusionMatrix,
    pub similarity: SimilarityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    pub summary: TrainSummary,
}

impl TrainLog {
    /// CSV of the per-epoch series: epoch,train_loss,train_acc,val_acc.
    /// Skipped validation epochs leave the last field empty.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_acc\n");
        for r in &self.records {
            let val = r.val_acc.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch, r.train_loss, r.train_acc, val
            ));
        }
        out
    }

    /// Number of 25-epoch windows whose mean training loss exceeded the
    /// previous window's. A smoke signal, not an error.
    pub fn loss_window_regressions(&self, window: usize) -> usize {
        let losses: Vec<f64> = self.records.iter().map(|r| r.train_loss).collect();
        if window == 0 || losses.len() < 2 * window {
            return 0;
        }
        let means: Vec<f64> = losses
            .chunks(window)
            .filter(|c| c.len() == window)
            .map(|c| c.iter().sum::<f64>() / window as f64)
            .collect();
        means.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

fn argmax_rows(probs: &DenseMatrix) -> Vec<usize> {
    probs
        .data()
        .chunks_exact(probs.cols())
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Trains for `config.epochs` full-batch Adam steps on the train mask,
/// logging per-epoch train loss/accuracy and (eval-mode) validation
/// accuracy, then evaluates test accuracy, the confusion matrix, and the
/// first-layer embedding similarity report at the final parameters.
pub fn train(graph: &Graph, masks: &SplitMasks, config: &TrainConfig) -> Result<(GcnParams, TrainLog)> {
    masks.validate(graph.num_nodes)?;
    let a_hat = normalize_adjacency(&graph.adjacency);
    let propagated = PropagatedFeatures::new(&a_hat, &graph.features)?;
    let mut params = init_params(
        graph.feature_dim(),
        config.hidden,
        graph.num_classes,
        derive_seed(config.seed, stream::INIT),
    );
    let hyper = AdamHyper {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..AdamHyper::default()
    };
    let mut opt_state = AdamState::new(&params.tensors(), hyper);
    let dropout_base = derive_seed(config.seed, stream::DROPOUT);

    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let cache = forward_propagated(
            Cow::Borrowed(&propagated.ax),
            Cow::Borrowed(&propagated.ax_t),
            &a_hat,
            &params,
            config.dropout_rate,
            true,
            derive_seed(dropout_base, epoch as u64),
        )?;
        let (train_loss, grads) = backward(&cache, &graph.labels, &masks.train)?;
        let train_pred = argmax_rows(&cache.probs);
        let train_acc = accuracy(&train_pred, &graph.labels, &masks.train)?;

        // Validation reuses the epoch's pre-dropout H1: eval mode differs
        // from training mode only after the ELU.
        let val_acc = if !masks.val.is_empty() && epoch % config.eval_every == 0 {
            let mut eval_logits = spmm(&a_hat, &matmul(&cache.h1, &params.w2)?)?;
            eval_logits.add_bias_row(params.b2.data());
            let pred = argmax_rows(&eval_logits);
            Some(accuracy(&pred, &graph.labels, &masks.val)?)
        } else {
            None
        };

        records.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_acc,
        });

        let grad_tensors = grads.tensors();
        let GcnParams { w1, b1, w2, b2 } = &mut params;
        adam_step(&mut [w1, b1, w2, b2], &grad_tensors, &mut opt_state)?;
    }

    // Final eval-mode pass at the trained parameters.
    let embeddings = {
        let mut h1_pre = matmul(&propagated.ax, &params.w1)?;
        h1_pre.add_bias_row(params.b1.data());
        elu(&h1_pre)
    };
    let mut logits = spmm(&a_hat, &matmul(&embeddings, &params.w2)?)?;
    logits.add_bias_row(params.b2.data());
    let predictions = argmax_rows(&logits);
    let summary = TrainSummary {
        final_train_acc: accuracy(&predictions, &graph.labels, &masks.train)?,
        final_val_acc: accuracy(&predictions, &graph.labels, &masks.val)?,
        final_test_acc: accuracy(&predictions, &graph.labels, &masks.test)?,
        confusion: confusion(&predictions, &graph.labels, &masks.test, graph.num_classes)?,
        similarity: class_similarity_report(
            &embeddings,
            &graph.labels,
            graph.num_classes,
            config.max_similarity_pairs,
            derive_seed(config.seed, stream::PAIR_SAMPLING),
        )?,
    };

    Ok((params, TrainLog { records, summary }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{random_split, sample_partition_graph, PartitionSpec, SplitCounts};

    fn tiny_graph(seed: u64) -> Graph {
        sample_partition_graph(&PartitionSpec {
            num_classes: 3,
            nodes_per_class: 8,
            avg_degree: 4.0,
            homophily_target: 0.7,
            feature_dim: 6,
            center_scale: 1.0,
            noise_sigma: 0.5,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn default_config_pins_the_experiment_recipe() {
        let c = TrainConfig::default();
        assert_eq!(c.epochs, 300);
        assert_eq!(c.hidden, 128);
        assert_eq!(c.lr, 0.01);
        assert_eq!(c.weight_decay, 5e-4);
        assert_eq!(c.dropout_rate, 0.5);
        assert_eq!(c.eval_every, 1);
    }

    #[test]
    fn init_is_deterministic_with_glorot_bounds() {
        let a = init_params(1433, 128, 7, 42);
        let b = init_params(1433, 128, 7, 42);
        assert_eq!(a, b);
        let bound = (6.0f64 / (1433.0 + 128.0)).sqrt();
        assert!((bound - 0.06198).abs() < 1e-4);
        assert!(a.w1.max_abs() <= bound);
        assert!(a.w1.max_abs() > 0.9 * bound); // the range actually fills up
        assert_eq!(a.b1.max_abs(), 0.0);
        assert_eq!(a.b2.max_abs(), 0.0);
        assert_ne!(a, init_params(1433, 128, 7, 43));
    }

    #[test]
    fn zero_features_and_biases_give_uniform_probs() {
        let mut graph = tiny_graph(1);
        graph.features = DenseMatrix::zeros(graph.num_nodes, graph.feature_dim());
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = init_params(graph.feature_dim(), 5, 3, 7);
        let cache = forward(&graph, &a_hat, &params, 0.0, false, 0).unwrap();
        assert_eq!(cache.logits.max_abs(), 0.0);
        for row in cache.probs.data().chunks_exact(3) {
            for &p in row {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn isolated_node_forward_is_a_plain_mlp() {
        // Single node, no edges: A_hat is the 1x1 identity, so the GCN
        // reduces to ELU(x W1 + b1) W2 + b2.
        let features = DenseMatrix::from_vec(1, 4, vec![0.3, -1.2, 0.5, 2.0]).unwrap();
        let graph = crate::graph::build_graph(&[], 2, vec![0], features.clone()).unwrap();
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = init_params(4, 3, 2, 5);
        let cache = forward(&graph, &a_hat, &params, 0.0, false, 0).unwrap();

        let mut h = matmul(&features, &params.w1).unwrap();
        h.add_bias_row(params.b1.data());
        let h = elu(&h);
        let mut logits = matmul(&h, &params.w2).unwrap();
        logits.add_bias_row(params.b2.data());
        for (a, b) in cache.logits.data().iter().zip(logits.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_forward_is_deterministic_and_matches_embeddings() {
        let graph = tiny_graph(2);
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = init_params(graph.feature_dim(), 5, 3, 9);
        let c1 = forward(&graph, &a_hat, &params, 0.5, false, 111).unwrap();
        let c2 = forward(&graph, &a_hat, &params, 0.5, false, 222).unwrap();
        assert_eq!(c1.logits, c2.logits);
        assert_eq!(c1.h1, c2.h1);
        let emb = extract_embeddings(&graph, &a_hat, &params).unwrap();
        assert_eq!(emb, c1.h1);
        assert_eq!(emb.cols(), 5);
    }

    #[test]
    fn backward_requires_training_cache() {
        let graph = tiny_graph(3);
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = init_params(graph.feature_dim(), 4, 3, 1);
        let cache = forward(&graph, &a_hat, &params, 0.0, false, 0).unwrap();
        assert!(matches!(
            backward(&cache, &graph.labels, &[0, 1]),
            Err(Error::CacheMissing)
        ));
    }

    #[test]
    fn saturated_predictions_give_vanishing_gradients() {
        // Hand-build params so that class-0 logits dominate by a huge
        // margin for every node, with all nodes labeled 0.
        let features = DenseMatrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let graph = crate::graph::build_graph(&[(0, 1)], 2, vec![0, 0], features).unwrap();
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = GcnParams {
            w1: DenseMatrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap(),
            b1: DenseMatrix::zeros(1, 2),
            w2: DenseMatrix::from_vec(2, 2, vec![500.0, -500.0, 500.0, -500.0]).unwrap(),
            b2: DenseMatrix::zeros(1, 2),
        };
        let cache = forward(&graph, &a_hat, &params, 0.0, true, 0).unwrap();
        let (loss, grads) = backward(&cache, &graph.labels, &[0, 1]).unwrap();
        assert!(loss < 1e-9);
        for g in grads.tensors() {
            assert!(g.max_abs() < 1e-9);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let graph = sample_partition_graph(&PartitionSpec {
            num_classes: 3,
            nodes_per_class: 7, // 21 nodes
            avg_degree: 4.0,
            homophily_target: 0.6,
            feature_dim: 8,
            center_scale: 1.0,
            noise_sigma: 0.8,
            seed: 13,
        })
        .unwrap();
        let a_hat = normalize_adjacency(&graph.adjacency);
        let mask: Vec<usize> = (0..10).collect();
        let params = init_params(8, 5, 3, 17);

        let cache = forward(&graph, &a_hat, &params, 0.0, true, 0).unwrap();
        let (_, grads) = backward(&cache, &graph.labels, &mask).unwrap();

        let loss_at = |p: &GcnParams| -> f64 {
            let c = forward(&graph, &a_hat, p, 0.0, true, 0).unwrap();
            masked_cross_entropy(&c.logits, &graph.labels, &mask).unwrap().0
        };

        let h = 1e-5;
        let mut worst = 0.0f64;
        for t in 0..4 {
            let analytic = grads.tensors()[t].clone();
            for idx in 0..analytic.data().len() {
                let mut up = params.clone();
                let mut down = params.clone();
                {
                    let pu = [&mut up.w1, &mut up.b1, &mut up.w2, &mut up.b2];
                    pu[t].data_mut()[idx] += h;
                    let pd = [&mut down.w1, &mut down.b1, &mut down.w2, &mut down.b2];
                    pd[t].data_mut()[idx] -= h;
                }
                let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * h);
                let a = analytic.data()[idx];
                let rel = (a - numeric).abs() / numeric.abs().max(a.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "max relative gradient error {worst}");
    }

    #[test]
    fn zero_epoch_run_keeps_init_params_and_scores_near_chance() {
        let spec = PartitionSpec {
            num_classes: 7,
            nodes_per_class: 100,
            avg_degree: 10.0,
            homophily_target: 0.5,
            feature_dim: 40,
            center_scale: 1.0,
            noise_sigma: 1.0,
            seed: 6,
        };
        let graph = sample_partition_graph(&spec).unwrap();
        let masks = random_split(
            700,
            SplitCounts {
                train: 40,
                val: 125,
                test: 250,
            },
            9,
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 0,
            hidden: 16,
            seed: 4,
            ..TrainConfig::default()
        };
        let (params, log) = train(&graph, &masks, &config).unwrap();
        assert!(log.records.is_empty());
        let expect = init_params(40, 16, 7, derive_seed(4, stream::INIT));
        assert_eq!(params, expect);
        // Untrained predictor: near-chance accuracy.
        assert!((log.summary.final_test_acc - 1.0 / 7.0).abs() < 0.06,
            "untrained accuracy {}", log.summary.final_test_acc);
    }

    #[test]
    fn training_learns_a_separable_small_graph() {
        let graph = sample_partition_graph(&PartitionSpec {
            num_classes: 3,
            nodes_per_class: 60,
            avg_degree: 8.0,
            homophily_target: 0.9,
            feature_dim: 12,
            center_scale: 2.0,
            noise_sigma: 0.5,
            seed: 30,
        })
        .unwrap();
        let masks = random_split(
            180,
            SplitCounts {
                train: 30,
                val: 50,
                test: 80,
            },
            31,
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 120,
            hidden: 16,
            seed: 32,
            ..TrainConfig::default()
        };
        let (_, log) = train(&graph, &masks, &config).unwrap();
        assert_eq!(log.records.len(), 120);
        // Epoch-1 loss at Glorot init sits near ln(C); this small config
        // has wide Glorot bounds, so the band is loose here (the paper-scale
        // ln(7) +/- 0.2 check lives in the acceptance suite).
        let first = log.records[0].train_loss;
        assert!((first - 3.0f64.ln()).abs() < 0.5, "epoch-1 loss {first}");
        assert!(log.summary.final_test_acc > 0.8, "acc {}", log.summary.final_test_acc);
        assert!(log.summary.final_val_acc > 0.8);
        // Deterministic re-run.
        let (_, log2) = train(&graph, &masks, &config).unwrap();
        assert_eq!(log, log2);
    }

    #[test]
    fn duplicated_mask_nodes_leave_gradients_unchanged() {
        // Mean-loss scaling: doubling every mask entry doubles both the sum
        // and the normalizer.
        let graph = tiny_graph(8);
        let a_hat = normalize_adjacency(&graph.adjacency);
        let params = init_params(graph.feature_dim(), 4, 3, 2);
        let mask: Vec<usize> = (0..12).collect();
        let doubled: Vec<usize> = mask.iter().chain(mask.iter()).copied().collect();
        let cache = forward(&graph, &a_hat, &params, 0.0, true, 0).unwrap();
        let (l1, g1) = backward(&cache, &graph.labels, &mask).unwrap();
        let (l2, g2) = backward(&cache, &graph.labels, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.tensors().iter().zip(g2.tensors().iter()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

//! Experiment orchestration: the homophily sweep (one trained GCN per
//! (homophily, seed) cell), the distinguishable-heterophily case, result
//! persistence, and figure rendering.

pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{save_dataset, DatasetMeta, GeneratorMeta, Graph, SplitMasks};
use crate::metrics::{neighbor_label_distribution, node_homophily, ConfusionMatrix, SimilarityReport};
use crate::model::{train, TrainConfig, TrainLog};
use crate::rng::{derive_seed, stream};
use crate::synthgen::{
    cyclic_shift_matrix, random_split, sample_neighbor_distribution_graph,
    sample_partition_graph, target_row_distinguishability, NeighborDistributionSpec,
    PartitionSpec, SplitCounts,
};

fn default_homophily_values() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_parallel() -> usize {
    1
}

/// The full sweep: for every homophily value and seed, generate a
/// partition graph, split it, train, and record the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default = "default_homophily_values")]
    pub homophily_values: Vec<f64>,
    /// Template spec; `homophily_target` and `seed` are set per cell.
    #[serde(default)]
    pub base: PartitionSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitCounts,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Upper bound on concurrently running cells.
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    /// Also save every generated dataset under its cell directory.
    #[serde(default)]
    pub persist_datasets: bool,
    /// When set, additionally run the distinguishable-heterophily case.
    #[serde(default)]
    pub heterophily: Option<HeterophilyConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            homophily_values: default_homophily_values(),
            base: PartitionSpec::default(),
            train: TrainConfig::default(),
            split: SplitCounts::default(),
            seeds: default_seeds(),
            output_dir: None,
            parallel: 1,
            persist_datasets: false,
            heterophily: None,
        }
    }
}

/// The neighborhood-distribution experiment config. The target matrix
/// defaults to the cyclic shift over the base spec's class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterophilyConfig {
    #[serde(default)]
    pub m: Option<Vec<Vec<f64>>>,
    /// The random-partition homophily the case is compared against.
    #[serde(default = "default_baseline_homophily")]
    pub baseline_homophily: f64,
}

impl Default for HeterophilyConfig {
    fn default() -> Self {
        Self {
            m: None,
            baseline_homophily: default_baseline_homophily(),
        }
    }
}

fn default_baseline_homophily() -> f64 {
    0.1
}

/// Everything measured for one trained cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub homophily_target: f64,
    pub seed: u64,
    pub realized_homophily: f64,
    pub mean_degree: f64,
    pub final_train_acc: f64,
    pub final_val_acc: f64,
    pub final_test_acc: f64,
    pub similarity: SimilarityReport,
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub log: Option<TrainLog>,
    /// Where the cell's files were written; not serialized, so artifacts
    /// stay byte-identical across output locations.
    #[serde(skip)]
    pub cell_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCellOutcome {
    pub homophily_target: f64,
    pub seed: u64,
    pub result: std::result::Result<CellRecord, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResults {
    pub cells: Vec<SweepCellOutcome>,
    pub heterophily: Option<HeterophilyReport>,
    pub output_dir: Option<PathBuf>,
}

impl SweepResults {
    /// One row per (homophily, seed) cell, failures included as NaN rows.
    pub fn aggregate_csv(&self) -> String {
        let mut out =
            String::from("h,seed,realized_homophily,train_acc,val_acc,test_acc,inclass_mean,across_mean,gap\n");
        for cell in &self.cells {
            match &cell.result {
                Ok(r) => out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.homophily_target,
                    r.seed,
                    r.realized_homophily,
                    r.final_train_acc,
                    r.final_val_acc,
                    r.final_test_acc,
                    r.similarity.in_class_mean,
                    r.similarity.across_class_mean,
                    r.similarity.gap
                )),
                Err(_) => out.push_str(&format!(
                    "{},{},NaN,NaN,NaN,NaN,NaN,NaN,NaN\n",
                    cell.homophily_target, cell.seed
                )),
            }
        }
        out
    }

    /// Mean of a per-cell statistic grouped by homophily value, in the
    /// order the sweep listed them. Failed cells are skipped.
    pub fn mean_by_homophily(&self, stat: impl Fn(&CellRecord) -> f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for cell in &self.cells {
            if let Ok(r) = &cell.result {
                match out.iter_mut().find(|(h, _, _)| *h == cell.homophily_target) {
                    Some((_, sum, n)) => {
                        *sum += stat(r);
                        *n += 1;
                    }
                    None => out.push((cell.homophily_target, stat(r), 1)),
                }
            }
        }
        out.into_iter().map(|(h, s, n)| (h, s / n as f64)).collect()
    }
}

/// Comparison of the cyclic-shift neighborhood graph against the
/// low-homophily random-partition baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeterophilyReport {
    pub cyclic_cells: Vec<CellRecord>,
    pub baseline_cells: Vec<CellRecord>,
    pub mean_cyclic_test_acc: f64,
    pub mean_baseline_test_acc: f64,
    /// cyclic minus baseline test accuracy.
    pub margin: f64,
    /// Whether the margin reached the 0.2 the distinguishability argument
    /// predicts; the report is emitted either way.
    pub claim_met: bool,
    pub mean_realized_homophily: f64,
    /// Smallest pairwise TV distance between rows of the target matrix.
    pub target_tv_min: f64,
    /// Smallest pairwise TV distance between measured neighbor-label rows
    /// (the undirected sampler realizes the symmetrized target).
    pub measured_tv_min: f64,
    pub measured_neighbor_distribution: Vec<Vec<f64>>,
}

fn train_seed_for(cell_seed: u64, config_seed: u64) -> u64 {
    derive_seed(derive_seed(cell_seed, stream::TRAIN), config_seed)
}

fn graph_stats(graph: &Graph) -> (f64, f64) {
    let realized = node_homophily(graph);
    let mean_degree = 2.0 * graph.num_edges() as f64 / graph.num_nodes as f64;
    (realized, mean_degree)
}

fn record_from(
    graph: &Graph,
    homophily_target: f64,
    seed: u64,
    log: TrainLog,
    cell_dir: Option<PathBuf>,
) -> CellRecord {
    let (realized_homophily, mean_degree) = graph_stats(graph);
    CellRecord {
        homophily_target,
        seed,
        realized_homophily,
        mean_degree,
        final_train_acc: log.summary.final_train_acc,
        final_val_acc: log.summary.final_val_acc,
        final_test_acc: log.summary.final_test_acc,
        similarity: log.summary.similarity.clone(),
        confusion: log.summary.confusion.clone(),
        log: Some(log),
        cell_dir,
    }
}

fn write_cell_outputs(dir: &Path, record: &CellRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let log = record.log.as_ref().expect("fresh cells carry their log");
    fs::write(dir.join("train_log.csv"), log.records_csv())?;
    let mut summary = serde_json::to_string_pretty(record).expect("record serializes");
    summary.push('\n');
    fs::write(dir.join("summary.json"), summary)?;
    let mut similarity =
        serde_json::to_string_pretty(&record.similarity).expect("similarity serializes");
    similarity.push('\n');
    fs::write(dir.join("similarity.json"), similarity)?;
    fs::write(dir.join("confusion.csv"), record.confusion.to_csv())?;
    svg::render_confusion_svg(&record.confusion, &dir.join("figures/confusion.svg"))?;
    Ok(())
}

fn persist_dataset(dir: &Path, graph: &Graph, masks: &SplitMasks, gen: GeneratorMeta) -> Result<()> {
    let meta = DatasetMeta {
        num_nodes: graph.num_nodes,
        num_classes: graph.num_classes,
        feature_dim: graph.feature_dim(),
        generator: gen,
        format_version: crate::graph::io::FORMAT_VERSION,
    };
    save_dataset(graph, masks, &meta, &dir.join("dataset"))
}

fn run_partition_cell(config: &SweepConfig, h: f64, seed: u64) -> Result<CellRecord> {
    let spec = PartitionSpec {
        homophily_target: h,
        seed,
        ..config.base.clone()
    };
    let graph = sample_partition_graph(&spec)?;
    let masks = random_split(
        graph.num_nodes,
        config.split,
        derive_seed(seed, stream::SPLIT),
    )?;
    let train_config = TrainConfig {
        seed: train_seed_for(seed, config.train.seed),
        ..config.train.clone()
    };
    let (_, log) = train(&graph, &masks, &train_config)?;

    let cell_dir = config
        .output_dir
        .as_ref()
        .map(|out| out.join(format!("h{h:.2}_seed{seed}")));
    let record = record_from(&graph, h, seed, log, cell_dir.clone());
    if let Some(dir) = &cell_dir {
        write_cell_outputs(dir, &record)?;
        if config.persist_datasets {
            persist_dataset(
                dir,
                &graph,
                &masks,
                GeneratorMeta {
                    kind: "partition".into(),
                    homophily_target: Some(h),
                    avg_degree: spec.avg_degree,
                    seed,
                    extra: Default::default(),
                },
            )?;
        }
    }
    Ok(record)
}

/// Runs every (homophily, seed) cell, isolating failures per cell, then
/// writes the aggregate CSV and the sweep-level figures.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResults> {
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
    }
    let cells: Vec<(f64, u64)> = config
        .homophily_values
        .iter()
        .flat_map(|&h| config.seeds.iter().map(move |&s| (h, s)))
        .collect();

    let run = |&(h, seed): &(f64, u64)| SweepCellOutcome {
        homophily_target: h,
        seed,
        result: run_partition_cell(config, h, seed).map_err(|e| e.to_string()),
    };
    let outcomes: Vec<SweepCellOutcome> = if config.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallel)
            .build()
            .map_err(|e| Error::DimensionMismatch(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run).collect())
    } else {
        cells.iter().map(run).collect()
    };

    let heterophily = match &config.heterophily {
        Some(het) => Some(run_heterophily_case(config, het)?),
        None => None,
    };

    let results = SweepResults {
        cells: outcomes,
        heterophily,
        output_dir: config.output_dir.clone(),
    };

    if let Some(dir) = &config.output_dir {
        fs::write(dir.join("sweep_results.csv"), results.aggregate_csv())?;
        if let Some(het) = &results.heterophily {
            let mut json = serde_json::to_string_pretty(het).expect("report serializes");
            json.push('\n');
            fs::write(dir.join("heterophily_report.json"), json)?;
        }
        render_sweep_figures(&results, &dir.join("figures"))?;
    }
    Ok(results)
}

/// Trains on the distinguishable-heterophily graph (target matrix rows
/// pairwise far apart, zero diagonal) and on the low-homophily partition
/// baseline, and reports the accuracy margin. A missed margin flags
/// `claim_met: false` rather than failing the run.
pub fn run_heterophily_case(
    config: &SweepConfig,
    het: &HeterophilyConfig,
) -> Result<HeterophilyReport> {
    let m = het
        .m
        .clone()
        .unwrap_or_else(|| cyclic_shift_matrix(config.base.num_classes));
    let target_tv = target_row_distinguishability(&m);
    let c = m.len();
    let mut target_tv_min = f64::INFINITY;
    for a in 0..c {
        for b in (a + 1)..c {
            target_tv_min = target_tv_min.min(target_tv.get(a, b));
        }
    }

    let mut cyclic_cells = Vec::new();
    let mut baseline_cells = Vec::new();
    let mut measured_rows: Option<Vec<Vec<f64>>> = None;
    let mut measured_tv_min = f64::INFINITY;
    for &seed in &config.seeds {
        let spec = NeighborDistributionSpec {
            m: m.clone(),
            nodes_per_class: config.base.nodes_per_class,
            avg_degree: config.base.avg_degree,
            feature_dim: config.base.feature_dim,
            center_scale: config.base.center_scale,
            noise_sigma: config.base.noise_sigma,
            seed,
        };
        let graph = sample_neighbor_distribution_graph(&spec)?;
        let masks = random_split(
            graph.num_nodes,
            config.split,
            derive_seed(seed, stream::SPLIT),
        )?;
        let train_config = TrainConfig {
            seed: train_seed_for(seed, config.train.seed),
            ..config.train.clone()
        };
        let (_, log) = train(&graph, &masks, &train_config)?;

        let measured = neighbor_label_distribution(&graph);
        let tv = crate::metrics::distribution_distinguishability(&measured);
        for a in 0..c {
            for b in (a + 1)..c {
                measured_tv_min = measured_tv_min.min(tv.get(a, b));
            }
        }
        if measured_rows.is_none() {
            measured_rows = Some(
                (0..c)
                    .map(|i| measured.row(i).to_vec())
                    .collect(),
            );
        }

        let cell_dir = config
            .output_dir
            .as_ref()
            .map(|out| out.join(format!("heterophily_seed{seed}")));
        let record = record_from(&graph, 0.0, seed, log, cell_dir.clone());
        if let Some(dir) = &cell_dir {
            write_cell_outputs(dir, &record)?;
        }
        cyclic_cells.push(record);

        let baseline = run_partition_cell(
            &SweepConfig {
                output_dir: config.output_dir.as_ref().map(|out| {
                    let p = out.join("heterophily_baseline");
                    fs::create_dir_all(&p).ok();
                    p
                }),
                ..config.clone()
            },
            het.baseline_homophily,
            seed,
        )?;
        baseline_cells.push(baseline);
    }

    let mean = |cells: &[CellRecord], f: fn(&CellRecord) -> f64| {
        cells.iter().map(f).sum::<f64>() / cells.len() as f64
    };
    let mean_cyclic_test_acc = mean(&cyclic_cells, |r| r.final_test_acc);
    let mean_baseline_test_acc = mean(&baseline_cells, |r| r.final_test_acc);
    let margin = mean_cyclic_test_acc - mean_baseline_test_acc;
    Ok(HeterophilyReport {
        mean_realized_homophily: mean(&cyclic_cells, |r| r.realized_homophily),
        cyclic_cells,
        baseline_cells,
        mean_cyclic_test_acc,
        mean_baseline_test_acc,
        margin,
        claim_met: margin >= 0.2,
        target_tv_min,
        measured_tv_min,
        measured_neighbor_distribution: measured_rows.unwrap_or_default(),
    })
}

/// Sweep-level figures: validation-accuracy curves (first seed of each
/// homophily value) and the similarity-vs-homophily chart.
pub fn render_sweep_figures(results: &SweepResults, dir: &Path) -> Result<()> {
    let first_seed_cells: Vec<&CellRecord> = results
        .cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .filter(|r| {
            results
                .cells
                .iter()
                .find(|c| c.homophily_target == r.homophily_target && c.result.is_ok())
                .map(|c| c.seed == r.seed)
                .unwrap_or(false)
        })
        .collect();

    let acc_series: Vec<svg::Series> = first_seed_cells
        .iter()
        .filter_map(|r| {
            r.log.as_ref().map(|log| svg::Series {
                label: format!("h = {:.1}", r.homophily_target),
                points: log
                    .records
                    .iter()
                    .filter_map(|rec| rec.val_acc.map(|v| (rec.epoch as f64, v)))
                    .collect(),
            })
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if !acc_series.is_empty() {
        svg::render_accuracy_svg(&acc_series, &dir.join("accuracy_vs_epoch.svg"))?;
    }

    let in_means = results.mean_by_homophily(|r| r.similarity.in_class_mean);
    let across_means = results.mean_by_homophily(|r| r.similarity.across_class_mean);
    let points: Vec<(f64, f64, f64)> = in_means
        .iter()
        .zip(&across_means)
        .map(|(&(h, i), &(_, a))| (h, i, a))
        .collect();
    if !points.is_empty() {
        svg::render_similarity_svg(&points, &dir.join("similarity_vs_homophily.svg"))?;
    }
    Ok(())
}

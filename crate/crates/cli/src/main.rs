//! Command-line driver: dataset generation, training, the homophily sweep,
//! structure diagnostics, and figure rendering.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. Progress and
//! diagnostics go to stderr; machine-readable output goes to files under
//! the command's --out directory (analyze prints its report to stdout).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use gcn_lab::experiment::{run_sweep, svg, SweepConfig};
use gcn_lab::graph::{load_dataset, save_dataset, DatasetMeta, GeneratorMeta};
use gcn_lab::metrics::{
    distribution_distinguishability, neighbor_label_distribution, node_homophily,
    ConfusionMatrix,
};
use gcn_lab::model::{train, TrainConfig};
use gcn_lab::rng::{derive_seed, stream};
use gcn_lab::synthgen::{
    random_split, sample_neighbor_distribution_graph, sample_partition_graph,
    NeighborDistributionSpec, PartitionSpec, SplitCounts,
};

#[derive(Parser)]
#[command(name = "gcn-lab", version, about = "Synthetic-graph GCN laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GeneratorKind {
    Partition,
    NeighborDist,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a JSON spec file.
    Generate {
        /// JSON file with PartitionSpec or NeighborDistributionSpec fields
        /// (plus an optional "split" object).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "partition")]
        kind: GeneratorKind,
    },
    /// Train the two-layer GCN on a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
        #[arg(long, default_value_t = 5e-4)]
        weight_decay: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 1)]
        eval_every: usize,
    },
    /// Run the homophily sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum cells trained concurrently (overrides the config).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Print node homophily, degree statistics, and the neighbor-label
    /// distribution of a dataset.
    Analyze {
        #[arg(long)]
        data: PathBuf,
    },
    /// Render SVG figures from a sweep output directory.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { spec, out, kind } => generate(&spec, &out, kind),
        Command::Train {
            data,
            out,
            epochs,
            lr,
            dropout,
            weight_decay,
            seed,
            hidden,
            eval_every,
        } => {
            let config = TrainConfig {
                epochs,
                hidden,
                lr,
                weight_decay,
                dropout_rate: dropout,
                seed,
                eval_every,
                ..TrainConfig::default()
            };
            train_command(&data, &out, &config)
        }
        Command::Sweep {
            config,
            out,
            parallel,
        } => sweep_command(&config, &out, parallel),
        Command::Analyze { data } => analyze(&data),
        Command::Plot { results, out } => plot(&results, &out),
    }
}

fn read_json_value(path: &Path) -> Result<serde_json::Value> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

fn generate(spec_path: &Path, out: &Path, kind: GeneratorKind) -> Result<()> {
    let value = read_json_value(spec_path)?;
    let split: SplitCounts = match value.get("split") {
        Some(v) => serde_json::from_value(v.clone())
            .with_context(|| format!("bad \"split\" object in {}", spec_path.display()))?,
        None => SplitCounts::default(),
    };

    let (graph, generator) = match kind {
        GeneratorKind::Partition => {
            let spec: PartitionSpec = serde_json::from_value(value)
                .with_context(|| format!("bad partition spec in {}", spec_path.display()))?;
            let graph = sample_partition_graph(&spec)?;
            let mut extra = serde_json::Map::new();
            extra.insert("nodes_per_class".into(), spec.nodes_per_class.into());
            extra.insert("center_scale".into(), spec.center_scale.into());
            extra.insert("noise_sigma".into(), spec.noise_sigma.into());
            let generator = GeneratorMeta {
                kind: "partition".into(),
                homophily_target: Some(spec.homophily_target),
                avg_degree: spec.avg_degree,
                seed: spec.seed,
                extra,
            };
            (graph, generator)
        }
        GeneratorKind::NeighborDist => {
            let spec: NeighborDistributionSpec = serde_json::from_value(value).with_context(
                || format!("bad neighbor-distribution spec in {}", spec_path.display()),
            )?;
            let graph = sample_neighbor_distribution_graph(&spec)?;
            let mut extra = serde_json::Map::new();
            extra.insert("nodes_per_class".into(), spec.nodes_per_class.into());
            extra.insert("center_scale".into(), spec.center_scale.into());
            extra.insert("noise_sigma".into(), spec.noise_sigma.into());
            extra.insert(
                "m".into(),
                serde_json::to_value(&spec.m).expect("matrix serializes"),
            );
            let generator = GeneratorMeta {
                kind: "neighbor-dist".into(),
                homophily_target: None,
                avg_degree: spec.avg_degree,
                seed: spec.seed,
                extra,
            };
            (graph, generator)
        }
    };

    let masks = random_split(
        graph.num_nodes,
        split,
        derive_seed(generator.seed, stream::SPLIT),
    )?;
    let meta = DatasetMeta {
        num_nodes: graph.num_nodes,
        num_classes: graph.num_classes,
        feature_dim: graph.feature_dim(),
        generator,
        format_version: gcn_lab::graph::io::FORMAT_VERSION,
    };
    save_dataset(&graph, &masks, &meta, out)?;
    eprintln!(
        "generated {} nodes / {} edges into {} (node homophily {:.3})",
        graph.num_nodes,
        graph.num_edges(),
        out.display(),
        node_homophily(&graph)
    );
    Ok(())
}

fn train_command(data: &Path, out: &Path, config: &TrainConfig) -> Result<()> {
    let (graph, masks, _meta) = load_dataset(data)?;
    eprintln!(
        "training {} epochs on {} ({} nodes, homophily {:.3})",
        config.epochs,
        data.display(),
        graph.num_nodes,
        node_homophily(&graph)
    );
    let (_, log) = train(&graph, &masks, config)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("train_log.csv"), log.records_csv())?;
    let mut summary = serde_json::to_string_pretty(&log.summary)?;
    summary.push('\n');
    fs::write(out.join("summary.json"), summary)?;
    let mut similarity = serde_json::to_string_pretty(&log.summary.similarity)?;
    similarity.push('\n');
    fs::write(out.join("similarity.json"), similarity)?;
    fs::write(out.join("confusion.csv"), log.summary.confusion.to_csv())?;
    svg::render_confusion_svg(&log.summary.confusion, &out.join("figures/confusion.svg"))?;
    if log.loss_window_regressions(25) > 0 {
        eprintln!("note: training loss regressed across some 25-epoch windows");
    }
    eprintln!(
        "final accuracy: train {:.3}, val {:.3}, test {:.3}",
        log.summary.final_train_acc, log.summary.final_val_acc, log.summary.final_test_acc
    );
    Ok(())
}

fn sweep_command(config_path: &Path, out: &Path, parallel: Option<usize>) -> Result<()> {
    let value = read_json_value(config_path)?;
    let mut config: SweepConfig = serde_json::from_value(value)
        .with_context(|| format!("bad sweep config in {}", config_path.display()))?;
    config.output_dir = Some(out.to_path_buf());
    if let Some(p) = parallel {
        config.parallel = p.max(1);
    }
    let cells = config.homophily_values.len() * config.seeds.len();
    eprintln!(
        "sweep: {cells} cells ({} homophily values x {} seeds), {} epochs each",
        config.homophily_values.len(),
        config.seeds.len(),
        config.train.epochs
    );
    let results = run_sweep(&config)?;
    for cell in &results.cells {
        match &cell.result {
            Ok(r) => eprintln!(
                "h={:.2} seed={}: realized {:.4}, val {:.3}, test {:.3}, gap {:.4}",
                r.homophily_target,
                r.seed,
                r.realized_homophily,
                r.final_val_acc,
                r.final_test_acc,
                r.similarity.gap
            ),
            Err(e) => eprintln!(
                "h={:.2} seed={}: FAILED: {e}",
                cell.homophily_target, cell.seed
            ),
        }
    }
    if let Some(het) = &results.heterophily {
        eprintln!(
            "heterophily case: cyclic test {:.3} vs baseline {:.3} (margin {:+.3}, claim_met={})",
            het.mean_cyclic_test_acc, het.mean_baseline_test_acc, het.margin, het.claim_met
        );
    }
    eprintln!("results written to {}", out.display());
    Ok(())
}

fn analyze(data: &Path) -> Result<()> {
    let (graph, masks, meta) = load_dataset(data)?;
    let degrees: Vec<usize> = (0..graph.num_nodes)
        .map(|v| graph.adjacency.degree(v))
        .collect();
    let isolated = degrees.iter().filter(|&&d| d == 0).count();
    let mean_degree = degrees.iter().sum::<usize>() as f64 / graph.num_nodes as f64;

    println!("dataset: {}", data.display());
    println!(
        "nodes: {}  classes: {}  features: {}  edges: {}  generator: {}",
        graph.num_nodes,
        graph.num_classes,
        graph.feature_dim(),
        graph.num_edges(),
        meta.generator.kind
    );
    println!("node homophily: {:.3}", node_homophily(&graph));
    println!(
        "degree: min {}  mean {:.2}  max {}  isolated {}",
        degrees.iter().min().unwrap_or(&0),
        mean_degree,
        degrees.iter().max().unwrap_or(&0),
        isolated
    );
    println!(
        "splits: train {}  val {}  test {}  unassigned {}",
        masks.train.len(),
        masks.val.len(),
        masks.test.len(),
        graph.num_nodes - masks.train.len() - masks.val.len() - masks.test.len()
    );

    let dist = neighbor_label_distribution(&graph);
    println!("neighbor label distribution (row = class):");
    for c in 0..graph.num_classes {
        let row: Vec<String> = dist.row(c).iter().map(|v| format!("{v:.3}")).collect();
        println!("  {c}: [{}]", row.join(", "));
        if dist.row(c).iter().all(|&v| v == 0.0) {
            eprintln!("warning: class {c} has no nodes with neighbors");
        }
    }
    let tv = distribution_distinguishability(&dist);
    println!("pairwise neighbor-distribution TV distance:");
    let mut min_tv = f64::INFINITY;
    let mut sum_tv = 0.0;
    let mut pairs = 0;
    for a in 0..graph.num_classes {
        let row: Vec<String> = tv.row(a).iter().map(|v| format!("{v:.3}")).collect();
        println!("  {a}: [{}]", row.join(", "));
        for b in (a + 1)..graph.num_classes {
            min_tv = min_tv.min(tv.get(a, b));
            sum_tv += tv.get(a, b);
            pairs += 1;
        }
    }
    if pairs > 0 {
        println!(
            "TV distance: min {:.3}  mean {:.3}",
            min_tv,
            sum_tv / pairs as f64
        );
    }
    Ok(())
}

/// A sweep cell directory, parsed back from its name ("h0.30_seed1").
struct CellDir {
    h: f64,
    seed: u64,
    path: PathBuf,
}

fn discover_cells(results: &Path) -> Result<Vec<CellDir>> {
    let mut cells = Vec::new();
    for entry in fs::read_dir(results)
        .with_context(|| format!("cannot read results directory {}", results.display()))?
    {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(rest) = name.strip_prefix('h') {
            if let Some((h_str, seed_str)) = rest.split_once("_seed") {
                if let (Ok(h), Ok(seed)) = (h_str.parse::<f64>(), seed_str.parse::<u64>()) {
                    cells.push(CellDir {
                        h,
                        seed,
                        path: entry.path(),
                    });
                }
            }
        }
    }
    cells.sort_by(|a, b| a.h.total_cmp(&b.h).then(a.seed.cmp(&b.seed)));
    Ok(cells)
}

fn parse_val_series(train_log: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(train_log)
        .with_context(|| format!("cannot read {}", train_log.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!("{}, line {}: expected 4 fields", train_log.display(), i + 1);
        }
        if fields[3].is_empty() {
            continue;
        }
        let epoch: f64 = fields[0]
            .parse()
            .with_context(|| format!("{}, line {}: bad epoch", train_log.display(), i + 1))?;
        let val: f64 = fields[3]
            .parse()
            .with_context(|| format!("{}, line {}: bad val_acc", train_log.display(), i + 1))?;
        points.push((epoch, val));
    }
    Ok(points)
}

fn parse_confusion_csv(path: &Path) -> Result<ConfusionMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut fields = line.split(',');
        let _true_class = fields.next();
        let row: Vec<u64> = fields
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("{}, line {}: bad count", path.display(), i + 1))?;
        counts.push(row);
    }
    let row_normalized = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; row.len()]
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

fn trim_float(h: f64) -> String {
    let s = format!("{h:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn plot(results: &Path, out: &Path) -> Result<()> {
    let cells = discover_cells(results)?;
    if cells.is_empty() {
        bail!(
            "no sweep cell directories (h*_seed*) found under {}",
            results.display()
        );
    }
    // First seed per homophily value (cells are sorted by h, then seed).
    let mut first: Vec<&CellDir> = Vec::new();
    for cell in &cells {
        if first.last().map(|c| c.h != cell.h).unwrap_or(true) {
            first.push(cell);
        }
    }

    let mut acc_series = Vec::new();
    let mut similarity_points = Vec::new();
    for cell in &first {
        let points = parse_val_series(&cell.path.join("train_log.csv"))?;
        if !points.is_empty() {
            acc_series.push(svg::Series {
                label: format!("h = {}", trim_float(cell.h)),
                points,
            });
        }
        let report: gcn_lab::metrics::SimilarityReport = {
            let path = cell.path.join("similarity.json");
            let text = fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("malformed JSON in {}", path.display()))?
        };
        similarity_points.push((cell.h, report.in_class_mean, report.across_class_mean));

        let cm = parse_confusion_csv(&cell.path.join("confusion.csv"))?;
        svg::render_confusion_svg(
            &cm,
            &out.join(format!("confusion_h{}.svg", trim_float(cell.h))),
        )?;
    }
    svg::render_accuracy_svg(&acc_series, &out.join("accuracy_vs_epoch.svg"))?;
    svg::render_similarity_svg(&similarity_points, &out.join("similarity_vs_homophily.svg"))?;
    eprintln!(
        "rendered {} confusion grids plus accuracy/similarity charts into {}",
        first.len(),
        out.display()
    );
    Ok(())
}

//! Dataset directory (de)serialization.
//!
//! Layout (all paths relative to the dataset directory):
//!   meta.json    - shape and generator provenance, format_version 1
//!   edges.tsv    - one undirected edge per line, "u<TAB>v" with u < v
//!   labels.csv   - line i holds the class index of node i
//!   features.bin - row-major num_nodes x feature_dim, f32 little-endian
//!   masks.csv    - "node_id,split" with split in {train,val,test,none}
//!
//! All node indices are 0-based. Integer fields and stored features
//! round-trip bit-exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, SplitMasks};
use crate::kernels::DenseMatrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub generator: GeneratorMeta,
    pub format_version: u32,
}

/// Provenance of the generator run that produced the dataset. Extra fields
/// are preserved verbatim so generator-specific settings survive round-trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homophily_target: Option<f64>,
    pub avg_degree: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn split_name(masks: &SplitMasks, node: usize) -> &'static str {
    // Masks are small; linear membership checks keep this dependency-free.
    if masks.train.contains(&node) {
        "train"
    } else if masks.val.contains(&node) {
        "val"
    } else if masks.test.contains(&node) {
        "test"
    } else {
        "none"
    }
}

pub fn save_dataset(
    graph: &Graph,
    masks: &SplitMasks,
    meta: &DatasetMeta,
    dir: &Path,
) -> Result<()> {
    if meta.num_nodes != graph.num_nodes
        || meta.num_classes != graph.num_classes
        || meta.feature_dim != graph.feature_dim()
    {
        return Err(Error::DimensionMismatch(format!(
            "meta declares {}x{} classes/{} features, graph has {}x{}/{}",
            meta.num_nodes,
            meta.num_classes,
            meta.feature_dim,
            graph.num_nodes,
            graph.num_classes,
            graph.feature_dim()
        )));
    }
    masks.validate(graph.num_nodes)?;
    fs::create_dir_all(dir)?;

    let mut meta_out = serde_json::to_string_pretty(meta).expect("meta serializes");
    meta_out.push('\n');
    fs::write(dir.join("meta.json"), meta_out)?;

    let mut edges = BufWriter::new(File::create(dir.join("edges.tsv"))?);
    for (u, v) in graph.edge_list() {
        writeln!(edges, "{u}\t{v}")?;
    }
    edges.flush()?;

    let mut labels = BufWriter::new(File::create(dir.join("labels.csv"))?);
    for &label in &graph.labels {
        writeln!(labels, "{label}")?;
    }
    labels.flush()?;

    let mut features = BufWriter::new(File::create(dir.join("features.bin"))?);
    for &x in graph.features.data() {
        features.write_all(&(x as f32).to_le_bytes())?;
    }
    features.flush()?;

    let mut mask_file = BufWriter::new(File::create(dir.join("masks.csv"))?);
    for node in 0..graph.num_nodes {
        writeln!(mask_file, "{node},{}", split_name(masks, node))?;
    }
    mask_file.flush()?;

    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<(Graph, SplitMasks, DatasetMeta)> {
    let meta_path = dir.join("meta.json");
    let meta: DatasetMeta =
        serde_json::from_reader(BufReader::new(File::open(&meta_path)?)).map_err(|source| {
            Error::Json {
                path: meta_path.clone(),
                source,
            }
        })?;
    if meta.format_version != FORMAT_VERSION {
        return Err(malformed(
            &meta_path,
            0,
            format!("unsupported format_version {}", meta.format_version),
        ));
    }

    let labels = read_labels(&dir.join("labels.csv"), meta.num_nodes, meta.num_classes)?;
    let edges = read_edges(&dir.join("edges.tsv"), meta.num_nodes)?;
    let features = read_features(&dir.join("features.bin"), meta.num_nodes, meta.feature_dim)?;
    let masks = read_masks(&dir.join("masks.csv"), meta.num_nodes)?;

    let graph = build_graph(&edges, meta.num_classes, labels, features).map_err(|e| match e {
        // Duplicate lines in edges.tsv surface from the CSR builder.
        Error::DuplicateEdge { u, v } => malformed(
            &dir.join("edges.tsv"),
            0,
            format!("edge ({u}, {v}) listed more than once"),
        ),
        other => other,
    })?;
    Ok((graph, masks, meta))
}

fn read_labels(path: &PathBuf, num_nodes: usize, num_classes: usize) -> Result<Vec<usize>> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::with_capacity(num_nodes);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if labels.len() == num_nodes {
            return Err(malformed(
                path,
                line_no,
                format!("more lines than the {num_nodes} nodes declared in meta.json"),
            ));
        }
        let label: usize = line
            .trim()
            .parse()
            .map_err(|_| malformed(path, line_no, format!("expected class index, got {line:?}")))?;
        if label >= num_classes {
            return Err(malformed(
                path,
                line_no,
                format!("label {label} >= num_classes {num_classes}"),
            ));
        }
        labels.push(label);
    }
    if labels.len() != num_nodes {
        return Err(malformed(
            path,
            labels.len() + 1,
            format!("expected {num_nodes} labels, file has {}", labels.len()),
        ));
    }
    Ok(labels)
}

fn read_edges(path: &PathBuf, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut parts = line.split('\t');
        let parse = |field: Option<&str>| -> Result<usize> {
            field
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| malformed(path, line_no, format!("expected \"u<TAB>v\", got {line:?}")))
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(malformed(path, line_no, "more than two fields"));
        }
        if u >= v {
            return Err(malformed(
                path,
                line_no,
                format!("edges must satisfy u < v, got ({u}, {v})"),
            ));
        }
        if v >= num_nodes {
            return Err(malformed(
                path,
                line_no,
                format!("node {v} out of range for {num_nodes} nodes"),
            ));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

fn read_features(path: &PathBuf, num_nodes: usize, feature_dim: usize) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let expected = num_nodes * feature_dim * 4;
    if bytes.len() != expected {
        return Err(Error::ChecksumMismatch {
            path: path.clone(),
            reason: format!(
                "expected {expected} bytes ({num_nodes} x {feature_dim} f32), found {}",
                bytes.len()
            ),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    DenseMatrix::from_vec(num_nodes, feature_dim, data)
}

fn read_masks(path: &PathBuf, num_nodes: usize) -> Result<SplitMasks> {
    let reader = BufReader::new(File::open(path)?);
    let mut assigned = vec![false; num_nodes];
    let mut masks = SplitMasks::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let (node_str, split) = line
            .split_once(',')
            .ok_or_else(|| malformed(path, line_no, format!("expected \"node_id,split\", got {line:?}")))?;
        let node: usize = node_str
            .trim()
            .parse()
            .map_err(|_| malformed(path, line_no, format!("bad node id {node_str:?}")))?;
        if node >= num_nodes {
            return Err(malformed(
                path,
                line_no,
                format!("node {node} out of range for {num_nodes} nodes"),
            ));
        }
        if assigned[node] {
            return Err(malformed(path, line_no, format!("node {node} assigned twice")));
        }
        assigned[node] = true;
        match split.trim() {
            "train" => masks.train.push(node),
            "val" => masks.val.push(node),
            "test" => masks.test.push(node),
            "none" => {}
            other => {
                return Err(malformed(
                    path,
                    line_no,
                    format!("unknown split {other:?} (expected train/val/test/none)"),
                ))
            }
        }
    }
    for set in [&mut masks.train, &mut masks.val, &mut masks.test] {
        set.sort_unstable();
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_dataset() -> (Graph, SplitMasks, DatasetMeta) {
        let features = DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, -3.5]).unwrap();
        let graph = build_graph(&[(0, 1), (1, 2), (0, 2)], 2, vec![0, 1, 0], features).unwrap();
        let masks = SplitMasks {
            train: vec![0],
            val: vec![1],
            test: vec![2],
        };
        let meta = DatasetMeta {
            num_nodes: 3,
            num_classes: 2,
            feature_dim: 2,
            generator: GeneratorMeta {
                kind: "handmade".into(),
                homophily_target: None,
                avg_degree: 2.0,
                seed: 0,
                extra: Default::default(),
            },
            format_version: FORMAT_VERSION,
        };
        (graph, masks, meta)
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let (graph, masks, meta) = triangle_dataset();
        save_dataset(&graph, &masks, &meta, dir.path()).unwrap();
        let (g2, m2, meta2) = load_dataset(dir.path()).unwrap();
        assert_eq!(graph, g2);
        assert_eq!(masks, m2);
        assert_eq!(meta, meta2);
    }

    #[test]
    fn short_labels_file_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let (graph, masks, mut meta) = triangle_dataset();
        save_dataset(&graph, &masks, &meta, dir.path()).unwrap();
        meta.num_nodes = 5;
        let mut out = serde_json::to_string_pretty(&meta).unwrap();
        out.push('\n');
        fs::write(dir.path().join("meta.json"), out).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::MalformedFile { path, line, .. }) => {
                assert!(path.ends_with("labels.csv"));
                assert_eq!(line, 4);
            }
            other => panic!("expected MalformedFile, got {other:?}"),
        }
    }

    #[test]
    fn truncated_features_report_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (graph, masks, meta) = triangle_dataset();
        save_dataset(&graph, &masks, &meta, dir.path()).unwrap();
        fs::write(dir.path().join("features.bin"), [0u8; 8]).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn bad_edge_lines_name_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let (graph, masks, meta) = triangle_dataset();
        save_dataset(&graph, &masks, &meta, dir.path()).unwrap();
        fs::write(dir.path().join("edges.tsv"), "0\t1\n2\t1\n").unwrap();
        match load_dataset(dir.path()) {
            Err(Error::MalformedFile { line, reason, .. }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("u < v"));
            }
            other => panic!("expected MalformedFile, got {other:?}"),
        }
    }
}

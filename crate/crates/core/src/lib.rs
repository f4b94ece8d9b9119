//! A self-contained laboratory for studying how graph structure drives GCN
//! node classification: synthetic partition graphs with controlled node
//! homophily, a hand-written two-layer GCN (forward, backward, Adam), and
//! the diagnostics to go with it (homophily, neighbor-label distributions,
//! embedding cosine similarity, confusion matrices, SVG figures).

pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod synthgen;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{build_graph, load_dataset, save_dataset, CsrAdjacency, Graph, SplitMasks};
pub use kernels::DenseMatrix;
pub use model::{extract_embeddings, train, GcnParams, TrainConfig, TrainLog};
pub use synthgen::{NeighborDistributionSpec, PartitionSpec, SplitCounts};

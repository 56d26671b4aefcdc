//! Clustering of directed binary networks under the stochastic block model.
//!
//! Node labels and the number of clusters are inferred together by greedily
//! maximizing the exact integrated complete-data log likelihood (ICL), with
//! Dirichlet and Beta conjugate priors integrated out in closed form.
//!
//! The main entry points are [`fit_with_restarts`] for end-to-end fitting,
//! [`FitState`] for the incremental swap machinery, and [`icl_exact`] for
//! scoring a fixed partition.

pub mod cli;
mod error;
pub mod graph;
pub mod greedy;
pub mod init;
pub mod io;
pub mod merge;
pub mod metrics;
pub mod partition;
pub mod render;
pub mod special;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{node_cluster_edge_counts, parse_edge_list, write_edge_list, DirectedGraph};
pub use greedy::{greedy_fit, FitOptions, FitResult, FitState, SwapDelta, ACCEPT_EPSILON};
pub use init::{fit_with_restarts, kmeans_init, random_init, InitConfig, InitMethod, RestartsResult};
pub use merge::{merge_pass, MergeDelta};
pub use metrics::{entropy, mutual_information, nmi, ConfusionTable};
pub use partition::Partition;
pub use stats::{compute_stats, icl_asymptotic, icl_exact, BlockStats, Priors};
pub use synth::{make_setting, sample_sbm, SbmParams, SettingConfig};

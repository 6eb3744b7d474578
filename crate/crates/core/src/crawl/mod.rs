//! Seed-channel discovery and the daily recommendation harvest.

use alloc::string::String;

mod graph;
mod harvest;
mod louvain;
mod snowball;

pub use graph::{modularity, ChannelGraph, EdgeWeighting, Partition};
pub use harvest::{assemble_snapshot, daily_harvest, harvest_channel, ChannelHarvest};
pub use louvain::{cluster_channels, cluster_channels_traced, select_seed_cluster, ClusterDesignation};
pub use snowball::{snowball_channels, Admission, SnowballResult};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrawlError {
    #[error("graph has no edges; modularity is undefined")]
    EmptyGraph,
    #[error("partition does not cover node {0}")]
    MissingNode(String),
    #[error("no cluster with id {0}")]
    UnknownCluster(usize),
    #[error("anchor channel {0} is not in any cluster")]
    AnchorNotFound(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

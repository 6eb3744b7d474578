use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{modularity, ChannelGraph, Partition};
use super::CrawlError;

/// Minimum modularity gain for another aggregation level.
const LEVEL_TOLERANCE: f64 = 1e-7;
/// Gains below this are float noise, not improvements.
const MOVE_EPSILON: f64 = 1e-12;

/// Weighted graph on dense indices, with self-loop mass from aggregation.
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[i]
    }

    /// Local moving: nodes in index order, each joining the neighbour
    /// community with the largest strictly positive gain, until a sweep
    /// moves nothing. Returns the community per node and whether any node
    /// moved.
    fn local_moves(&self, two_m: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let degree: Vec<f64> = (0..n).map(|i| self.degree(i)).collect();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = degree.clone();
        let mut moved_any = false;
        for _sweep in 0..10_000 {
            let mut moved = false;
            for i in 0..n {
                let own = community[i];
                let mut links = BTreeMap::<usize, f64>::new();
                for &(j, w) in &self.adjacency[i] {
                    *links.entry(community[j]).or_insert(0.0) += w;
                }
                total[own] -= degree[i];
                let gain = |c: usize, k_in: f64| k_in - total[c] * degree[i] / two_m;
                let mut best = own;
                let mut best_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
                for (&c, &k_in) in &links {
                    let g = gain(c, k_in);
                    if g > best_gain + MOVE_EPSILON {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += degree[i];
                if best != own {
                    community[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (community, moved_any)
    }

    /// Collapses communities into nodes, numbered by their smallest member.
    fn aggregate(&self, community: &[usize]) -> (Level, Vec<usize>) {
        let mut relabel = BTreeMap::new();
        let dense: Vec<usize> = community
            .iter()
            .map(|&c| {
                let next = relabel.len();
                *relabel.entry(c).or_insert(next)
            })
            .collect();
        let k = relabel.len();
        let mut weights = vec![BTreeMap::<usize, f64>::new(); k];
        let mut self_loops = vec![0.0; k];
        for i in 0..self.len() {
            let ci = dense[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adjacency[i] {
                let cj = dense[j];
                if ci == cj {
                    // Each internal edge is visited from both ends.
                    self_loops[ci] += w / 2.0;
                } else {
                    *weights[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adjacency = weights.into_iter().map(|m| m.into_iter().collect()).collect();
        (
            Level {
                adjacency,
                self_loops,
            },
            dense,
        )
    }
}

/// Louvain community detection with sorted-key node order.
pub fn cluster_channels(graph: &ChannelGraph) -> Result<Partition, CrawlError> {
    cluster_channels_traced(graph).map(|(p, _)| p)
}

/// Like [`cluster_channels`], also returning the modularity after each
/// level, starting with the singleton partition.
pub fn cluster_channels_traced(graph: &ChannelGraph) -> Result<(Partition, Vec<f64>), CrawlError> {
    let m = graph.total_weight() as f64;
    if m == 0.0 {
        return Err(CrawlError::EmptyGraph);
    }
    let two_m = 2.0 * m;
    let names: Vec<&str> = graph.nodes().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut level = Level {
        adjacency: names
            .iter()
            .map(|&n| graph.neighbors(n).map(|(b, w)| (index[b], w as f64)).collect())
            .collect(),
        self_loops: vec![0.0; names.len()],
    };
    // Community of each original node, in terms of the current level's nodes.
    let mut membership: Vec<usize> = (0..names.len()).collect();
    let to_partition = |membership: &[usize]| {
        Partition::from_assignment(
            names
                .iter()
                .zip(membership)
                .map(|(&n, &c)| (String::from(n), c))
                .collect(),
        )
    };
    let mut q = modularity(graph, &to_partition(&membership))?;
    let mut trace = vec![q];
    loop {
        let (community, moved) = level.local_moves(two_m);
        if !moved {
            break;
        }
        let (next, dense) = level.aggregate(&community);
        let candidate: Vec<usize> = membership.iter().map(|&c| dense[c]).collect();
        let q_next = modularity(graph, &to_partition(&candidate))?;
        if q_next < q {
            break;
        }
        membership = candidate;
        trace.push(q_next);
        let gain = q_next - q;
        q = q_next;
        level = next;
        if gain < LEVEL_TOLERANCE || level.len() == 1 {
            break;
        }
    }
    Ok((to_partition(&membership), trace))
}

/// Which cluster supplies the seed set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterDesignation {
    Id(usize),
    /// The cluster holding the most anchors; ties go to the smaller id.
    Anchors(Vec<String>),
}

/// Members of the designated cluster in sorted order, followed by the
/// manual additions not already present.
pub fn select_seed_cluster(
    partition: &Partition,
    manual_additions: &[String],
    designation: &ClusterDesignation,
) -> Result<Vec<String>, CrawlError> {
    let cluster = match designation {
        ClusterDesignation::Id(c) => {
            if *c >= partition.community_count() {
                return Err(CrawlError::UnknownCluster(*c));
            }
            *c
        }
        ClusterDesignation::Anchors(anchors) => {
            if anchors.is_empty() {
                return Err(CrawlError::InvalidArgument("anchor list is empty"));
            }
            let mut votes = BTreeMap::<usize, usize>::new();
            for a in anchors {
                let c = partition
                    .community(a)
                    .ok_or_else(|| CrawlError::AnchorNotFound(a.clone()))?;
                *votes.entry(c).or_insert(0) += 1;
            }
            let mut best = (0usize, usize::MAX);
            for (&c, &v) in &votes {
                if v > best.0 {
                    best = (v, c);
                }
            }
            best.1
        }
    };
    let mut out = partition.members(cluster);
    let mut seen: alloc::collections::BTreeSet<String> = out.iter().cloned().collect();
    for m in manual_additions {
        if seen.insert(m.clone()) {
            out.push(m.clone());
        }
    }
    Ok(out)
}

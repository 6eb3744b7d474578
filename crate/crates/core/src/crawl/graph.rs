use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::CrawlError;

/// How repeated co-occurrences between two channels are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeighting {
    #[default]
    Count,
    Binary,
}

/// Undirected channel graph. An edge's weight counts recommendations between
/// the two channels in either direction; self-recommendations are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelGraph {
    adjacency: BTreeMap<String, BTreeMap<String, u64>>,
}

impl ChannelGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str) {
        if !self.adjacency.contains_key(id) {
            self.adjacency.insert(String::from(id), BTreeMap::new());
        }
    }

    /// Adds `weight` to the edge `a`-`b`. Self-loops and zero weights only
    /// register the nodes.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: u64) {
        self.add_node(a);
        self.add_node(b);
        if a == b || weight == 0 {
            return;
        }
        *self.adjacency.get_mut(a).unwrap().entry(String::from(b)).or_insert(0) += weight;
        *self.adjacency.get_mut(b).unwrap().entry(String::from(a)).or_insert(0) += weight;
    }

    pub fn from_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut g = Self::new();
        for (a, b, w) in edges {
            g.add_edge(a, b, w);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.adjacency.contains_key(id)
    }

    pub fn weight(&self, a: &str, b: &str) -> u64 {
        self.adjacency
            .get(a)
            .and_then(|n| n.get(b))
            .copied()
            .unwrap_or(0)
    }

    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = (&str, u64)> {
        self.adjacency
            .get(id)
            .into_iter()
            .flat_map(|n| n.iter().map(|(k, &w)| (k.as_str(), w)))
    }

    /// Each undirected edge once, with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.adjacency.iter().flat_map(|(a, n)| {
            n.iter()
                .filter(move |(b, _)| a < *b)
                .map(move |(b, &w)| (a.as_str(), b.as_str(), w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn degree(&self, id: &str) -> u64 {
        self.neighbors(id).map(|(_, w)| w).sum()
    }

    /// Sum of edge weights (`m`).
    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn with_weighting(&self, weighting: EdgeWeighting) -> Self {
        match weighting {
            EdgeWeighting::Count => self.clone(),
            EdgeWeighting::Binary => {
                let mut g = self.clone();
                for n in g.adjacency.values_mut() {
                    n.values_mut().for_each(|w| *w = 1);
                }
                g
            }
        }
    }

    /// The subgraph on `keep`; ids absent from the graph are ignored.
    pub fn induced<'a, I>(&self, keep: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let keep: alloc::collections::BTreeSet<&str> =
            keep.into_iter().filter(|id| self.contains(id)).collect();
        let mut g = Self::new();
        for &id in &keep {
            g.add_node(id);
            for (b, w) in self.neighbors(id) {
                if id < b && keep.contains(b) {
                    g.add_edge(id, b, w);
                }
            }
        }
        g
    }
}

/// Community id per channel.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: BTreeMap<String, usize>,
}

impl Partition {
    /// Community ids are renumbered densely in order of each community's
    /// smallest member.
    pub fn from_assignment(assignment: BTreeMap<String, usize>) -> Self {
        let mut relabel = BTreeMap::new();
        let assignment = assignment
            .into_iter()
            .map(|(k, c)| {
                let next = relabel.len();
                let id = *relabel.entry(c).or_insert(next);
                (k, id)
            })
            .collect();
        Self { assignment }
    }

    pub fn singletons(graph: &ChannelGraph) -> Self {
        Self::from_assignment(graph.nodes().enumerate().map(|(i, n)| (String::from(n), i)).collect())
    }

    pub fn community(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.assignment.values().max().map_or(0, |&c| c + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignment.iter().map(|(k, &c)| (k.as_str(), c))
    }

    /// Sorted members of community `c`.
    pub fn members(&self, c: usize) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|&(_, &x)| x == c)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn communities(&self) -> Vec<Vec<String>> {
        let mut out = alloc::vec![Vec::new(); self.community_count()];
        for (k, &c) in &self.assignment {
            out[c].push(k.clone());
        }
        out
    }
}

/// Newman modularity of `partition` on `graph`.
pub fn modularity(graph: &ChannelGraph, partition: &Partition) -> Result<f64, CrawlError> {
    let m = graph.total_weight() as f64;
    if m == 0.0 {
        return Err(CrawlError::EmptyGraph);
    }
    let mut community = BTreeMap::new();
    for node in graph.nodes() {
        let c = partition
            .community(node)
            .ok_or_else(|| CrawlError::MissingNode(String::from(node)))?;
        community.insert(node, c);
    }
    let mut internal = BTreeMap::<usize, f64>::new();
    let mut total = BTreeMap::<usize, f64>::new();
    for node in graph.nodes() {
        *total.entry(community[node]).or_insert(0.0) += graph.degree(node) as f64;
    }
    for (a, b, w) in graph.edges() {
        if community[a] == community[b] {
            *internal.entry(community[a]).or_insert(0.0) += 2.0 * w as f64;
        }
    }
    let two_m = 2.0 * m;
    Ok(total
        .iter()
        .map(|(c, &t)| internal.get(c).copied().unwrap_or(0.0) / two_m - (t / two_m) * (t / two_m))
        .sum())
}

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::ChannelGraph;
use super::CrawlError;
use crate::source::RecommendationSource;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admission {
    pub channel_id: String,
    /// Occurrence count that won the admission.
    pub count: u64,
    /// Number of entries of [`SnowballResult::observations`] seen at the time.
    pub observed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnowballResult {
    /// Initial seeds followed by admitted channels in admission order.
    pub channels: Vec<String>,
    pub admissions: Vec<Admission>,
    /// Co-occurrence graph over every observed recommendation.
    pub graph: ChannelGraph,
    /// (source channel, recommended channel), one entry per rank slot.
    pub observations: Vec<(String, String)>,
    /// Set when no non-member channel was left to admit.
    pub under_target: bool,
    /// Channels whose last video or recommendations could not be fetched.
    pub failed_channels: Vec<String>,
}

/// Grows `initial_seeds` to `target_count` channels. Only the newest
/// member's last-video recommendations are fetched each round; occurrence
/// counts carry over. The non-member with the highest count is admitted,
/// ties going to the smaller key.
pub fn snowball_channels<S: RecommendationSource>(
    source: &S,
    initial_seeds: &[String],
    target_count: usize,
    k: usize,
) -> Result<SnowballResult, CrawlError> {
    if initial_seeds.is_empty() {
        return Err(CrawlError::InvalidArgument("initial seed list is empty"));
    }
    if k == 0 {
        return Err(CrawlError::InvalidArgument("k must be at least 1"));
    }
    let mut channels: Vec<String> = Vec::new();
    let mut members = BTreeSet::new();
    for s in initial_seeds {
        if members.insert(s.clone()) {
            channels.push(s.clone());
        }
    }
    if target_count < channels.len() {
        return Err(CrawlError::InvalidArgument("target count is below the seed count"));
    }
    let mut state = State {
        counts: BTreeMap::new(),
        owner: BTreeMap::new(),
        graph: ChannelGraph::new(),
        observations: Vec::new(),
        failed: Vec::new(),
    };
    for c in &channels {
        state.graph.add_node(c);
    }
    for c in channels.clone() {
        state.visit(source, &c, k);
    }
    let mut admissions = Vec::new();
    let mut under_target = false;
    while channels.len() < target_count {
        let mut best: Option<(&String, u64)> = None;
        for (c, &n) in &state.counts {
            if !members.contains(c) && best.is_none_or(|(_, b)| n > b) {
                best = Some((c, n));
            }
        }
        let Some((winner, count)) = best else {
            under_target = true;
            break;
        };
        let winner = winner.clone();
        admissions.push(Admission {
            channel_id: winner.clone(),
            count,
            observed: state.observations.len(),
        });
        members.insert(winner.clone());
        channels.push(winner.clone());
        state.visit(source, &winner, k);
    }
    state.failed.sort();
    Ok(SnowballResult {
        channels,
        admissions,
        graph: state.graph,
        observations: state.observations,
        under_target,
        failed_channels: state.failed,
    })
}

struct State {
    counts: BTreeMap<String, u64>,
    /// Channel of each recommended video seen so far.
    owner: BTreeMap<String, Option<String>>,
    graph: ChannelGraph,
    observations: Vec<(String, String)>,
    failed: Vec<String>,
}

impl State {
    fn visit<S: RecommendationSource>(&mut self, source: &S, channel: &str, k: usize) {
        let recs = source
            .fetch_last_video(channel)
            .and_then(|v| source.fetch_watch_next(&v.video_id, k));
        let recs = match recs {
            Ok(r) => r,
            Err(_) => {
                self.failed.push(String::from(channel));
                return;
            }
        };
        for video_id in recs {
            let owner = self
                .owner
                .entry(video_id.clone())
                .or_insert_with(|| source.fetch_video(&video_id).ok().map(|v| v.channel_id))
                .clone();
            let Some(rec_channel) = owner else { continue };
            *self.counts.entry(rec_channel.clone()).or_insert(0) += 1;
            self.graph.add_edge(channel, &rec_channel, 1);
            self.observations.push((String::from(channel), rec_channel));
        }
    }
}

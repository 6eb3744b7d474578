use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{DailySnapshot, RecommendationEdge, VideoRecord};
use crate::day::Day;
use crate::source::{RecommendationSource, SourceError};

/// What one seed channel contributed to a day's harvest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelHarvest {
    pub channel_id: String,
    pub last_video: VideoRecord,
    pub edges: Vec<RecommendationEdge>,
}

/// Fetches the channel's last video and its first `k` watch-next
/// recommendations.
pub fn harvest_channel<S: RecommendationSource>(
    source: &S,
    channel_id: &str,
    date: Day,
    k: usize,
) -> Result<ChannelHarvest, SourceError> {
    let last_video = source.fetch_last_video(channel_id)?;
    let recs = source.fetch_watch_next(&last_video.video_id, k)?;
    let mut seen = BTreeSet::new();
    let edges = recs
        .into_iter()
        .filter(|r| *r != last_video.video_id && seen.insert(r.clone()))
        .take(k)
        .enumerate()
        .map(|(i, r)| RecommendationEdge {
            date,
            source_video_id: last_video.video_id.clone(),
            recommended_video_id: r,
            rank: i as u32 + 1,
        })
        .collect();
    Ok(ChannelHarvest {
        channel_id: String::from(channel_id),
        last_video,
        edges,
    })
}

/// Merges per-channel results into a snapshot. The result does not depend
/// on the order of `results`.
pub fn assemble_snapshot(
    date: Day,
    seeds: usize,
    results: Vec<Result<ChannelHarvest, (String, SourceError)>>,
    retain: usize,
) -> DailySnapshot {
    let mut edges = Vec::new();
    let mut failed = Vec::new();
    let mut ok = 0usize;
    for r in results {
        match r {
            Ok(h) => {
                ok += 1;
                edges.extend(h.edges);
            }
            Err((channel, _)) => failed.push(channel),
        }
    }
    edges.sort_by(|a, b| {
        a.source_video_id
            .cmp(&b.source_video_id)
            .then(a.rank.cmp(&b.rank))
    });
    failed.sort();
    let mut snapshot = DailySnapshot::from_edges(date, edges, retain);
    snapshot.coverage = if seeds == 0 { 0.0 } else { ok as f64 / seeds as f64 };
    snapshot.failed_channels = failed;
    snapshot
}

/// One day's harvest over `seeds`. Failing channels are skipped and listed
/// in the snapshot; coverage is the share of seeds that succeeded.
pub fn daily_harvest<S: RecommendationSource>(
    source: &S,
    seeds: &[String],
    date: Day,
    k: usize,
    retain: usize,
) -> DailySnapshot {
    let unique: BTreeSet<&String> = seeds.iter().collect();
    let results = unique
        .iter()
        .map(|c| harvest_channel(source, c, date, k).map_err(|e| (String::from(c.as_str()), e)))
        .collect();
    assemble_snapshot(date, unique.len(), results, retain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{SimParams, SimulatedPlatform};
    use alloc::format;

    fn setup() -> (SimulatedPlatform, Vec<String>) {
        let p = SimulatedPlatform::generate(&SimParams {
            channels: 30,
            videos_per_channel: 10,
            seed: 8,
            ..SimParams::default()
        })
        .unwrap();
        let seeds = (0..30).map(|c| format!("UC{c:05}")).collect();
        (p, seeds)
    }

    #[test]
    fn order_does_not_matter() {
        let (p, seeds) = setup();
        let day = SimParams::default().start;
        let a = daily_harvest(&p.on(day), &seeds, day, 20, 50);
        let mut rev = seeds.clone();
        rev.reverse();
        let b = daily_harvest(&p.on(day), &rev, day, 20, 50);
        assert_eq!(a, b);
        assert_eq!(a.edges.len(), 600);
        assert_eq!(a.retained_video_ids.len(), 50);
        assert_eq!(a.coverage, 1.0);
    }

    #[test]
    fn small_supply_keeps_everything() {
        let (p, seeds) = setup();
        let day = SimParams::default().start;
        let s = daily_harvest(&p.on(day), &seeds[..2], day, 5, 1000);
        let distinct: BTreeSet<_> = s.edges.iter().map(|e| &e.recommended_video_id).collect();
        assert_eq!(s.retained_video_ids.len(), distinct.len());
    }

    #[test]
    fn all_failures_give_empty_snapshot() {
        let (p, _) = setup();
        let day = SimParams::default().start;
        let seeds = [String::from("gone1"), String::from("gone2")];
        let s = daily_harvest(&p.on(day), &seeds, day, 20, 1000);
        assert!(s.edges.is_empty());
        assert_eq!(s.coverage, 0.0);
        assert_eq!(s.failed_channels, seeds);
    }

    #[test]
    fn partial_coverage() {
        let (p, mut seeds) = setup();
        seeds.truncate(3);
        seeds.push(String::from("gone"));
        let day = SimParams::default().start;
        let s = daily_harvest(&p.on(day), &seeds, day, 20, 1000);
        assert_eq!(s.coverage, 0.75);
        assert!(s.edges.iter().all(|e| (1..=20).contains(&e.rank)));
    }
}

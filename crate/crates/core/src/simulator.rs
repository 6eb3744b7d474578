//! A deterministic simulated platform with known ground truth.
//!
//! Every random choice is a counter hash of the seed and the call's
//! coordinates, so the platform holds no mutable state and any number of
//! threads may query it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{ChannelRecord, Comment, Label, LabeledExample, VideoRecord};
use crate::day::Day;
use crate::hash::CounterHash;
use crate::source::{Capabilities, RecommendationSource, SourceError};

/// Words planted in conspiratorial text.
pub const CONSPIRATORIAL_WORDS: &[&str] = &[
    "illuminati", "hoax", "aliens", "coverup", "qanon", "wwg1wga", "truth", "hidden", "elite",
    "agenda", "chemtrails", "flat", "reptilian", "deepstate", "nwo", "secret", "staged",
    "pyramids", "ufo", "prophecy", "antichrist", "vaccine", "microchip", "globalists", "sheeple",
    "awake", "suppressed", "nibiru", "mkultra", "falseflag", "lies", "controlled", "mainstream",
    "exposed", "cabal", "depopulation", "frequency", "ancient", "giants", "satanic",
];

/// Words planted in non-conspiratorial text.
pub const NEUTRAL_WORDS: &[&str] = &[
    "recipe", "cute", "game", "food", "puppy", "tutorial", "guitar", "workout", "review",
    "unboxing", "makeup", "football", "highlights", "travel", "vlog", "kitchen", "garden",
    "painting", "piano", "comedy", "prank", "trailer", "science", "chemistry", "lesson",
    "budget", "camera", "speedrun", "minecraft", "fashion", "baking", "yoga", "interview",
    "concert", "kitten", "crafts", "fishing", "cars", "physics", "history",
];

/// Shared filler carrying no class signal.
pub const FILLER_WORDS: &[&str] = &[
    "the", "a", "and", "to", "of", "this", "video", "is", "in", "you", "it", "that", "for",
    "on", "with", "we", "my", "what", "so", "just", "like", "new", "about", "today", "watch",
    "please", "subscribe", "channel", "really", "people", "time", "know", "think", "here",
    "more", "all", "how", "why", "who", "now", "out", "up", "one", "day", "first", "part",
    "live", "world", "make", "best", "full", "episode", "thanks", "love", "great", "good",
    "look", "see", "show", "things",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub channels: usize,
    pub videos_per_channel: usize,
    /// Share of conspiratorial videos, and the chance a slot recommended
    /// from a non-conspiratorial source is conspiratorial.
    pub base_rate: f64,
    /// Chance a slot recommended from a conspiratorial source is
    /// conspiratorial.
    pub homophily: f64,
    pub seed: u64,
    /// First simulated day. Videos are published in the preceding
    /// `history_days` and the following `future_days`.
    pub start: Day,
    pub history_days: u32,
    pub future_days: u32,
    pub max_comments: usize,
    pub transcript_probability: f64,
    pub comments_disabled_probability: f64,
    /// Chance a content token is drawn from the class vocabulary rather than
    /// the filler list.
    pub signal: f64,
    pub title_words: usize,
    pub description_words: usize,
    pub transcript_words: usize,
    pub comment_words: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            channels: 100,
            videos_per_channel: 10,
            base_rate: 0.2,
            homophily: 0.2,
            seed: 0,
            start: Day::from_ymd(2019, 1, 1).expect("valid date"),
            history_days: 180,
            future_days: 0,
            max_comments: 20,
            transcript_probability: 0.7,
            comments_disabled_probability: 0.05,
            signal: 0.35,
            title_words: 6,
            description_words: 30,
            transcript_words: 150,
            comment_words: 12,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SourceError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.base_rate)
            || !unit(self.homophily)
            || !unit(self.transcript_probability)
            || !unit(self.comments_disabled_probability)
            || !unit(self.signal)
        {
            return Err(SourceError::InvalidRequest(String::from(
                "simulator probabilities must lie in [0, 1]",
            )));
        }
        if self.channels == 0 || self.videos_per_channel == 0 {
            return Err(SourceError::InvalidRequest(String::from(
                "simulator needs at least one channel and one video per channel",
            )));
        }
        Ok(())
    }
}

/// Rules for drawing watch-next lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRules {
    pub base_rate: f64,
    pub homophily: f64,
    pub seed: u64,
}

/// The platform: channels, videos with comments, ground truth, and the
/// recommendation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPlatform {
    rules: SimRules,
    channels: Vec<ChannelRecord>,
    videos: Vec<VideoRecord>,
    truth: Vec<bool>,
    comments_disabled: BTreeSet<usize>,
    video_index: BTreeMap<String, usize>,
    channel_videos: BTreeMap<String, Vec<usize>>,
    /// Per class (0 = non-conspiratorial, 1 = conspiratorial), video
    /// indices sorted by (published, id).
    pools: [Vec<usize>; 2],
}

impl SimulatedPlatform {
    /// Builds a platform from explicit records. Videos without a publication
    /// day count as published at the dawn of time. `comments_disabled`
    /// lists video ids whose comments cannot be fetched.
    pub fn from_records(
        rules: SimRules,
        channels: Vec<ChannelRecord>,
        videos: Vec<VideoRecord>,
        truth: &BTreeMap<String, bool>,
        comments_disabled: &BTreeSet<String>,
    ) -> Self {
        let video_index: BTreeMap<String, usize> = videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.video_id.clone(), i))
            .collect();
        let truth_vec: Vec<bool> = videos
            .iter()
            .map(|v| truth.get(&v.video_id).copied().unwrap_or(false))
            .collect();
        let mut channel_videos: BTreeMap<String, Vec<usize>> =
            channels.iter().map(|c| (c.channel_id.clone(), Vec::new())).collect();
        for (i, v) in videos.iter().enumerate() {
            if let Some(list) = channel_videos.get_mut(&v.channel_id) {
                list.push(i);
            }
        }
        let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, &t) in truth_vec.iter().enumerate() {
            pools[usize::from(t)].push(i);
        }
        for pool in &mut pools {
            pool.sort_by(|&a, &b| {
                published_key(&videos[a])
                    .cmp(&published_key(&videos[b]))
                    .then_with(|| videos[a].video_id.cmp(&videos[b].video_id))
            });
        }
        let comments_disabled = comments_disabled
            .iter()
            .filter_map(|id| video_index.get(id).copied())
            .collect();
        Self {
            rules,
            channels,
            videos,
            truth: truth_vec,
            comments_disabled,
            video_index,
            channel_videos,
            pools,
        }
    }

    /// Generates a platform from parameters.
    pub fn generate(params: &SimParams) -> Result<Self, SourceError> {
        params.validate()?;
        let root = CounterHash::new(params.seed);
        let mut channels = Vec::with_capacity(params.channels);
        let mut videos = Vec::with_capacity(params.channels * params.videos_per_channel);
        let mut truth = BTreeMap::new();
        let mut disabled = BTreeSet::new();
        let span = u64::from(params.history_days) + u64::from(params.future_days);
        for c in 0..params.channels {
            let channel_id = format!("UC{c:05}");
            let ch = root.with_str("channel").with(c as u64);
            channels.push(ChannelRecord {
                channel_id: channel_id.clone(),
                title: format!("Channel {c}"),
                subscriber_count: (libm::pow(10.0, 3.0 + 4.0 * ch.with(0).unit())) as u64,
                last_video_id: None,
            });
            let mut last: Option<(Day, String)> = None;
            for j in 0..params.videos_per_channel {
                let index = c * params.videos_per_channel + j;
                let key = root.with_str("video").with(index as u64);
                let conspiratorial = key.with_str("label").unit() < params.base_rate;
                let offset = if span == 0 {
                    0
                } else {
                    key.with_str("published").value() % (span + 1)
                };
                let published = params
                    .start
                    .offset(offset as i32 - params.history_days as i32);
                let mut video = synthesize_video(
                    params,
                    key,
                    format!("vid{index:06}"),
                    channel_id.clone(),
                    conspiratorial,
                );
                video.published = Some(published);
                if key.with_str("disabled").unit() < params.comments_disabled_probability {
                    video.comments.clear();
                    disabled.insert(video.video_id.clone());
                }
                let candidate = (published, video.video_id.clone());
                if last.as_ref().is_none_or(|l| candidate > *l) {
                    last = Some(candidate);
                }
                truth.insert(video.video_id.clone(), conspiratorial);
                videos.push(video);
            }
            channels[c].last_video_id = last.map(|(_, id)| id);
        }
        let rules = SimRules {
            base_rate: params.base_rate,
            homophily: params.homophily,
            seed: params.seed,
        };
        Ok(Self::from_records(rules, channels, videos, &truth, &disabled))
    }

    pub fn rules(&self) -> SimRules {
        self.rules
    }

    pub fn channels(&self) -> &[ChannelRecord] {
        &self.channels
    }

    pub fn videos(&self) -> &[VideoRecord] {
        &self.videos
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoRecord> {
        self.video_index.get(video_id).map(|&i| &self.videos[i])
    }

    pub fn is_conspiratorial(&self, video_id: &str) -> Option<bool> {
        self.video_index.get(video_id).map(|&i| self.truth[i])
    }

    pub fn ground_truth(&self) -> BTreeMap<String, bool> {
        self.videos
            .iter()
            .zip(&self.truth)
            .map(|(v, &t)| (v.video_id.clone(), t))
            .collect()
    }

    pub fn comments_disabled(&self, video_id: &str) -> bool {
        self.video_index
            .get(video_id)
            .is_some_and(|i| self.comments_disabled.contains(i))
    }

    /// The platform as seen on `day`: only videos published by then exist,
    /// and the day salts every recommendation draw.
    pub fn on(&self, day: Day) -> PlatformDay<'_> {
        PlatformDay {
            platform: self,
            day,
        }
    }

    fn live_pool(&self, class: usize, day: Day) -> &[usize] {
        let pool = &self.pools[class];
        let end = pool.partition_point(|&i| published_key(&self.videos[i]) <= Some(day));
        &pool[..end]
    }
}

fn published_key(v: &VideoRecord) -> Option<Day> {
    v.published
}

/// A single day's view of a [`SimulatedPlatform`].
#[derive(Debug, Clone, Copy)]
pub struct PlatformDay<'a> {
    platform: &'a SimulatedPlatform,
    day: Day,
}

impl<'a> PlatformDay<'a> {
    pub fn day(&self) -> Day {
        self.day
    }

    pub fn platform(&self) -> &'a SimulatedPlatform {
        self.platform
    }

    fn visible(&self, index: usize) -> bool {
        published_key(&self.platform.videos[index]) <= Some(self.day)
    }

    fn lookup(&self, video_id: &str) -> Result<usize, SourceError> {
        match self.platform.video_index.get(video_id) {
            Some(&i) if self.visible(i) => Ok(i),
            _ => Err(SourceError::VideoNotFound(String::from(video_id))),
        }
    }

    fn metadata(&self, index: usize) -> VideoRecord {
        let mut v = self.platform.videos[index].clone();
        v.comments.clear();
        v
    }
}

impl RecommendationSource for PlatformDay<'_> {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_comments: true,
            supports_transcripts: true,
        }
    }

    fn fetch_last_video(&self, channel_id: &str) -> Result<VideoRecord, SourceError> {
        let list = self
            .platform
            .channel_videos
            .get(channel_id)
            .ok_or_else(|| SourceError::ChannelNotFound(String::from(channel_id)))?;
        let videos = &self.platform.videos;
        list.iter()
            .copied()
            .filter(|&i| self.visible(i))
            .max_by(|&a, &b| {
                published_key(&videos[a])
                    .cmp(&published_key(&videos[b]))
                    .then_with(|| videos[a].video_id.cmp(&videos[b].video_id))
            })
            .map(|i| self.metadata(i))
            .ok_or_else(|| SourceError::ChannelStalled(String::from(channel_id)))
    }

    fn fetch_video(&self, video_id: &str) -> Result<VideoRecord, SourceError> {
        self.lookup(video_id).map(|i| self.metadata(i))
    }

    /// Each rank slot draws the conspiratorial class with probability
    /// `homophily` (conspiratorial source) or `base_rate` (otherwise), then a
    /// uniform video of that class not yet listed. When a class runs out the
    /// slot falls back to the other one; when both do, the list ends early.
    fn fetch_watch_next(&self, video_id: &str, k: usize) -> Result<Vec<String>, SourceError> {
        if k == 0 {
            return Err(SourceError::InvalidRequest(String::from("k must be at least 1")));
        }
        let source = self.lookup(video_id)?;
        let p = self.platform;
        let pools = [p.live_pool(0, self.day), p.live_pool(1, self.day)];
        let mut taken: BTreeSet<usize> = BTreeSet::new();
        taken.insert(source);
        let mut used = [0usize; 2];
        used[usize::from(p.truth[source])] += 1;
        let key = CounterHash::new(p.rules.seed)
            .with_str("watch-next")
            .with(self.day.days_since_epoch() as i64 as u64)
            .with_str(video_id);
        let prob = if p.truth[source] {
            p.rules.homophily
        } else {
            p.rules.base_rate
        };
        let mut out = Vec::with_capacity(k);
        for rank in 1..=k as u64 {
            let slot = key.with(rank);
            let mut class = usize::from(slot.with_str("class").unit() < prob);
            if used[class] >= pools[class].len() {
                class = 1 - class;
                if used[class] >= pools[class].len() {
                    break;
                }
            }
            let pool = pools[class];
            let mut pick = None;
            for attempt in 0..32u64 {
                let i = pool[slot.with_str("pick").with(attempt).index(pool.len())];
                if !taken.contains(&i) {
                    pick = Some(i);
                    break;
                }
            }
            let pick = pick.unwrap_or_else(|| {
                let start = slot.with_str("scan").index(pool.len());
                (0..pool.len())
                    .map(|o| pool[(start + o) % pool.len()])
                    .find(|i| !taken.contains(i))
                    .expect("pool has a free video")
            });
            taken.insert(pick);
            used[class] += 1;
            out.push(p.videos[pick].video_id.clone());
        }
        Ok(out)
    }

    fn fetch_comments(&self, video_id: &str, n: usize) -> Result<Vec<Comment>, SourceError> {
        if n == 0 {
            return Err(SourceError::InvalidRequest(String::from("n must be at least 1")));
        }
        let i = self.lookup(video_id)?;
        if self.platform.comments_disabled.contains(&i) {
            return Err(SourceError::CommentsDisabled(String::from(video_id)));
        }
        Ok(self.platform.videos[i].comments.iter().take(n).cloned().collect())
    }
}

fn words(params: &SimParams, key: CounterHash, conspiratorial: bool, n: usize) -> Vec<&'static str> {
    let class = if conspiratorial {
        CONSPIRATORIAL_WORDS
    } else {
        NEUTRAL_WORDS
    };
    (0..n as u64)
        .map(|i| {
            let t = key.with(i);
            if t.with(0).unit() < params.signal {
                class[t.with(1).index(class.len())]
            } else {
                FILLER_WORDS[t.with(1).index(FILLER_WORDS.len())]
            }
        })
        .collect()
}

fn sentence(params: &SimParams, key: CounterHash, conspiratorial: bool, n: usize) -> String {
    words(params, key, conspiratorial, n).join(" ")
}

/// One synthetic video whose text carries its class signal.
pub fn synthesize_video(
    params: &SimParams,
    key: CounterHash,
    video_id: String,
    channel_id: String,
    conspiratorial: bool,
) -> VideoRecord {
    let mut v = VideoRecord::new(video_id, channel_id);
    v.title = sentence(params, key.with_str("title"), conspiratorial, params.title_words);
    v.description = sentence(
        params,
        key.with_str("description"),
        conspiratorial,
        params.description_words,
    );
    v.tags = words(params, key.with_str("tags"), conspiratorial, 4)
        .into_iter()
        .map(String::from)
        .collect();
    if key.with_str("transcript").unit() < params.transcript_probability {
        v.transcript = Some(sentence(
            params,
            key.with_str("transcript-text"),
            conspiratorial,
            params.transcript_words,
        ));
    }
    v.view_count = libm::pow(10.0, 2.0 + 4.0 * key.with_str("views").unit()) as u64;
    let count = if params.max_comments == 0 {
        0
    } else {
        1 + key.with_str("comment-count").index(params.max_comments)
    };
    v.comments = (0..count as u64)
        .map(|c| {
            Comment::new(sentence(
                params,
                key.with_str("comment").with(c),
                conspiratorial,
                params.comment_words,
            ))
        })
        .collect();
    v
}

/// A balanced labeled set drawn from the same text model as the platform.
/// Example `i` is conspiratorial when `i` is even. Different `salt` values
/// give disjoint sets.
pub fn labeled_set(params: &SimParams, count: usize, salt: u64) -> Vec<LabeledExample> {
    let root = CounterHash::new(params.seed).with_str("labeled").with(salt);
    (0..count)
        .map(|i| {
            let key = root.with(i as u64);
            let positive = i % 2 == 0;
            let mut video = synthesize_video(
                params,
                key,
                format!("lab{salt}-{i:05}"),
                format!("UCL{:04}", i % 50),
                positive,
            );
            if key.with_str("disabled").unit() < params.comments_disabled_probability {
                video.comments.clear();
            }
            LabeledExample {
                video,
                label: Label::from_positive(positive),
                provenance: String::from("simulator"),
            }
        })
        .collect()
}

/// Random graph with `blocks` planted communities of `size` nodes each.
/// Returns the undirected edge list (a < b) and the block of each node.
pub fn planted_partition(
    blocks: usize,
    size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (Vec<(usize, usize)>, Vec<usize>) {
    let n = blocks * size;
    let block: Vec<usize> = (0..n).map(|i| i / size.max(1)).collect();
    let key = CounterHash::new(seed).with_str("planted");
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if block[a] == block[b] { p_in } else { p_out };
            if key.with(a as u64).with(b as u64).unit() < p {
                edges.push((a, b));
            }
        }
    }
    (edges, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small(seed: u64) -> SimParams {
        SimParams {
            channels: 20,
            videos_per_channel: 5,
            seed,
            ..SimParams::default()
        }
    }

    fn day0() -> Day {
        SimParams::default().start
    }

    fn fixture(n: usize) -> SimulatedPlatform {
        let channels = vec![ChannelRecord {
            channel_id: String::from("c"),
            title: String::new(),
            subscriber_count: 0,
            last_video_id: None,
        }];
        let videos: Vec<VideoRecord> = (0..n)
            .map(|i| {
                let mut v = VideoRecord::new(format!("v{i}"), "c");
                v.published = Some(day0().offset(-(i as i32)));
                v.comments = (0..3).map(|c| Comment::new(format!("c{c}"))).collect();
                v
            })
            .collect();
        let truth = videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.video_id.clone(), i % 2 == 0))
            .collect();
        let disabled = [String::from("v1")].into_iter().collect();
        let rules = SimRules {
            base_rate: 0.5,
            homophily: 0.5,
            seed: 3,
        };
        SimulatedPlatform::from_records(rules, channels, videos, &truth, &disabled)
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SimulatedPlatform::generate(&small(5)).unwrap();
        let b = SimulatedPlatform::generate(&small(5)).unwrap();
        assert_eq!(a, b);
        let c = SimulatedPlatform::generate(&small(6)).unwrap();
        assert_ne!(a.videos(), c.videos());
    }

    #[test]
    fn supply_limited_watch_next() {
        let p = fixture(6);
        let list = p.on(day0()).fetch_watch_next("v0", 20).unwrap();
        assert_eq!(list.len(), 5);
        let set: BTreeSet<_> = list.iter().collect();
        assert_eq!(set.len(), 5);
        assert!(!list.contains(&String::from("v0")));
    }

    #[test]
    fn watch_next_repeats_exactly() {
        let p = SimulatedPlatform::generate(&small(1)).unwrap();
        let day = p.on(day0());
        let v = &p.videos()[7].video_id;
        assert_eq!(day.fetch_watch_next(v, 20).unwrap(), day.fetch_watch_next(v, 20).unwrap());
    }

    #[test]
    fn full_homophily_stays_in_class() {
        let params = SimParams {
            homophily: 1.0,
            ..small(2)
        };
        let p = SimulatedPlatform::generate(&params).unwrap();
        let day = p.on(day0());
        let mut checked = 0;
        for v in p.videos().iter().filter(|v| p.is_conspiratorial(&v.video_id) == Some(true)) {
            for r in day.fetch_watch_next(&v.video_id, 5).unwrap() {
                assert_eq!(p.is_conspiratorial(&r), Some(true));
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn last_video_is_the_newest() {
        let p = fixture(3);
        assert_eq!(p.on(day0()).fetch_last_video("c").unwrap().video_id, "v0");
        // v0 is published on day0, so the day before it does not exist yet.
        assert_eq!(p.on(day0().offset(-1)).fetch_last_video("c").unwrap().video_id, "v1");
        assert!(matches!(
            p.on(day0().offset(-10)).fetch_last_video("c"),
            Err(SourceError::ChannelStalled(_))
        ));
        assert!(matches!(
            p.on(day0()).fetch_last_video("gone"),
            Err(SourceError::ChannelNotFound(_))
        ));
    }

    #[test]
    fn comments_in_stored_order() {
        let p = fixture(3);
        let day = p.on(day0());
        let all = day.fetch_comments("v0", 200).unwrap();
        assert_eq!(all.iter().map(|c| c.text.as_str()).collect::<Vec<_>>(), ["c0", "c1", "c2"]);
        assert_eq!(day.fetch_comments("v0", 1).unwrap()[0].text, "c0");
        assert!(matches!(day.fetch_comments("v1", 5), Err(SourceError::CommentsDisabled(_))));
        assert!(day.fetch_video("v0").unwrap().comments.is_empty());
    }

    #[test]
    fn marginal_matches_base_rate() {
        let params = SimParams {
            channels: 100,
            videos_per_channel: 10,
            base_rate: 0.3,
            homophily: 0.3,
            seed: 9,
            ..SimParams::default()
        };
        let p = SimulatedPlatform::generate(&params).unwrap();
        let day = p.on(day0());
        let mut total = 0usize;
        let mut positive = 0usize;
        for v in p.videos().iter().take(500) {
            for r in day.fetch_watch_next(&v.video_id, 20).unwrap() {
                total += 1;
                positive += usize::from(p.is_conspiratorial(&r).unwrap());
            }
        }
        assert!(total >= 10_000);
        let share = positive as f64 / total as f64;
        assert!((share - 0.3).abs() < 0.02, "{share}");
    }

    #[test]
    fn planted_partition_shape() {
        let (edges, block) = planted_partition(2, 20, 0.9, 0.05, 1);
        assert_eq!(block.len(), 40);
        assert!(edges.iter().all(|&(a, b)| a < b));
        let within = edges.iter().filter(|&&(a, b)| block[a] == block[b]).count();
        assert!(within > 300 && edges.len() - within < 60);
    }

    #[test]
    fn labeled_set_is_balanced() {
        let set = labeled_set(&SimParams::default(), 11, 0);
        assert_eq!(set.iter().filter(|e| e.label.is_positive()).count(), 6);
        assert_ne!(set[0].video.video_id, labeled_set(&SimParams::default(), 1, 1)[0].video.video_id);
    }
}

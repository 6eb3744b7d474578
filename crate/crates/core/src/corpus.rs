//! Crawled platform records and the invariants every other module relies on.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::day::Day;

/// Comments kept per video after harvesting.
pub const MAX_COMMENTS: usize = 200;
/// Watch-next slots recorded per source video.
pub const MAX_RANK: u32 = 20;
/// Videos retained per daily snapshot.
pub const MAX_RETAINED: usize = 1000;

/// Number of comment attributes scored per comment.
pub const ATTRIBUTE_COUNT: usize = 7;
/// Fixed attribute order for every 7-vector in the crate.
pub const ATTRIBUTE_NAMES: [&str; ATTRIBUTE_COUNT] = [
    "toxicity",
    "spam",
    "unsubstantial",
    "threat",
    "incoherent",
    "profanity",
    "inflammatory",
];

pub type AttributeVector = [f64; ATTRIBUTE_COUNT];

/// NFC-normalizes text. Applied to every record at ingestion.
pub fn normalize_text(text: &str) -> String {
    text.nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel_id: String,
    pub title: String,
    pub subscriber_count: u64,
    #[serde(default)]
    pub last_video_id: Option<String>,
}

impl ChannelRecord {
    pub fn normalized(mut self) -> Self {
        self.title = normalize_text(&self.title);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub text: String,
    /// Scores in [`ATTRIBUTE_NAMES`] order, each in `[0, 1]`.
    #[serde(default)]
    pub attribute_scores: Option<AttributeVector>,
}

impl Comment {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            attribute_scores: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub channel_id: String,
    pub title: String,
    pub description: String,
    pub tags: Vec<String>,
    /// `None` means no transcript exists; `Some("")` is a real empty one.
    #[serde(default)]
    pub transcript: Option<String>,
    pub view_count: u64,
    #[serde(default)]
    pub published: Option<Day>,
    /// Top comments in platform relevance order, replies excluded.
    #[serde(default)]
    pub comments: Vec<Comment>,
}

impl VideoRecord {
    /// Bare record with empty text fields.
    pub fn new(video_id: impl Into<String>, channel_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            channel_id: channel_id.into(),
            title: String::new(),
            description: String::new(),
            tags: Vec::new(),
            transcript: None,
            view_count: 0,
            published: None,
            comments: Vec::new(),
        }
    }

    /// Title, description and tags joined into one document.
    pub fn snippet(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.description.len() + 16);
        s.push_str(&self.title);
        s.push('\n');
        s.push_str(&self.description);
        for tag in &self.tags {
            s.push('\n');
            s.push_str(tag);
        }
        s
    }

    pub fn normalized(mut self) -> Self {
        self.title = normalize_text(&self.title);
        self.description = normalize_text(&self.description);
        for tag in &mut self.tags {
            *tag = normalize_text(tag);
        }
        if let Some(t) = &self.transcript {
            self.transcript = Some(normalize_text(t));
        }
        for c in &mut self.comments {
            c.text = normalize_text(&c.text);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecommendationEdge {
    pub date: Day,
    pub source_video_id: String,
    pub recommended_video_id: String,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySnapshot {
    pub date: Day,
    pub edges: Vec<RecommendationEdge>,
    pub retained_video_ids: BTreeSet<String>,
    /// Fraction of seed channels whose recommendations were collected.
    #[serde(default = "full_coverage")]
    pub coverage: f64,
    #[serde(default)]
    pub failed_channels: Vec<String>,
}

fn full_coverage() -> f64 {
    1.0
}

impl DailySnapshot {
    /// Snapshot retaining the `retain` most recommended videos.
    pub fn from_edges(date: Day, edges: Vec<RecommendationEdge>, retain: usize) -> Self {
        let retained_video_ids = top_recommended(&edges, retain).into_iter().collect();
        Self {
            date,
            edges,
            retained_video_ids,
            coverage: 1.0,
            failed_channels: Vec::new(),
        }
    }

    /// Edges whose recommended video made the retained set.
    pub fn retained_edges(&self) -> impl Iterator<Item = &RecommendationEdge> {
        self.edges
            .iter()
            .filter(|e| self.retained_video_ids.contains(&e.recommended_video_id))
    }
}

/// In-edge count per recommended video.
pub fn in_edge_counts<'a, I>(edges: I) -> BTreeMap<&'a str, usize>
where
    I: IntoIterator<Item = &'a RecommendationEdge>,
{
    let mut counts = BTreeMap::new();
    for e in edges {
        *counts.entry(e.recommended_video_id.as_str()).or_insert(0) += 1;
    }
    counts
}

/// The `retain` most recommended videos: in-edge count descending, then
/// lexicographic key.
pub fn top_recommended(edges: &[RecommendationEdge], retain: usize) -> Vec<String> {
    let mut ranked: Vec<(&str, usize)> = in_edge_counts(edges).into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(retain)
        .map(|(k, _)| String::from(k))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Conspiratorial,
    NonConspiratorial,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Conspiratorial
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Conspiratorial
        } else {
            Label::NonConspiratorial
        }
    }
}

/// A hand-labeled training video. The label should follow the four criteria
/// of the annotation guide (secret plots by powerful forces, against
/// scientific consensus, privileged-access evidence, unfalsifiable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub video: VideoRecord,
    pub label: Label,
    /// Where the label came from (reviewer, source list, simulator).
    #[serde(default)]
    pub provenance: String,
}

/// Everything `validate_corpus` looks at.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub channels: Vec<ChannelRecord>,
    pub videos: Vec<VideoRecord>,
    pub edges: Vec<RecommendationEdge>,
    pub snapshots: Vec<DailySnapshot>,
    pub labeled: Vec<LabeledExample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyChannelId,
    DuplicateChannelId,
    EmptyVideoId,
    DuplicateVideoId,
    TooManyComments,
    AttributeScoreOutOfRange,
    RankOutOfRange,
    SelfRecommendation,
    DuplicateRank,
    EdgeDateMismatch,
    RetainedWithoutInEdge,
    RetainedOverLimit,
    RetainedNotTop,
    CoverageOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The offending record, rendered as a short key.
    pub subject: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.subject)
    }
}

fn edge_key(e: &RecommendationEdge) -> String {
    format!(
        "{} {} -> {} #{}",
        e.date, e.source_video_id, e.recommended_video_id, e.rank
    )
}

/// Checks every corpus invariant. The report is sorted, so it does not
/// depend on the order records were supplied in.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, subject: String| out.push(Violation { kind, subject });

    let mut channel_ids = BTreeMap::<&str, usize>::new();
    for c in &corpus.channels {
        if c.channel_id.is_empty() {
            push(ViolationKind::EmptyChannelId, format!("channel {:?}", c.title));
        }
        *channel_ids.entry(&c.channel_id).or_insert(0) += 1;
    }
    for (id, n) in channel_ids {
        if n > 1 && !id.is_empty() {
            push(ViolationKind::DuplicateChannelId, String::from(id));
        }
    }

    let mut video_ids = BTreeMap::<&str, usize>::new();
    let labeled_videos = corpus.labeled.iter().map(|l| &l.video);
    for v in corpus.videos.iter() {
        *video_ids.entry(&v.video_id).or_insert(0) += 1;
    }
    for (id, n) in video_ids {
        if n > 1 {
            push(ViolationKind::DuplicateVideoId, String::from(id));
        }
    }
    for v in corpus.videos.iter().chain(labeled_videos) {
        if v.video_id.is_empty() {
            push(ViolationKind::EmptyVideoId, format!("video {:?}", v.title));
        }
        if v.comments.len() > MAX_COMMENTS {
            push(
                ViolationKind::TooManyComments,
                format!("{} has {} comments", v.video_id, v.comments.len()),
            );
        }
        for (i, c) in v.comments.iter().enumerate() {
            if let Some(scores) = &c.attribute_scores {
                if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
                    push(
                        ViolationKind::AttributeScoreOutOfRange,
                        format!("{} comment {}", v.video_id, i),
                    );
                }
            }
        }
    }

    check_edges(&corpus.edges, &mut out);
    for snap in &corpus.snapshots {
        check_edges(&snap.edges, &mut out);
        check_snapshot(snap, &mut out);
    }

    out.sort();
    out
}

fn check_edges(edges: &[RecommendationEdge], out: &mut Vec<Violation>) {
    let mut slots = BTreeMap::<(Day, &str, u32), usize>::new();
    for e in edges {
        if !(1..=MAX_RANK).contains(&e.rank) {
            out.push(Violation {
                kind: ViolationKind::RankOutOfRange,
                subject: edge_key(e),
            });
        }
        if e.source_video_id == e.recommended_video_id {
            out.push(Violation {
                kind: ViolationKind::SelfRecommendation,
                subject: edge_key(e),
            });
        }
        *slots
            .entry((e.date, e.source_video_id.as_str(), e.rank))
            .or_insert(0) += 1;
    }
    for ((date, source, rank), n) in slots {
        if n > 1 {
            out.push(Violation {
                kind: ViolationKind::DuplicateRank,
                subject: format!("{date} {source} #{rank} x{n}"),
            });
        }
    }
}

fn check_snapshot(snap: &DailySnapshot, out: &mut Vec<Violation>) {
    let mut push = |kind, subject: String| out.push(Violation { kind, subject });
    for e in &snap.edges {
        if e.date != snap.date {
            push(
                ViolationKind::EdgeDateMismatch,
                format!("snapshot {}: {}", snap.date, edge_key(e)),
            );
        }
    }
    if !(0.0..=1.0).contains(&snap.coverage) {
        push(
            ViolationKind::CoverageOutOfRange,
            format!("snapshot {} coverage {}", snap.date, snap.coverage),
        );
    }
    if snap.retained_video_ids.len() > MAX_RETAINED {
        push(
            ViolationKind::RetainedOverLimit,
            format!("snapshot {} retains {}", snap.date, snap.retained_video_ids.len()),
        );
    }
    let counts = in_edge_counts(&snap.edges);
    let mut orphaned = false;
    for id in &snap.retained_video_ids {
        if !counts.contains_key(id.as_str()) {
            orphaned = true;
            push(
                ViolationKind::RetainedWithoutInEdge,
                format!("snapshot {}: {}", snap.date, id),
            );
        }
    }
    // The ranking check is only meaningful once every retained id is a real
    // recommendation target.
    if !orphaned {
        let expected: BTreeSet<String> = top_recommended(&snap.edges, snap.retained_video_ids.len())
            .into_iter()
            .collect();
        if expected != snap.retained_video_ids {
            push(
                ViolationKind::RetainedNotTop,
                format!("snapshot {}", snap.date),
            );
        }
    }
}

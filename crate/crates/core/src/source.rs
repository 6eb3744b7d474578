//! Where platform data comes from.
//!
//! [`RecommendationSource`] is implemented by the deterministic
//! [`SimulatedPlatform`](crate::simulator::SimulatedPlatform) here and by
//! the HTTP adapter in the companion crate. [`AttributeScorer`] scores
//! comments on the seven attribute axes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{AttributeVector, Comment, VideoRecord, ATTRIBUTE_COUNT, ATTRIBUTE_NAMES};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error("channel not found: {0}")]
    ChannelNotFound(String),
    #[error("channel has no videos: {0}")]
    ChannelStalled(String),
    #[error("video not found: {0}")]
    VideoNotFound(String),
    #[error("comments disabled for video {0}")]
    CommentsDisabled(String),
    #[error("transient fetch failure: {0}")]
    Transient(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl SourceError {
    /// Worth retrying with backoff.
    pub fn is_retriable(&self) -> bool {
        matches!(self, SourceError::Transient(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub supports_comments: bool,
    pub supports_transcripts: bool,
}

/// A view of the platform's non-personalized watch-next recommendations.
///
/// Implementations take `&self` everywhere and must tolerate concurrent
/// callers.
pub trait RecommendationSource {
    fn capabilities(&self) -> Capabilities;

    /// The channel's most recently published video, snippet populated and
    /// comments left empty.
    fn fetch_last_video(&self, channel_id: &str) -> Result<VideoRecord, SourceError>;

    /// Video metadata (snippet, transcript, counts) without comments.
    fn fetch_video(&self, video_id: &str) -> Result<VideoRecord, SourceError>;

    /// Up to `k` watch-next recommendations in rank order, without
    /// duplicates and never containing `video_id` itself.
    fn fetch_watch_next(&self, video_id: &str, k: usize) -> Result<Vec<String>, SourceError>;

    /// Up to `n` top-level comments in relevance order.
    fn fetch_comments(&self, video_id: &str, n: usize) -> Result<Vec<Comment>, SourceError>;
}

impl<S: RecommendationSource + ?Sized> RecommendationSource for &S {
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn fetch_last_video(&self, channel_id: &str) -> Result<VideoRecord, SourceError> {
        (**self).fetch_last_video(channel_id)
    }
    fn fetch_video(&self, video_id: &str) -> Result<VideoRecord, SourceError> {
        (**self).fetch_video(video_id)
    }
    fn fetch_watch_next(&self, video_id: &str, k: usize) -> Result<Vec<String>, SourceError> {
        (**self).fetch_watch_next(video_id, k)
    }
    fn fetch_comments(&self, video_id: &str, n: usize) -> Result<Vec<Comment>, SourceError> {
        (**self).fetch_comments(video_id, n)
    }
}

/// Rejects a zero `k`/`n`; shared by every implementation.
pub fn check_count(what: &str, n: usize) -> Result<(), SourceError> {
    if n == 0 {
        Err(SourceError::InvalidRequest(alloc::format!("{what} must be >= 1")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScorerError {
    #[error("attribute scorer unavailable: {0}")]
    Unavailable(String),
}

/// Scores a comment on the seven attributes in [`ATTRIBUTE_NAMES`] order.
pub trait AttributeScorer {
    fn score(&self, text: &str) -> Result<AttributeVector, ScorerError>;
}

impl<S: AttributeScorer + ?Sized> AttributeScorer for &S {
    fn score(&self, text: &str) -> Result<AttributeVector, ScorerError> {
        (**self).score(text)
    }
}

/// Scores `comment` and clamps the result into `[0, 1]^7`.
pub fn score_comment_attributes<S: AttributeScorer + ?Sized>(
    scorer: &S,
    comment: &Comment,
) -> Result<AttributeVector, ScorerError> {
    let mut v = scorer.score(&comment.text)?;
    for x in &mut v {
        *x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    }
    Ok(v)
}

/// Offline stand-in for the attribute service: one weighted keyword
/// lexicon per attribute, score = min(1, sum of matched token weights).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconScorer {
    lexicons: [BTreeMap<String, f64>; ATTRIBUTE_COUNT],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("line {line}: expected `token weight`, got {text:?}")]
    BadLine { line: usize, text: String },
}

impl LexiconScorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `token` with `weight` to the named attribute's lexicon. Tokens
    /// are tokenized the same way as comment text and must come out as a
    /// single token.
    pub fn insert(&mut self, attribute: &str, token: &str, weight: f64) -> Result<(), LexiconError> {
        let idx = ATTRIBUTE_NAMES
            .iter()
            .position(|a| *a == attribute)
            .ok_or_else(|| LexiconError::UnknownAttribute(attribute.into()))?;
        for t in tokenize(token) {
            self.lexicons[idx].insert(t, weight);
        }
        Ok(())
    }

    /// Loads one attribute's lexicon from `token weight` lines. Blank lines
    /// and `#` comments are ignored.
    pub fn load_lexicon(&mut self, attribute: &str, text: &str) -> Result<(), LexiconError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bad = || LexiconError::BadLine {
                line: i + 1,
                text: raw.into(),
            };
            let token = parts.next().ok_or_else(bad)?;
            let weight: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if parts.next().is_some() || !weight.is_finite() {
                return Err(bad());
            }
            self.insert(attribute, token, weight)?;
        }
        Ok(())
    }

    pub fn lexicon(&self, attribute_index: usize) -> &BTreeMap<String, f64> {
        &self.lexicons[attribute_index]
    }
}

impl AttributeScorer for LexiconScorer {
    fn score(&self, text: &str) -> Result<AttributeVector, ScorerError> {
        let mut out = [0.0; ATTRIBUTE_COUNT];
        for token in tokenize(text) {
            for (score, lex) in out.iter_mut().zip(&self.lexicons) {
                if let Some(w) = lex.get(&token) {
                    *score += w;
                }
            }
        }
        for s in &mut out {
            *s = s.clamp(0.0, 1.0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scorer() -> LexiconScorer {
        let mut s = LexiconScorer::new();
        s.load_lexicon("profanity", "damn 0.4\n# comment\nheck 0.25\n").unwrap();
        s.load_lexicon("toxicity", "idiot 0.7\nstupid 0.5\n").unwrap();
        s.load_lexicon("spam", "subscribe 0.6\n").unwrap();
        s
    }

    #[test]
    fn empty_text_scores_zero() {
        assert_eq!(scorer().score("").unwrap(), [0.0; 7]);
    }

    #[test]
    fn single_profanity_token_scores_its_weight() {
        let v = score_comment_attributes(&scorer(), &Comment::new("well, damn that")).unwrap();
        assert_eq!(v[5], 0.4);
        for (i, x) in v.iter().enumerate() {
            if i != 5 {
                assert_eq!(*x, 0.0, "{}", ATTRIBUTE_NAMES[i]);
            }
        }
    }

    #[test]
    fn scores_are_capped() {
        let v = scorer().score("idiot stupid idiot").unwrap();
        assert_eq!(v[0], 1.0);
        assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn lexicon_parse_errors() {
        let mut s = LexiconScorer::new();
        assert!(matches!(
            s.load_lexicon("profanity", "damn"),
            Err(LexiconError::BadLine { line: 1, .. })
        ));
        assert!(matches!(
            s.load_lexicon("rudeness", "x 1"),
            Err(LexiconError::UnknownAttribute(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn any_comment_in_range(text in ".{0,60}") {
            let v = score_comment_attributes(&scorer(), &Comment::new(text)).unwrap();
            proptest::prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}

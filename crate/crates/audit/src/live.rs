//! HTTP adapters for a live platform gateway and a live attribute scorer.
//!
//! The gateway is any service answering
//! `GET {base}/channels/{id}/last_video`, `GET {base}/videos/{id}`,
//! `GET {base}/videos/{id}/watch_next?k=K` and
//! `GET {base}/videos/{id}/comments?n=N&order=relevance` with corpus JSON.
//! Requests carry no cookies. Every call has a timeout and typed errors;
//! transient failures are retried with exponential backoff.

use std::sync::Mutex;
use std::thread::sleep;
use std::time::{Duration, Instant};

use recaudit_core::corpus::{normalize_text, AttributeVector, Comment, VideoRecord};
use recaudit_core::source::{AttributeScorer, Capabilities, RecommendationSource, ScorerError, SourceError};
use serde::de::DeserializeOwned;

use crate::config::LiveConfig;
use crate::error::{AppError, Result};

pub const BASE_URL_VAR: &str = "RECAUDIT_LIVE_BASE_URL";
pub const API_KEY_VAR: &str = "RECAUDIT_LIVE_API_KEY";
pub const SCORER_URL_VAR: &str = "RECAUDIT_SCORER_URL";

#[derive(Debug)]
pub struct LiveSource {
    agent: ureq::Agent,
    base: String,
    api_key: Option<String>,
    config: LiveConfig,
    last_call: Mutex<Option<Instant>>,
}

enum Failure {
    NotFound,
    Forbidden(String),
    Transient(String),
    Invalid(String),
}

fn encode(segment: &str) -> String {
    segment
        .bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

impl LiveSource {
    pub fn new(base: impl Into<String>, api_key: Option<String>, config: LiveConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self {
            agent,
            base: base.into().trim_end_matches('/').to_string(),
            api_key,
            config,
            last_call: Mutex::new(None),
        }
    }

    /// Reads the endpoint and key from the environment.
    pub fn from_env(config: LiveConfig) -> Result<Self> {
        let base = std::env::var(BASE_URL_VAR)
            .map_err(|_| AppError::config(format!("{BASE_URL_VAR} is not set")))?;
        Ok(Self::new(base, std::env::var(API_KEY_VAR).ok(), config))
    }

    fn pace(&self) {
        if self.config.rate_limit_ms == 0 {
            return;
        }
        let gap = Duration::from_millis(self.config.rate_limit_ms);
        let mut last = self.last_call.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < gap {
                sleep(gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn once<T: DeserializeOwned>(&self, path: &str) -> std::result::Result<T, Failure> {
        self.pace();
        let mut req = self.agent.get(&format!("{}{}", self.base, path));
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.call() {
            Ok(resp) => resp.into_json().map_err(|e| Failure::Invalid(e.to_string())),
            Err(ureq::Error::Status(404, _)) => Err(Failure::NotFound),
            Err(ureq::Error::Status(403, resp)) => Err(Failure::Forbidden(resp.into_string().unwrap_or_default())),
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                Err(Failure::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) => Err(Failure::Invalid(format!("HTTP {code}"))),
            Err(e) => Err(Failure::Transient(e.to_string())),
        }
    }

    fn get<T: DeserializeOwned>(
        &self,
        path: &str,
        not_found: impl Fn() -> SourceError,
        forbidden: impl Fn(String) -> SourceError,
    ) -> std::result::Result<T, SourceError> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            match self.once(path) {
                Ok(v) => return Ok(v),
                Err(Failure::NotFound) => return Err(not_found()),
                Err(Failure::Forbidden(body)) => return Err(forbidden(body)),
                Err(Failure::Invalid(m)) => return Err(SourceError::InvalidRequest(m)),
                Err(Failure::Transient(m)) => {
                    if attempt >= self.config.retries {
                        return Err(SourceError::Transient(m));
                    }
                    attempt += 1;
                    sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

impl RecommendationSource for LiveSource {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_comments: true,
            supports_transcripts: true,
        }
    }

    fn fetch_last_video(&self, channel_id: &str) -> std::result::Result<VideoRecord, SourceError> {
        let path = format!("/channels/{}/last_video", encode(channel_id));
        let v: Option<VideoRecord> = self.get(
            &path,
            || SourceError::ChannelNotFound(channel_id.to_string()),
            SourceError::InvalidRequest,
        )?;
        v.map(VideoRecord::normalized)
            .ok_or_else(|| SourceError::ChannelStalled(channel_id.to_string()))
    }

    fn fetch_video(&self, video_id: &str) -> std::result::Result<VideoRecord, SourceError> {
        let path = format!("/videos/{}", encode(video_id));
        let v: VideoRecord = self.get(
            &path,
            || SourceError::VideoNotFound(video_id.to_string()),
            SourceError::InvalidRequest,
        )?;
        Ok(v.normalized())
    }

    fn fetch_watch_next(&self, video_id: &str, k: usize) -> std::result::Result<Vec<String>, SourceError> {
        if k == 0 {
            return Err(SourceError::InvalidRequest(String::from("k must be at least 1")));
        }
        let path = format!("/videos/{}/watch_next?k={k}", encode(video_id));
        let list: Vec<String> = self.get(
            &path,
            || SourceError::VideoNotFound(video_id.to_string()),
            SourceError::InvalidRequest,
        )?;
        let mut seen = std::collections::BTreeSet::new();
        Ok(list
            .into_iter()
            .filter(|r| r != video_id && seen.insert(r.clone()))
            .take(k)
            .collect())
    }

    fn fetch_comments(&self, video_id: &str, n: usize) -> std::result::Result<Vec<Comment>, SourceError> {
        if n == 0 {
            return Err(SourceError::InvalidRequest(String::from("n must be at least 1")));
        }
        let path = format!("/videos/{}/comments?n={n}&order=relevance", encode(video_id));
        let comments: Vec<Comment> = self.get(
            &path,
            || SourceError::VideoNotFound(video_id.to_string()),
            |_| SourceError::CommentsDisabled(video_id.to_string()),
        )?;
        Ok(comments
            .into_iter()
            .take(n)
            .map(|mut c| {
                c.text = normalize_text(&c.text);
                c
            })
            .collect())
    }
}

/// Live comment-attribute scorer: `POST {url}` with `{"text": ...}`,
/// answered by `{"scores": [7 numbers]}` in attribute order.
#[derive(Debug)]
pub struct LiveAttributeScorer {
    agent: ureq::Agent,
    url: String,
}

#[derive(serde::Deserialize)]
struct ScoreReply {
    scores: AttributeVector,
}

impl LiveAttributeScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            url: url.into(),
        }
    }

    pub fn from_env(config: &LiveConfig) -> Option<Self> {
        std::env::var(SCORER_URL_VAR)
            .ok()
            .map(|u| Self::new(u, Duration::from_secs(config.timeout_secs)))
    }
}

impl AttributeScorer for LiveAttributeScorer {
    fn score(&self, text: &str) -> std::result::Result<AttributeVector, ScorerError> {
        let reply: ScoreReply = self
            .agent
            .post(&self.url)
            .send_json(serde_json::json!({ "text": text }))
            .map_err(|e| ScorerError::Unavailable(e.to_string()))?
            .into_json()
            .map_err(|e| ScorerError::Unavailable(e.to_string()))?;
        Ok(reply.scores)
    }
}

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tfidf::{term_counts, tfidf};
use super::{nmf, NmfConfig, NmfResult, TopicError};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: usize,
    pub words: Vec<String>,
    /// Share of conspiratorial recommendations landing on this topic's
    /// videos, in percent.
    pub pct_rec: f64,
    /// Share of conspiratorial videos assigned to this topic, in percent.
    pub pct_vid: f64,
    pub videos: usize,
    pub recommendations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    /// Sorted by `pct_rec` descending, then topic id.
    pub topics: Vec<TopicSummary>,
    /// Topic id per input row.
    pub assignments: Vec<usize>,
}

impl TopicReport {
    /// The `n` topics with the most recommendations.
    pub fn top(&self, n: usize) -> &[TopicSummary] {
        &self.topics[..n.min(self.topics.len())]
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Assigns each row of `w` (one conspiratorial video each) to its largest
/// topic and tallies video and recommendation shares. `rec_counts[i]` is
/// the number of recommendation edges pointing at row `i`'s video.
pub fn topic_report(
    w: &Matrix,
    h: &Matrix,
    terms: &[String],
    rec_counts: &[u64],
    top_words: usize,
) -> TopicReport {
    let k = h.rows();
    let assignments: Vec<usize> = (0..w.rows()).map(|i| argmax(w.row(i))).collect();
    let mut videos = alloc::vec![0usize; k];
    let mut recs = alloc::vec![0u64; k];
    for (row, &t) in assignments.iter().enumerate() {
        videos[t] += 1;
        recs[t] += rec_counts.get(row).copied().unwrap_or(0);
    }
    let total_videos = assignments.len();
    let total_recs: u64 = recs.iter().sum();
    let pct = |part: f64, whole: f64| if whole > 0.0 { 100.0 * part / whole } else { 0.0 };

    let mut topics: Vec<TopicSummary> = (0..k)
        .map(|t| {
            let mut order: Vec<usize> = (0..h.cols()).collect();
            let row = h.row(t);
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(terms[a].cmp(&terms[b])));
            TopicSummary {
                topic: t,
                words: order.into_iter().take(top_words).map(|j| terms[j].clone()).collect(),
                pct_rec: pct(recs[t] as f64, total_recs as f64),
                pct_vid: pct(videos[t] as f64, total_videos as f64),
                videos: videos[t],
                recommendations: recs[t],
            }
        })
        .collect();
    topics.sort_by(|a, b| b.pct_rec.total_cmp(&a.pct_rec).then(a.topic.cmp(&b.topic)));
    TopicReport {
        topics,
        assignments,
    }
}

/// Matrix fed to NMF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermWeighting {
    Tfidf,
    Counts,
}

/// A fitted topic model over conspiratorial videos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub video_ids: Vec<String>,
    pub terms: Vec<String>,
    pub factors: NmfResult,
    pub report: TopicReport,
}

/// Builds the term-document matrix for `docs` (video id, tokens), runs NMF
/// and produces the report. `k` is clamped to the matrix rank bound.
pub fn fit_topics(
    docs: &[(String, Vec<String>)],
    rec_counts: &BTreeMap<String, u64>,
    k: usize,
    weighting: TermWeighting,
    config: &NmfConfig,
    top_words: usize,
) -> Result<TopicModel, TopicError> {
    let tokens: Vec<Vec<String>> = docs.iter().map(|(_, t)| t.clone()).collect();
    let matrix = match weighting {
        TermWeighting::Tfidf => tfidf(&tokens)?,
        TermWeighting::Counts => term_counts(&tokens)?,
    };
    let v = matrix.to_dense();
    let k = k.min(v.rows().min(v.cols()));
    let factors = nmf(&v, k, config)?;
    let counts: Vec<u64> = docs
        .iter()
        .map(|(id, _)| rec_counts.get(id).copied().unwrap_or(0))
        .collect();
    let report = topic_report(&factors.w, &factors.h, &matrix.terms, &counts, top_words);
    Ok(TopicModel {
        video_ids: docs.iter().map(|(id, _)| id.clone()).collect(),
        terms: matrix.terms,
        factors,
        report,
    })
}

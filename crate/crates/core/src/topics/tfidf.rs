use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::corpus::VideoRecord;
use crate::linalg::Matrix;
use crate::text::tokenize;

/// Which text of a video becomes its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    Comments,
    Snippet,
    Transcript,
}

/// Tokenized document for `video`'s `field`. All comments are pooled into
/// one document; a missing transcript yields an empty one.
pub fn documents_for(video: &VideoRecord, field: TextField) -> Vec<String> {
    match field {
        TextField::Comments => video.comments.iter().flat_map(|c| tokenize(&c.text)).collect(),
        TextField::Snippet => tokenize(&video.snippet()),
        TextField::Transcript => video.transcript.as_deref().map(tokenize).unwrap_or_default(),
    }
}

/// Sparse document-term weights. Rows list `(term index, weight)` sorted by
/// term index; terms are sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfMatrix {
    pub terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl TfidfMatrix {
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.terms.len());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m.set(i, j, w);
            }
        }
        m
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }
}

fn build<F>(corpus: &[Vec<String>], weight: F) -> Result<TfidfMatrix, TopicError>
where
    F: Fn(usize, usize, usize, usize) -> f64,
{
    if corpus.iter().all(Vec::is_empty) {
        return Err(TopicError::EmptyCorpus);
    }
    let mut df = BTreeMap::<&str, usize>::new();
    let mut counts: Vec<BTreeMap<&str, usize>> = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let mut c = BTreeMap::new();
        for t in doc {
            *c.entry(t.as_str()).or_insert(0) += 1;
        }
        for t in c.keys() {
            *df.entry(*t).or_insert(0) += 1;
        }
        counts.push(c);
    }
    let terms: Vec<String> = df.keys().map(|t| String::from(*t)).collect();
    let index: BTreeMap<&str, usize> = df.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let n = corpus.len();
    let rows = counts
        .iter()
        .zip(corpus)
        .map(|(c, doc)| {
            c.iter()
                .map(|(t, &count)| (index[t], weight(count, doc.len(), df[t], n)))
                .collect()
        })
        .collect();
    Ok(TfidfMatrix {
        terms,
        document_frequency: df.into_values().collect(),
        rows,
    })
}

/// `tf = count / document length`, `idf = ln(N / df)`, weight `tf * idf`.
pub fn tfidf(corpus: &[Vec<String>]) -> Result<TfidfMatrix, TopicError> {
    build(corpus, |count, len, df, n| {
        (count as f64 / len as f64) * libm::log(n as f64 / df as f64)
    })
}

/// Raw term counts in the same layout as [`tfidf`].
pub(crate) fn term_counts(corpus: &[Vec<String>]) -> Result<TfidfMatrix, TopicError> {
    build(corpus, |count, _, _, _| count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatingWords {
    /// Terms most typical of the positive class, best first.
    pub positive: Vec<(String, f64)>,
    pub negative: Vec<(String, f64)>,
}

/// Ranks terms by mean tf-idf in one class minus mean tf-idf in the other,
/// over the pooled corpus. Terms in fewer than `min_df` documents are
/// skipped. Ties break lexicographically.
pub fn discriminating_words(
    positive: &[Vec<String>],
    negative: &[Vec<String>],
    top_k: usize,
    min_df: usize,
) -> Result<DiscriminatingWords, TopicError> {
    if positive.is_empty() || negative.is_empty() {
        return Err(TopicError::EmptyClass);
    }
    let pooled: Vec<Vec<String>> = positive.iter().chain(negative).cloned().collect();
    let m = tfidf(&pooled)?;
    let mut pos_sum = alloc::vec![0.0; m.terms.len()];
    let mut neg_sum = alloc::vec![0.0; m.terms.len()];
    for (i, row) in m.rows.iter().enumerate() {
        let target = if i < positive.len() { &mut pos_sum } else { &mut neg_sum };
        for &(j, w) in row {
            target[j] += w;
        }
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    let scored: Vec<(&String, f64)> = m
        .terms
        .iter()
        .enumerate()
        .filter(|(j, _)| m.document_frequency[*j] >= min_df)
        .map(|(j, t)| (t, pos_sum[j] / np - neg_sum[j] / nn))
        .collect();

    let mut pos: Vec<(&String, f64)> = scored.clone();
    pos.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let mut neg: Vec<(&String, f64)> = scored.into_iter().map(|(t, s)| (t, -s)).collect();
    neg.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let take = |v: Vec<(&String, f64)>| v.into_iter().take(top_k).map(|(t, s)| (t.clone(), s)).collect();
    Ok(DiscriminatingWords {
        positive: take(pos),
        negative: take(neg),
    })
}

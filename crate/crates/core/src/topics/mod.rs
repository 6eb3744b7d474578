//! Discriminating-word ranking and NMF topic modeling.

mod nmf;
mod report;
mod tfidf;

pub use nmf::{nmf, NmfConfig, NmfResult};
pub use report::{fit_topics, topic_report, TermWeighting, TopicModel, TopicReport, TopicSummary};
pub use tfidf::{
    discriminating_words, documents_for, tfidf, DiscriminatingWords, TextField, TfidfMatrix,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopicError {
    #[error("corpus has no non-empty document")]
    EmptyCorpus,
    #[error("both corpora must be non-empty")]
    EmptyClass,
    #[error("rank {k} outside 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("matrix has a negative or non-finite entry")]
    InvalidEntry,
}

//! Algorithmic core of the watch-next recommendation audit.
//!
//! Everything in this crate is allocation-only and free of IO: the platform
//! is reached through the [`source::RecommendationSource`] trait, and all
//! persistence lives in the `recaudit` companion crate.
//!
//! The pipeline, bottom-up:
//!
//! - [`corpus`]: channel, video, comment, edge and snapshot records.
//! - [`source`] and [`simulator`]: where platform data comes from.
//! - [`crawl`]: snowball seed discovery, Louvain clustering, daily harvest.
//! - [`text`], [`logistic`], [`ensemble`]: the stacked conspiracy classifier.
//! - [`metrics`]: trend frequencies, calibration, filter-bubble matrix.
//! - [`topics`]: TF-IDF discriminating words and NMF topic reports.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod corpus;
pub mod crawl;
pub mod day;
pub mod ensemble;
pub mod hash;
pub mod linalg;
pub mod logistic;
pub mod metrics;
pub mod simulator;
pub mod source;
pub mod stats;
pub mod text;
pub mod topics;

pub use corpus::{
    ChannelRecord, Comment, Corpus, DailySnapshot, Label, LabeledExample, RecommendationEdge,
    VideoRecord, Violation,
};
pub use day::Day;

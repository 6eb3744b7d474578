//! Measurement math: recommendation frequencies and their rolling means,
//! calibration against human labels with exact binomial intervals, and the
//! filter-bubble matrix.

mod beta;
mod bubble;
mod calibration;
mod frequency;

pub use beta::{beta_quantile, clopper_pearson, regularized_incomplete_beta};
pub use bubble::{filter_bubble_matrix, BubbleCell, FilterBubbleMatrix, Period};
pub use calibration::{bin_index, calibration_curve, CalibrationBin, CalibrationCurve};
pub use frequency::{
    raw_frequency, rolling_mean, trend_series, weighted_frequency, Frequency, Likelihood,
    LikelihoodMap, TrendRow, TrendSeries,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no likelihood recorded for video {0}")]
    MissingLikelihood(alloc::string::String),
    #[error("no view count recorded for source video {0}")]
    MissingViews(alloc::string::String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("series dates are not strictly increasing")]
    UnsortedSeries,
}

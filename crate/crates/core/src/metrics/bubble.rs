use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bin_index, raw_frequency, LikelihoodMap, MetricsError};
use crate::corpus::RecommendationEdge;
use crate::day::Day;

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: Day,
    pub end: Day,
}

impl Period {
    pub fn contains(&self, day: Day) -> bool {
        self.start <= day && day <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleCell {
    /// Raw frequency of the cell's edges; `None` renders as a gap.
    pub value: Option<f64>,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBubbleMatrix {
    pub periods: Vec<Period>,
    pub bins: usize,
    /// `cells[period][source_bin]`.
    pub cells: Vec<Vec<BubbleCell>>,
}

/// Conspiratorial-recommendation proportion conditioned on the source
/// video's likelihood bin, per period. Edges whose source is unclassifiable
/// are dropped; an edge falling in several overlapping periods counts in
/// each.
pub fn filter_bubble_matrix(
    edges: &[RecommendationEdge],
    likelihoods: &LikelihoodMap,
    periods: &[Period],
    bins: usize,
    threshold: f64,
) -> Result<FilterBubbleMatrix, MetricsError> {
    if bins == 0 {
        return Err(MetricsError::InvalidParameter("bins must be >= 1"));
    }
    if periods.iter().any(|p| p.start > p.end) {
        return Err(MetricsError::InvalidParameter("period starts after it ends"));
    }
    let mut groups: Vec<Vec<Vec<&RecommendationEdge>>> = vec![vec![Vec::new(); bins]; periods.len()];
    for e in edges {
        let source = likelihoods
            .get(&e.source_video_id)
            .ok_or_else(|| MetricsError::MissingLikelihood(e.source_video_id.clone()))?;
        let Some(s) = source.score() else { continue };
        let b = bin_index(s, bins);
        for (p, period) in periods.iter().enumerate() {
            if period.contains(e.date) {
                groups[p][b].push(e);
            }
        }
    }
    let mut cells = Vec::with_capacity(periods.len());
    for row in groups {
        let mut out = Vec::with_capacity(bins);
        for group in row {
            let f = raw_frequency(group.iter().copied(), likelihoods, threshold)?;
            out.push(BubbleCell {
                value: f.value,
                edges: f.classifiable,
            });
        }
        cells.push(out);
    }
    Ok(FilterBubbleMatrix {
        periods: periods.to_vec(),
        bins,
        cells,
    })
}

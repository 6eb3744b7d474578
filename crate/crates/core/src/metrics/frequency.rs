use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::corpus::{DailySnapshot, RecommendationEdge};
use crate::day::Day;

/// Classifier output for one video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Score(f64),
    /// No modality could be scored; excluded from every frequency.
    Unclassifiable,
}

impl Likelihood {
    pub fn score(self) -> Option<f64> {
        match self {
            Likelihood::Score(s) => Some(s),
            Likelihood::Unclassifiable => None,
        }
    }
}

pub type LikelihoodMap = BTreeMap<String, Likelihood>;

/// A frequency plus how many edges it was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    /// `None` when no edge could be used.
    pub value: Option<f64>,
    pub classifiable: usize,
    pub total: usize,
}

impl Frequency {
    /// Share of edges whose recommended video was classifiable.
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.classifiable as f64 / self.total as f64
        }
    }
}

fn lookup(likelihoods: &LikelihoodMap, id: &str) -> Result<Option<f64>, MetricsError> {
    likelihoods
        .get(id)
        .map(|l| l.score())
        .ok_or_else(|| MetricsError::MissingLikelihood(id.into()))
}

/// Likelihood-weighted share of recommendations classified conspiratorial:
/// the sum of `L` over classifiable edges with `L > threshold`, divided by
/// the number of classifiable edges.
pub fn raw_frequency<'a, I>(
    edges: I,
    likelihoods: &LikelihoodMap,
    threshold: f64,
) -> Result<Frequency, MetricsError>
where
    I: IntoIterator<Item = &'a RecommendationEdge>,
{
    let mut sum = 0.0;
    let (mut classifiable, mut total) = (0usize, 0usize);
    for e in edges {
        total += 1;
        if let Some(l) = lookup(likelihoods, &e.recommended_video_id)? {
            classifiable += 1;
            if l > threshold {
                sum += l;
            }
        }
    }
    Ok(Frequency {
        value: (classifiable > 0).then(|| sum / classifiable as f64),
        classifiable,
        total,
    })
}

/// [`raw_frequency`] with each edge weighted by its source video's views:
/// `sum_{L > t} views * L / sum views` over classifiable edges.
pub fn weighted_frequency<'a, I>(
    edges: I,
    likelihoods: &LikelihoodMap,
    views: &BTreeMap<String, u64>,
    threshold: f64,
) -> Result<Frequency, MetricsError>
where
    I: IntoIterator<Item = &'a RecommendationEdge>,
{
    let (mut num, mut den) = (0.0, 0.0);
    let (mut raw_sum, mut classifiable, mut total) = (0.0, 0usize, 0usize);
    let mut uniform: Option<Option<u64>> = None;
    for e in edges {
        total += 1;
        let Some(l) = lookup(likelihoods, &e.recommended_video_id)? else {
            continue;
        };
        let v = *views
            .get(&e.source_video_id)
            .ok_or_else(|| MetricsError::MissingViews(e.source_video_id.clone()))?;
        uniform = match uniform {
            None => Some(Some(v)),
            Some(Some(u)) if u == v => Some(Some(u)),
            _ => Some(None),
        };
        classifiable += 1;
        let w = v as f64;
        den += w;
        if l > threshold {
            num += w * l;
            raw_sum += l;
        }
    }
    let value = match uniform {
        // Equal weights cancel; return the unweighted ratio exactly.
        Some(Some(v)) if v > 0 => Some(raw_sum / classifiable as f64),
        _ if den > 0.0 => Some(num / den),
        _ => None,
    };
    Ok(Frequency {
        value,
        classifiable,
        total,
    })
}

/// Trailing mean over the last `window` calendar days, including the
/// current one. Undefined days are skipped in both numerator and
/// denominator; the window is truncated at the start of the series.
pub fn rolling_mean(
    series: &[(Day, Option<f64>)],
    window: u32,
) -> Result<Vec<(Day, Option<f64>)>, MetricsError> {
    if window == 0 {
        return Err(MetricsError::InvalidParameter("window must be >= 1"));
    }
    if series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(MetricsError::UnsortedSeries);
    }
    let mut out = Vec::with_capacity(series.len());
    let mut start = 0;
    for (i, &(day, _)) in series.iter().enumerate() {
        while day.since(series[start].0) >= window as i32 {
            start += 1;
        }
        let vals = series[start..=i].iter().filter_map(|(_, v)| *v);
        let (sum, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        out.push((day, (n > 0).then(|| sum / n as f64)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub date: Day,
    pub raw_frequency: Option<f64>,
    pub weighted_frequency: Option<f64>,
    /// Share of retained edges whose recommended video was classifiable.
    pub coverage: f64,
    pub raw_rolling: Option<f64>,
    pub weighted_rolling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub rows: Vec<TrendRow>,
    pub window: u32,
    pub threshold: f64,
}

/// Daily raw and weighted frequencies over each snapshot's retained edges,
/// plus their rolling means.
pub fn trend_series(
    snapshots: &[DailySnapshot],
    likelihoods: &LikelihoodMap,
    views: &BTreeMap<String, u64>,
    threshold: f64,
    window: u32,
) -> Result<TrendSeries, MetricsError> {
    let mut ordered: Vec<&DailySnapshot> = snapshots.iter().collect();
    ordered.sort_by_key(|s| s.date);
    let mut rows = Vec::with_capacity(ordered.len());
    for snap in ordered {
        let raw = raw_frequency(snap.retained_edges(), likelihoods, threshold)?;
        let weighted = weighted_frequency(snap.retained_edges(), likelihoods, views, threshold)?;
        rows.push(TrendRow {
            date: snap.date,
            raw_frequency: raw.value,
            weighted_frequency: weighted.value,
            coverage: raw.coverage(),
            raw_rolling: None,
            weighted_rolling: None,
        });
    }
    let raw: Vec<_> = rows.iter().map(|r| (r.date, r.raw_frequency)).collect();
    let weighted: Vec<_> = rows.iter().map(|r| (r.date, r.weighted_frequency)).collect();
    let raw = rolling_mean(&raw, window)?;
    let weighted = rolling_mean(&weighted, window)?;
    for ((row, (_, r)), (_, w)) in rows.iter_mut().zip(raw).zip(weighted) {
        row.raw_rolling = r;
        row.weighted_rolling = w;
    }
    Ok(TrendSeries {
        rows,
        window,
        threshold,
    })
}

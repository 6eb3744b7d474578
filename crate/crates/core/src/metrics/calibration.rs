use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{clopper_pearson, Likelihood, LikelihoodMap, MetricsError};

/// Equal-width bin of `[0, 1]` containing `x`. Bin `i` is
/// `[i/bins, (i+1)/bins)`; the last bin also holds 1.
pub fn bin_index(x: f64, bins: usize) -> usize {
    let i = libm::floor(x.clamp(0.0, 1.0) * bins as f64) as usize;
    i.min(bins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub n: u64,
    pub k: u64,
    /// `k / n`, undefined for an empty bin.
    pub proportion: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
    pub alpha: f64,
}

impl CalibrationCurve {
    /// Empirical proportion of the bin holding `likelihood`, or the
    /// likelihood itself when that bin is empty.
    pub fn calibrate(&self, likelihood: f64) -> f64 {
        let bin = &self.bins[bin_index(likelihood, self.bins.len())];
        bin.proportion.unwrap_or(likelihood)
    }

    /// Maps every score in `likelihoods` through [`Self::calibrate`].
    pub fn calibrate_map(&self, likelihoods: &LikelihoodMap) -> LikelihoodMap {
        likelihoods
            .iter()
            .map(|(k, l)| {
                let mapped = match *l {
                    Likelihood::Score(s) => Likelihood::Score(self.calibrate(s)),
                    Likelihood::Unclassifiable => Likelihood::Unclassifiable,
                };
                (k.clone(), mapped)
            })
            .collect()
    }
}

/// Human-label proportion per predicted-likelihood bin, with Clopper-Pearson
/// intervals at level `1 - alpha`.
pub fn calibration_curve(
    predictions: &[f64],
    labels: &[bool],
    bins: usize,
    alpha: f64,
) -> Result<CalibrationCurve, MetricsError> {
    if bins == 0 {
        return Err(MetricsError::InvalidParameter("bins must be >= 1"));
    }
    if predictions.len() != labels.len() {
        return Err(MetricsError::InvalidParameter("predictions and labels differ in length"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::InvalidParameter("alpha must be in (0, 1)"));
    }
    let mut counts = alloc::vec![(0u64, 0u64); bins];
    for (&p, &y) in predictions.iter().zip(labels) {
        let c = &mut counts[bin_index(p, bins)];
        c.0 += 1;
        c.1 += u64::from(y);
    }
    let mut out = Vec::with_capacity(bins);
    for (i, (n, k)) in counts.into_iter().enumerate() {
        let (ci_low, ci_high) = if n > 0 {
            let (lo, hi) = clopper_pearson(k, n, alpha)?;
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        out.push(CalibrationBin {
            lower: i as f64 / bins as f64,
            upper: (i + 1) as f64 / bins as f64,
            n,
            k,
            proportion: (n > 0).then(|| k as f64 / n as f64),
            ci_low,
            ci_high,
        });
    }
    Ok(CalibrationCurve { bins: out, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_partition_unit_interval() {
        let c = calibration_curve(&[], &[], 10, 0.05).unwrap();
        assert_eq!(c.bins[0].lower, 0.0);
        assert_eq!(c.bins[9].upper, 1.0);
        for w in c.bins.windows(2) {
            assert_eq!(w[0].upper, w[1].lower);
        }
        assert!(c.bins.iter().all(|b| b.n == 0 && b.proportion.is_none()));
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 1);
    }

    #[test]
    fn all_positive_labels() {
        let preds = [0.05, 0.33, 0.34, 0.9, 1.0];
        let c = calibration_curve(&preds, &[true; 5], 10, 0.05).unwrap();
        for b in &c.bins {
            if b.n > 0 {
                assert_eq!(b.proportion, Some(1.0));
                assert_eq!(b.ci_high, Some(1.0));
                assert!(b.ci_low.unwrap() <= 1.0);
            }
        }
    }

    #[test]
    fn calibrate_maps_through_bins() {
        let c = calibration_curve(&[0.72, 0.71, 0.75], &[true, false, false], 10, 0.05).unwrap();
        assert!((c.calibrate(0.7) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.calibrate(0.15), 0.15);
    }
}

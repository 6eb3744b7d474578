//! Small descriptive statistics with fixed conventions: the median of an
//! even-length sample is the mean of the middle pair, and standard
//! deviations use the population divisor `n`.

use alloc::vec::Vec;

/// Median of `values`, or `None` when empty. NaNs sort last.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64;
    Some(libm::sqrt(var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[0.7]), Some(0.7));
        assert_eq!(median(&[0.1, 0.9, 0.2]), Some(0.2));
        assert_eq!(median(&[0.2, 0.4]), Some(0.30000000000000004));
    }

    #[test]
    fn population_std() {
        assert_eq!(std_dev(&[1.0, 1.0, 1.0]), Some(0.0));
        assert_eq!(std_dev(&[0.0, 2.0]), Some(1.0));
    }
}

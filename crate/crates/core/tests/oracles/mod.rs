//! Reference implementations shared by the integration and acceptance
//! tests. Each is written from the textbook definition and shares no code
//! with the library.
#![allow(dead_code)]

/// Binomial probabilities P(X = i), i = 0..=n, with `ln C(n, i)` built up
/// one factor at a time.
fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    if p == 0.0 || p == 1.0 {
        let hit = if p == 0.0 { 0 } else { n };
        return (0..=n).map(|i| if i == hit { 1.0 } else { 0.0 }).collect();
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = 0.0;
    (0..=n)
        .map(|i| {
            if i > 0 {
                ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
            }
            (ln_choose + i as f64 * lp + (n - i) as f64 * lq).exp()
        })
        .collect()
}

/// P(X >= k) for X ~ Binomial(n, p).
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    binomial_pmf(n, p)[k as usize..].iter().sum()
}

/// P(X <= k) for X ~ Binomial(n, p).
pub fn binomial_lower_tail(k: u64, n: u64, p: f64) -> f64 {
    binomial_pmf(n, p)[..=k as usize].iter().sum()
}

/// Root of an increasing function on [0, 1] by bisection.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact binomial interval from the tail inversion definition.
pub fn clopper_pearson_oracle(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let low = if k == 0 {
        0.0
    } else {
        // P(X >= k | p) grows with p.
        bisect_increasing(|p| binomial_upper_tail(k, n, p), alpha / 2.0)
    };
    let high = if k == n {
        1.0
    } else {
        // P(X <= k | p) shrinks with p.
        bisect_increasing(|p| -binomial_lower_tail(k, n, p), -alpha / 2.0)
    };
    (low, high)
}

/// Every set partition of `n` items as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, n, max.max(c), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut prefix = vec![0];
    grow(&mut prefix, n, 0, &mut out);
    out
}

/// Modularity by the double sum over node pairs of a symmetric weight
/// matrix.
pub fn modularity_oracle(adj: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over all partitions.
pub fn best_modularity(adj: &[Vec<f64>]) -> f64 {
    all_partitions(adj.len())
        .iter()
        .map(|p| modularity_oracle(adj, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Central finite difference of `f` along coordinate `i` of `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

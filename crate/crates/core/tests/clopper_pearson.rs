mod oracles;

use oracles::clopper_pearson_oracle;
use recaudit_core::metrics::clopper_pearson;

#[test]
fn matches_tail_inversion_oracle() {
    for n in 1..=100u64 {
        for k in 0..=n {
            let (lo, hi) = clopper_pearson(k, n, 0.05).unwrap();
            let (olo, ohi) = clopper_pearson_oracle(k, n, 0.05);
            assert!((lo - olo).abs() < 1e-6 && (hi - ohi).abs() < 1e-6, "k={k} n={n}");
        }
    }
}

#[test]
fn reference_values() {
    let (lo, hi) = clopper_pearson(7, 10, 0.05).unwrap();
    assert!((lo - 0.348).abs() < 5e-4 && (hi - 0.933).abs() < 5e-4);
    let (_, hi0) = clopper_pearson(0, 10, 0.05).unwrap();
    assert!((hi0 - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
}

use recaudit::bundle::{self, BundleError};
use recaudit::lexicon::default_scorer;
use recaudit::pipeline::{score_attributes, ENSEMBLE_KIND};
use recaudit::AppError;
use recaudit_core::corpus::LabeledExample;
use recaudit_core::ensemble::{classify_video, train_ensemble, EnsembleConfig, TrainedEnsemble};
use recaudit_core::simulator::{labeled_set, SimParams};

fn scored(count: usize, salt: u64) -> Vec<LabeledExample> {
    let scorer = default_scorer();
    let mut set = labeled_set(&SimParams::default(), count, salt);
    for e in &mut set {
        score_attributes(&mut e.video, &scorer);
    }
    set
}

#[test]
fn trained_ensemble_round_trips_with_identical_predictions() {
    let config = EnsembleConfig {
        repeats: 3,
        ..EnsembleConfig::default()
    };
    let ensemble = train_ensemble(&scored(120, 0), &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ensemble.bin");
    bundle::save(&path, ENSEMBLE_KIND, &ensemble).unwrap();
    let loaded: TrainedEnsemble = bundle::load(&path, ENSEMBLE_KIND).unwrap();

    for e in scored(50, 3) {
        let a = classify_video(&ensemble, &e.video).ok();
        let b = classify_video(&loaded, &e.video).ok();
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    let err = bundle::load::<TrainedEnsemble>(&path, ENSEMBLE_KIND).unwrap_err();
    assert!(matches!(err, AppError::Bundle(BundleError::Truncated)), "{err}");
}

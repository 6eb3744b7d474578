//! The four-module conspiracy classifier and its stacking layer.
//!
//! First layer: text classifiers over the transcript, the snippet and each
//! comment (median over comments), plus a logistic head over 35 summary
//! features of the comments' attribute scores. Second layer: a logistic
//! regression over the four module scores after standardization, where an
//! absent module contributes exactly zero.
//!
//! Training repeats a random split `repeats` times: the first-layer models
//! are fit on the larger side, the stacking layer on the scores of the
//! other side, and the stacking coefficients are averaged across
//! repetitions.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AttributeVector, Comment, LabeledExample, VideoRecord, ATTRIBUTE_COUNT};
use crate::day::Day;
use crate::hash::CounterHash;
use crate::logistic::{train_logistic, LogisticConfig, LogisticError, LogisticModel};
use crate::stats::{median, std_dev};
use crate::text::{predict_proba, train_text_classifier, TextError, TextHyper, TextModel};

pub const MODULE_COUNT: usize = 4;
pub const MODULE_NAMES: [&str; MODULE_COUNT] = ["transcript", "snippet", "comments", "attribute"];
pub const TRANSCRIPT: usize = 0;
pub const SNIPPET: usize = 1;
pub const COMMENTS: usize = 2;
pub const ATTRIBUTE: usize = 3;

/// Length of the comment-attribute feature vector: 7 medians, 7 standard
/// deviations, 21 pairwise-product medians.
pub const ATTRIBUTE_FEATURES: usize = 2 * ATTRIBUTE_COUNT + ATTRIBUTE_COUNT * (ATTRIBUTE_COUNT - 1) / 2;

/// Per-module first-layer outputs; `None` marks an absent modality.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModuleScores {
    pub scores: [Option<f64>; MODULE_COUNT],
}

impl ModuleScores {
    pub fn mask(&self) -> [bool; MODULE_COUNT] {
        self.scores.map(|s| s.is_some())
    }

    pub fn any_present(&self) -> bool {
        self.scores.iter().any(Option::is_some)
    }
}

/// Median of the per-comment text scores. Even counts average the middle
/// pair. `None` when there are no comments.
pub fn score_comments(model: &TextModel, comments: &[Comment]) -> Option<f64> {
    let scores: Vec<f64> = comments.iter().map(|c| predict_proba(model, &c.text)).collect();
    median(&scores)
}

/// The 35-D summary `[7 medians | 7 std devs | 21 pairwise-product medians]`,
/// pairs in `(i, j), i < j` order. `None` for an empty input.
pub fn attribute_features(vectors: &[AttributeVector]) -> Option<[f64; ATTRIBUTE_FEATURES]> {
    if vectors.is_empty() {
        return None;
    }
    let mut out = [0.0; ATTRIBUTE_FEATURES];
    let mut column = Vec::with_capacity(vectors.len());
    for a in 0..ATTRIBUTE_COUNT {
        column.clear();
        column.extend(vectors.iter().map(|v| v[a]));
        out[a] = median(&column)?;
        out[ATTRIBUTE_COUNT + a] = std_dev(&column)?;
    }
    let mut slot = 2 * ATTRIBUTE_COUNT;
    for i in 0..ATTRIBUTE_COUNT {
        for j in i + 1..ATTRIBUTE_COUNT {
            column.clear();
            column.extend(vectors.iter().map(|v| v[i] * v[j]));
            out[slot] = median(&column)?;
            slot += 1;
        }
    }
    Some(out)
}

fn scored_attributes(video: &VideoRecord, max_comments: usize) -> Vec<AttributeVector> {
    video
        .comments
        .iter()
        .take(max_comments)
        .filter_map(|c| c.attribute_scores)
        .collect()
}

/// Per-module mean and standard deviation of the stacking-side scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: [f64; MODULE_COUNT],
    pub std: [f64; MODULE_COUNT],
    /// Modules that had at least two distinct scores when fitted.
    pub fitted: [bool; MODULE_COUNT],
}

impl StandardizationStats {
    /// Fits on the present scores of each module. A module with no spread
    /// keeps `std = 1` so that standardization stays finite.
    pub fn fit(samples: &[ModuleScores]) -> Self {
        let mut stats = Self {
            mean: [0.0; MODULE_COUNT],
            std: [1.0; MODULE_COUNT],
            fitted: [false; MODULE_COUNT],
        };
        for m in 0..MODULE_COUNT {
            let values: Vec<f64> = samples.iter().filter_map(|s| s.scores[m]).collect();
            if values.is_empty() {
                continue;
            }
            stats.mean[m] = values.iter().sum::<f64>() / values.len() as f64;
            let sd = std_dev(&values).unwrap_or(0.0);
            if sd > 1e-12 * stats.mean[m].abs().max(1.0) {
                stats.std[m] = sd;
                stats.fitted[m] = true;
            }
        }
        stats
    }

    /// Standardized features; absent modules map to exactly 0.
    pub fn apply(&self, scores: &ModuleScores) -> [f64; MODULE_COUNT] {
        let mut z = [0.0; MODULE_COUNT];
        for m in 0..MODULE_COUNT {
            if let Some(s) = scores.scores[m] {
                z[m] = (s - self.mean[m]) / self.std[m];
            }
        }
        z
    }
}

/// The four first-layer modules. A module that could not be trained (its
/// training side held a single class) is `None` and always scores absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstLayer {
    pub transcript: Option<TextModel>,
    pub snippet: Option<TextModel>,
    pub comments: Option<TextModel>,
    pub attribute: Option<LogisticModel>,
    pub max_comments: usize,
}

impl FirstLayer {
    pub fn score(&self, video: &VideoRecord) -> ModuleScores {
        let transcript = match (&self.transcript, &video.transcript) {
            (Some(m), Some(t)) => Some(predict_proba(m, t)),
            _ => None,
        };
        let snippet = self.snippet.as_ref().map(|m| predict_proba(m, &video.snippet()));
        let comments = self.comments.as_ref().and_then(|m| {
            let n = video.comments.len().min(self.max_comments);
            score_comments(m, &video.comments[..n])
        });
        let attribute = self.attribute.as_ref().and_then(|m| {
            attribute_features(&scored_attributes(video, self.max_comments)).map(|f| m.predict(&f))
        });
        ModuleScores {
            scores: [transcript, snippet, comments, attribute],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub text: TextHyper,
    pub attribute: LogisticConfig,
    pub stacking: LogisticConfig,
    pub repeats: usize,
    /// Share of each split used for the first layer.
    pub train_fraction: f64,
    pub seed: u64,
    pub max_comments: usize,
    pub min_per_class: usize,
    pub max_split_attempts: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            text: TextHyper::default(),
            attribute: LogisticConfig::default(),
            stacking: LogisticConfig::default(),
            repeats: 100,
            train_fraction: 0.6,
            seed: 0,
            max_comments: crate::corpus::MAX_COMMENTS,
            min_per_class: 10,
            max_split_attempts: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("need at least {needed} examples per class, got {positives} positive / {negatives} negative")]
    TooFewExamples {
        needed: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("could not draw a split with both classes on each side")]
    NoValidSplit,
    #[error("text module: {0}")]
    Text(#[from] TextError),
    #[error("logistic layer: {0}")]
    Logistic(#[from] LogisticError),
    #[error("repetition results do not cover 0..{0}")]
    MissingRepetitions(usize),
}

/// Outcome of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub stats: StandardizationStats,
    pub stacking: LogisticModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub repeats: usize,
    pub train_fraction: f64,
    pub examples: usize,
    pub positives: usize,
    pub trained_on: Option<Day>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnsemble {
    pub first_layer: FirstLayer,
    pub stats: StandardizationStats,
    /// Element-wise mean of the per-repetition stacking models.
    pub stacking: LogisticModel,
    pub repetitions: Vec<Repetition>,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("video has no scorable modality")]
pub struct Unclassifiable;

impl TrainedEnsemble {
    pub fn module_scores(&self, video: &VideoRecord) -> ModuleScores {
        self.first_layer.score(video)
    }

    /// Stacking output for already computed module scores.
    pub fn combine(&self, scores: &ModuleScores) -> Result<f64, Unclassifiable> {
        if !scores.any_present() {
            return Err(Unclassifiable);
        }
        Ok(self.stacking.predict(&self.stats.apply(scores)))
    }

    /// `|coef_i| / sum |coef|` in percent, in [`MODULE_NAMES`] order.
    pub fn relative_weights(&self) -> [f64; MODULE_COUNT] {
        relative_weights(&self.stacking)
    }
}

pub fn relative_weights(stacking: &LogisticModel) -> [f64; MODULE_COUNT] {
    let total: f64 = stacking.coefficients.iter().map(|c| c.abs()).sum();
    let mut out = [0.0; MODULE_COUNT];
    if total > 0.0 {
        for (o, c) in out.iter_mut().zip(&stacking.coefficients) {
            *o = 100.0 * c.abs() / total;
        }
    }
    out
}

/// Conspiracy likelihood of `video`.
pub fn classify_video(ensemble: &TrainedEnsemble, video: &VideoRecord) -> Result<f64, Unclassifiable> {
    ensemble.combine(&ensemble.module_scores(video))
}

fn text_module<S: AsRef<str>>(
    data: &[(S, bool)],
    hyper: &TextHyper,
) -> Result<Option<TextModel>, EnsembleError> {
    match train_text_classifier(data, hyper) {
        Ok(m) => Ok(Some(m)),
        Err(TextError::DegenerateTraining) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Fits the four first-layer modules on `examples`.
pub fn train_first_layer(
    examples: &[&LabeledExample],
    config: &EnsembleConfig,
    seed: u64,
) -> Result<FirstLayer, EnsembleError> {
    let key = CounterHash::new(seed);
    let hyper = |module: u64| TextHyper {
        seed: key.with(module).value(),
        ..config.text
    };

    let transcripts: Vec<(&str, bool)> = examples
        .iter()
        .filter_map(|e| e.video.transcript.as_deref().map(|t| (t, e.label.is_positive())))
        .collect();
    let snippets: Vec<(alloc::string::String, bool)> = examples
        .iter()
        .map(|e| (e.video.snippet(), e.label.is_positive()))
        .collect();
    let comments: Vec<(&str, bool)> = examples
        .iter()
        .flat_map(|e| {
            let y = e.label.is_positive();
            e.video
                .comments
                .iter()
                .take(config.max_comments)
                .map(move |c| (c.text.as_str(), y))
        })
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for e in examples {
        if let Some(f) = attribute_features(&scored_attributes(&e.video, config.max_comments)) {
            features.push(f.to_vec());
            labels.push(e.label.is_positive());
        }
    }
    let attribute = match train_logistic(&features, &labels, &config.attribute) {
        Ok(fit) => Some(fit.model),
        Err(LogisticError::SingleClass | LogisticError::Empty) => None,
        Err(e) => return Err(e.into()),
    };

    Ok(FirstLayer {
        transcript: text_module(&transcripts, &hyper(TRANSCRIPT as u64))?,
        snippet: text_module(&snippets, &hyper(SNIPPET as u64))?,
        comments: text_module(&comments, &hyper(COMMENTS as u64))?,
        attribute,
        max_comments: config.max_comments,
    })
}

fn check_config(labeled: &[LabeledExample], config: &EnsembleConfig) -> Result<(), EnsembleError> {
    if config.repeats == 0 {
        return Err(EnsembleError::InvalidConfig("repeats must be >= 1"));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(EnsembleError::InvalidConfig("train_fraction must be in (0, 1)"));
    }
    let positives = labeled.iter().filter(|e| e.label.is_positive()).count();
    let negatives = labeled.len() - positives;
    let needed = config.min_per_class.max(1);
    if positives < needed || negatives < needed {
        return Err(EnsembleError::TooFewExamples {
            needed,
            positives,
            negatives,
        });
    }
    Ok(())
}

fn both_classes<'a>(mut it: impl Iterator<Item = &'a LabeledExample>) -> bool {
    let (mut pos, mut neg) = (false, false);
    it.all(|e| {
        if e.label.is_positive() {
            pos = true
        } else {
            neg = true
        }
        !(pos && neg)
    });
    pos && neg
}

/// Runs split number `index`. Repetitions are independent of each other and
/// may be computed in any order or concurrently.
pub fn train_repetition(
    labeled: &[LabeledExample],
    config: &EnsembleConfig,
    index: usize,
) -> Result<Repetition, EnsembleError> {
    check_config(labeled, config)?;
    let n = labeled.len();
    let cut = libm::round((n as f64) * config.train_fraction) as usize;
    let cut = cut.clamp(1, n - 1);
    let key = CounterHash::new(config.seed).with(index as u64);

    let mut order: Vec<usize> = (0..n).collect();
    let mut found = false;
    for attempt in 0..config.max_split_attempts.max(1) {
        order.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(key.with(attempt as u64).value());
        order.shuffle(&mut rng);
        let (first, second) = order.split_at(cut);
        if both_classes(first.iter().map(|&i| &labeled[i]))
            && both_classes(second.iter().map(|&i| &labeled[i]))
        {
            found = true;
            break;
        }
    }
    if !found {
        return Err(EnsembleError::NoValidSplit);
    }
    let (first, second) = order.split_at(cut);
    let first: Vec<&LabeledExample> = first.iter().map(|&i| &labeled[i]).collect();
    let layer = train_first_layer(&first, config, key.with(u64::MAX).value())?;

    let scores: Vec<ModuleScores> = second.iter().map(|&i| layer.score(&labeled[i].video)).collect();
    let stats = StandardizationStats::fit(&scores);
    let features: Vec<Vec<f64>> = scores.iter().map(|s| stats.apply(s).to_vec()).collect();
    let labels: Vec<bool> = second.iter().map(|&i| labeled[i].label.is_positive()).collect();
    let stacking = train_logistic(&features, &labels, &config.stacking)?.model;
    Ok(Repetition {
        index,
        stats,
        stacking,
    })
}

/// Averages the repetitions and retrains the first layer on all of
/// `labeled`. `repetitions` must hold exactly the indices `0..repeats`.
pub fn assemble_ensemble(
    labeled: &[LabeledExample],
    config: &EnsembleConfig,
    mut repetitions: Vec<Repetition>,
) -> Result<TrainedEnsemble, EnsembleError> {
    check_config(labeled, config)?;
    repetitions.sort_by_key(|r| r.index);
    if repetitions.len() != config.repeats
        || repetitions.iter().enumerate().any(|(i, r)| r.index != i)
    {
        return Err(EnsembleError::MissingRepetitions(config.repeats));
    }
    let reps = repetitions.len() as f64;
    let mut coefficients = vec![0.0; MODULE_COUNT];
    let mut bias = 0.0;
    for r in &repetitions {
        for (c, x) in coefficients.iter_mut().zip(&r.stacking.coefficients) {
            *c += x;
        }
        bias += r.stacking.bias;
    }
    coefficients.iter_mut().for_each(|c| *c /= reps);
    let stacking = LogisticModel {
        coefficients,
        bias: bias / reps,
    };

    let mut stats = StandardizationStats {
        mean: [0.0; MODULE_COUNT],
        std: [1.0; MODULE_COUNT],
        fitted: [false; MODULE_COUNT],
    };
    for m in 0..MODULE_COUNT {
        let fitted: Vec<&StandardizationStats> =
            repetitions.iter().map(|r| &r.stats).filter(|s| s.fitted[m]).collect();
        if fitted.is_empty() {
            continue;
        }
        let k = fitted.len() as f64;
        stats.mean[m] = fitted.iter().map(|s| s.mean[m]).sum::<f64>() / k;
        stats.std[m] = fitted.iter().map(|s| s.std[m]).sum::<f64>() / k;
        stats.fitted[m] = true;
    }

    let all: Vec<&LabeledExample> = labeled.iter().collect();
    let final_seed = CounterHash::new(config.seed).with(u64::MAX).value();
    let first_layer = train_first_layer(&all, config, final_seed)?;
    Ok(TrainedEnsemble {
        first_layer,
        stats,
        stacking,
        repetitions,
        metadata: TrainingMetadata {
            seed: config.seed,
            repeats: config.repeats,
            train_fraction: config.train_fraction,
            examples: labeled.len(),
            positives: labeled.iter().filter(|e| e.label.is_positive()).count(),
            trained_on: None,
        },
    })
}

/// Full protocol, repetitions run sequentially.
pub fn train_ensemble(
    labeled: &[LabeledExample],
    config: &EnsembleConfig,
) -> Result<TrainedEnsemble, EnsembleError> {
    check_config(labeled, config)?;
    let reps = (0..config.repeats)
        .map(|i| train_repetition(labeled, config, i))
        .collect::<Result<Vec<_>, _>>()?;
    assemble_ensemble(labeled, config, reps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    /// `None` when nothing was predicted positive.
    pub precision: Option<f64>,
    pub recall: f64,
    pub f1: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PrecisionRecallError {
    #[error("predictions and labels differ in length")]
    LengthMismatch,
    #[error("need both classes among the labels")]
    SingleClass,
}

/// Harmonic mean of precision and recall.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores strictly above `threshold` count as predicted positive.
pub fn precision_recall(
    predictions: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<PrecisionRecall, PrecisionRecallError> {
    if predictions.len() != labels.len() {
        return Err(PrecisionRecallError::LengthMismatch);
    }
    let positives = labels.iter().filter(|y| **y).count();
    if positives == 0 || positives == labels.len() {
        return Err(PrecisionRecallError::SingleClass);
    }
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p > threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = tp as f64 / positives as f64;
    Ok(PrecisionRecall {
        precision,
        recall,
        f1: precision.map(|p| f1_score(p, recall)),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        true_negatives: tn,
    })
}

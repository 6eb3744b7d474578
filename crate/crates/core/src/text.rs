//! Supervised linear text classifier: bag of words plus hashed bag of
//! n-grams, averaged through an embedding table, then a two-class linear
//! head trained with SGD on cross-entropy.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::hash::{fnv1a64, fnv1a64_extend, CounterHash};

/// Lowercased NFC text split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text.nfc().flat_map(char::to_lowercase).collect();
    let lowered: String = lowered.nfc().collect();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    index: BTreeMap<String, u32>,
    buckets: u32,
    min_count: u32,
}

impl Vocabulary {
    /// Keeps every word seen at least `min_count` times. Indices follow
    /// lexicographic order so the vocabulary is independent of document
    /// order.
    pub fn build<'a, I>(docs: I, min_count: u32, buckets: u32) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts = BTreeMap::<&str, u32>::new();
        for doc in docs {
            for t in doc {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let index = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .enumerate()
            .map(|(i, (w, _))| (String::from(w), i as u32))
            .collect();
        Self {
            index,
            buckets,
            min_count,
        }
    }

    pub fn word_count(&self) -> usize {
        self.index.len()
    }

    pub fn buckets(&self) -> u32 {
        self.buckets
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    /// Total embedding rows: words followed by n-gram buckets.
    pub fn rows(&self) -> usize {
        self.index.len() + self.buckets as usize
    }

    /// Row id of the n-gram formed by `tokens`.
    pub fn ngram_id(&self, tokens: &[String]) -> u32 {
        let mut h = fnv1a64(tokens[0].as_bytes());
        for t in &tokens[1..] {
            h = fnv1a64_extend(h, b" ");
            h = fnv1a64_extend(h, t.as_bytes());
        }
        self.index.len() as u32 + (h % u64::from(self.buckets)) as u32
    }
}

/// Feature ids of a token list: in-vocabulary word ids, then one hashed id
/// per run of 2..=`ngram` consecutive tokens. Out-of-vocabulary words are
/// dropped as unigrams but still take part in n-grams.
pub fn featurize(tokens: &[String], vocab: &Vocabulary, ngram: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.word_id(t)).collect();
    if vocab.buckets > 0 {
        for n in 2..=ngram {
            for window in tokens.windows(n) {
                ids.push(vocab.ngram_id(window));
            }
        }
    }
    ids
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextHyper {
    pub dim: usize,
    pub ngram: usize,
    pub buckets: u32,
    pub learning_rate: f64,
    pub epochs: usize,
    pub min_count: u32,
    pub seed: u64,
}

impl Default for TextHyper {
    fn default() -> Self {
        Self {
            dim: 16,
            ngram: 2,
            buckets: 1 << 20,
            learning_rate: 0.1,
            epochs: 25,
            min_count: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("training data contains a single class")]
    DegenerateTraining,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(&'static str),
}

/// Embedding rows. Word rows are dense; n-gram bucket rows are materialized
/// on first update. An untouched row equals its seeded initial value, so the
/// table behaves exactly like a fully initialized dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    seed: u64,
    dense_rows: u32,
    dense: Vec<f64>,
    sparse: BTreeMap<u32, Vec<f64>>,
}

impl EmbeddingTable {
    fn new(dense_rows: u32, dim: usize, seed: u64) -> Self {
        let mut dense = Vec::with_capacity(dense_rows as usize * dim);
        for id in 0..dense_rows {
            dense.extend(initial_row(seed, id, dim));
        }
        Self {
            dim,
            seed,
            dense_rows,
            dense,
            sparse: BTreeMap::new(),
        }
    }

    fn add_row_to(&self, id: u32, acc: &mut [f64]) {
        if id < self.dense_rows {
            let start = id as usize * self.dim;
            for (a, x) in acc.iter_mut().zip(&self.dense[start..start + self.dim]) {
                *a += x;
            }
        } else if let Some(row) = self.sparse.get(&id) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        } else {
            for (a, x) in acc.iter_mut().zip(initial_row(self.seed, id, self.dim)) {
                *a += x;
            }
        }
    }

    pub fn row(&self, id: u32) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.add_row_to(id, &mut v);
        v
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        if id < self.dense_rows {
            let start = id as usize * self.dim;
            &mut self.dense[start..start + self.dim]
        } else {
            let (seed, dim) = (self.seed, self.dim);
            self.sparse
                .entry(id)
                .or_insert_with(|| initial_row(seed, id, dim).collect())
        }
    }

    /// Bucket rows that moved away from their initial values.
    pub fn materialized_buckets(&self) -> usize {
        self.sparse.len()
    }
}

fn initial_row(seed: u64, id: u32, dim: usize) -> impl Iterator<Item = f64> {
    let scale = 1.0 / dim as f64;
    let key = CounterHash::new(seed).with(u64::from(id));
    (0..dim).map(move |j| (2.0 * key.with(j as u64).unit() - 1.0) * scale)
}

/// A trained classifier. Class 1 is the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextModel {
    pub vocab: Vocabulary,
    pub hyper: TextHyper,
    pub embedding: EmbeddingTable,
    /// Row-major 2 x dim.
    pub head: Vec<f64>,
    pub bias: [f64; 2],
}

/// Gradient of one example's loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TextGradient {
    pub embedding: BTreeMap<u32, Vec<f64>>,
    pub head: Vec<f64>,
    pub bias: [f64; 2],
}

struct Forward {
    hidden: Vec<f64>,
    probs: [f64; 2],
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl TextModel {
    fn init(vocab: Vocabulary, hyper: TextHyper) -> Self {
        let embedding = EmbeddingTable::new(vocab.word_count() as u32, hyper.dim, hyper.seed);
        Self {
            vocab,
            embedding,
            head: vec![0.0; 2 * hyper.dim],
            bias: [0.0; 2],
            hyper,
        }
    }

    pub fn features(&self, text: &str) -> Vec<u32> {
        featurize(&tokenize(text), &self.vocab, self.hyper.ngram)
    }

    fn forward(&self, ids: &[u32]) -> Forward {
        let d = self.hyper.dim;
        let mut hidden = vec![0.0; d];
        for &id in ids {
            self.embedding.add_row_to(id, &mut hidden);
        }
        if !ids.is_empty() {
            let inv = 1.0 / ids.len() as f64;
            hidden.iter_mut().for_each(|h| *h *= inv);
        }
        let z = self.logits_of(&hidden);
        let p1 = sigmoid(z[1] - z[0]);
        Forward {
            hidden,
            probs: [1.0 - p1, p1],
        }
    }

    fn logits_of(&self, hidden: &[f64]) -> [f64; 2] {
        let d = self.hyper.dim;
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            *zc += self.head[c * d..(c + 1) * d]
                .iter()
                .zip(hidden)
                .map(|(w, h)| w * h)
                .sum::<f64>();
        }
        z
    }

    pub fn logits(&self, ids: &[u32]) -> [f64; 2] {
        self.logits_of(&self.forward(ids).hidden)
    }

    /// Difference of class biases; the positive-class logit of an empty
    /// document.
    pub fn bias_logit(&self) -> f64 {
        self.bias[1] - self.bias[0]
    }

    /// `[P(negative), P(positive)]` for a featurized document.
    pub fn class_probabilities(&self, ids: &[u32]) -> [f64; 2] {
        self.forward(ids).probs
    }

    pub fn predict_ids(&self, ids: &[u32]) -> f64 {
        self.forward(ids).probs[1]
    }

    /// Cross-entropy of one example.
    pub fn loss(&self, ids: &[u32], positive: bool) -> f64 {
        let z = self.logits(ids);
        let margin = if positive { z[1] - z[0] } else { z[0] - z[1] };
        softplus(-margin)
    }

    pub fn gradient(&self, ids: &[u32], positive: bool) -> TextGradient {
        let d = self.hyper.dim;
        let fwd = self.forward(ids);
        let target = if positive { 1 } else { 0 };
        let dz = [
            fwd.probs[0] - if target == 0 { 1.0 } else { 0.0 },
            fwd.probs[1] - if target == 1 { 1.0 } else { 0.0 },
        ];
        let mut head = vec![0.0; 2 * d];
        for c in 0..2 {
            for j in 0..d {
                head[c * d + j] = dz[c] * fwd.hidden[j];
            }
        }
        let mut embedding = BTreeMap::new();
        if !ids.is_empty() {
            let inv = 1.0 / ids.len() as f64;
            let dh: Vec<f64> = (0..d)
                .map(|j| (dz[0] * self.head[j] + dz[1] * self.head[d + j]) * inv)
                .collect();
            for &id in ids {
                let g = embedding.entry(id).or_insert_with(|| vec![0.0; d]);
                for (gj, x) in g.iter_mut().zip(&dh) {
                    *gj += x;
                }
            }
        }
        TextGradient {
            embedding,
            head,
            bias: dz,
        }
    }

    /// One SGD step on one example.
    fn step(&mut self, ids: &[u32], positive: bool, lr: f64) {
        let d = self.hyper.dim;
        let fwd = self.forward(ids);
        let p_target = if positive { fwd.probs[1] } else { fwd.probs[0] };
        // Gradient of the loss w.r.t. the positive logit minus the negative
        // one; the two class gradients are equal and opposite.
        let g = 1.0 - p_target;
        let sign = if positive { 1.0 } else { -1.0 };
        let dz = [-sign * g, sign * g]; // descent direction
        let mut dh = vec![0.0; d];
        for c in 0..2 {
            let w = &mut self.head[c * d..(c + 1) * d];
            for j in 0..d {
                dh[j] += dz[c] * w[j];
                w[j] += lr * dz[c] * fwd.hidden[j];
            }
            self.bias[c] += lr * dz[c];
        }
        if ids.is_empty() {
            return;
        }
        let inv = lr / ids.len() as f64;
        for &id in ids {
            for (x, g) in self.embedding.row_mut(id).iter_mut().zip(&dh) {
                *x += g * inv;
            }
        }
    }
}

/// Probability that `text` belongs to the positive class.
pub fn predict_proba(model: &TextModel, text: &str) -> f64 {
    model.predict_ids(&model.features(text))
}

/// Per-epoch mean training loss, recorded by [`train_text_classifier_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub epoch_losses: Vec<f64>,
}

pub fn train_text_classifier<S: AsRef<str>>(
    examples: &[(S, bool)],
    hyper: &TextHyper,
) -> Result<TextModel, TextError> {
    train_inner(examples, hyper, false).map(|(m, _)| m)
}

pub fn train_text_classifier_traced<S: AsRef<str>>(
    examples: &[(S, bool)],
    hyper: &TextHyper,
) -> Result<(TextModel, TrainingTrace), TextError> {
    train_inner(examples, hyper, true)
}

fn train_inner<S: AsRef<str>>(
    examples: &[(S, bool)],
    hyper: &TextHyper,
    trace: bool,
) -> Result<(TextModel, TrainingTrace), TextError> {
    if hyper.dim == 0 {
        return Err(TextError::InvalidHyper("dim must be >= 1"));
    }
    if hyper.ngram == 0 {
        return Err(TextError::InvalidHyper("ngram must be >= 1"));
    }
    if !(hyper.learning_rate.is_finite() && hyper.learning_rate > 0.0) {
        return Err(TextError::InvalidHyper("learning_rate must be positive"));
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(TextError::DegenerateTraining);
    }

    // Canonical order first, so the seeded shuffle does not depend on how
    // the caller ordered the examples.
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, ya) = (&examples[a].0, examples[a].1);
        let (tb, yb) = (&examples[b].0, examples[b].1);
        ta.as_ref().cmp(tb.as_ref()).then(ya.cmp(&yb))
    });
    let tokens: Vec<Vec<String>> = order
        .iter()
        .map(|&i| tokenize(examples[i].0.as_ref()))
        .collect();
    let labels: Vec<bool> = order.iter().map(|&i| examples[i].1).collect();

    let vocab = Vocabulary::build(tokens.iter().map(Vec::as_slice), hyper.min_count, hyper.buckets);
    let data: Vec<Vec<u32>> = tokens
        .iter()
        .map(|t| featurize(t, &vocab, hyper.ngram))
        .collect();
    drop(tokens);

    let mut model = TextModel::init(vocab, *hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut perm: Vec<usize> = (0..data.len()).collect();
    let total = (hyper.epochs * data.len()) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::new();
    for _ in 0..hyper.epochs {
        perm.shuffle(&mut rng);
        for &i in &perm {
            let lr = hyper.learning_rate * (1.0 - step as f64 / total);
            model.step(&data[i], labels[i], lr);
            step += 1;
        }
        if trace {
            let loss = data
                .iter()
                .zip(&labels)
                .map(|(ids, &y)| model.loss(ids, y))
                .sum::<f64>()
                / data.len() as f64;
            epoch_losses.push(loss);
        }
    }
    Ok((model, TrainingTrace { epoch_losses }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("The Moon LANDING!"), s(&["the", "moon", "landing"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("wwg1wga\u{2026} QAnon"), s(&["wwg1wga", "qanon"]));
        assert_eq!(tokenize("9/11 truth"), s(&["9", "11", "truth"]));
        // Decomposed and precomposed forms tokenize identically.
        assert_eq!(tokenize("Cafe\u{301}"), tokenize("caf\u{e9}"));
    }

    fn vocab_of(words: &[&str]) -> Vocabulary {
        let doc = s(words);
        Vocabulary::build([doc.as_slice()], 1, 1 << 10)
    }

    #[test]
    fn featurize_counts() {
        let vocab = vocab_of(&["moon", "landing", "hoax"]);
        assert!(featurize(&[], &vocab, 2).is_empty());

        let one = featurize(&s(&["moon"]), &vocab, 2);
        assert_eq!(one, vec![vocab.word_id("moon").unwrap()]);

        let three = featurize(&s(&["moon", "landing", "hoax"]), &vocab, 2);
        let words = three.iter().filter(|&&id| (id as usize) < vocab.word_count()).count();
        let grams = three.len() - words;
        assert_eq!((words, grams), (3, 2));
        assert!(three.iter().all(|&id| (id as usize) < vocab.rows()));
    }

    #[test]
    fn oov_words_dropped_but_ngrams_kept() {
        let vocab = vocab_of(&["moon"]);
        let ids = featurize(&s(&["moon", "zebra"]), &vocab, 3);
        assert_eq!(ids.len(), 2);
        assert!(ids[1] as usize >= vocab.word_count());
    }

    #[test]
    fn vocabulary_dense_and_thresholded() {
        let a = s(&["b", "a", "b", "c"]);
        let v = Vocabulary::build([a.as_slice()], 2, 8);
        assert_eq!(v.word_count(), 1);
        assert_eq!(v.word_id("b"), Some(0));
        assert_eq!(v.rows(), 9);
    }

    pub(crate) fn toy_corpus() -> Vec<(String, bool)> {
        let pos = ["illuminati hoax", "aliens control", "deep state hoax", "illuminati aliens", "control hoax"];
        let neg = ["cute dog", "food game", "dog food", "cool game", "cute cool"];
        let mut out = Vec::new();
        for i in 0..10 {
            out.push((format!("{} {}", pos[i % 5], pos[(i + 2) % 5]), true));
            out.push((format!("{} {}", neg[i % 5], neg[(i + 3) % 5]), false));
        }
        out
    }

    fn toy_hyper() -> TextHyper {
        TextHyper {
            dim: 8,
            buckets: 1 << 12,
            learning_rate: 0.5,
            epochs: 30,
            seed: 11,
            ..TextHyper::default()
        }
    }

    #[test]
    fn separable_toy_corpus() {
        let data = toy_corpus();
        let model = train_text_classifier(&data, &toy_hyper()).unwrap();
        let correct = data
            .iter()
            .filter(|(t, y)| (predict_proba(&model, t) > 0.5) == *y)
            .count();
        assert_eq!(correct, data.len());
        assert!(predict_proba(&model, "illuminati hoax aliens") > 0.9);
    }

    #[test]
    fn loss_descends_per_epoch() {
        let (_, trace) = train_text_classifier_traced(&toy_corpus(), &toy_hyper()).unwrap();
        for w in trace.epoch_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", trace.epoch_losses);
        }
    }

    #[test]
    fn empty_text_uses_bias_only() {
        let model = train_text_classifier(&toy_corpus(), &toy_hyper()).unwrap();
        assert_eq!(predict_proba(&model, ""), sigmoid(model.bias_logit()));
        assert_eq!(predict_proba(&model, "zzzqqq"), sigmoid(model.bias_logit()));
    }

    #[test]
    fn single_class_rejected() {
        let data = [("a b", true), ("c d", true)];
        assert_eq!(
            train_text_classifier(&data, &toy_hyper()).unwrap_err(),
            TextError::DegenerateTraining
        );
    }

    #[test]
    fn input_order_does_not_matter() {
        let data = toy_corpus();
        let mut reversed = data.clone();
        reversed.reverse();
        let a = train_text_classifier(&data, &toy_hyper()).unwrap();
        let b = train_text_classifier(&reversed, &toy_hyper()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_training_set_matches_doubled_epochs() {
        let data = toy_corpus();
        let mut doubled = data.clone();
        doubled.extend(data.iter().cloned());
        let h = toy_hyper();
        let a = train_text_classifier(&data, &TextHyper { epochs: 2 * h.epochs, ..h }).unwrap();
        let b = train_text_classifier(&doubled, &h).unwrap();
        // Same number of SGD steps over the same examples; only the visiting
        // order differs.
        for (t, _) in &data {
            let (pa, pb) = (predict_proba(&a, t), predict_proba(&b, t));
            assert!((pa - pb).abs() < 0.05, "{t}: {pa} vs {pb}");
        }
    }

    proptest::proptest! {
        #[test]
        fn class_probabilities_sum_to_one(text in "[a-z ]{0,40}") {
            let model = train_text_classifier(&toy_corpus(), &toy_hyper()).unwrap();
            let p = model.class_probabilities(&model.features(&text));
            proptest::prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
            proptest::prop_assert!((0.0..=1.0).contains(&p[1]));
        }

        #[test]
        fn unigram_model_ignores_token_order(perm_seed in proptest::prelude::any::<u64>()) {
            let h = TextHyper { ngram: 1, ..toy_hyper() };
            let model = train_text_classifier(&toy_corpus(), &h).unwrap();
            let mut toks = s(&["illuminati", "cute", "hoax", "dog", "game"]);
            let base = predict_proba(&model, &toks.join(" "));
            for i in (1..toks.len()).rev() {
                toks.swap(i, CounterHash::new(perm_seed).with(i as u64).index(i + 1));
            }
            let shuffled = predict_proba(&model, &toks.join(" "));
            proptest::prop_assert!((base - shuffled).abs() < 1e-12);
        }
    }
}

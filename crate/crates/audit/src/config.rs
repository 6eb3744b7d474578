//! Plain-text `key = value` pipeline configuration with environment
//! overrides (`sim.base_rate` is overridden by `RECAUDIT_SIM_BASE_RATE`).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use recaudit_core::crawl::EdgeWeighting;
use recaudit_core::day::Day;
use recaudit_core::ensemble::EnsembleConfig;
use recaudit_core::metrics::Period;
use recaudit_core::simulator::SimParams;
use recaudit_core::topics::{NmfConfig, TermWeighting, TextField};

use crate::error::{AppError, Result};
use crate::store::sha256_hex;

/// The shipped default configuration file.
pub const DEFAULT_CONFIG: &str = include_str!("../data/default.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Simulator,
    Live,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnowballConfig {
    pub initial_seeds: Option<PathBuf>,
    /// Most-subscribed channels taken as initial seeds when no file is given.
    pub initial_count: usize,
    pub target: usize,
    pub k: usize,
    pub weighting: EdgeWeighting,
    pub cluster_id: Option<usize>,
    pub anchors: Vec<String>,
    pub manual_additions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestConfig {
    /// Seed channels; defaults to the snowball output.
    pub seeds: Option<PathBuf>,
    pub k: usize,
    pub retain: usize,
    pub max_comments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub window: u32,
    pub alpha: f64,
    pub bins: usize,
    pub bubble_bins: usize,
    pub periods: Vec<Period>,
    /// Map likelihoods through the calibration curve before counting.
    pub calibrated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicsConfig {
    pub k: usize,
    pub top_words: usize,
    pub report_top: usize,
    pub field: TextField,
    pub weighting: TermWeighting,
    pub nmf: NmfConfig,
    pub min_df: usize,
    pub discriminating_top: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub timeout_secs: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub rate_limit_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: SourceKind,
    pub sim: SimParams,
    /// Size of the simulator's labeled training set and calibration set.
    pub sim_labeled: usize,
    pub sim_calibration: usize,
    pub snowball: SnowballConfig,
    pub harvest: HarvestConfig,
    pub ensemble: EnsembleConfig,
    pub threshold: f64,
    /// Labeled training examples; defaults to the simulator's output.
    pub labeled: Option<PathBuf>,
    /// Human-labeled calibration sample; defaults to the simulator's output.
    pub calibration_labeled: Option<PathBuf>,
    pub metrics: MetricsConfig,
    pub topics: TopicsConfig,
    pub live: LiveConfig,
    pub out_dir: PathBuf,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| AppError::config(format!("{key} = {value:?}: {e}")))
}

fn parse_unit(key: &str, value: &str) -> Result<f64> {
    let x: f64 = parse(key, value)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(AppError::config(format!("{key} must lie in [0, 1], got {x}")));
    }
    Ok(x)
}

fn parse_positive(key: &str, value: &str) -> Result<usize> {
    let x: usize = parse(key, value)?;
    if x == 0 {
        return Err(AppError::config(format!("{key} must be at least 1")));
    }
    Ok(x)
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// `2019-01-01..2019-03-31; 2019-04-01..2019-06-30`
fn parse_periods(key: &str, value: &str) -> Result<Vec<Period>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once("..")
                .ok_or_else(|| AppError::config(format!("{key}: period {p:?} needs start..end")))?;
            let start: Day = parse(key, a.trim())?;
            let end: Day = parse(key, b.trim())?;
            if end < start {
                return Err(AppError::config(format!("{key}: period {p:?} ends before it starts")));
            }
            Ok(Period { start, end })
        })
        .collect()
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn weighting_text(w: EdgeWeighting) -> &'static str {
    match w {
        EdgeWeighting::Count => "count",
        EdgeWeighting::Binary => "binary",
    }
}

fn field_text(f: TextField) -> &'static str {
    match f {
        TextField::Comments => "comments",
        TextField::Snippet => "snippet",
        TextField::Transcript => "transcript",
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut c = Self::builtin();
        c.apply_text(DEFAULT_CONFIG)
            .expect("shipped default configuration parses");
        c
    }
}

impl PipelineConfig {
    fn builtin() -> Self {
        Self {
            source: SourceKind::Simulator,
            sim: SimParams::default(),
            sim_labeled: 400,
            sim_calibration: 1000,
            snowball: SnowballConfig {
                initial_seeds: None,
                initial_count: 250,
                target: 12_000,
                k: 20,
                weighting: EdgeWeighting::Count,
                cluster_id: None,
                anchors: Vec::new(),
                manual_additions: None,
            },
            harvest: HarvestConfig {
                seeds: None,
                k: 20,
                retain: 1000,
                max_comments: 200,
            },
            ensemble: EnsembleConfig::default(),
            threshold: 0.5,
            labeled: None,
            calibration_labeled: None,
            metrics: MetricsConfig {
                window: 7,
                alpha: 0.05,
                bins: 10,
                bubble_bins: 10,
                periods: Vec::new(),
                calibrated: false,
            },
            topics: TopicsConfig {
                k: 8,
                top_words: 25,
                report_top: 3,
                field: TextField::Comments,
                weighting: TermWeighting::Tfidf,
                nmf: NmfConfig::default(),
                min_df: 5,
                discriminating_top: 15,
            },
            live: LiveConfig {
                timeout_secs: 10,
                retries: 3,
                backoff_ms: 500,
                rate_limit_ms: 0,
            },
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "source" => {
                self.source = match v {
                    "simulator" => SourceKind::Simulator,
                    "live" => SourceKind::Live,
                    _ => return Err(AppError::config(format!("source must be simulator or live, got {v:?}"))),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(v),
            "sim.channels" => self.sim.channels = parse_positive(key, v)?,
            "sim.videos_per_channel" => self.sim.videos_per_channel = parse_positive(key, v)?,
            "sim.base_rate" => self.sim.base_rate = parse_unit(key, v)?,
            "sim.homophily" => self.sim.homophily = parse_unit(key, v)?,
            "sim.seed" => self.sim.seed = parse(key, v)?,
            "sim.start" => self.sim.start = parse(key, v)?,
            "sim.history_days" => self.sim.history_days = parse(key, v)?,
            "sim.future_days" => self.sim.future_days = parse(key, v)?,
            "sim.max_comments" => self.sim.max_comments = parse(key, v)?,
            "sim.transcript_probability" => self.sim.transcript_probability = parse_unit(key, v)?,
            "sim.comments_disabled_probability" => {
                self.sim.comments_disabled_probability = parse_unit(key, v)?
            }
            "sim.signal" => self.sim.signal = parse_unit(key, v)?,
            "sim.labeled" => self.sim_labeled = parse_positive(key, v)?,
            "sim.calibration" => self.sim_calibration = parse_positive(key, v)?,
            "snowball.initial_seeds" => self.snowball.initial_seeds = parse_path(v),
            "snowball.initial_count" => self.snowball.initial_count = parse_positive(key, v)?,
            "snowball.target" => self.snowball.target = parse_positive(key, v)?,
            "snowball.k" => self.snowball.k = parse_positive(key, v)?,
            "snowball.weighting" => {
                self.snowball.weighting = match v {
                    "count" => EdgeWeighting::Count,
                    "binary" => EdgeWeighting::Binary,
                    _ => return Err(AppError::config(format!("{key} must be count or binary"))),
                }
            }
            "snowball.cluster_id" => {
                self.snowball.cluster_id = if v.is_empty() { None } else { Some(parse(key, v)?) }
            }
            "snowball.anchors" => self.snowball.anchors = parse_list(v),
            "snowball.manual_additions" => self.snowball.manual_additions = parse_path(v),
            "harvest.seeds" => self.harvest.seeds = parse_path(v),
            "harvest.k" => self.harvest.k = parse_positive(key, v)?,
            "harvest.retain" => self.harvest.retain = parse_positive(key, v)?,
            "harvest.max_comments" => self.harvest.max_comments = parse_positive(key, v)?,
            "ensemble.repeats" => self.ensemble.repeats = parse_positive(key, v)?,
            "ensemble.train_fraction" => {
                let x = parse_unit(key, v)?;
                if x == 0.0 || x == 1.0 {
                    return Err(AppError::config(format!("{key} must lie strictly inside (0, 1)")));
                }
                self.ensemble.train_fraction = x;
            }
            "ensemble.seed" => self.ensemble.seed = parse(key, v)?,
            "ensemble.min_per_class" => self.ensemble.min_per_class = parse_positive(key, v)?,
            "ensemble.l2" => {
                let l2: f64 = parse(key, v)?;
                self.ensemble.attribute.l2 = l2;
                self.ensemble.stacking.l2 = l2;
            }
            "ensemble.labeled" => self.labeled = parse_path(v),
            "threshold" => self.threshold = parse_unit(key, v)?,
            "text.dim" => self.ensemble.text.dim = parse_positive(key, v)?,
            "text.ngram" => self.ensemble.text.ngram = parse_positive(key, v)?,
            "text.buckets" => self.ensemble.text.buckets = parse(key, v)?,
            "text.learning_rate" => self.ensemble.text.learning_rate = parse(key, v)?,
            "text.epochs" => self.ensemble.text.epochs = parse_positive(key, v)?,
            "text.min_count" => self.ensemble.text.min_count = parse(key, v)?,
            "metrics.window" => self.metrics.window = parse_positive(key, v)? as u32,
            "metrics.alpha" => {
                let a = parse_unit(key, v)?;
                if a == 0.0 || a == 1.0 {
                    return Err(AppError::config(format!("{key} must lie strictly inside (0, 1)")));
                }
                self.metrics.alpha = a;
            }
            "metrics.bins" => self.metrics.bins = parse_positive(key, v)?,
            "metrics.bubble_bins" => self.metrics.bubble_bins = parse_positive(key, v)?,
            "metrics.periods" => self.metrics.periods = parse_periods(key, v)?,
            "metrics.calibrated" => self.metrics.calibrated = parse(key, v)?,
            "metrics.calibration_labeled" => self.calibration_labeled = parse_path(v),
            "topics.k" => self.topics.k = parse_positive(key, v)?,
            "topics.top_words" => self.topics.top_words = parse_positive(key, v)?,
            "topics.report_top" => self.topics.report_top = parse_positive(key, v)?,
            "topics.field" => {
                self.topics.field = match v {
                    "comments" => TextField::Comments,
                    "snippet" => TextField::Snippet,
                    "transcript" => TextField::Transcript,
                    _ => return Err(AppError::config(format!("{key} must be comments, snippet or transcript"))),
                }
            }
            "topics.weighting" => {
                self.topics.weighting = match v {
                    "tfidf" => TermWeighting::Tfidf,
                    "counts" => TermWeighting::Counts,
                    _ => return Err(AppError::config(format!("{key} must be tfidf or counts"))),
                }
            }
            "topics.iterations" => self.topics.nmf.max_iterations = parse_positive(key, v)?,
            "topics.tolerance" => self.topics.nmf.tolerance = parse(key, v)?,
            "topics.seed" => self.topics.nmf.seed = parse(key, v)?,
            "topics.min_df" => self.topics.min_df = parse(key, v)?,
            "topics.discriminating_top" => self.topics.discriminating_top = parse_positive(key, v)?,
            "live.timeout_secs" => self.live.timeout_secs = parse_positive(key, v)? as u64,
            "live.retries" => self.live.retries = parse(key, v)?,
            "live.backoff_ms" => self.live.backoff_ms = parse(key, v)?,
            "live.rate_limit_ms" => self.live.rate_limit_ms = parse(key, v)?,
            _ => return Err(AppError::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.sim;
        let e = &self.ensemble;
        let m = &self.metrics;
        let t = &self.topics;
        vec![
            ("source", String::from(match self.source {
                SourceKind::Simulator => "simulator",
                SourceKind::Live => "live",
            })),
            ("out_dir", self.out_dir.display().to_string()),
            ("sim.channels", s.channels.to_string()),
            ("sim.videos_per_channel", s.videos_per_channel.to_string()),
            ("sim.base_rate", s.base_rate.to_string()),
            ("sim.homophily", s.homophily.to_string()),
            ("sim.seed", s.seed.to_string()),
            ("sim.start", s.start.to_string()),
            ("sim.history_days", s.history_days.to_string()),
            ("sim.future_days", s.future_days.to_string()),
            ("sim.max_comments", s.max_comments.to_string()),
            ("sim.transcript_probability", s.transcript_probability.to_string()),
            ("sim.comments_disabled_probability", s.comments_disabled_probability.to_string()),
            ("sim.signal", s.signal.to_string()),
            ("sim.labeled", self.sim_labeled.to_string()),
            ("sim.calibration", self.sim_calibration.to_string()),
            ("snowball.initial_seeds", path_text(&self.snowball.initial_seeds)),
            ("snowball.initial_count", self.snowball.initial_count.to_string()),
            ("snowball.target", self.snowball.target.to_string()),
            ("snowball.k", self.snowball.k.to_string()),
            ("snowball.weighting", String::from(weighting_text(self.snowball.weighting))),
            ("snowball.cluster_id", self.snowball.cluster_id.map(|c| c.to_string()).unwrap_or_default()),
            ("snowball.anchors", self.snowball.anchors.join(",")),
            ("snowball.manual_additions", path_text(&self.snowball.manual_additions)),
            ("harvest.seeds", path_text(&self.harvest.seeds)),
            ("harvest.k", self.harvest.k.to_string()),
            ("harvest.retain", self.harvest.retain.to_string()),
            ("harvest.max_comments", self.harvest.max_comments.to_string()),
            ("ensemble.repeats", e.repeats.to_string()),
            ("ensemble.train_fraction", e.train_fraction.to_string()),
            ("ensemble.seed", e.seed.to_string()),
            ("ensemble.min_per_class", e.min_per_class.to_string()),
            ("ensemble.l2", e.stacking.l2.to_string()),
            ("ensemble.labeled", path_text(&self.labeled)),
            ("threshold", self.threshold.to_string()),
            ("text.dim", e.text.dim.to_string()),
            ("text.ngram", e.text.ngram.to_string()),
            ("text.buckets", e.text.buckets.to_string()),
            ("text.learning_rate", e.text.learning_rate.to_string()),
            ("text.epochs", e.text.epochs.to_string()),
            ("text.min_count", e.text.min_count.to_string()),
            ("metrics.window", m.window.to_string()),
            ("metrics.alpha", m.alpha.to_string()),
            ("metrics.bins", m.bins.to_string()),
            ("metrics.bubble_bins", m.bubble_bins.to_string()),
            ("metrics.periods", m.periods.iter().map(|p| format!("{}..{}", p.start, p.end)).collect::<Vec<_>>().join("; ")),
            ("metrics.calibrated", m.calibrated.to_string()),
            ("metrics.calibration_labeled", path_text(&self.calibration_labeled)),
            ("topics.k", t.k.to_string()),
            ("topics.top_words", t.top_words.to_string()),
            ("topics.report_top", t.report_top.to_string()),
            ("topics.field", String::from(field_text(t.field))),
            ("topics.weighting", String::from(match t.weighting {
                TermWeighting::Tfidf => "tfidf",
                TermWeighting::Counts => "counts",
            })),
            ("topics.iterations", t.nmf.max_iterations.to_string()),
            ("topics.tolerance", t.nmf.tolerance.to_string()),
            ("topics.seed", t.nmf.seed.to_string()),
            ("topics.min_df", t.min_df.to_string()),
            ("topics.discriminating_top", t.discriminating_top.to_string()),
            ("live.timeout_secs", self.live.timeout_secs.to_string()),
            ("live.retries", self.live.retries.to_string()),
            ("live.backoff_ms", self.live.backoff_ms.to_string()),
            ("live.rate_limit_ms", self.live.rate_limit_ms.to_string()),
        ]
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Environment variable overriding `key`.
    pub fn env_name(key: &str) -> String {
        format!("RECAUDIT_{}", key.to_ascii_uppercase().replace('.', "_"))
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        let keys: Vec<&str> = self.entries().into_iter().map(|(k, _)| k).collect();
        for key in keys {
            if let Some(v) = lookup(&Self::env_name(key)) {
                self.set(key, &v)?;
            }
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then the environment. Relative
    /// paths in the file resolve against the file's directory.
    pub fn load(path: Option<&Path>, lookup: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut c = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
            c.apply_text(&text)?;
            if let Some(base) = path.parent() {
                c.resolve_relative(base);
            }
        }
        c.apply_env(lookup)?;
        Ok(c)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.snowball.initial_seeds);
        fix(&mut self.snowball.manual_additions);
        fix(&mut self.harvest.seeds);
        fix(&mut self.labeled);
        fix(&mut self.calibration_labeled);
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
    }

    /// Canonical rendering; its digest identifies the configuration.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    /// The configuration without `out_dir`, so equal runs in different
    /// directories share a digest.
    pub fn content_digest(&self) -> String {
        let text: String = self
            .entries()
            .into_iter()
            .filter(|(k, _)| *k != "out_dir")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        sha256_hex(text.as_bytes())
    }

    /// A configured seed replaces every component seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.ensemble.seed = seed;
        self.topics.nmf.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.harvest.k, 20);
        assert_eq!(c.harvest.retain, 1000);
        assert_eq!(c.harvest.max_comments, 200);
        assert_eq!(c.ensemble.repeats, 100);
        assert_eq!(c.ensemble.train_fraction, 0.6);
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.metrics.window, 7);
        assert_eq!(c.topics.top_words, 25);
        assert_eq!(c.snowball.initial_count, 250);
        assert_eq!(c.snowball.target, 12_000);
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::default();
        c.set("metrics.periods", "2019-01-01..2019-01-31; 2019-02-01..2019-02-10").unwrap();
        c.set("snowball.anchors", "UC1, UC2").unwrap();
        let mut d = PipelineConfig::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn environment_overrides_file() {
        let lookup = |name: &str| (name == "RECAUDIT_SIM_BASE_RATE").then(|| String::from("0.3"));
        let mut c = PipelineConfig::default();
        c.apply_text("sim.base_rate = 0.1").unwrap();
        c.apply_env(lookup).unwrap();
        assert_eq!(c.sim.base_rate, 0.3);
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = PipelineConfig::default();
        assert!(c.set("sim.base_rate", "1.5").is_err());
        assert!(c.set("harvest.k", "0").is_err());
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("metrics.periods", "2019-02-01..2019-01-01").is_err());
        assert!(c.apply_text("just words").is_err());
    }
}

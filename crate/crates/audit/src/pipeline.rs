//! The subcommands as library functions. Each reads and writes under the
//! configured output directory and records a [`RunManifest`].
//!
//! Layout of the output directory:
//!
//! ```text
//! platform/{channels,videos,ground_truth}.jsonl   simulate
//! labeled.jsonl, calibration.jsonl                simulate
//! seeds/*                                         snowball
//! snapshots/YYYY-MM-DD.jsonl (+ .videos.jsonl)    harvest
//! models/ensemble.bin, models/weights.csv         train
//! likelihoods/YYYY-MM-DD.csv                      score
//! reports/*.csv, reports/*.json                   trends, calibrate, bubble, topics, validate
//! manifests/<step>.json
//! ```
//!
//! [`RunManifest`]: crate::manifest::RunManifest

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use recaudit_core::corpus::{
    validate_corpus, ChannelRecord, Corpus, DailySnapshot, LabeledExample, RecommendationEdge,
    VideoRecord, Violation,
};
use recaudit_core::crawl::{
    assemble_snapshot, cluster_channels, harvest_channel, select_seed_cluster, snowball_channels,
    ClusterDesignation,
};
use recaudit_core::day::Day;
use recaudit_core::ensemble::{
    assemble_ensemble, classify_video, train_repetition, TrainedEnsemble, MODULE_NAMES,
};
use recaudit_core::metrics::{
    calibration_curve, filter_bubble_matrix, trend_series, CalibrationCurve, Likelihood,
    LikelihoodMap, Period,
};
use recaudit_core::simulator::{labeled_set, SimulatedPlatform};
use recaudit_core::source::{
    score_comment_attributes, AttributeScorer, RecommendationSource, SourceError,
};
use recaudit_core::text::tokenize;
use recaudit_core::topics::{discriminating_words, documents_for, fit_topics, TextField, TopicError};
use serde::{Deserialize, Serialize};

use crate::bundle;
use crate::config::{PipelineConfig, SourceKind};
use crate::error::{AppError, Result};
use crate::lexicon::default_scorer;
use crate::live::{LiveAttributeScorer, LiveSource};
use crate::manifest::{run_step, StepStatus};
use crate::store::{
    ensure_dir, read_csv, read_json, read_jsonl, read_key_list, write_csv, write_json,
    write_jsonl, write_key_list,
};

pub const ENSEMBLE_KIND: &str = "trained-ensemble";

#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub overwrite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub video_id: String,
    pub conspiratorial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRow {
    pub video_id: String,
    /// Empty when the video is unclassifiable.
    pub likelihood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdgeRow {
    pub a: String,
    pub b: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub channel_id: String,
    pub community: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub module: String,
    pub coefficient: f64,
    pub relative_weight_pct: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleRow {
    pub period_start: Day,
    pub period_end: Day,
    pub bin: usize,
    pub source_lower: f64,
    pub source_upper: f64,
    pub value: Option<f64>,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub lower: f64,
    pub upper: f64,
    pub n: u64,
    pub k: u64,
    pub proportion: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub rank: usize,
    pub topic: usize,
    pub pct_rec: f64,
    pub pct_vid: f64,
    pub videos: usize,
    pub recommendations: u64,
    pub words: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRow {
    pub field: String,
    pub class: String,
    pub rank: usize,
    pub word: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnowballSummary {
    pub initial_seeds: Vec<String>,
    pub channels: usize,
    pub under_target: bool,
    pub failed_channels: Vec<String>,
    pub communities: usize,
    pub seed_cluster: usize,
    pub seed_channels: usize,
}

/// Where the platform data comes from.
#[derive(Debug)]
pub enum Platform {
    Simulated(Box<SimulatedPlatform>),
    Live(LiveSource),
}

impl Platform {
    pub fn open(config: &PipelineConfig) -> Result<Self> {
        match config.source {
            SourceKind::Simulator => Ok(Platform::Simulated(Box::new(
                SimulatedPlatform::generate(&config.sim).map_err(AppError::config)?,
            ))),
            SourceKind::Live => Ok(Platform::Live(LiveSource::from_env(config.live.clone())?)),
        }
    }

    /// Runs `f` against the platform as seen on `date`. The live platform
    /// only has a present.
    pub fn with_day<R>(&self, date: Day, f: impl FnOnce(&(dyn RecommendationSource + Sync)) -> R) -> R {
        match self {
            Platform::Simulated(p) => f(&p.on(date)),
            Platform::Live(l) => f(l),
        }
    }

    pub fn simulated(&self) -> Option<&SimulatedPlatform> {
        match self {
            Platform::Simulated(p) => Some(p),
            Platform::Live(_) => None,
        }
    }
}

/// The live scorer when one is configured, else the lexicon stand-in.
pub fn attribute_scorer(config: &PipelineConfig) -> Box<dyn AttributeScorer + Sync> {
    match config.source {
        SourceKind::Live => match LiveAttributeScorer::from_env(&config.live) {
            Some(s) => Box::new(s),
            None => Box::new(default_scorer()),
        },
        SourceKind::Simulator => Box::new(default_scorer()),
    }
}

/// Fills missing comment attribute scores. A scorer failure leaves the
/// comment unscored, so the attribute modality degrades to absent.
pub fn score_attributes(video: &mut VideoRecord, scorer: &(dyn AttributeScorer + Sync)) {
    for c in &mut video.comments {
        if c.attribute_scores.is_none() {
            c.attribute_scores = score_comment_attributes(scorer, c).ok();
        }
    }
}

impl Context {
    pub fn new(config: PipelineConfig, overwrite: bool) -> Self {
        Self { config, overwrite }
    }

    pub fn root(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root().join(rel)
    }

    fn digest(&self) -> String {
        self.config.content_digest()
    }

    fn seed(&self) -> u64 {
        self.config.sim.seed
    }

    fn step(
        &self,
        name: &str,
        inputs: &[PathBuf],
        body: impl FnOnce() -> Result<Vec<PathBuf>>,
    ) -> Result<StepStatus> {
        ensure_dir(self.root())?;
        run_step(self.root(), name, &self.digest(), self.seed(), inputs, self.overwrite, body)
    }

    pub fn snapshot_path(&self, date: Day) -> PathBuf {
        self.path(&format!("snapshots/{date}.jsonl"))
    }

    pub fn videos_path(&self, date: Day) -> PathBuf {
        self.path(&format!("snapshots/{date}.videos.jsonl"))
    }

    pub fn likelihood_path(&self, date: Day) -> PathBuf {
        self.path(&format!("likelihoods/{date}.csv"))
    }

    fn labeled_path(&self) -> PathBuf {
        self.config.labeled.clone().unwrap_or_else(|| self.path("labeled.jsonl"))
    }

    fn calibration_path(&self) -> PathBuf {
        self.config
            .calibration_labeled
            .clone()
            .unwrap_or_else(|| self.path("calibration.jsonl"))
    }

    fn ensemble_path(&self) -> PathBuf {
        self.path("models/ensemble.bin")
    }

    /// Harvested dates in order.
    pub fn snapshot_dates(&self) -> Result<Vec<Day>> {
        let dir = self.path("snapshots");
        let Ok(entries) = std::fs::read_dir(&dir) else {
            return Ok(Vec::new());
        };
        let mut dates: Vec<Day> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                name.strip_suffix(".jsonl")
                    .filter(|stem| !stem.ends_with(".videos"))
                    .and_then(|stem| stem.parse().ok())
            })
            .collect();
        dates.sort();
        Ok(dates)
    }

    pub fn load_snapshot(&self, date: Day) -> Result<DailySnapshot> {
        let path = self.snapshot_path(date);
        let mut records: Vec<DailySnapshot> = read_jsonl(&path)?;
        if records.len() != 1 {
            return Err(AppError::data(format!("{} must hold exactly one snapshot", path.display())));
        }
        Ok(records.remove(0))
    }

    pub fn load_ensemble(&self) -> Result<TrainedEnsemble> {
        bundle::load(&self.ensemble_path(), ENSEMBLE_KIND)
    }

    fn load_likelihoods(&self, dates: &[Day]) -> Result<LikelihoodMap> {
        let mut map = LikelihoodMap::new();
        for &d in dates {
            let rows: Vec<LikelihoodRow> = read_csv(&self.likelihood_path(d))?;
            for r in rows {
                let l = r.likelihood.map_or(Likelihood::Unclassifiable, Likelihood::Score);
                map.insert(r.video_id, l);
            }
        }
        Ok(map)
    }

    fn load_videos(&self, dates: &[Day]) -> Result<BTreeMap<String, VideoRecord>> {
        let mut out = BTreeMap::new();
        for &d in dates {
            for v in read_jsonl::<VideoRecord>(&self.videos_path(d))? {
                out.insert(v.video_id.clone(), v);
            }
        }
        Ok(out)
    }

    fn day_inputs(&self, dates: &[Day], likelihoods: bool) -> Vec<PathBuf> {
        let mut inputs = Vec::new();
        for &d in dates {
            inputs.push(self.snapshot_path(d));
            inputs.push(self.videos_path(d));
            if likelihoods {
                inputs.push(self.likelihood_path(d));
            }
        }
        inputs
    }

    /// Writes the simulated platform and its labeled sets.
    pub fn simulate(&self) -> Result<StepStatus> {
        let cfg = &self.config;
        self.step("simulate", &[], || {
            let platform = SimulatedPlatform::generate(&cfg.sim).map_err(AppError::config)?;
            ensure_dir(&self.path("platform"))?;
            let truth: Vec<GroundTruthRow> = platform
                .ground_truth()
                .into_iter()
                .map(|(video_id, conspiratorial)| GroundTruthRow { video_id, conspiratorial })
                .collect();
            let outputs = vec![
                self.path("platform/channels.jsonl"),
                self.path("platform/videos.jsonl"),
                self.path("platform/ground_truth.jsonl"),
                self.path("labeled.jsonl"),
                self.path("calibration.jsonl"),
            ];
            write_jsonl(&outputs[0], platform.channels())?;
            write_jsonl(&outputs[1], platform.videos())?;
            write_jsonl(&outputs[2], &truth)?;
            write_jsonl(&outputs[3], &labeled_set(&cfg.sim, cfg.sim_labeled, 0))?;
            write_jsonl(&outputs[4], &labeled_set(&cfg.sim, cfg.sim_calibration, 1))?;
            Ok(outputs)
        })
    }

    /// Snowball crawl, clustering and seed-cluster selection.
    pub fn snowball(&self) -> Result<StepStatus> {
        let cfg = &self.config;
        let mut inputs = Vec::new();
        inputs.extend(cfg.snowball.initial_seeds.clone());
        inputs.extend(cfg.snowball.manual_additions.clone());
        self.step("snowball", &inputs, || {
            let platform = Platform::open(cfg)?;
            let initial = match (&cfg.snowball.initial_seeds, platform.simulated()) {
                (Some(path), _) => read_key_list(path)?,
                (None, Some(sim)) => most_subscribed(sim.channels(), cfg.snowball.initial_count),
                (None, None) => {
                    return Err(AppError::config("snowball.initial_seeds is required for the live source"))
                }
            };
            let target = cfg.snowball.target.max(initial.len());
            let result = platform
                .with_day(cfg.sim.start, |src| snowball_channels(&src, &initial, target, cfg.snowball.k))
                .map_err(AppError::data)?;
            let graph = result
                .graph
                .induced(result.channels.iter().map(String::as_str))
                .with_weighting(cfg.snowball.weighting);
            let partition = cluster_channels(&graph).map_err(AppError::data)?;
            let designation = match (cfg.snowball.cluster_id, cfg.snowball.anchors.is_empty()) {
                (Some(id), _) => ClusterDesignation::Id(id),
                (None, false) => ClusterDesignation::Anchors(cfg.snowball.anchors.clone()),
                (None, true) => ClusterDesignation::Anchors(initial.clone()),
            };
            let manual = match &cfg.snowball.manual_additions {
                Some(p) => read_key_list(p)?,
                None => Vec::new(),
            };
            let seeds = select_seed_cluster(&partition, &manual, &designation).map_err(AppError::config)?;
            let seed_cluster = partition.community(&seeds[0]).unwrap_or(0);

            ensure_dir(&self.path("seeds"))?;
            let outputs = vec![
                self.path("seeds/snowball_channels.txt"),
                self.path("seeds/channel_graph.csv"),
                self.path("seeds/partition.csv"),
                self.path("seeds/seed_channels.txt"),
                self.path("seeds/snowball.json"),
            ];
            write_key_list(&outputs[0], &result.channels)?;
            let edges: Vec<GraphEdgeRow> = graph
                .edges()
                .map(|(a, b, weight)| GraphEdgeRow { a: a.into(), b: b.into(), weight })
                .collect();
            write_csv(&outputs[1], &edges)?;
            let rows: Vec<PartitionRow> = partition
                .iter()
                .map(|(c, community)| PartitionRow { channel_id: c.into(), community })
                .collect();
            write_csv(&outputs[2], &rows)?;
            write_key_list(&outputs[3], &seeds)?;
            write_json(
                &outputs[4],
                &SnowballSummary {
                    initial_seeds: initial,
                    channels: result.channels.len(),
                    under_target: result.under_target,
                    failed_channels: result.failed_channels.clone(),
                    communities: partition.community_count(),
                    seed_cluster,
                    seed_channels: seeds.len(),
                },
            )?;
            Ok(outputs)
        })
    }

    fn harvest_seeds(&self, platform: &Platform) -> Result<Vec<String>> {
        if let Some(p) = &self.config.harvest.seeds {
            return read_key_list(p);
        }
        let from_snowball = self.path("seeds/seed_channels.txt");
        if from_snowball.exists() {
            return read_key_list(&from_snowball);
        }
        match platform.simulated() {
            Some(sim) => Ok(sim.channels().iter().map(|c| c.channel_id.clone()).collect()),
            None => Err(AppError::config("no seed channels: set harvest.seeds or run snowball")),
        }
    }

    /// One day's harvest: the snapshot plus a sidecar with every source and
    /// retained video, comments attached and attribute-scored.
    pub fn harvest(&self, date: Day) -> Result<StepStatus> {
        let cfg = &self.config;
        let snapshot_path = self.snapshot_path(date);
        let mut inputs = Vec::new();
        inputs.extend(cfg.harvest.seeds.clone());
        let snowball_seeds = self.path("seeds/seed_channels.txt");
        if cfg.harvest.seeds.is_none() && snowball_seeds.exists() {
            inputs.push(snowball_seeds);
        }
        let step = format!("harvest-{date}");
        let overwrite = self.overwrite;
        self.step(&step, &inputs, || {
            if snapshot_path.exists() && !overwrite {
                return Err(AppError::AlreadyExists(snapshot_path.clone()));
            }
            let platform = Platform::open(cfg)?;
            let seeds = self.harvest_seeds(&platform)?;
            let scorer = attribute_scorer(cfg);
            let (snapshot, videos) = platform.with_day(date, |src| {
                harvest_day(src, &seeds, date, &cfg.harvest, scorer.as_ref())
            });
            if !snapshot.failed_channels.is_empty() && snapshot.failed_channels.len() == snapshot_seed_count(&seeds) {
                return Err(AppError::Fetch(SourceError::Transient(format!(
                    "all {} seed channels failed on {date}",
                    snapshot.failed_channels.len()
                ))));
            }
            ensure_dir(&self.path("snapshots"))?;
            let videos_path = self.videos_path(date);
            write_jsonl(&snapshot_path, std::slice::from_ref(&snapshot))?;
            write_jsonl(&videos_path, &videos)?;
            Ok(vec![snapshot_path.clone(), videos_path])
        })
    }

    fn load_labeled(&self, path: &Path) -> Result<Vec<LabeledExample>> {
        let scorer = attribute_scorer(&self.config);
        let mut labeled: Vec<LabeledExample> = read_jsonl(path)?;
        labeled.par_iter_mut().for_each(|e| {
            e.video = std::mem::replace(&mut e.video, VideoRecord::new("", "")).normalized();
            e.video.comments.truncate(self.config.harvest.max_comments);
            score_attributes(&mut e.video, scorer.as_ref());
        });
        Ok(labeled)
    }

    /// Trains the ensemble; repetitions run in parallel.
    pub fn train(&self) -> Result<StepStatus> {
        let labeled_path = self.labeled_path();
        self.step("train", std::slice::from_ref(&labeled_path), || {
            let labeled = self.load_labeled(&labeled_path)?;
            let mut config = self.config.ensemble;
            config.max_comments = self.config.harvest.max_comments;
            let reps = (0..config.repeats)
                .into_par_iter()
                .map(|i| train_repetition(&labeled, &config, i))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(AppError::data)?;
            let ensemble = assemble_ensemble(&labeled, &config, reps).map_err(AppError::data)?;
            ensure_dir(&self.path("models"))?;
            let model = self.ensemble_path();
            bundle::save(&model, ENSEMBLE_KIND, &ensemble)?;
            let weights_path = self.path("models/weights.csv");
            let rel = ensemble.relative_weights();
            let rows: Vec<WeightRow> = (0..MODULE_NAMES.len())
                .map(|m| WeightRow {
                    module: MODULE_NAMES[m].to_string(),
                    coefficient: ensemble.stacking.coefficients[m],
                    relative_weight_pct: rel[m],
                    mean: ensemble.stats.mean[m],
                    std: ensemble.stats.std[m],
                })
                .collect();
            write_csv(&weights_path, &rows)?;
            let meta_path = self.path("models/training.json");
            write_json(&meta_path, &ensemble.metadata)?;
            Ok(vec![model, weights_path, meta_path])
        })
    }

    /// Likelihoods for every video of the given days (all harvested days
    /// when `date` is `None`).
    pub fn score(&self, date: Option<Day>) -> Result<Vec<StepStatus>> {
        let dates = match date {
            Some(d) => vec![d],
            None => self.snapshot_dates()?,
        };
        if dates.is_empty() {
            return Err(AppError::data("no snapshots to score"));
        }
        let ensemble = self.load_ensemble()?;
        dates
            .iter()
            .map(|&d| {
                let inputs = vec![self.ensemble_path(), self.snapshot_path(d), self.videos_path(d)];
                self.step(&format!("score-{d}"), &inputs, || {
                    let snapshot = self.load_snapshot(d)?;
                    let videos: BTreeMap<String, VideoRecord> = read_jsonl::<VideoRecord>(&self.videos_path(d))?
                        .into_iter()
                        .map(|v| (v.video_id.clone(), v))
                        .collect();
                    let mut ids: BTreeSet<&str> = snapshot.retained_video_ids.iter().map(String::as_str).collect();
                    ids.extend(snapshot.edges.iter().map(|e| e.source_video_id.as_str()));
                    let ids: Vec<&str> = ids.into_iter().collect();
                    let rows: Vec<LikelihoodRow> = ids
                        .par_iter()
                        .map(|&id| LikelihoodRow {
                            video_id: id.to_string(),
                            likelihood: videos.get(id).and_then(|v| classify_video(&ensemble, v).ok()),
                        })
                        .collect();
                    ensure_dir(&self.path("likelihoods"))?;
                    let out = self.likelihood_path(d);
                    write_csv(&out, &rows)?;
                    Ok(vec![out])
                })
            })
            .collect()
    }

    fn calibration(&self) -> Result<Option<CalibrationCurve>> {
        if !self.config.metrics.calibrated {
            return Ok(None);
        }
        let path = self.path("reports/calibration.json");
        if !path.exists() {
            return Err(AppError::data("metrics.calibrated needs reports/calibration.json; run calibrate first"));
        }
        Ok(Some(read_json(&path)?))
    }

    fn metric_likelihoods(&self, dates: &[Day]) -> Result<LikelihoodMap> {
        let map = self.load_likelihoods(dates)?;
        Ok(match self.calibration()? {
            Some(curve) => curve.calibrate_map(&map),
            None => map,
        })
    }

    fn metric_inputs(&self, dates: &[Day]) -> Vec<PathBuf> {
        let mut inputs = self.day_inputs(dates, true);
        if self.config.metrics.calibrated {
            inputs.push(self.path("reports/calibration.json"));
        }
        inputs
    }

    /// Daily raw and weighted frequencies with rolling means.
    pub fn trends(&self) -> Result<StepStatus> {
        let dates = self.snapshot_dates()?;
        let inputs = self.metric_inputs(&dates);
        self.step("trends", &inputs, || {
            let snapshots = dates.iter().map(|&d| self.load_snapshot(d)).collect::<Result<Vec<_>>>()?;
            let likelihoods = self.metric_likelihoods(&dates)?;
            let views: BTreeMap<String, u64> = self
                .load_videos(&dates)?
                .into_iter()
                .map(|(id, v)| (id, v.view_count))
                .collect();
            let series = trend_series(
                &snapshots,
                &likelihoods,
                &views,
                self.config.threshold,
                self.config.metrics.window,
            )
            .map_err(AppError::data)?;
            ensure_dir(&self.path("reports"))?;
            let csv_path = self.path("reports/trends.csv");
            let json_path = self.path("reports/trends.json");
            write_csv(&csv_path, &series.rows)?;
            write_json(&json_path, &series)?;
            Ok(vec![csv_path, json_path])
        })
    }

    /// Calibration curve of the ensemble on a labeled sample.
    pub fn calibrate(&self) -> Result<StepStatus> {
        let sample = self.calibration_path();
        self.step("calibrate", &[self.ensemble_path(), sample.clone()], || {
            let ensemble = self.load_ensemble()?;
            let labeled = self.load_labeled(&sample)?;
            let scored: Vec<(f64, bool)> = labeled
                .par_iter()
                .filter_map(|e| {
                    classify_video(&ensemble, &e.video)
                        .ok()
                        .map(|l| (l, e.label.is_positive()))
                })
                .collect();
            let (preds, labels): (Vec<f64>, Vec<bool>) = scored.into_iter().unzip();
            let curve = calibration_curve(&preds, &labels, self.config.metrics.bins, self.config.metrics.alpha)
                .map_err(AppError::data)?;
            let rows: Vec<CalibrationRow> = curve
                .bins
                .iter()
                .map(|b| CalibrationRow {
                    lower: b.lower,
                    upper: b.upper,
                    n: b.n,
                    k: b.k,
                    proportion: b.proportion,
                    ci_low: b.ci_low,
                    ci_high: b.ci_high,
                })
                .collect();
            ensure_dir(&self.path("reports"))?;
            let csv_path = self.path("reports/calibration.csv");
            let json_path = self.path("reports/calibration.json");
            write_csv(&csv_path, &rows)?;
            write_json(&json_path, &curve)?;
            Ok(vec![csv_path, json_path])
        })
    }

    /// Conspiratorial-recommendation share by period and source likelihood.
    pub fn bubble(&self) -> Result<StepStatus> {
        let dates = self.snapshot_dates()?;
        let inputs = self.metric_inputs(&dates);
        self.step("bubble", &inputs, || {
            let (Some(&first), Some(&last)) = (dates.first(), dates.last()) else {
                return Err(AppError::data("no snapshots for the bubble matrix"));
            };
            let mut edges: Vec<RecommendationEdge> = Vec::new();
            for &d in &dates {
                let snap = self.load_snapshot(d)?;
                edges.extend(snap.retained_edges().cloned());
            }
            let likelihoods = self.metric_likelihoods(&dates)?;
            let periods = if self.config.metrics.periods.is_empty() {
                vec![Period { start: first, end: last }]
            } else {
                self.config.metrics.periods.clone()
            };
            let bins = self.config.metrics.bubble_bins;
            let m = filter_bubble_matrix(&edges, &likelihoods, &periods, bins, self.config.threshold)
                .map_err(AppError::data)?;
            let mut rows = Vec::new();
            for (pi, p) in m.periods.iter().enumerate() {
                for (bi, cell) in m.cells[pi].iter().enumerate() {
                    rows.push(BubbleRow {
                        period_start: p.start,
                        period_end: p.end,
                        bin: bi,
                        source_lower: bi as f64 / bins as f64,
                        source_upper: (bi + 1) as f64 / bins as f64,
                        value: cell.value,
                        edges: cell.edges,
                    });
                }
            }
            ensure_dir(&self.path("reports"))?;
            let csv_path = self.path("reports/bubble.csv");
            let json_path = self.path("reports/bubble.json");
            write_csv(&csv_path, &rows)?;
            write_json(&json_path, &m)?;
            Ok(vec![csv_path, json_path])
        })
    }

    /// NMF topics of recommended conspiratorial videos and discriminating
    /// words of the labeled set.
    pub fn topics(&self) -> Result<StepStatus> {
        let dates = self.snapshot_dates()?;
        let mut inputs = self.day_inputs(&dates, true);
        let labeled_path = self.labeled_path();
        inputs.push(labeled_path.clone());
        self.step("topics", &inputs, || {
            let t = &self.config.topics;
            let likelihoods = self.load_likelihoods(&dates)?;
            let videos = self.load_videos(&dates)?;
            let mut rec_counts = BTreeMap::<String, u64>::new();
            for &d in &dates {
                for e in self.load_snapshot(d)?.retained_edges() {
                    *rec_counts.entry(e.recommended_video_id.clone()).or_insert(0) += 1;
                }
            }
            let docs: Vec<(String, Vec<String>)> = rec_counts
                .keys()
                .filter(|id| {
                    likelihoods
                        .get(*id)
                        .and_then(|l| l.score())
                        .is_some_and(|l| l > self.config.threshold)
                })
                .filter_map(|id| videos.get(id))
                .map(|v| (v.video_id.clone(), documents_for(v, t.field).join(" ")))
                .map(|(id, text)| (id, tokenize(&text)))
                .filter(|(_, toks)| !toks.is_empty())
                .collect();
            let report = match fit_topics(&docs, &rec_counts, t.k, t.weighting, &t.nmf, t.top_words) {
                Ok(model) => Some(model.report),
                Err(TopicError::EmptyCorpus) => None,
                Err(e) => return Err(AppError::data(e)),
            };
            let rows: Vec<TopicRow> = report
                .as_ref()
                .map(|r| {
                    r.top(t.report_top)
                        .iter()
                        .enumerate()
                        .map(|(rank, s)| TopicRow {
                            rank: rank + 1,
                            topic: s.topic,
                            pct_rec: s.pct_rec,
                            pct_vid: s.pct_vid,
                            videos: s.videos,
                            recommendations: s.recommendations,
                            words: s.words.join(" "),
                        })
                        .collect()
                })
                .unwrap_or_default();

            let labeled = self.load_labeled(&labeled_path)?;
            let mut words = Vec::new();
            for (field, name) in [
                (TextField::Snippet, "snippet"),
                (TextField::Transcript, "transcript"),
                (TextField::Comments, "comments"),
            ] {
                let docs_of = |positive: bool| -> Vec<Vec<String>> {
                    labeled
                        .iter()
                        .filter(|e| e.label.is_positive() == positive)
                        .map(|e| tokenize(&documents_for(&e.video, field).join(" ")))
                        .filter(|d| !d.is_empty())
                        .collect()
                };
                let (pos, neg) = (docs_of(true), docs_of(false));
                if pos.is_empty() || neg.is_empty() {
                    continue;
                }
                let dw = discriminating_words(&pos, &neg, t.discriminating_top, t.min_df).map_err(AppError::data)?;
                for (class, list) in [("conspiratorial", &dw.positive), ("non_conspiratorial", &dw.negative)] {
                    for (rank, (word, score)) in list.iter().enumerate() {
                        words.push(WordRow {
                            field: name.to_string(),
                            class: class.to_string(),
                            rank: rank + 1,
                            word: word.clone(),
                            score: *score,
                        });
                    }
                }
            }
            ensure_dir(&self.path("reports"))?;
            let json_path = self.path("reports/topics.json");
            let csv_path = self.path("reports/topics.csv");
            let words_path = self.path("reports/discriminating_words.csv");
            write_json(&json_path, &report)?;
            write_csv(&csv_path, &rows)?;
            write_csv(&words_path, &words)?;
            Ok(vec![json_path, csv_path, words_path])
        })
    }

    /// Checks every corpus file present in the output directory.
    pub fn validate(&self) -> Result<Vec<Violation>> {
        let dates = self.snapshot_dates()?;
        let mut corpus = Corpus::default();
        let channels = self.path("platform/channels.jsonl");
        if channels.exists() {
            corpus.channels = read_jsonl(&channels)?;
        }
        let mut videos: BTreeMap<String, VideoRecord> = BTreeMap::new();
        let platform_videos = self.path("platform/videos.jsonl");
        if platform_videos.exists() {
            for v in read_jsonl::<VideoRecord>(&platform_videos)? {
                videos.insert(v.video_id.clone(), v);
            }
        }
        videos.extend(self.load_videos(&dates)?);
        corpus.videos = videos.into_values().collect();
        for &d in &dates {
            let s = self.load_snapshot(d)?;
            corpus.edges.extend(s.edges.iter().cloned());
            corpus.snapshots.push(s);
        }
        let labeled = self.labeled_path();
        if labeled.exists() {
            corpus.labeled = read_jsonl(&labeled)?;
        }
        let violations = validate_corpus(&corpus);
        ensure_dir(&self.path("reports"))?;
        write_json(&self.path("reports/validation.json"), &violations)?;
        Ok(violations)
    }
}

fn snapshot_seed_count(seeds: &[String]) -> usize {
    seeds.iter().collect::<BTreeSet<_>>().len()
}

fn most_subscribed(channels: &[ChannelRecord], n: usize) -> Vec<String> {
    let mut sorted: Vec<&ChannelRecord> = channels.iter().collect();
    sorted.sort_by(|a, b| {
        b.subscriber_count
            .cmp(&a.subscriber_count)
            .then_with(|| a.channel_id.cmp(&b.channel_id))
    });
    sorted.into_iter().take(n).map(|c| c.channel_id.clone()).collect()
}

/// Harvests one day: per-channel fetches in parallel, then every source and
/// retained video with its comments. Videos that cannot be fetched are left
/// out and later score as unclassifiable.
pub fn harvest_day(
    source: &(dyn RecommendationSource + Sync),
    seeds: &[String],
    date: Day,
    harvest: &crate::config::HarvestConfig,
    scorer: &(dyn AttributeScorer + Sync),
) -> (DailySnapshot, Vec<VideoRecord>) {
    let unique: Vec<&String> = seeds.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let results: Vec<_> = unique
        .par_iter()
        .map(|c| harvest_channel(&source, c, date, harvest.k).map_err(|e| ((*c).clone(), e)))
        .collect();
    let mut sources: BTreeMap<String, VideoRecord> = BTreeMap::new();
    for h in results.iter().flatten() {
        sources.insert(h.last_video.video_id.clone(), h.last_video.clone());
    }
    let snapshot = assemble_snapshot(date, unique.len(), results, harvest.retain);
    let mut ids: BTreeSet<String> = snapshot.retained_video_ids.clone();
    ids.extend(sources.keys().cloned());
    let ids: Vec<String> = ids.into_iter().collect();
    let mut videos: Vec<VideoRecord> = ids
        .par_iter()
        .filter_map(|id| {
            let mut v = match sources.get(id) {
                Some(v) => v.clone(),
                None => source.fetch_video(id).ok()?,
            };
            v.comments = match source.fetch_comments(id, harvest.max_comments) {
                Ok(c) => c,
                Err(SourceError::CommentsDisabled(_)) => Vec::new(),
                Err(_) => Vec::new(),
            };
            let mut v = v.normalized();
            score_attributes(&mut v, scorer);
            Some(v)
        })
        .collect();
    videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    (snapshot, videos)
}

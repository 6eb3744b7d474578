//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use oracles::{central_difference, clopper_pearson_oracle, relative_error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recaudit::config::PipelineConfig;
use recaudit::lexicon::default_scorer;
use recaudit::manifest::load_all;
use recaudit::pipeline::{score_attributes, Context, GroundTruthRow, LikelihoodRow};
use recaudit::store::{read_csv, read_jsonl};
use recaudit_core::corpus::{LabeledExample, RecommendationEdge};
use recaudit_core::crawl::{cluster_channels, modularity, ChannelGraph};
use recaudit_core::ensemble::{
    attribute_features, classify_video, f1_score, precision_recall, train_ensemble, EnsembleConfig,
};
use recaudit_core::linalg::Matrix;
use recaudit_core::logistic::{objective, objective_gradient, LogisticModel};
use recaudit_core::metrics::{
    clopper_pearson, filter_bubble_matrix, raw_frequency, weighted_frequency, Likelihood,
    LikelihoodMap, Period,
};
use recaudit_core::simulator::{labeled_set, planted_partition, SimParams, SimulatedPlatform};
use recaudit_core::source::RecommendationSource;
use recaudit_core::text::{train_text_classifier, TextHyper, TextModel};
use recaudit_core::topics::{nmf, NmfConfig};
use recaudit_core::Day;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

// 1. Ground-truth recovery.

const RECOVERY_TOLERANCE: f64 = 0.03;
const RECOVERY_BUDGET: Duration = Duration::from_secs(300);

fn ground_truth_recovery() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = PipelineConfig::default();
    config.out_dir = dir.path().to_path_buf();
    config.sim.channels = 100;
    config.sim.videos_per_channel = 10;
    config.sim.base_rate = 0.2;
    config.sim.homophily = 0.2;
    let p = config.sim.base_rate;
    let threshold = config.threshold;
    let start = config.sim.start;
    let ctx = Context::new(config, false);

    let began = Instant::now();
    single_threaded(|| -> recaudit::Result<()> {
        ctx.simulate()?;
        for d in 0..10 {
            ctx.harvest(start.offset(d))?;
        }
        ctx.train()?;
        ctx.score(None)?;
        ctx.trends()?;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let elapsed = began.elapsed();

    let trends: Vec<recaudit_core::metrics::TrendRow> =
        read_csv(&ctx.path("reports/trends.csv")).map_err(|e| e.to_string())?;
    let daily: Vec<f64> = trends.iter().filter_map(|r| r.raw_frequency).collect();
    if daily.len() != 10 {
        return Err(format!("{} defined days, expected 10", daily.len()));
    }
    let estimate = daily.iter().sum::<f64>() / daily.len() as f64;

    // Expectation from the planted rate and the likelihoods the pipeline
    // assigned to each class.
    let truth: BTreeMap<String, bool> = read_jsonl::<GroundTruthRow>(&ctx.path("platform/ground_truth.jsonl"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| (r.video_id, r.conspiratorial))
        .collect();
    let mut scored = BTreeMap::new();
    for d in 0..10 {
        for r in read_csv::<LikelihoodRow>(&ctx.likelihood_path(start.offset(d))).map_err(|e| e.to_string())? {
            if let Some(l) = r.likelihood {
                scored.insert(r.video_id, l);
            }
        }
    }
    let class_mean = |positive: bool| {
        let v: Vec<f64> = scored
            .iter()
            .filter(|(id, _)| truth.get(*id) == Some(&positive))
            .map(|(_, &l)| if l > threshold { l } else { 0.0 })
            .collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let (m_pos, m_neg) = (class_mean(true), class_mean(false));
    let expected = p * m_pos + (1.0 - p) * m_neg;
    let ok = (estimate - expected).abs() <= RECOVERY_TOLERANCE && elapsed < RECOVERY_BUDGET;
    check(
        ok,
        format!(
            "raw {estimate:.4} vs expected {expected:.4} (planted likelihood {m_pos:.4}, false-positive mass {m_neg:.4}), {:.1}s single-threaded",
            elapsed.as_secs_f64()
        ),
    )
}

// 2. Filter-bubble oracle.

const BUBBLE_TOLERANCE: f64 = 0.05;
const MIN_CELL_EDGES: usize = 5000;

fn filter_bubble_oracle() -> Outcome {
    let params = SimParams {
        channels: 200,
        videos_per_channel: 10,
        base_rate: 0.1,
        homophily: 0.8,
        seed: 11,
        ..SimParams::default()
    };
    let platform = SimulatedPlatform::generate(&params).map_err(|e| e.to_string())?;
    let likelihoods: LikelihoodMap = platform
        .ground_truth()
        .into_iter()
        .map(|(id, c)| (id, Likelihood::Score(if c { 1.0 } else { 0.0 })))
        .collect();
    let mut edges = Vec::new();
    for d in 0..6 {
        let date = params.start.offset(d);
        let day = platform.on(date);
        for v in platform.videos() {
            let recs = day.fetch_watch_next(&v.video_id, 20).map_err(|e| e.to_string())?;
            for (i, r) in recs.into_iter().enumerate() {
                edges.push(RecommendationEdge {
                    date,
                    source_video_id: v.video_id.clone(),
                    recommended_video_id: r,
                    rank: i as u32 + 1,
                });
            }
        }
    }
    let periods: Vec<Period> = (0..3)
        .map(|i| Period {
            start: params.start.offset(2 * i),
            end: params.start.offset(2 * i + 1),
        })
        .collect();
    let m = filter_bubble_matrix(&edges, &likelihoods, &periods, 10, 0.5).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (pi, row) in m.cells.iter().enumerate() {
        let filled: Vec<(usize, f64, usize)> = row
            .iter()
            .enumerate()
            .filter_map(|(b, c)| c.value.map(|v| (b, v, c.edges)))
            .collect();
        let (Some(&bottom), Some(&top)) = (filled.first(), filled.last()) else {
            return Err(format!("period {pi} has no filled cells"));
        };
        let monotone = filled.windows(2).all(|w| w[0].1 <= w[1].1);
        ok &= (top.1 - params.homophily).abs() <= BUBBLE_TOLERANCE
            && (bottom.1 - params.base_rate).abs() <= BUBBLE_TOLERANCE
            && top.2 >= MIN_CELL_EDGES
            && bottom.2 >= MIN_CELL_EDGES
            && monotone;
        parts.push(format!(
            "period {pi}: top {:.4} ({} edges), bottom {:.4} ({} edges){}",
            top.1,
            top.2,
            bottom.1,
            bottom.2,
            if monotone { "" } else { ", not monotone" }
        ));
    }
    check(ok, parts.join("; "))
}

// 3. Clopper-Pearson.

const CP_TOLERANCE: f64 = 1e-6;
const MIN_COVERAGE: f64 = 0.94;

fn clopper_pearson_check() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=100u64 {
        for k in 0..=n {
            let (lo, hi) = clopper_pearson(k, n, 0.05).map_err(|e| e.to_string())?;
            let (olo, ohi) = clopper_pearson_oracle(k, n, 0.05);
            worst = worst.max((lo - olo).abs()).max((hi - ohi).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 10_000;
    let mut covered = 0;
    for _ in 0..trials {
        let k = (0..50).filter(|_| rng.random::<f64>() < 0.3).count() as u64;
        let (lo, hi) = clopper_pearson(k, 50, 0.05).map_err(|e| e.to_string())?;
        if lo <= 0.3 && 0.3 <= hi {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    check(
        worst <= CP_TOLERANCE && coverage >= MIN_COVERAGE,
        format!("max oracle deviation {worst:.2e} over k <= n <= 100, coverage {coverage:.4}"),
    )
}

// 4. Classifier protocol.

const MIN_PRECISION: f64 = 0.9;
const MIN_RECALL: f64 = 0.9;

fn scored_labeled(count: usize, salt: u64) -> Vec<LabeledExample> {
    let scorer = default_scorer();
    let mut set = labeled_set(&SimParams::default(), count, salt);
    for e in &mut set {
        score_attributes(&mut e.video, &scorer);
    }
    set
}

fn classifier_protocol() -> Outcome {
    let train = scored_labeled(400, 0);
    let held_out = scored_labeled(400, 9);
    let config = EnsembleConfig::default();
    let ensemble = train_ensemble(&train, &config).map_err(|e| e.to_string())?;
    let preds: Vec<f64> = held_out
        .iter()
        .map(|e| classify_video(&ensemble, &e.video).unwrap_or(0.0))
        .collect();
    let labels: Vec<bool> = held_out.iter().map(|e| e.label.is_positive()).collect();
    let pr = precision_recall(&preds, &labels, 0.5).map_err(|e| e.to_string())?;
    let precision = pr.precision.unwrap_or(0.0);

    let a = [0.1, 0.25, 0.5, 0.0, 0.75, 0.9, 0.3];
    let f = attribute_features(&[a; 5]).ok_or("no features")?;
    let mut identity = f.len() == 35 && f[..7] == a && f[7..14].iter().all(|s| *s == 0.0);
    let mut slot = 14;
    for i in 0..7 {
        for j in i + 1..7 {
            identity &= f[slot] == a[i] * a[j];
            slot += 1;
        }
    }
    check(
        precision >= MIN_PRECISION && pr.recall >= MIN_RECALL && identity,
        format!(
            "{} repeats, held-out precision {precision:.4} recall {:.4}, 35-D identity {}",
            config.repeats,
            pr.recall,
            if identity { "exact" } else { "broken" }
        ),
    )
}

// 5. Numerical kernels.

const GRADIENT_H: f64 = 1e-5;
const GRADIENT_TOLERANCE: f64 = 1e-4;

fn text_gradient_error() -> f64 {
    let data = [
        ("secret elite hoax agenda", true),
        ("hoax coverup elite truth", true),
        ("cute puppy recipe game", false),
        ("recipe game cute kitchen", false),
        ("truth puppy game hoax", true),
    ];
    let hyper = TextHyper {
        dim: 4,
        buckets: 64,
        min_count: 1,
        epochs: 3,
        learning_rate: 0.5,
        seed: 2,
        ..TextHyper::default()
    };
    let model = train_text_classifier(&data, &hyper).expect("fixture trains");
    let docs: Vec<(Vec<u32>, bool)> = data.iter().map(|(t, y)| (model.features(t), *y)).collect();
    let loss = |m: &TextModel| docs.iter().map(|(ids, y)| m.loss(ids, *y)).sum::<f64>();
    let mut head = vec![0.0; model.head.len()];
    let mut rows = BTreeMap::<u32, Vec<f64>>::new();
    for (ids, y) in &docs {
        let g = model.gradient(ids, *y);
        head.iter_mut().zip(&g.head).for_each(|(a, b)| *a += b);
        for (id, row) in g.embedding {
            let acc = rows.entry(id).or_insert_with(|| vec![0.0; hyper.dim]);
            acc.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
        }
    }
    let mut worst = 0.0f64;
    let w = model.head.clone();
    for i in 0..w.len() {
        let fd = central_difference(
            |x| {
                let mut m = model.clone();
                m.head.copy_from_slice(x);
                loss(&m)
            },
            &w,
            i,
            GRADIENT_H,
        );
        worst = worst.max(relative_error(head[i], fd));
    }
    for (&id, grad) in &rows {
        let row = model.embedding.row(id);
        for j in 0..hyper.dim {
            let fd = central_difference(
                |x| {
                    let mut m = model.clone();
                    m.embedding.row_mut(id).copy_from_slice(x);
                    loss(&m)
                },
                &row,
                j,
                GRADIENT_H,
            );
            worst = worst.max(relative_error(grad[j], fd));
        }
    }
    worst
}

fn logistic_gradient_error() -> f64 {
    let features: Vec<Vec<f64>> = (0..12)
        .map(|i| {
            let t = i as f64;
            vec![(t * 0.7).sin(), (t * 1.3).cos(), t / 12.0 - 0.4]
        })
        .collect();
    let labels: Vec<bool> = (0..12).map(|i| i % 3 != 0).collect();
    let model = LogisticModel {
        coefficients: vec![0.4, -1.2, 0.9],
        bias: 0.3,
    };
    let analytic = objective_gradient(&model, &features, &labels, 1e-3);
    let params = model.to_params();
    (0..params.len())
        .map(|i| {
            let fd = central_difference(
                |p| objective(&LogisticModel::from_params(p), &features, &labels, 1e-3),
                &params,
                i,
                GRADIENT_H,
            );
            relative_error(analytic[i], fd)
        })
        .fold(0.0, f64::max)
}

fn planted_louvain_exact(seed: u64) -> bool {
    let (edges, block) = planted_partition(2, 20, 0.9, 0.05, seed);
    let names: Vec<String> = (0..40).map(|i| format!("n{i:02}")).collect();
    let g = ChannelGraph::from_edges(edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str(), 1)));
    let Ok(p) = cluster_channels(&g) else {
        return false;
    };
    (0..40).all(|i| (0..40).all(|j| (p.community(&names[i]) == p.community(&names[j])) == (block[i] == block[j])))
}

fn numerical_kernels() -> Outcome {
    let text = text_gradient_error();
    let logistic = logistic_gradient_error();

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let v = Matrix::from_fn(8, 6, |_, _| rng.random::<f64>());
    let cfg = NmfConfig {
        max_iterations: 300,
        tolerance: 0.0,
        seed: 3,
    };
    let r = nmf(&v, 3, &cfg).map_err(|e| e.to_string())?;
    let monotone = r.objective_trace.windows(2).all(|w| w[1] <= w[0]);
    let (a, b) = ([0.5, 1.0, 2.0, 0.3], [1.5, 0.2, 0.7, 1.1, 0.9]);
    let rank_one = Matrix::from_fn(4, 5, |i, j| a[i] * b[j]);
    let fit = nmf(&rank_one, 1, &NmfConfig { max_iterations: 2000, ..cfg }).map_err(|e| e.to_string())?;
    let rank_one_err = rank_one.distance(&fit.w.matmul(&fit.h)) / rank_one.frobenius_norm();

    let planted = (0..20).filter(|&s| planted_louvain_exact(s)).count();
    let triangles = ChannelGraph::from_edges([
        ("a", "b", 1),
        ("b", "c", 1),
        ("a", "c", 1),
        ("d", "e", 1),
        ("e", "f", 1),
        ("d", "f", 1),
    ]);
    let q = cluster_channels(&triangles)
        .and_then(|p| modularity(&triangles, &p))
        .map_err(|e| e.to_string())?;
    check(
        text < GRADIENT_TOLERANCE
            && logistic < GRADIENT_TOLERANCE
            && monotone
            && rank_one_err < 1e-6
            && planted == 20
            && q == 0.5,
        format!(
            "gradient rel err text {text:.1e} logistic {logistic:.1e}; NMF trace {}, rank-1 err {rank_one_err:.1e}·|V|; planted blocks exact {planted}/20; two triangles Q = {q}",
            if monotone { "non-increasing" } else { "increases" }
        ),
    )
}

// 6. Frequency formulas.

fn edges_to(ids: &[&str]) -> Vec<RecommendationEdge> {
    ids.iter()
        .enumerate()
        .map(|(i, id)| RecommendationEdge {
            date: Day::from_ymd(2019, 1, 1).unwrap(),
            source_video_id: format!("src{i}"),
            recommended_video_id: id.to_string(),
            rank: 1,
        })
        .collect()
}

fn frequency_formulas() -> Outcome {
    let lmap = |pairs: &[(&str, f64)]| -> LikelihoodMap {
        pairs.iter().map(|(k, l)| (k.to_string(), Likelihood::Score(*l))).collect()
    };
    let raw_lk = lmap(&[("a", 0.9), ("b", 0.6), ("c", 0.4), ("d", 0.1)]);
    let raw = raw_frequency(&edges_to(&["a", "b", "c", "d"]), &raw_lk, 0.5)
        .map_err(|e| e.to_string())?
        .value;
    let w_lk = lmap(&[("a", 0.9), ("b", 0.4)]);
    let views: BTreeMap<String, u64> = [("src0".to_string(), 100), ("src1".to_string(), 300)].into();
    let weighted = weighted_frequency(&edges_to(&["a", "b"]), &w_lk, &views, 0.5)
        .map_err(|e| e.to_string())?
        .value;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut uniform_equal = 0;
    let fixtures = 200;
    for _ in 0..fixtures {
        let n = rng.random_range(1..60);
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let edges = edges_to(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        let lk: LikelihoodMap = ids.iter().map(|id| (id.clone(), Likelihood::Score(rng.random()))).collect();
        let v = rng.random_range(1..1_000_000u64);
        let views: BTreeMap<String, u64> = edges.iter().map(|e| (e.source_video_id.clone(), v)).collect();
        let r = raw_frequency(&edges, &lk, 0.5).map_err(|e| e.to_string())?.value;
        let w = weighted_frequency(&edges, &lk, &views, 0.5).map_err(|e| e.to_string())?.value;
        if r == w {
            uniform_equal += 1;
        }
    }
    check(
        raw == Some(0.375) && weighted == Some(0.225) && uniform_equal == fixtures,
        format!("raw {raw:?}, weighted {weighted:?}, uniform views equal {uniform_equal}/{fixtures}"),
    )
}

// 7. Determinism.

fn cli_run(out: &Path) -> Result<BTreeMap<String, BTreeMap<String, String>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_recaudit"))
        .args(["run", "--days", "2", "--seed", "17", "--out"])
        .arg(out)
        .args([
            "--set",
            "sim.channels=20",
            "--set",
            "ensemble.repeats=5",
            "--set",
            "sim.labeled=200",
            "--set",
            "sim.calibration=200",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(load_all(out)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(step, m)| (step, m.outputs))
        .collect())
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let first = cli_run(a.path())?;
    let second = cli_run(b.path())?;
    let files: usize = first.values().map(BTreeMap::len).sum();
    let differing: Vec<String> = first
        .iter()
        .flat_map(|(step, outs)| {
            let other = second.get(step);
            outs.iter()
                .filter(move |(k, d)| other.and_then(|o| o.get(*k)) != Some(d))
                .map(|(k, _)| k.clone())
        })
        .collect();
    check(
        files > 0 && first.len() == second.len() && differing.is_empty(),
        format!("{} steps, {files} output digests, {} differ {:?}", first.len(), differing.len(), differing),
    )
}

// 8. F1 consistency.

fn f1_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..2000 {
        let (tp, fneg) = (rng.random_range(0..80usize), rng.random_range(0..80usize));
        let (fp, tn) = (rng.random_range(0..80usize), rng.random_range(0..80usize));
        if tp + fneg == 0 || fp + tn == 0 {
            continue;
        }
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        for (count, pred, label) in [(tp, 0.9, true), (fneg, 0.1, true), (fp, 0.9, false), (tn, 0.1, false)] {
            preds.extend(std::iter::repeat_n(pred, count));
            labels.extend(std::iter::repeat_n(label, count));
        }
        let pr = precision_recall(&preds, &labels, 0.5).map_err(|e| e.to_string())?;
        if let (Some(p), Some(f1)) = (pr.precision, pr.f1) {
            let r = pr.recall;
            let direct = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            worst = worst.max((f1 - direct).abs() / direct.max(f64::MIN_POSITIVE));
            checked += 1;
        }
    }
    let reported = f1_score(0.78, 0.86);
    check(
        worst <= 4.0 * f64::EPSILON && (reported - 0.818).abs() < 5e-4 && (reported - 0.82).abs() <= 0.005,
        format!("{checked} random confusion matrices, max rel deviation {worst:.1e}; F1(0.78, 0.86) = {reported:.5}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "ground-truth recovery", ground_truth_recovery),
        (2, "filter-bubble oracle", filter_bubble_oracle),
        (3, "Clopper-Pearson", clopper_pearson_check),
        (4, "classifier protocol", classifier_protocol),
        (5, "numerical kernels", numerical_kernels),
        (6, "frequency formulas", frequency_formulas),
        (7, "determinism", determinism),
        (8, "F1 consistency", f1_consistency),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL - {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

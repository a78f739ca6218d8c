//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 5 and 6 need the FinNum corpus, converted to the dataset JSONL
//! format and named by `FINNUM_PATH`. Without it criterion 5 runs its
//! synthetic substitute and criterion 6 reports FAIL as not evaluable; an
//! unevaluable criterion does not change the exit status.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweetnum_core::encode::prepare_dataset;
use tweetnum_core::eval::{f1_report, feature_f1, kfold_cv, FeatureRule, ModelSpec};
use tweetnum_core::features::{extract_features, FeatureExtractor, FeatureVector};
use tweetnum_core::models::{GmModel, ModelConfig, ModelKind, Task};
use tweetnum_core::nn::gradcheck::check_round;
use tweetnum_core::taxonomy::{cohen_kappa, Dataset};
use tweetnum_core::textprep::normalize;
use tweetnum_core::trading::*;

const PREPROCESS_BUDGET: Duration = Duration::from_secs(1);
const FEATURE_BUDGET: Duration = Duration::from_secs(1);
const GRADCHECK_BUDGET: Duration = Duration::from_secs(30);
const GRADCHECK_TOLERANCE: f64 = 1e-4;
const GRADCHECK_ROUNDS: u64 = 20;
const METRIC_TOLERANCE: f64 = 1e-12;
const METRIC_INSTANCES: usize = 1000;
const SEEDS: [u64; 3] = [0, 1, 2];
const SUBSTITUTE_SYNTHETIC: usize = 500;
const SUBSTITUTE_DATA_SEED: u64 = 11;
const SUBSTITUTE_FOLDS: usize = 5;
const FINNUM_FOLDS: usize = 10;
const GM_MICRO: (f64, f64) = (45.46, 0.5);
const GM_MACRO: (f64, f64) = (9.03, 0.2);
const CHAR_TASK2_MACRO: (f64, f64) = (25.67, 5.0);
const LINEAR_TASK2_MACRO: f64 = 3.38;
const WORD_TASK1_MICRO: (f64, f64) = (67.61, 5.0);
const LINEAR_TASK1_MICRO: f64 = 59.17;
const PERCENTAGE_F1: (f64, f64) = (78.19, 5.0);
const TEMPORAL_F1: (f64, f64) = (83.18, 5.0);
const MIRROR_PATHS: u64 = 100;

enum Outcome {
    Pass,
    Fail,
    /// Required data is missing.
    Unavailable,
}

struct Verdict {
    outcome: Outcome,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            outcome: Outcome::Pass,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        if !ok {
            self.outcome = Outcome::Fail;
            self.notes.push(format!("failed: {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn within(&mut self, name: &str, value: f64, (target, tol): (f64, f64)) {
        self.check(
            (value - target).abs() <= tol,
            format!("{name} = {value:.2} (target {target} +/- {tol})"),
        );
    }

    fn budget(&mut self, elapsed: Duration, budget: Duration) {
        self.check(
            elapsed < budget,
            format!(
                "runtime {:.3}s (budget {}s)",
                elapsed.as_secs_f64(),
                budget.as_secs_f64()
            ),
        );
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn paper_tweets() -> Dataset {
    Dataset::load(fixtures().join("paper_tweets.jsonl")).expect("bundled fixture loads")
}

fn finnum() -> Option<Dataset> {
    let path = std::env::var_os("FINNUM_PATH")?;
    Some(
        Dataset::load(&path)
            .unwrap_or_else(|e| panic!("FINNUM_PATH {}: {e}", Path::new(&path).display())),
    )
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let date = normalize("$AAPL 8/17 gap filled").normalized;
    let qty = normalize("Unloaded 5,838 Shares").normalized;
    v.check(date.contains("D/DD"), format!("\"8/17\" -> {date:?}"));
    v.check(qty.contains("D,DDD"), format!("\"5,838\" -> {qty:?}"));
    let ds = paper_tweets();
    let all = ds
        .tweets()
        .iter()
        .all(|tw| !normalize(&tw.text).normalized.is_empty());
    v.check(
        all,
        format!("{} fixture tweets normalized", ds.tweets().len()),
    );
    v.budget(t.elapsed(), PREPROCESS_BUDGET);
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let ds = paper_tweets();
    let features = |id: &str, surface: &str| -> FeatureVector {
        let inst = ds
            .instances()
            .iter()
            .find(|i| i.tweet_id == id && i.surface == surface)
            .unwrap_or_else(|| panic!("{id} has no numeral {surface}"));
        let text = &ds
            .tweets()
            .iter()
            .find(|tw| tw.id == id)
            .expect("tweet")
            .text;
        extract_features(text, inst.offset, inst.length).expect("features")
    };
    type Case = (
        &'static str,
        &'static str,
        &'static str,
        fn(&FeatureVector) -> bool,
    );
    let cases: [Case; 10] = [
        ("T8", "10", "relative", |f| {
            f.percentage && f.relative_change
        }),
        ("T8", "23", "absolute", |f| {
            f.percentage && !f.relative_change
        }),
        ("T9", "44", "exercise", |f| {
            f.option_exercise && !f.option_maturity
        }),
        ("T10", "22", "maturity", |f| {
            f.option_maturity && !f.option_exercise
        }),
        ("T11", "5", "indicator", |f| f.indicator),
        ("T11", "13", "indicator", |f| f.indicator),
        ("T11", "20", "indicator", |f| f.indicator),
        ("T12", "8/17", "date", |f| f.date),
        ("T13", "2", "time", |f| f.time),
        ("T14", "5,838", "quantity", |f| f.quantity),
    ];
    for (id, surface, name, ok) in cases {
        let f = features(id, surface);
        v.check(ok(&f), format!("{id} {surface} -> {name}"));
    }
    v.budget(t.elapsed(), FEATURE_BUDGET);
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let mut shapes = 0;
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for seed in 0..GRADCHECK_ROUNDS {
        for c in check_round(seed).expect("gradient check runs") {
            shapes += 1;
            if c.max_rel_error > worst {
                worst = c.max_rel_error;
                worst_at = format!("{} [{}] seed {seed}", c.layer, c.shape);
            }
        }
    }
    v.check(
        shapes >= 20,
        format!("{shapes} random layer shapes checked"),
    );
    v.check(
        worst < GRADCHECK_TOLERANCE,
        format!("max relative error {worst:.2e} at {worst_at} (limit {GRADCHECK_TOLERANCE:e})"),
    );
    v.budget(t.elapsed(), GRADCHECK_BUDGET);
    v
}

/// Per-class counts by direct enumeration.
fn oracle_f1(pred: &[usize], gold: &[usize], classes: usize) -> (f64, f64) {
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0u64, 0u64, 0u64);
    let mut f1_sum = 0.0;
    for c in 0..classes {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (&p, &g) in pred.iter().zip(gold) {
            match (p == c, g == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let prec = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let rec = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        f1_sum += if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn_;
    }
    let p = tp_sum as f64 / (tp_sum + fp_sum) as f64;
    let r = tp_sum as f64 / (tp_sum + fn_sum) as f64;
    let micro = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (micro, f1_sum / classes as f64)
}

/// Kappa from the full agreement table.
fn oracle_kappa(a: &[usize], b: &[usize], classes: usize) -> f64 {
    let n = a.len() as f64;
    let mut table = vec![vec![0.0; classes]; classes];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1.0;
    }
    let p_o = (0..classes).map(|i| table[i][i]).sum::<f64>() / n;
    let p_e = (0..classes)
        .map(|i| {
            let row: f64 = table[i].iter().sum();
            let col: f64 = table.iter().map(|r| r[i]).sum();
            row * col
        })
        .sum::<f64>()
        / (n * n);
    if p_e >= 1.0 {
        return if p_o >= 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut f1_err, mut kappa_err) = (0.0f64, 0.0f64);
    let mut gm_exact = true;
    for _ in 0..METRIC_INSTANCES {
        let classes = rng.gen_range(2..7);
        let n = rng.gen_range(1..40);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let pred: Vec<usize> = gold
            .iter()
            .map(|&g| {
                if rng.gen_bool(0.5) {
                    g
                } else {
                    rng.gen_range(0..classes)
                }
            })
            .collect();
        let names: Vec<String> = (0..classes).map(|c| format!("c{c}")).collect();
        let r = f1_report(&pred, &gold, &names).expect("report");
        let (micro, macro_) = oracle_f1(&pred, &gold, classes);
        f1_err = f1_err
            .max((r.micro_f1 - micro).abs())
            .max((r.macro_f1 - macro_).abs());
        let k = cohen_kappa(&pred, &gold).expect("kappa");
        kappa_err = kappa_err.max((k - oracle_kappa(&pred, &gold, classes)).abs());

        let gm = GmModel::fit(&gold, &names).expect("gm");
        let all = vec![gm.predict(); n];
        let r = f1_report(&all, &gold, &names).expect("report");
        let modal = (0..classes)
            .map(|c| gold.iter().filter(|&&g| g == c).count())
            .max()
            .unwrap();
        gm_exact &= r.micro_f1 == modal as f64 / n as f64;
    }
    v.check(
        f1_err <= METRIC_TOLERANCE,
        format!("f1_report max deviation {f1_err:.1e} over {METRIC_INSTANCES} instances"),
    );
    v.check(
        kappa_err <= METRIC_TOLERANCE,
        format!("cohen_kappa max deviation {kappa_err:.1e} over {METRIC_INSTANCES} instances"),
    );
    v.check(gm_exact, "GM micro-F1 equals the modal-class share exactly");
    v
}

fn cv_scores(ds: &Dataset, kind: ModelKind, task: Task, folds: usize, seed: u64) -> (f64, f64) {
    let fx = FeatureExtractor::default();
    let (xs, gold) = prepare_dataset(ds, &fx).expect("dataset prepares");
    let config = ModelConfig {
        seed,
        ..Default::default()
    };
    let r = kfold_cv(
        &xs,
        &gold,
        ModelSpec::Single { kind, task },
        &config,
        folds,
        seed,
        None,
    )
    .expect("cv runs");
    (100.0 * r.overall.micro_f1, 100.0 * r.overall.macro_f1)
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    match finnum() {
        Some(ds) => {
            v.note(format!(
                "FinNum: {} instances, {FINNUM_FOLDS}-fold",
                ds.len()
            ));
            let (micro, macro_) = cv_scores(&ds, ModelKind::Gm, Task::Task1, FINNUM_FOLDS, 0);
            v.within("GM task1 micro-F", micro, GM_MICRO);
            v.within("GM task1 macro-F", macro_, GM_MACRO);
            for seed in SEEDS {
                let (_, char_macro) =
                    cv_scores(&ds, ModelKind::CharCnn, Task::Task2, FINNUM_FOLDS, seed);
                let (_, lin_macro) =
                    cv_scores(&ds, ModelKind::Linear, Task::Task2, FINNUM_FOLDS, seed);
                v.within(
                    &format!("seed {seed} char-CNN task2 macro-F"),
                    char_macro,
                    CHAR_TASK2_MACRO,
                );
                v.check(
                    char_macro > LINEAR_TASK2_MACRO.max(lin_macro),
                    format!("seed {seed} char-CNN {char_macro:.2} > linear ({lin_macro:.2}, reported {LINEAR_TASK2_MACRO})"),
                );
            }
            let (word_micro, _) = cv_scores(&ds, ModelKind::WordCnn, Task::Task1, FINNUM_FOLDS, 0);
            let (lin_micro, _) = cv_scores(&ds, ModelKind::Linear, Task::Task1, FINNUM_FOLDS, 0);
            v.within("word-CNN task1 micro-F", word_micro, WORD_TASK1_MICRO);
            v.check(
                word_micro > LINEAR_TASK1_MICRO.max(lin_micro),
                format!("word-CNN {word_micro:.2} > linear ({lin_micro:.2}, reported {LINEAR_TASK1_MICRO})"),
            );
        }
        None => {
            let ds = paper_tweets()
                .merge(
                    tweetnum_core::synth::synth_tweets(SUBSTITUTE_SYNTHETIC, SUBSTITUTE_DATA_SEED)
                        .expect("synth"),
                )
                .expect("merge");
            v.note(format!(
                "FinNum unavailable; substitute: fixture + {SUBSTITUTE_SYNTHETIC} synthetic tweets ({} instances), task2 macro-F, {SUBSTITUTE_FOLDS}-fold",
                ds.len()
            ));
            for seed in SEEDS {
                let (_, cnn) =
                    cv_scores(&ds, ModelKind::CharCnn, Task::Task2, SUBSTITUTE_FOLDS, seed);
                let (_, gm) = cv_scores(&ds, ModelKind::Gm, Task::Task2, SUBSTITUTE_FOLDS, seed);
                let (_, lin) =
                    cv_scores(&ds, ModelKind::Linear, Task::Task2, SUBSTITUTE_FOLDS, seed);
                v.check(
                    cnn > gm && cnn > lin,
                    format!("seed {seed}: char-CNN {cnn:.2} > GM {gm:.2}, linear {lin:.2}"),
                );
            }
        }
    }
    v.note(format!("runtime {:.1}s", t.elapsed().as_secs_f64()));
    v
}

fn rule_f1s(ds: &Dataset) -> HashMap<FeatureRule, f64> {
    let fx = FeatureExtractor::default();
    let (xs, gold) = prepare_dataset(ds, &fx).expect("dataset prepares");
    let feats: Vec<FeatureVector> = xs.iter().map(|x| x.features).collect();
    [
        FeatureRule::Percentage,
        FeatureRule::Absolute,
        FeatureRule::Temporal,
        FeatureRule::Date,
    ]
    .into_iter()
    .map(|r| (r, 100.0 * feature_f1(&feats, &gold, r).expect("f1")))
    .collect()
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    match finnum() {
        Some(ds) => {
            let f = rule_f1s(&ds);
            let (p, a, t, d) = (
                f[&FeatureRule::Percentage],
                f[&FeatureRule::Absolute],
                f[&FeatureRule::Temporal],
                f[&FeatureRule::Date],
            );
            v.within("percentage F1", p, PERCENTAGE_F1);
            v.within("temporal F1", t, TEMPORAL_F1);
            v.check(p > a, format!("percentage {p:.2} > absolute {a:.2}"));
            v.check(t > d, format!("temporal {t:.2} > date {d:.2}"));
        }
        None => {
            v.outcome = Outcome::Unavailable;
            v.note("FinNum corpus unavailable (set FINNUM_PATH); no substitute is defined");
            let f = rule_f1s(&paper_tweets());
            v.note(format!(
                "for reference on the bundled fixture: percentage {:.2}, absolute {:.2}, temporal {:.2}, date {:.2}",
                f[&FeatureRule::Percentage],
                f[&FeatureRule::Absolute],
                f[&FeatureRule::Temporal],
                f[&FeatureRule::Date]
            ));
        }
    }
    v
}

fn d(s: &str) -> NaiveDate {
    s.parse().expect("date")
}

fn random_decisions(s: &PriceSeries, rng: &mut ChaCha8Rng, dir: Direction) -> BTreeMap<usize, f64> {
    let n = s.bars().len();
    (0..rng.gen_range(1..6))
        .map(|_| {
            let i = rng.gen_range(0..n);
            let c = s.bars()[i].close;
            let up = c * rng.gen_range(1.01..1.25);
            (
                i,
                if dir == Direction::Long {
                    up
                } else {
                    c * c / up
                },
            )
        })
        .collect()
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let window = BacktestConfig {
        start: d("2017-01-01"),
        end: d("2018-05-14"),
        ..Default::default()
    };

    let bars: Vec<Bar> = [100.0, 98.0, 95.5, 92.8, 90.0, 120.0]
        .iter()
        .enumerate()
        .map(|(i, &c)| Bar::flat(d("2017-01-31") + chrono::Duration::days(i as i64), c))
        .collect();
    let s = PriceSeries::new("X", bars).expect("series");
    let log = simulate_ticker(&s, &BTreeMap::from([(0, 130.0)]), &window);
    let exit = log.first().map(|p| (p.exit_date, p.exit_reason));
    v.check(
        log.len() == 1 && exit == Some((Some(d("2017-02-03")), Some(ExitReason::StopLoss))),
        format!("7% breach on day 3 exits on day 3 as stop_loss: {exit:?}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mirrored = 0;
    let mut positions = 0;
    for path in 0..MIRROR_PATHS {
        let s = tweetnum_core::synth::random_walk(
            "X",
            d("2017-01-01"),
            d("2017-12-31"),
            100.0,
            0.03,
            path,
        )
        .expect("walk");
        let mut book = PriceBook::default();
        book.insert(s.clone());
        let mut ok = true;
        for dir in [Direction::Long, Direction::Short] {
            let dec = random_decisions(&s, &mut rng, dir);
            let a = mirror_exponent(window.stop_loss, dir);
            let m = mirror_prices(&book, a).expect("mirror");
            let mdec: BTreeMap<usize, f64> = dec.iter().map(|(&i, &f)| (i, f.powf(-a))).collect();
            let orig = simulate_ticker(&s, &dec, &window);
            let mirr = simulate_ticker(m.get("X").expect("ticker"), &mdec, &window);
            positions += orig.len();
            ok &= orig.len() == mirr.len()
                && orig.iter().zip(&mirr).all(|(x, y)| {
                    x.direction == y.direction.opposite()
                        && x.entry_date == y.entry_date
                        && x.exit_date == y.exit_date
                        && x.exit_reason == y.exit_reason
                });
        }
        mirrored += ok as u64;
    }
    v.check(
        mirrored == MIRROR_PATHS,
        format!("long/short mirror exact on {mirrored}/{MIRROR_PATHS} random paths ({positions} positions)"),
    );

    let m = fixtures().join("market");
    let prices = PriceBook::load(m.join("prices.csv")).expect("prices");
    let crowd: Vec<ForecastObservation> = load_analyst_csv(m.join("crowd.csv")).expect("crowd");
    let a = run_backtest(&crowd, &prices, &window)
        .expect("backtest")
        .log
        .to_csv();
    let b = run_backtest(&crowd, &prices, &window)
        .expect("backtest")
        .log
        .to_csv();
    v.check(
        a == b,
        format!("trade log byte-identical across runs ({} bytes)", a.len()),
    );

    let c = fixtures().join("compare");
    let cfg = BacktestConfig {
        start: d("2017-01-01"),
        end: d("2017-03-31"),
        ..Default::default()
    };
    let prices = PriceBook::load(c.join("prices.csv")).expect("prices");
    let crowd = load_analyst_csv(c.join("crowd.csv")).expect("crowd");
    let analyst = load_analyst_csv(c.join("analyst.csv")).expect("analyst");
    let cmp = compare_sources(&crowd, &analyst, &prices, &cfg).expect("compare");
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let expected = close(cmp.crowd.average_difference, (20.0 + 200.0 / 21.0) / 3.0)
        && close(cmp.crowd.achieving_rate, 200.0 / 3.0)
        && close(cmp.crowd.achieving_duration, 2.5 / DAYS_PER_MONTH)
        && close(cmp.crowd.average_return, (21.0 + 50.0 / 21.0) / 3.0)
        && close(cmp.analyst.average_difference, 8.5)
        && close(cmp.analyst.achieving_rate, 25.0)
        && close(cmp.analyst.achieving_duration, 1.0 / DAYS_PER_MONTH)
        && close(cmp.analyst.average_return, 3.5 / 3.0)
        && close(cmp.disagreement_rate, 100.0 / 3.0);
    let json = serde_json::to_value(&cmp).expect("json");
    let schema = ["crowd", "analyst", "disagreement_rate", "shared_months"]
        .iter()
        .all(|k| json.get(k).is_some());
    v.check(
        expected && schema,
        "compare_sources matches the hand-traced 3-ticker fixture",
    );
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let dir = tempfile::tempdir().expect("tempdir");
    let tweets = fixtures().join("paper_tweets.jsonl");
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_tweetnum"))
            .args([
                "--seed",
                "8",
                "cv",
                "--kind",
                "char_cnn",
                "--task",
                "task2",
                "--synthetic",
                "60",
                "--folds",
                "3",
            ])
            .arg("--dataset")
            .arg(&tweets)
            .arg("--output")
            .arg(out)
            .env_remove("RUST_LOG")
            .output()
            .expect("binary runs");
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    for f in [
        "report.json",
        "metrics.json",
        "confusion.csv",
        "summary.txt",
    ] {
        let same = std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok();
        v.check(same, format!("{f} byte-identical"));
    }
    v.note(format!(
        "char-CNN cv, runtime {:.1}s",
        t.elapsed().as_secs_f64()
    ));
    v
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("preprocessing fidelity", criterion_1),
        ("feature extraction on the fixture tweets", criterion_2),
        ("gradient correctness", criterion_3),
        ("metric oracles", criterion_4),
        ("classifier results", criterion_5),
        ("single-feature F1", criterion_6),
        ("backtest properties", criterion_7),
        ("end-to-end determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = f();
        let tag = match verdict.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => {
                failed += 1;
                "FAIL"
            }
            Outcome::Unavailable => "FAIL",
        };
        let suffix = if matches!(verdict.outcome, Outcome::Unavailable) {
            " (not evaluable)"
        } else {
            ""
        };
        println!("{tag} criterion {}: {name}{suffix}", i + 1);
        for n in &verdict.notes {
            println!("    {n}");
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

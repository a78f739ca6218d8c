use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tweetnum_core::embed::{train_skipgram, EmbeddingTable};
use tweetnum_core::encode::{prepare_dataset, PreparedSample};
use tweetnum_core::eval::{kfold_cv, ModelSpec};
use tweetnum_core::features::{
    FeatureExtractor, FeatureVector, KeywordTables, NounLexicon, FEATURE_NAMES,
};
use tweetnum_core::models::{load_bundle, Classifier, Pipeline, Predictor, Task};
use tweetnum_core::taxonomy::{agreement_report, Dataset, Subcategory, Tweet};
use tweetnum_core::textprep::{detect_numerals, normalize, NumeralSpan};
use tweetnum_core::trading::{
    compare_sources, extract_forecasts, gold_forecasts, load_analyst_csv, run_backtest,
    write_forecast_csv, BacktestConfig, ForecastObservation, PriceBook, Source, YearMonth,
};
use tweetnum_core::{synth, Category};

use crate::config::{require_file, Config};
use crate::{CrowdArgs, ModelArgs};

/// Keyword tables and noun lexicon, from the config or the bundled ones.
struct Lexicons {
    tables: KeywordTables,
    nouns: NounLexicon,
}

impl Lexicons {
    fn load(config: &Config) -> Result<Self> {
        Ok(Lexicons {
            tables: match &config.paths.keywords {
                Some(d) => KeywordTables::load_dir(d)?,
                None => KeywordTables::standard().clone(),
            },
            nouns: match &config.paths.nouns {
                Some(p) => NounLexicon::load(p)?,
                None => NounLexicon::standard().clone(),
            },
        })
    }

    fn extractor(&self) -> FeatureExtractor<'_> {
        FeatureExtractor::new(&self.tables, &self.nouns)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn json_pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn json_lines<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Writes to `path`, or standard output when absent.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing standard output"),
    }
}

fn require_input(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("input {} does not exist", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SpanRecord<'a> {
    offset: usize,
    length: usize,
    surface: &'a str,
}

#[derive(Serialize)]
struct InstanceOut {
    offset: usize,
    length: usize,
    category: Category,
    subcategory: Option<Subcategory>,
}

#[derive(Serialize)]
struct PreprocessRecord<'a> {
    tweet_id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<&'a str>,
    normalized: String,
    tokens: Vec<String>,
    numerals: Vec<SpanRecord<'a>>,
    instances: Vec<InstanceOut>,
}

pub fn preprocess(config: &Config, input: &Path, output: &Path) -> Result<()> {
    config.validate()?;
    require_input(input)?;
    let ds = Dataset::load(input)?;
    let spans: Vec<Vec<NumeralSpan>> = ds
        .tweets()
        .iter()
        .map(|t| detect_numerals(&t.text))
        .collect();
    let mut rows = Vec::with_capacity(ds.tweets().len());
    for (t, spans) in ds.tweets().iter().zip(&spans) {
        let n = normalize(&t.text);
        rows.push(PreprocessRecord {
            tweet_id: &t.id,
            text: &t.text,
            timestamp: t.timestamp.as_deref(),
            normalized: n.normalized.clone(),
            tokens: n.token_texts(),
            numerals: spans
                .iter()
                .map(|s| SpanRecord {
                    offset: s.offset,
                    length: s.length,
                    surface: &s.surface,
                })
                .collect(),
            instances: ds
                .instances()
                .iter()
                .filter(|i| i.tweet_id == t.id)
                .map(|i| InstanceOut {
                    offset: i.offset,
                    length: i.length,
                    category: i.category,
                    subcategory: i.subcategory,
                })
                .collect(),
        });
    }
    write_file(output, &json_lines(&rows)?)?;
    log::info!("{} tweets, {} instances", ds.tweets().len(), ds.len());
    Ok(())
}

fn model_dataset(config: &Config, args: &ModelArgs, seed: u64) -> Result<Dataset> {
    let path = require_file(
        "dataset",
        args.dataset.as_ref().or(config.paths.dataset.as_ref()),
    )?;
    let mut ds = Dataset::load(&path)?;
    if let Some(n) = args.synthetic.filter(|&n| n > 0) {
        ds = ds.merge(synth::synth_tweets(n, seed)?)?;
    }
    Ok(ds)
}

/// Applies the flags to the config and validates the result.
fn apply_model_args(config: &mut Config, args: &ModelArgs) -> Result<(u64, Task)> {
    if let Some(k) = args.kind {
        config.model.kind = k;
    }
    if let Some(t) = &args.task {
        config.model.task = t.clone();
    }
    if args.stage2.is_some() {
        config.model.stage2 = args.stage2;
    }
    if args.embeddings.is_some() {
        config.paths.embeddings = args.embeddings.clone();
    }
    if args.dataset.is_some() {
        config.paths.dataset = args.dataset.clone();
    }
    config.validate()?;
    let seed = config.require_seed()?;
    config.hyper.seed = seed;
    let task: Task = config.model.task.parse()?;
    if config.model.stage2.is_some() && task != Task::Task2 {
        bail!("two-stage models predict subcategories; use --task task2");
    }
    require_file("dataset", config.paths.dataset.as_ref())?;
    Ok((seed, task))
}

fn load_embeddings(config: &Config) -> Result<Option<Arc<EmbeddingTable>>> {
    config
        .paths
        .embeddings
        .as_ref()
        .map(|p| Ok(Arc::new(EmbeddingTable::load(p)?)))
        .transpose()
}

fn prepared(ds: &Dataset, lex: &Lexicons) -> Result<(Vec<PreparedSample>, Vec<Subcategory>)> {
    Ok(prepare_dataset(ds, &lex.extractor())?)
}

pub fn train(mut config: Config, args: &ModelArgs, output: &Path) -> Result<()> {
    let (seed, task) = apply_model_args(&mut config, args)?;
    let lex = Lexicons::load(&config)?;
    let ds = model_dataset(&config, args, seed)?;
    let embeddings = load_embeddings(&config)?;
    let (xs, gold) = prepared(&ds, &lex)?;
    let predictor = match config.model.stage2 {
        Some(stage2) => {
            let refs: Vec<&PreparedSample> = xs.iter().collect();
            Predictor::Pipeline(Pipeline::fit(
                config.model.kind,
                stage2,
                &refs,
                &gold,
                &config.hyper,
                embeddings,
            )?)
        }
        None => {
            let (refs, labels): (Vec<&PreparedSample>, Vec<usize>) = xs
                .iter()
                .zip(&gold)
                .filter_map(|(x, &g)| task.label_of(g).map(|y| (x, y)))
                .unzip();
            Predictor::Classifier(Classifier::fit(
                config.model.kind,
                task,
                &refs,
                &labels,
                &config.hyper,
                embeddings,
            )?)
        }
    };
    predictor.save(output)?;
    log::info!(
        "trained on {} samples, bundle at {}",
        xs.len(),
        output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    tweet_id: &'a str,
    offset: usize,
    length: usize,
    surface: &'a str,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

/// Detected numerals of every tweet, prepared for a model.
fn detected_samples<'t>(
    tweets: &'t [Tweet],
    fx: &FeatureExtractor,
) -> Result<Vec<(&'t Tweet, NumeralSpan, PreparedSample)>> {
    let mut out = Vec::new();
    for t in tweets {
        for s in detect_numerals(&t.text) {
            let p = PreparedSample::new(&t.text, s.offset, s.length, fx)?;
            out.push((t, s, p));
        }
    }
    Ok(out)
}

pub fn predict(config: &Config, model: &Path, input: &Path, output: Option<&Path>) -> Result<()> {
    config.validate()?;
    require_input(input)?;
    let predictor =
        load_bundle(model).with_context(|| format!("loading bundle {}", model.display()))?;
    let lex = Lexicons::load(config)?;
    let ds = Dataset::load(input)?;
    let samples = detected_samples(ds.tweets(), &lex.extractor())?;
    let refs: Vec<&PreparedSample> = samples.iter().map(|(_, _, p)| p).collect();
    let labels = predictor.predict_labels(&refs)?;
    let rows: Vec<PredictionRecord> = samples
        .iter()
        .zip(labels)
        .map(|((t, s, _), label)| PredictionRecord {
            tweet_id: &t.id,
            offset: s.offset,
            length: s.length,
            surface: &s.surface,
            category: label
                .parse::<Subcategory>()
                .ok()
                .map(|sub| sub.category().to_string()),
            label,
        })
        .collect();
    emit(output, &json_lines(&rows)?)
}

pub fn cv(mut config: Config, args: &ModelArgs, folds: Option<usize>, output: &Path) -> Result<()> {
    if let Some(k) = folds {
        config.cv.folds = k;
    }
    let (seed, task) = apply_model_args(&mut config, args)?;
    let lex = Lexicons::load(&config)?;
    let ds = model_dataset(&config, args, seed)?;
    let embeddings = load_embeddings(&config)?;
    let (xs, gold) = prepared(&ds, &lex)?;
    let spec = match config.model.stage2 {
        Some(stage2) => ModelSpec::Pipeline {
            stage1: config.model.kind,
            stage2,
        },
        None => ModelSpec::Single {
            kind: config.model.kind,
            task,
        },
    };
    let report = kfold_cv(
        &xs,
        &gold,
        spec,
        &config.hyper,
        config.cv.folds,
        seed,
        embeddings,
    )?;
    create_dir(output)?;
    write_file(&output.join("report.json"), &json_pretty(&report)?)?;
    write_file(
        &output.join("metrics.json"),
        &json_pretty(&report.overall.records())?,
    )?;
    write_file(
        &output.join("confusion.csv"),
        report.overall.confusion.to_csv().as_bytes(),
    )?;
    let mut summary = format!(
        "{} folds, seed {seed}, {}\n\n",
        report.folds, config.model.task
    );
    summary.push_str(&report.overall.table());
    write_file(&output.join("summary.txt"), summary.as_bytes())?;
    println!(
        "micro-F {:.2}  macro-F {:.2}  ({} samples)",
        100.0 * report.overall.micro_f1,
        100.0 * report.overall.macro_f1,
        report.overall.samples
    );
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let is_jsonl = path
        .extension()
        .is_some_and(|e| e == "jsonl" || e == "json");
    let texts: Vec<String> = if is_jsonl {
        Dataset::load(path)?
            .tweets()
            .iter()
            .map(|t| t.text.clone())
            .collect()
    } else {
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        BufReader::new(f)
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect()
    };
    Ok(texts.iter().map(|t| normalize(t).token_texts()).collect())
}

pub fn embed(
    mut config: Config,
    corpus: &Path,
    output: &Path,
    dim: Option<usize>,
    epochs: Option<usize>,
) -> Result<()> {
    if let Some(d) = dim {
        config.hyper.skipgram.dim = d;
    }
    if let Some(e) = epochs {
        config.hyper.skipgram.epochs = e;
    }
    config.validate()?;
    let seed = config.require_seed()?;
    require_input(corpus)?;
    let sg = tweetnum_core::embed::SkipGramConfig {
        seed,
        ..config.hyper.skipgram.clone()
    };
    let table = train_skipgram(&read_corpus(corpus)?, &sg)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    table.save(output)?;
    log::info!("{} vectors of dimension {}", table.len(), table.dim());
    Ok(())
}

#[derive(Serialize)]
struct KappaReport {
    instances: usize,
    subcategory: tweetnum_core::taxonomy::AgreementReport,
    category: tweetnum_core::taxonomy::AgreementReport,
}

pub fn kappa(config: &Config, annotations: &Path, output: Option<&Path>) -> Result<()> {
    config.validate()?;
    require_input(annotations)?;
    let ds = Dataset::load(annotations)?;
    let triples: Vec<&Vec<Subcategory>> = ds
        .instances()
        .iter()
        .filter_map(|i| i.annotations.as_ref())
        .filter(|a| a.len() == 3)
        .collect();
    let skipped = ds.len() - triples.len();
    if skipped > 0 {
        log::warn!("{skipped} instances lack three annotations");
    }
    if triples.is_empty() {
        bail!("no instance carries three annotations");
    }
    let col = |k: usize| triples.iter().map(|a| a[k]).collect::<Vec<_>>();
    let cat = |k: usize| triples.iter().map(|a| a[k].category()).collect::<Vec<_>>();
    let report = KappaReport {
        instances: triples.len(),
        subcategory: agreement_report(&col(0), &col(1), &col(2))?,
        category: agreement_report(&cat(0), &cat(1), &cat(2))?,
    };
    emit(output, &json_pretty(&report)?)
}

fn backtest_config(config: &mut Config, args: &CrowdArgs) -> Result<BacktestConfig> {
    if let Some(s) = args.stop_loss {
        config.backtest.stop_loss = s;
    }
    if let Some(d) = args.start {
        config.backtest.start = d;
    }
    if let Some(d) = args.end {
        config.backtest.end = d;
    }
    if args.prices.is_some() {
        config.paths.prices = args.prices.clone();
    }
    if args.forecasts.is_some() {
        config.paths.crowd = args.forecasts.clone();
    }
    if args.dataset.is_some() {
        config.paths.dataset = args.dataset.clone();
    }
    config.validate()?;
    if let Some(m) = &args.model {
        require_input(m)?;
    }
    Ok(config.backtest.clone())
}

/// Crowd forecasts from a CSV, or extracted from tweets.
fn crowd_observations(config: &Config, args: &CrowdArgs) -> Result<Vec<ForecastObservation>> {
    if let Some(p) = &config.paths.crowd {
        return Ok(load_analyst_csv(p)?
            .into_iter()
            .map(|o| ForecastObservation {
                source: Source::Crowd,
                ..o
            })
            .collect());
    }
    let Some(path) = &config.paths.dataset else {
        bail!("no crowd forecasts: pass --forecasts or --dataset");
    };
    let ds = Dataset::load(path)?;
    match &args.model {
        None => Ok(gold_forecasts(&ds)),
        Some(m) => {
            let predictor = load_bundle(m)?;
            if predictor.task() != Task::Task2 {
                bail!("forecast extraction needs a model that predicts subcategories");
            }
            let lex = Lexicons::load(config)?;
            Ok(extract_forecasts(ds.tweets(), &lex.extractor(), |xs| {
                predictor
                    .predict_labels(xs)?
                    .iter()
                    .map(|l| l.parse::<Subcategory>())
                    .collect()
            })?)
        }
    }
}

pub fn backtest(mut config: Config, args: &CrowdArgs, output: &Path) -> Result<()> {
    let cfg = backtest_config(&mut config, args)?;
    let prices = PriceBook::load(require_file("prices", config.paths.prices.as_ref())?)?;
    let crowd = crowd_observations(&config, args)?;
    let bt = run_backtest(&crowd, &prices, &cfg)?;
    create_dir(output)?;
    write_file(&output.join("trades.csv"), bt.log.to_csv().as_bytes())?;
    let mut f = Vec::new();
    write_forecast_csv(&crowd, &mut f)?;
    write_file(&output.join("forecasts.csv"), &f)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        trades: usize,
        strategy_return: f64,
        metrics: &'a tweetnum_core::trading::BacktestMetrics,
    }
    write_file(
        &output.join("metrics.json"),
        &json_pretty(&Summary {
            trades: bt.log.positions.len(),
            strategy_return: bt.strategy_return,
            metrics: &bt.metrics,
        })?,
    )?;
    println!(
        "{} trades, mean return {:.2}%, achieving rate {:.2}%",
        bt.log.positions.len(),
        bt.strategy_return,
        bt.metrics.achieving_rate
    );
    Ok(())
}

pub fn compare(
    mut config: Config,
    args: &CrowdArgs,
    analyst: Option<PathBuf>,
    output: &Path,
) -> Result<()> {
    if analyst.is_some() {
        config.paths.analyst = analyst;
    }
    let cfg = backtest_config(&mut config, args)?;
    let prices = PriceBook::load(require_file("prices", config.paths.prices.as_ref())?)?;
    let analyst = load_analyst_csv(require_file(
        "analyst forecasts",
        config.paths.analyst.as_ref(),
    )?)?;
    let crowd = crowd_observations(&config, args)?;
    let cmp = compare_sources(&crowd, &analyst, &prices, &cfg)?;
    create_dir(output)?;
    write_file(&output.join("comparison.json"), &json_pretty(&cmp)?)?;
    let table = format!(
        "{:<20}{:>10}{:>10}\n{:<20}{:>9.2}%{:>9.2}%\n{:<20}{:>9.2}%{:>9.2}%\n{:<20}{:>10.2}{:>10.2}\n{:<20}{:>9.2}%{:>9.2}%\n\ndisagreement rate {:.2}% over {} ticker-months\n",
        "", "crowd", "analyst",
        "average difference", cmp.crowd.average_difference, cmp.analyst.average_difference,
        "achieving rate", cmp.crowd.achieving_rate, cmp.analyst.achieving_rate,
        "duration (months)", cmp.crowd.achieving_duration, cmp.analyst.achieving_duration,
        "average return", cmp.crowd.average_return, cmp.analyst.average_return,
        cmp.disagreement_rate, cmp.shared_months,
    );
    write_file(&output.join("comparison.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct FeatureRecord<'a> {
    tweet_id: &'a str,
    offset: usize,
    length: usize,
    surface: &'a str,
    features: FeatureVector,
    active: Vec<&'static str>,
}

pub fn features(config: &Config, input: &Path, output: Option<&Path>) -> Result<()> {
    config.validate()?;
    require_input(input)?;
    let lex = Lexicons::load(config)?;
    let ds = Dataset::load(input)?;
    let samples = detected_samples(ds.tweets(), &lex.extractor())?;
    let rows: Vec<FeatureRecord> = samples
        .iter()
        .map(|(t, s, p)| FeatureRecord {
            tweet_id: &t.id,
            offset: s.offset,
            length: s.length,
            surface: &s.surface,
            features: p.features,
            active: FEATURE_NAMES
                .iter()
                .enumerate()
                .filter(|(i, _)| p.features.get(*i))
                .map(|(_, n)| *n)
                .collect(),
        })
        .collect();
    emit(output, &json_lines(&rows)?)
}

pub fn synth(config: &Config, tweets: usize, output: &Path) -> Result<()> {
    config.validate()?;
    let seed = config.require_seed()?;
    let ds = synth::synth_tweets(tweets, seed)?;
    let start = chrono::NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");
    let end = chrono::NaiveDate::from_ymd_opt(2018, 5, 14).expect("valid date");
    let book = synth::synth_prices(&synth::TICKERS, start, end, seed)?;
    let (m0, m1): (YearMonth, YearMonth) = ("2017-01".parse()?, "2017-12".parse()?);
    let analyst =
        synth::synth_forecasts(&book, m0, m1, Source::Analyst, 0.08, seed.wrapping_add(1))?;
    let crowd = synth::synth_forecasts(&book, m0, m1, Source::Crowd, 0.15, seed.wrapping_add(2))?;
    create_dir(output)?;
    let mut buf = Vec::new();
    ds.write(&mut buf)?;
    write_file(&output.join("tweets.jsonl"), &buf)?;
    let mut buf = Vec::new();
    book.write_csv(&mut buf)?;
    write_file(&output.join("prices.csv"), &buf)?;
    let mut buf = Vec::new();
    write_forecast_csv(&analyst, &mut buf)?;
    write_file(&output.join("analyst.csv"), &buf)?;
    let mut buf = Vec::new();
    write_forecast_csv(&crowd, &mut buf)?;
    write_file(&output.join("crowd.csv"), &buf)?;
    Ok(())
}

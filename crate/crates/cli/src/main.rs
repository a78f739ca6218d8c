mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tweetnum_core::models::ModelKind;

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(
    name = "tweetnum",
    version,
    about = "Numeral understanding for financial tweets"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Model selection flags shared by `train` and `cv`.
#[derive(Debug, Clone, clap::Args)]
pub struct ModelArgs {
    /// Tweets with annotated numerals (JSON lines).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// gm, linear, char_cnn or word_cnn.
    #[arg(long)]
    pub kind: Option<ModelKind>,
    /// task1, task2, binary:<category> or subtask:<category>.
    #[arg(long)]
    pub task: Option<String>,
    /// Stage-2 kind; turns the model into a two-stage pipeline.
    #[arg(long)]
    pub stage2: Option<ModelKind>,
    /// Pretrained word vectors for word CNNs.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Appends this many synthetic tweets to the dataset.
    #[arg(long)]
    pub synthetic: Option<usize>,
}

/// Where crowd forecasts come from.
#[derive(Debug, Clone, clap::Args)]
pub struct CrowdArgs {
    /// Crowd forecasts as `ticker,month,forecast`.
    #[arg(long)]
    pub forecasts: Option<PathBuf>,
    /// Tweets to extract forecasts from; gold labels unless --model is given.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model bundle predicting subcategories.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Daily prices `date,ticker,open,high,low,close`.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub stop_loss: Option<f64>,
    #[arg(long)]
    pub start: Option<chrono::NaiveDate>,
    #[arg(long)]
    pub end: Option<chrono::NaiveDate>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize tweets and detect numerals.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model bundle.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        /// Bundle directory to create.
        #[arg(long)]
        output: PathBuf,
    },
    /// Label every detected numeral with a trained bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation.
    Cv {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        folds: Option<usize>,
        /// Report directory to create.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train skip-gram word vectors.
    Embed {
        /// Tweets as JSON lines, or plain text with one tweet per line.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Inter-annotator agreement from three-way annotations.
    Kappa {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monthly consensus backtest with a stop loss.
    Backtest {
        #[command(flatten)]
        crowd: CrowdArgs,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Crowd versus analyst forecast metrics.
    Compare {
        #[command(flatten)]
        crowd: CrowdArgs,
        /// Analyst forecasts as `ticker,month,forecast`.
        #[arg(long)]
        analyst: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Dump the feature vector of every detected numeral.
    Features {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write synthetic tweets, prices and forecasts.
    Synth {
        #[arg(long, default_value_t = 500)]
        tweets: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    use commands as c;
    match cli.command {
        Command::Preprocess { input, output } => c::preprocess(&config, &input, &output),
        Command::Train { model, output } => c::train(config, &model, &output),
        Command::Predict {
            model,
            input,
            output,
        } => c::predict(&config, &model, &input, output.as_deref()),
        Command::Cv {
            model,
            folds,
            output,
        } => c::cv(config, &model, folds, &output),
        Command::Embed {
            corpus,
            output,
            dim,
            epochs,
        } => c::embed(config, &corpus, &output, dim, epochs),
        Command::Kappa {
            annotations,
            output,
        } => c::kappa(&config, &annotations, output.as_deref()),
        Command::Backtest { crowd, output } => c::backtest(config, &crowd, &output),
        Command::Compare {
            crowd,
            analyst,
            output,
        } => c::compare(config, &crowd, analyst, &output),
        Command::Features { input, output } => c::features(&config, &input, output.as_deref()),
        Command::Synth { tweets, output } => c::synth(&config, tweets, &output),
    }
}

fn main() {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

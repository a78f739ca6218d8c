//! Shared inputs for the benchmarks.

use chrono::NaiveDate;
use tweetnum_core::synth::{synth_forecasts, synth_prices, synth_tweets, TICKERS};
use tweetnum_core::trading::{ForecastObservation, PriceBook, Source};
use tweetnum_core::Dataset;

pub fn tweets(n: usize) -> Dataset {
    synth_tweets(n, 1).expect("synthetic tweets")
}

/// Twelve tickers of daily prices and one crowd forecast per ticker-month.
pub fn market() -> (PriceBook, Vec<ForecastObservation>) {
    let start = NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2018, 5, 14).expect("valid date");
    let book = synth_prices(&TICKERS, start, end, 1).expect("prices");
    let crowd = synth_forecasts(
        &book,
        "2017-01".parse().expect("month"),
        "2017-12".parse().expect("month"),
        Source::Crowd,
        0.15,
        2,
    )
    .expect("forecasts");
    (book, crowd)
}

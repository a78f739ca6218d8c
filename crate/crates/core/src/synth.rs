//! Seeded synthetic data: labeled tweets built from per-subcategory
//! templates, random-walk price books, and analyst forecasts.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::taxonomy::{Dataset, NumeralInstance, Subcategory, Tweet};
use crate::trading::{Bar, ForecastObservation, PriceBook, PriceSeries, Source, YearMonth};

pub const TICKERS: [&str; 12] = [
    "AAPL", "MSFT", "GE", "JPM", "KO", "XOM", "IBM", "NKE", "DIS", "CAT", "BA", "INTC",
];

/// Numeral shapes used by the templates.
#[derive(Clone, Copy)]
enum Shape {
    Price,
    Small,
    Percent,
    Int,
    Day,
    MonthDay,
    Hour,
    Big,
    Version,
}

fn render(shape: Shape, rng: &mut ChaCha8Rng) -> String {
    match shape {
        Shape::Price => {
            if rng.gen_bool(0.5) {
                format!("{:.2}", rng.gen_range(5.0..400.0))
            } else {
                rng.gen_range(5..400).to_string()
            }
        }
        Shape::Small => format!("{:.2}", rng.gen_range(0.1..9.9)),
        Shape::Percent => {
            if rng.gen_bool(0.3) {
                format!("{:.1}", rng.gen_range(0.5..40.0))
            } else {
                rng.gen_range(1..60).to_string()
            }
        }
        Shape::Int => rng.gen_range(2..200).to_string(),
        Shape::Day => rng.gen_range(1..29).to_string(),
        Shape::MonthDay => format!("{}/{}", rng.gen_range(1..13), rng.gen_range(1..29)),
        Shape::Hour => rng.gen_range(1..12).to_string(),
        Shape::Big => {
            let n: u32 = rng.gen_range(1_000..90_000);
            format!("{},{:03}", n / 1000, n % 1000)
        }
        Shape::Version => rng.gen_range(4..12).to_string(),
    }
}

/// `{}` marks the numeral.
fn templates(sub: Subcategory) -> (&'static [&'static str], Shape) {
    use Subcategory::*;
    match sub {
        Money => (
            &[
                "made ${} on this trade",
                "lost ${} today",
                "cashed ${} profit",
            ],
            Shape::Price,
        ),
        Quote => (
            &["trading at {} now", "last print {}", "opened at {}"],
            Shape::Price,
        ),
        Change => (
            &[
                "moved {} points today",
                "gained {} bucks",
                "dropped {} on the day",
            ],
            Shape::Small,
        ),
        BuyPrice => (
            &["bought at {}", "long from {}", "added more at {}"],
            Shape::Price,
        ),
        SellPrice => (
            &["sold at {}", "exited at {}", "took profits at {}"],
            Shape::Price,
        ),
        Forecast => (
            &["target {}", "PT {} by summer", "heading to {} soon"],
            Shape::Price,
        ),
        StopLoss => (
            &["stop loss {}", "stop at {}", "my stop is {}"],
            Shape::Price,
        ),
        SupportOrResistance => (
            &["support at {}", "resistance {}", "bounced off {} support"],
            Shape::Price,
        ),
        Relative => (
            &["up {}% this week", "down {}% today", "jumped {}% on news"],
            Shape::Percent,
        ),
        Absolute => (
            &["{}% margin", "owns {}% of the float", "{}% dividend yield"],
            Shape::Percent,
        ),
        ExercisePrice => (
            &["${} calls", "bought ${} puts", "June ${} calls"],
            Shape::Price,
        ),
        MaturityDate => (
            &["APR.{} calls", "Jun {} expiry puts", "calls exp Mar {}"],
            Shape::Day,
        ),
        Indicator => (
            &["above the {}dma", "riding {} day MA", "RSI {} oversold"],
            Shape::Int,
        ),
        Date => (
            &["earnings on {}", "gap from {} filled", "since {} lows"],
            Shape::MonthDay,
        ),
        Time => (
            &["at {}pm", "on the {} min chart", "{} hr chart breakout"],
            Shape::Hour,
        ),
        Quantity => (
            &["{} shares traded", "holding {} contracts", "sold {} shares"],
            Shape::Big,
        ),
        Product => (
            &["iPhone {} sales", "Galaxy Note {} recall", "Xbox {} launch"],
            Shape::Version,
        ),
    }
}

/// Relative frequency of each leaf in generated tweets.
fn weight(sub: Subcategory) -> u32 {
    use Subcategory::*;
    match sub {
        Quote | Forecast | Relative | Date => 4,
        Money | BuyPrice | SellPrice | SupportOrResistance | Quantity => 3,
        _ => 2,
    }
}

const FILLERS: [&str; 8] = [
    "looks strong",
    "watch this one",
    "nice setup",
    "bears beware",
    "volume rising",
    "be careful",
    "love it",
    "lol",
];

fn business_days(start: NaiveDate, end: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    start
        .iter_days()
        .take_while(move |d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
}

/// `n` labeled tweets, each carrying one to three numerals from different
/// templates and a 2017 timestamp.
pub fn synth_tweets(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaves: Vec<(Subcategory, u32)> =
        Subcategory::ALL.iter().map(|&s| (s, weight(s))).collect();
    let start = NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");
    let mut tweets = Vec::with_capacity(n);
    let mut instances = Vec::new();
    for i in 0..n {
        let ticker = TICKERS.choose(&mut rng).expect("non-empty");
        let mut text = format!("${ticker}");
        let mut spans = Vec::new();
        let clauses = rng.gen_range(1..=3);
        for _ in 0..clauses {
            let sub = leaves
                .choose_weighted(&mut rng, |(_, w)| *w)
                .expect("positive weights")
                .0;
            let (forms, shape) = templates(sub);
            let form = forms.choose(&mut rng).expect("non-empty");
            let num = render(shape, &mut rng);
            let (before, after) = form.split_once("{}").expect("template has a slot");
            text.push_str(if rng.gen_bool(0.5) { " " } else { ", " });
            text.push_str(before);
            let offset = text.chars().count();
            text.push_str(&num);
            text.push_str(after);
            spans.push((offset, num, sub));
        }
        if rng.gen_bool(0.4) {
            text.push_str(". ");
            text.push_str(FILLERS.choose(&mut rng).expect("non-empty"));
        }
        let id = format!("synth-{seed}-{i}");
        let date = start + Duration::days(rng.gen_range(0..365));
        for (offset, surface, sub) in spans {
            instances.push(NumeralInstance {
                tweet_id: id.clone(),
                offset,
                length: surface.chars().count(),
                surface,
                category: sub.category(),
                subcategory: Some(sub),
                annotations: None,
            });
        }
        tweets.push(Tweet {
            id,
            text,
            timestamp: Some(date.to_string()),
            cashtags: vec![ticker.to_string()],
        });
    }
    Dataset::new(tweets, instances)
}

/// Geometric random walk on business days with consistent OHLC bars.
pub fn random_walk(
    ticker: &str,
    start: NaiveDate,
    end: NaiveDate,
    first: f64,
    vol: f64,
    seed: u64,
) -> Result<PriceSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut close = first;
    let mut bars = Vec::new();
    for date in business_days(start, end) {
        let open = close;
        let z: f64 = rng.gen_range(-1.0..1.0) + rng.gen_range(-1.0..1.0) + rng.gen_range(-1.0..1.0);
        close = (open * (vol * z).exp()).max(0.01);
        let high = open.max(close) * (1.0 + rng.gen_range(0.0..vol));
        let low = open.min(close) * (1.0 - rng.gen_range(0.0..vol));
        bars.push(Bar {
            date,
            open,
            high,
            low,
            close,
        });
    }
    PriceSeries::new(ticker, bars)
}

/// Random-walk prices for `tickers` over `[start, end]`.
pub fn synth_prices(
    tickers: &[&str],
    start: NaiveDate,
    end: NaiveDate,
    seed: u64,
) -> Result<PriceBook> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut book = PriceBook::default();
    for t in tickers {
        let first = rng.gen_range(20.0..300.0);
        book.insert(random_walk(t, start, end, first, 0.012, rng.gen())?);
    }
    Ok(book)
}

/// One forecast per ticker-month within `[start, end]`, a few percent
/// away from that month's last close.
pub fn synth_forecasts(
    book: &PriceBook,
    start: YearMonth,
    end: YearMonth,
    source: Source,
    spread: f64,
    seed: u64,
) -> Result<Vec<ForecastObservation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in book.series.values() {
        let mut m = start;
        while m <= end {
            let last = s.bars().iter().rev().find(|b| YearMonth::of(b.date) == m);
            if let Some(b) = last {
                let price = b.close * (1.0 + rng.gen_range(-spread..spread));
                out.push(ForecastObservation::new(s.ticker(), m, price, source)?);
            }
            m = m.next();
        }
    }
    Ok(out)
}

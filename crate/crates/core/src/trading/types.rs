use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!(
                "month {month} out of range"
            )));
        }
        Ok(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated month")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next()
            .first_day()
            .pred_opt()
            .expect("representable date")
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(m: YearMonth) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Crowd,
    Analyst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastObservation {
    pub ticker: String,
    pub month: YearMonth,
    pub price: f64,
    pub source: Source,
    pub tweet_id: Option<String>,
}

impl ForecastObservation {
    pub fn new(
        ticker: impl Into<String>,
        month: YearMonth,
        price: f64,
        source: Source,
    ) -> Result<Self> {
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "forecast price {price} must be positive"
            )));
        }
        Ok(ForecastObservation {
            ticker: ticker.into(),
            month,
            price,
            source,
            tweet_id: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Bar {
    pub fn validate(&self) -> Result<()> {
        let all = [self.open, self.high, self.low, self.close];
        if all.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{}: prices must be positive",
                self.date
            )));
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(Error::InvalidArgument(format!(
                "{}: low/high do not bracket open and close",
                self.date
            )));
        }
        Ok(())
    }

    /// Open, high, low and close all equal.
    pub fn flat(date: NaiveDate, close: f64) -> Self {
        Bar {
            date,
            open: close,
            high: close,
            low: close,
            close,
        }
    }
}

/// Daily bars of one ticker, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticker: String,
    bars: Vec<Bar>,
}

impl PriceSeries {
    pub fn new(ticker: impl Into<String>, bars: Vec<Bar>) -> Result<Self> {
        let ticker = ticker.into();
        for b in &bars {
            b.validate()
                .map_err(|e| Error::InvalidArgument(format!("{ticker}: {e}")))?;
        }
        if let Some(w) = bars.windows(2).find(|w| w[0].date >= w[1].date) {
            return Err(Error::InvalidArgument(format!(
                "{ticker}: dates not strictly increasing at {}",
                w[1].date
            )));
        }
        Ok(PriceSeries { ticker, bars })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    /// Index of the first bar on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.bars.partition_point(|b| b.date < date);
        (i < self.bars.len()).then_some(i)
    }
}

/// Price series keyed by ticker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceBook {
    pub series: BTreeMap<String, PriceSeries>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PriceRow {
    date: NaiveDate,
    ticker: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalystRow {
    ticker: String,
    month: YearMonth,
    forecast: f64,
}

impl PriceBook {
    pub fn get(&self, ticker: &str) -> Option<&PriceSeries> {
        self.series.get(ticker)
    }

    pub fn insert(&mut self, s: PriceSeries) {
        self.series.insert(s.ticker.clone(), s);
    }

    /// Reads `date,ticker,open,high,low,close`; rows may come in any order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut by: BTreeMap<String, Vec<Bar>> = BTreeMap::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: PriceRow = row?;
            by.entry(row.ticker.to_uppercase()).or_default().push(Bar {
                date: row.date,
                open: row.open,
                high: row.high,
                low: row.low,
                close: row.close,
            });
        }
        let mut book = PriceBook::default();
        for (t, mut bars) in by {
            bars.sort_by_key(|b| b.date);
            book.insert(PriceSeries::new(t, bars)?);
        }
        Ok(book)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(std::fs::File::open(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for s in self.series.values() {
            for b in &s.bars {
                out.serialize(PriceRow {
                    date: b.date,
                    ticker: s.ticker.clone(),
                    open: b.open,
                    high: b.high,
                    low: b.low,
                    close: b.close,
                })?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Reads analyst forecasts `ticker,month,forecast`.
pub fn read_analyst_csv<R: Read>(r: R) -> Result<Vec<ForecastObservation>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let row: AnalystRow = row?;
            ForecastObservation::new(
                row.ticker.to_uppercase(),
                row.month,
                row.forecast,
                Source::Analyst,
            )
        })
        .collect()
}

pub fn load_analyst_csv(path: impl AsRef<Path>) -> Result<Vec<ForecastObservation>> {
    let path = path.as_ref();
    read_analyst_csv(std::fs::File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Writes observations as `ticker,month,forecast`.
pub fn write_forecast_csv<W: Write>(obs: &[ForecastObservation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for o in obs {
        out.serialize(AnalystRow {
            ticker: o.ticker.clone(),
            month: o.month,
            forecast: o.price,
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Long,
    Short,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Long => Direction::Short,
            Direction::Short => Direction::Long,
        }
    }

    /// Implied direction of a forecast against a reference close.
    pub fn implied(forecast: f64, close: f64) -> Option<Self> {
        if forecast > close {
            Some(Direction::Long)
        } else if forecast < close {
            Some(Direction::Short)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    StopLoss,
    TargetHit,
    SignalFlip,
    HorizonEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub ticker: String,
    pub direction: Direction,
    pub entry_date: NaiveDate,
    pub entry_price: f64,
    pub forecast_price: f64,
    pub exit_date: Option<NaiveDate>,
    pub exit_price: Option<f64>,
    pub exit_reason: Option<ExitReason>,
}

impl Position {
    /// Signed return in percent, if closed.
    pub fn return_pct(&self) -> Option<f64> {
        let exit = self.exit_price?;
        Some(match self.direction {
            Direction::Long => 100.0 * (exit - self.entry_price) / self.entry_price,
            Direction::Short => 100.0 * (self.entry_price - exit) / self.entry_price,
        })
    }
}

#[derive(Debug, Serialize)]
struct TradeRow<'a> {
    ticker: &'a str,
    direction: Direction,
    entry_date: NaiveDate,
    entry_price: f64,
    exit_date: Option<NaiveDate>,
    exit_price: Option<f64>,
    exit_reason: Option<ExitReason>,
    return_pct: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TradeLog {
    pub positions: Vec<Position>,
}

impl TradeLog {
    /// `ticker,direction,entry_date,entry_price,exit_date,exit_price,exit_reason,return_pct`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.positions {
            out.serialize(TradeRow {
                ticker: &p.ticker,
                direction: p.direction,
                entry_date: p.entry_date,
                entry_price: p.entry_price,
                exit_date: p.exit_date,
                exit_price: p.exit_price,
                exit_reason: p.exit_reason,
                return_pct: p.return_pct(),
            })?;
        }
        if self.positions.is_empty() {
            out.write_record([
                "ticker",
                "direction",
                "entry_date",
                "entry_price",
                "exit_date",
                "exit_price",
                "exit_reason",
                "return_pct",
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

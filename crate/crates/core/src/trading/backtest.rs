use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::types::{
    Bar, Direction, ExitReason, ForecastObservation, Position, PriceBook, PriceSeries, TradeLog,
    YearMonth,
};

/// Average number of days in a month, for durations in months.
pub const DAYS_PER_MONTH: f64 = 30.4375;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    /// Fractional unrealized loss that closes a position.
    pub stop_loss: f64,
    pub start: NaiveDate,
    /// Last trading day considered; also the horizon for achievement.
    pub end: NaiveDate,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            stop_loss: 0.07,
            start: NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2018, 5, 14).expect("valid date"),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stop_loss > 0.0 && self.stop_loss < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "stop loss {} outside (0, 1)",
                self.stop_loss
            )));
        }
        if self.start > self.end {
            return Err(Error::InvalidArgument(format!(
                "start {} after end {}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

/// Median; the mean of the middle two for even counts.
pub fn monthly_consensus(prices: &[f64]) -> Result<f64> {
    if prices.is_empty() {
        return Err(Error::Empty("forecast prices"));
    }
    let mut v = prices.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// One consensus forecast per ticker-month.
pub fn consensus_by_month(
    obs: &[ForecastObservation],
) -> Result<BTreeMap<(String, YearMonth), f64>> {
    let mut groups: BTreeMap<(String, YearMonth), Vec<f64>> = BTreeMap::new();
    for o in obs {
        groups
            .entry((o.ticker.clone(), o.month))
            .or_default()
            .push(o.price);
    }
    groups
        .into_iter()
        .map(|(k, v)| Ok((k, monthly_consensus(&v)?)))
        .collect()
}

/// Inclusive bar index range inside `[start, end]`.
fn window(s: &PriceSeries, cfg: &BacktestConfig) -> Option<(usize, usize)> {
    let lo = s.index_on_or_after(cfg.start)?;
    let hi = s
        .bars()
        .partition_point(|b| b.date <= cfg.end)
        .checked_sub(1)?;
    (lo <= hi).then_some((lo, hi))
}

/// Bar that carries a month's decision: the calendar month end, or the
/// next trading day when there is no bar on it.
pub fn decision_index(s: &PriceSeries, month: YearMonth, cfg: &BacktestConfig) -> Option<usize> {
    let (lo, hi) = window(s, cfg)?;
    let target = month.last_day();
    let i = s.index_on_or_after(target)?;
    if i < lo || i > hi {
        return None;
    }
    Some(i)
}

fn stop_hit(p: &Position, close: f64, stop: f64) -> bool {
    match p.direction {
        Direction::Long => close <= p.entry_price * (1.0 - stop),
        Direction::Short => close >= p.entry_price * (1.0 + stop),
    }
}

fn target_hit(direction: Direction, forecast: f64, close: f64) -> bool {
    match direction {
        Direction::Long => close >= forecast,
        Direction::Short => close <= forecast,
    }
}

fn open(ticker: &str, direction: Direction, bar: &Bar, forecast: f64) -> Position {
    Position {
        ticker: ticker.to_string(),
        direction,
        entry_date: bar.date,
        entry_price: bar.close,
        forecast_price: forecast,
        exit_date: None,
        exit_price: None,
        exit_reason: None,
    }
}

fn close(mut p: Position, bar: &Bar, reason: ExitReason) -> Position {
    p.exit_date = Some(bar.date);
    p.exit_price = Some(bar.close);
    p.exit_reason = Some(reason);
    p
}

/// Daily close-to-close exit checks for an open position on bar `i`.
fn check_exit(p: &Position, bar: &Bar, stop: f64) -> Option<ExitReason> {
    if stop_hit(p, bar.close, stop) {
        Some(ExitReason::StopLoss)
    } else if target_hit(p.direction, p.forecast_price, bar.close) {
        Some(ExitReason::TargetHit)
    } else {
        None
    }
}

/// Simulates one ticker given its decisions (bar index to consensus).
pub fn simulate_ticker(
    s: &PriceSeries,
    decisions: &BTreeMap<usize, f64>,
    cfg: &BacktestConfig,
) -> Vec<Position> {
    let Some((lo, hi)) = window(s, cfg) else {
        return Vec::new();
    };
    let bars = s.bars();
    let mut log = Vec::new();
    let mut held: Option<(Position, usize)> = None;
    for (i, bar) in bars.iter().enumerate().take(hi + 1).skip(lo) {
        if let Some((p, entry)) = held.take() {
            match (i > entry)
                .then(|| check_exit(&p, bar, cfg.stop_loss))
                .flatten()
            {
                Some(reason) => log.push(close(p, bar, reason)),
                None => held = Some((p, entry)),
            }
        }
        let Some(&forecast) = decisions.get(&i) else {
            continue;
        };
        let Some(dir) = Direction::implied(forecast, bar.close) else {
            continue;
        };
        match held.take() {
            Some((p, entry)) if p.direction == dir => held = Some((p, entry)),
            Some((p, _)) => {
                log.push(close(p, bar, ExitReason::SignalFlip));
                held = Some((open(s.ticker(), dir, bar, forecast), i));
            }
            None => held = Some((open(s.ticker(), dir, bar, forecast), i)),
        }
    }
    if let Some((p, _)) = held {
        log.push(close(p, &bars[hi], ExitReason::HorizonEnd));
    }
    log
}

/// Outcome of holding a single forecast on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutcome {
    pub ticker: String,
    pub month: YearMonth,
    pub forecast: f64,
    pub decision_date: NaiveDate,
    pub reference_close: f64,
    pub direction: Option<Direction>,
    /// `|forecast - close| / close` in percent.
    pub difference_pct: f64,
    pub achieved_date: Option<NaiveDate>,
    pub duration_months: Option<f64>,
    pub return_pct: Option<f64>,
}

/// Per-forecast evaluation: distance to the reference close, first later
/// close that reaches the forecast, and the return of a lone position.
pub fn evaluate_forecast(
    s: &PriceSeries,
    month: YearMonth,
    forecast: f64,
    cfg: &BacktestConfig,
) -> Option<ForecastOutcome> {
    let d = decision_index(s, month, cfg)?;
    let (_, hi) = window(s, cfg)?;
    let bars = s.bars();
    let reference = bars[d].close;
    let direction = Direction::implied(forecast, reference);
    let reached = |c: f64| match direction {
        Some(dir) => target_hit(dir, forecast, c),
        None => c == forecast,
    };
    let achieved_date = bars[d + 1..=hi]
        .iter()
        .find(|b| reached(b.close))
        .map(|b| b.date);
    let duration_months =
        achieved_date.map(|a| (a - bars[d].date).num_days() as f64 / DAYS_PER_MONTH);
    let return_pct = direction.and_then(|_| {
        simulate_ticker(s, &BTreeMap::from([(d, forecast)]), cfg)
            .first()
            .and_then(Position::return_pct)
    });
    Some(ForecastOutcome {
        ticker: s.ticker().to_string(),
        month,
        forecast,
        decision_date: bars[d].date,
        reference_close: reference,
        direction,
        difference_pct: 100.0 * (forecast - reference).abs() / reference,
        achieved_date,
        duration_months,
        return_pct,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestMetrics {
    pub average_difference: f64,
    /// Percent of forecasts reached, in [0, 100].
    pub achieving_rate: f64,
    /// Mean months to achievement, over achieved forecasts only.
    pub achieving_duration: f64,
    pub average_return: f64,
    pub forecasts: usize,
    pub achieved: usize,
    pub positioned: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl BacktestMetrics {
    pub fn from_outcomes(outcomes: &[ForecastOutcome]) -> Self {
        let achieved = outcomes
            .iter()
            .filter(|o| o.achieved_date.is_some())
            .count();
        let positioned = outcomes.iter().filter(|o| o.return_pct.is_some()).count();
        BacktestMetrics {
            average_difference: mean(outcomes.iter().map(|o| o.difference_pct)),
            achieving_rate: if outcomes.is_empty() {
                0.0
            } else {
                100.0 * achieved as f64 / outcomes.len() as f64
            },
            achieving_duration: mean(outcomes.iter().filter_map(|o| o.duration_months)),
            average_return: mean(outcomes.iter().filter_map(|o| o.return_pct)),
            forecasts: outcomes.len(),
            achieved,
            positioned,
        }
    }
}

/// Evaluates every ticker-month consensus that has a decision bar.
pub fn evaluate_forecasts(
    obs: &[ForecastObservation],
    prices: &PriceBook,
    cfg: &BacktestConfig,
) -> Result<Vec<ForecastOutcome>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for ((ticker, month), f) in consensus_by_month(obs)? {
        let Some(s) = prices.get(&ticker) else {
            log::warn!("no prices for {ticker}");
            continue;
        };
        match evaluate_forecast(s, month, f, cfg) {
            Some(o) => {
                if o.decision_date != month.last_day() {
                    log::warn!(
                        "{ticker}: no bar on {}, deciding on {}",
                        month.last_day(),
                        o.decision_date
                    );
                }
                out.push(o)
            }
            None => log::warn!("{ticker} {month}: no decision bar inside the backtest window"),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtest {
    pub log: TradeLog,
    pub metrics: BacktestMetrics,
    /// Mean return of the strategy's positions, in percent.
    pub strategy_return: f64,
}

/// Monthly consensus strategy with a stop loss, one position per ticker.
pub fn run_backtest(
    forecasts: &[ForecastObservation],
    prices: &PriceBook,
    cfg: &BacktestConfig,
) -> Result<Backtest> {
    cfg.validate()?;
    let consensus = consensus_by_month(forecasts)?;
    let mut per_ticker: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for ((ticker, month), &f) in &consensus {
        let Some(s) = prices.get(ticker) else {
            continue;
        };
        if let Some(i) = decision_index(s, *month, cfg) {
            per_ticker.entry(ticker.as_str()).or_default().insert(i, f);
        }
    }
    let logs: Vec<Vec<Position>> = per_ticker
        .par_iter()
        .map(|(t, d)| simulate_ticker(prices.get(t).expect("checked above"), d, cfg))
        .collect();
    let positions: Vec<Position> = logs.into_iter().flatten().collect();
    let strategy_return = mean(positions.iter().filter_map(Position::return_pct));
    let outcomes = evaluate_forecasts(forecasts, prices, cfg)?;
    Ok(Backtest {
        log: TradeLog { positions },
        metrics: BacktestMetrics::from_outcomes(&outcomes),
        strategy_return,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub crowd: BacktestMetrics,
    pub analyst: BacktestMetrics,
    /// Percent of shared ticker-months where the sources imply opposite
    /// directions.
    pub disagreement_rate: f64,
    pub shared_months: usize,
}

pub fn compare_sources(
    crowd: &[ForecastObservation],
    analyst: &[ForecastObservation],
    prices: &PriceBook,
    cfg: &BacktestConfig,
) -> Result<Comparison> {
    let c = evaluate_forecasts(crowd, prices, cfg)?;
    let a = evaluate_forecasts(analyst, prices, cfg)?;
    let a_dirs: BTreeMap<(&str, YearMonth), Option<Direction>> = a
        .iter()
        .map(|o| ((o.ticker.as_str(), o.month), o.direction))
        .collect();
    let mut shared = 0;
    let mut opposite = 0;
    for o in &c {
        if let Some(&ad) = a_dirs.get(&(o.ticker.as_str(), o.month)) {
            shared += 1;
            if matches!((o.direction, ad), (Some(x), Some(y)) if x == y.opposite()) {
                opposite += 1;
            }
        }
    }
    Ok(Comparison {
        crowd: BacktestMetrics::from_outcomes(&c),
        analyst: BacktestMetrics::from_outcomes(&a),
        disagreement_rate: if shared == 0 {
            0.0
        } else {
            100.0 * opposite as f64 / shared as f64
        },
        shared_months: shared,
    })
}

/// Exponent `a` of the map `p -> p^(-a)` that turns positions opened in
/// `direction` into opposite positions with identical entries and exits.
/// Long stops `(1 - s)` land on short stops `(1 + s)`; the short case uses
/// the reciprocal. No single exponent mirrors both directions at once
/// because `ln(1 - s) != -ln(1 + s)`.
pub fn mirror_exponent(stop_loss: f64, direction: Direction) -> f64 {
    let a = (1.0 + stop_loss).ln() / -(1.0 - stop_loss).ln();
    match direction {
        Direction::Long => a,
        Direction::Short => 1.0 / a,
    }
}

/// Image of a price book under `p -> p^(-a)`; highs and lows swap.
pub fn mirror_prices(book: &PriceBook, exponent: f64) -> Result<PriceBook> {
    let m = |p: f64| p.powf(-exponent);
    let mut out = PriceBook::default();
    for s in book.series.values() {
        let bars = s
            .bars()
            .iter()
            .map(|b| Bar {
                date: b.date,
                open: m(b.open),
                high: m(b.low),
                low: m(b.high),
                close: m(b.close),
            })
            .collect();
        out.insert(PriceSeries::new(s.ticker(), bars)?);
    }
    Ok(out)
}

pub fn mirror_forecasts(obs: &[ForecastObservation], exponent: f64) -> Vec<ForecastObservation> {
    obs.iter()
        .map(|o| ForecastObservation {
            price: o.price.powf(-exponent),
            ..o.clone()
        })
        .collect()
}

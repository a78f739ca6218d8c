//! Forecast extraction, crowd-vs-analyst comparison, and a monthly
//! consensus backtest with a stop loss.

mod backtest;
mod extract;
mod types;

pub use backtest::{
    compare_sources, consensus_by_month, decision_index, evaluate_forecast, evaluate_forecasts,
    mirror_exponent, mirror_forecasts, mirror_prices, monthly_consensus, run_backtest,
    simulate_ticker, Backtest, BacktestConfig, BacktestMetrics, Comparison, ForecastOutcome,
    DAYS_PER_MONTH,
};
pub use extract::{extract_forecasts, gold_forecasts, parse_price};
pub use types::{
    load_analyst_csv, read_analyst_csv, write_forecast_csv, Bar, Direction, ExitReason,
    ForecastObservation, Position, PriceBook, PriceSeries, Source, TradeLog, YearMonth,
};

use crate::encode::PreparedSample;
use crate::error::Result;
use crate::features::FeatureExtractor;
use crate::taxonomy::{Dataset, Subcategory, Tweet};
use crate::textprep::detect_numerals;

use super::types::{ForecastObservation, Source, YearMonth};

/// Numeric value of a numeral surface such as `14.35`, `$1,200` or `.80`.
pub fn parse_price(surface: &str) -> Option<f64> {
    let s: String = surface.chars().filter(|c| *c != ',' && *c != '$').collect();
    let v: f64 = s.trim_start_matches('+').parse().ok()?;
    (v.is_finite() && v > 0.0).then_some(v)
}

fn tweet_key(t: &Tweet) -> Option<(String, YearMonth)> {
    let Some(ticker) = t.tickers().into_iter().next() else {
        log::warn!("tweet {}: no cashtag, skipped", t.id);
        return None;
    };
    let Some(date) = t.date() else {
        log::warn!("tweet {}: no timestamp, skipped", t.id);
        return None;
    };
    Some((ticker, YearMonth::of(date)))
}

/// Detects and classifies every numeral of every tweet, keeping those
/// classified as forecast prices. `classify` maps prepared numerals to
/// subcategories.
pub fn extract_forecasts<F>(
    tweets: &[Tweet],
    fx: &FeatureExtractor,
    classify: F,
) -> Result<Vec<ForecastObservation>>
where
    F: Fn(&[&PreparedSample]) -> Result<Vec<Subcategory>>,
{
    let mut out = Vec::new();
    for t in tweets {
        let spans = detect_numerals(&t.text);
        if spans.is_empty() {
            continue;
        }
        let Some((ticker, month)) = tweet_key(t) else {
            continue;
        };
        let samples = spans
            .iter()
            .map(|s| PreparedSample::new(&t.text, s.offset, s.length, fx))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&PreparedSample> = samples.iter().collect();
        for (span, label) in spans.iter().zip(classify(&refs)?) {
            if label != Subcategory::Forecast {
                continue;
            }
            match parse_price(&span.surface) {
                Some(price) => out.push(ForecastObservation {
                    ticker: ticker.clone(),
                    month,
                    price,
                    source: Source::Crowd,
                    tweet_id: Some(t.id.clone()),
                }),
                None => log::warn!("tweet {}: forecast {:?} is not a price", t.id, span.surface),
            }
        }
    }
    Ok(out)
}

/// Forecast observations from gold labels instead of a classifier.
pub fn gold_forecasts(ds: &Dataset) -> Vec<ForecastObservation> {
    ds.instances()
        .iter()
        .filter(|i| i.subcategory == Some(Subcategory::Forecast))
        .filter_map(|i| {
            let t = ds.tweet_of(i);
            let (ticker, month) = tweet_key(t)?;
            let price = parse_price(&i.surface)?;
            Some(ForecastObservation {
                ticker,
                month,
                price,
                source: Source::Crowd,
                tweet_id: Some(t.id.clone()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, text: &str, ts: Option<&str>) -> Tweet {
        Tweet {
            timestamp: ts.map(str::to_string),
            ..Tweet::new(id, text)
        }
    }

    fn oracle(
        words: &'static [(&'static str, Subcategory)],
    ) -> impl Fn(&[&PreparedSample]) -> Result<Vec<Subcategory>> {
        move |xs: &[&PreparedSample]| {
            Ok(xs
                .iter()
                .map(|x| {
                    let surface: String = x
                        .normalized
                        .original
                        .chars()
                        .skip(x.offset)
                        .take(x.length)
                        .collect();
                    words
                        .iter()
                        .find(|(w, _)| *w == surface)
                        .map_or(Subcategory::Quantity, |(_, s)| *s)
                })
                .collect())
        }
    }

    #[test]
    fn prices() {
        assert_eq!(parse_price("14.35"), Some(14.35));
        assert_eq!(parse_price("$1,200"), Some(1200.0));
        assert_eq!(parse_price(".80"), Some(0.8));
        assert_eq!(parse_price("8/17"), None);
        assert_eq!(parse_price("0"), None);
    }

    #[test]
    fn target_tweet_yields_observation() {
        let t = tweet(
            "t6",
            "$CIEN, CIEN seems to have broken out of a major horizontal resistance. Targets $14.35.",
            Some("2017-03-02T10:00:00Z"),
        );
        let fx = FeatureExtractor::default();
        let obs =
            extract_forecasts(&[t], &fx, oracle(&[("14.35", Subcategory::Forecast)])).unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].ticker, "CIEN");
        assert_eq!(obs[0].month.to_string(), "2017-03");
        assert_eq!(obs[0].price, 14.35);
    }

    #[test]
    fn objective_kept_and_stop_dropped() {
        let t = tweet(
            "t1",
            "$TSLA 256 Break-out thru 50 & 200- DMA (197-230) upper head res (274-279) Short squeeze in progress Nr term obj: 310 Stop loss:239.",
            Some("2017-06-01"),
        );
        let fx = FeatureExtractor::default();
        let labels: &[(&str, Subcategory)] = &[
            ("310", Subcategory::Forecast),
            ("239", Subcategory::StopLoss),
        ];
        let obs = extract_forecasts(&[t], &fx, oracle(labels)).unwrap();
        assert_eq!(obs.iter().map(|o| o.price).collect::<Vec<_>>(), vec![310.0]);
    }

    #[test]
    fn skipped_tweets() {
        let fx = FeatureExtractor::default();
        let all_forecast = |xs: &[&PreparedSample]| Ok(vec![Subcategory::Forecast; xs.len()]);
        let tweets = [
            tweet("a", "$AAPL nothing numeric here", Some("2017-01-01")),
            tweet("b", "no tag target 15", Some("2017-01-01")),
            tweet("c", "$AAPL target 15", None),
        ];
        assert!(extract_forecasts(&tweets, &fx, all_forecast)
            .unwrap()
            .is_empty());
    }
}

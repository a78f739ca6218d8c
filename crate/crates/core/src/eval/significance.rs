use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Paired approximate randomization test on the micro-F1 (accuracy)
/// difference. Each round swaps every prediction pair with probability
/// 0.5; the p-value is the share of rounds whose absolute difference is at
/// least the observed one.
pub fn significance_test(
    a: &[usize],
    b: &[usize],
    gold: &[usize],
    rounds: usize,
    seed: u64,
) -> Result<f64> {
    if a.len() != gold.len() || b.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: a.len().max(b.len()),
            right: gold.len(),
        });
    }
    if rounds == 0 {
        return Err(Error::InvalidArgument("need at least one round".into()));
    }
    // Only pairs where exactly one side is right move the difference; each
    // contributes +1 or -1 to (correct A - correct B).
    let signs: Vec<i64> = a
        .iter()
        .zip(b)
        .zip(gold)
        .filter_map(|((&x, &y), &g)| match (x == g, y == g) {
            (true, false) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        })
        .collect();
    let observed: i64 = signs.iter().sum::<i64>().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..rounds {
        let d: i64 = signs
            .iter()
            .map(|&s| if rng.gen_bool(0.5) { -s } else { s })
            .sum();
        if d.abs() >= observed {
            hits += 1;
        }
    }
    Ok(hits as f64 / rounds as f64)
}

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};

/// Cohen's kappa between two annotators labelling the same items.
///
/// Chance agreement comes from the product of each annotator's marginal
/// label frequencies. When chance agreement is 1 the result is 1 for perfect
/// observed agreement and 0 otherwise.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("label sequences"));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;

    let mut marg: HashMap<&T, (usize, usize)> = HashMap::new();
    for x in a {
        marg.entry(x).or_default().0 += 1;
    }
    for y in b {
        marg.entry(y).or_default().1 += 1;
    }
    let p_e: f64 = marg
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();

    if p_e >= 1.0 {
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    /// All three annotators agree.
    pub unanimous_pct: f64,
    /// Exactly two agree.
    pub majority_pct: f64,
    /// All three differ.
    pub inconsistent_pct: f64,
    /// Kappa for annotator pairs (1,2), (1,3), (2,3).
    pub pairwise_kappa: [f64; 3],
}

pub fn agreement_report<T: Eq + Hash>(a: &[T], b: &[T], c: &[T]) -> Result<AgreementReport> {
    for other in [b.len(), c.len()] {
        if other != a.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: other,
            });
        }
    }
    if a.is_empty() {
        return Err(Error::Empty("annotations"));
    }
    let (mut unanimous, mut majority, mut inconsistent) = (0usize, 0usize, 0usize);
    for ((x, y), z) in a.iter().zip(b).zip(c) {
        let pairs = [x == y, x == z, y == z].iter().filter(|&&p| p).count();
        match pairs {
            3 => unanimous += 1,
            0 => inconsistent += 1,
            _ => majority += 1,
        }
    }
    let pct = |k: usize| 100.0 * k as f64 / a.len() as f64;
    Ok(AgreementReport {
        unanimous_pct: pct(unanimous),
        majority_pct: pct(majority),
        inconsistent_pct: pct(inconsistent),
        pairwise_kappa: [cohen_kappa(a, b)?, cohen_kappa(a, c)?, cohen_kappa(b, c)?],
    })
}

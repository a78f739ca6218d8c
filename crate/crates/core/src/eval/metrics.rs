use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix indexed by (predicted, true).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// Row-major, `counts[predicted * n + truth]`.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![0; n * n],
        }
    }

    pub fn from_predictions(pred: &[usize], gold: &[usize], labels: &[String]) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: gold.len(),
            });
        }
        let mut m = ConfusionMatrix::new(labels.to_vec());
        let n = labels.len();
        for (&p, &g) in pred.iter().zip(gold) {
            if p >= n || g >= n {
                return Err(Error::InvalidArgument(format!(
                    "label index {} outside {n} classes",
                    p.max(g)
                )));
            }
            m.counts[p * n + g] += 1;
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, predicted: usize, truth: usize) -> u64 {
        self.counts[predicted * self.size() + truth]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Everything predicted as `label`.
    pub fn predicted_count(&self, label: usize) -> u64 {
        (0..self.size()).map(|t| self.get(label, t)).sum()
    }

    /// Everything whose truth is `label`.
    pub fn true_count(&self, label: usize) -> u64 {
        (0..self.size()).map(|p| self.get(p, label)).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::Shape("confusion matrices disagree on labels".into()));
        }
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// CSV with a header row of labels; each row is one predicted label.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["predicted\\true".to_string()];
        header.extend(self.labels.iter().cloned());
        out.write_record(&header)?;
        for (p, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.size()).map(|t| self.get(p, t).to_string()));
            out.write_record(&row)?;
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// In label order.
    pub per_class: Vec<(String, ClassScores)>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let samples = confusion.total();
        if samples == 0 {
            return Err(Error::Empty("evaluated samples"));
        }
        let n = confusion.size();
        let mut per_class = Vec::with_capacity(n);
        let mut tp_all = 0;
        for (c, label) in confusion.labels.iter().enumerate() {
            let tp = confusion.get(c, c);
            let fp = confusion.predicted_count(c) - tp;
            let fn_ = confusion.true_count(c) - tp;
            tp_all += tp;
            per_class.push((
                label.clone(),
                ClassScores {
                    precision: ratio(tp, tp + fp),
                    recall: ratio(tp, tp + fn_),
                    f1: ratio(2 * tp, 2 * tp + fp + fn_),
                    support: tp + fn_,
                },
            ));
        }
        let wrong = samples - tp_all;
        let micro_f1 = ratio(2 * tp_all, 2 * tp_all + 2 * wrong);
        let macro_f1 = per_class.iter().map(|(_, s)| s.f1).sum::<f64>() / n as f64;
        Ok(EvalReport {
            samples,
            micro_f1,
            macro_f1,
            per_class,
            confusion,
        })
    }

    /// Metric name to value, sorted by name.
    pub fn records(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("micro_f1".to_string(), self.micro_f1);
        m.insert("macro_f1".to_string(), self.macro_f1);
        m.insert("samples".to_string(), self.samples as f64);
        for (label, s) in &self.per_class {
            m.insert(format!("{label}.precision"), s.precision);
            m.insert(format!("{label}.recall"), s.recall);
            m.insert(format!("{label}.f1"), s.f1);
            m.insert(format!("{label}.support"), s.support as f64);
        }
        m
    }

    /// Plain-text table with percentages.
    pub fn table(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|(l, _)| l.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = String::new();
        let _ = writeln!(s, "samples  {}", self.samples);
        let _ = writeln!(s, "micro-F  {:.2}", 100.0 * self.micro_f1);
        let _ = writeln!(s, "macro-F  {:.2}", 100.0 * self.macro_f1);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>6}  {:>6}  {:>7}",
            "label", "precision", "recall", "f1", "support"
        );
        for (label, c) in &self.per_class {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9.2}  {:>6.2}  {:>6.2}  {:>7}",
                label,
                100.0 * c.precision,
                100.0 * c.recall,
                100.0 * c.f1,
                c.support
            );
        }
        s
    }
}

/// Per-class precision, recall and F1, with micro and macro averages.
/// Macro averages over every label, so absent classes count as 0.
pub fn f1_report(pred: &[usize], gold: &[usize], labels: &[String]) -> Result<EvalReport> {
    if pred.is_empty() && gold.is_empty() {
        return Err(Error::Empty("evaluated samples"));
    }
    EvalReport::from_confusion(ConfusionMatrix::from_predictions(pred, gold, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_predictions() {
        let r = f1_report(&[0, 1, 2, 1], &[0, 1, 2, 1], &names(3)).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn hand_computed_example() {
        // pred A A B B, gold A B B B
        let r = f1_report(&[0, 0, 1, 1], &[0, 1, 1, 1], &names(2)).unwrap();
        assert_eq!(r.micro_f1, 0.75);
        assert!((r.per_class[0].1.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.per_class[1].1.f1 - 0.8).abs() < 1e-15);
        assert!((r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
        assert!((r.macro_f1 - 0.7333).abs() < 1e-4);
    }

    #[test]
    fn absent_classes_count_as_zero() {
        let r = f1_report(&[0, 0], &[0, 0], &names(4)).unwrap();
        assert_eq!(r.macro_f1, 0.25);
        assert_eq!(r.per_class[3].1.precision, 0.0);
    }

    #[test]
    fn errors() {
        assert!(f1_report(&[0], &[0, 1], &names(2)).is_err());
        assert!(f1_report(&[], &[], &names(2)).is_err());
        assert!(f1_report(&[2], &[0], &names(2)).is_err());
    }

    #[test]
    fn csv_export() {
        let m =
            ConfusionMatrix::from_predictions(&[0, 0, 1], &[0, 1, 1], &["a".into(), "b".into()])
                .unwrap();
        assert_eq!(m.to_csv(), "predicted\\true,a,b\na,1,1\nb,0,1\n");
    }

    proptest! {
        #[test]
        fn micro_equals_accuracy(pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..60)) {
            let (p, g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = f1_report(&p, &g, &names(5)).unwrap();
            let acc = p.iter().zip(&g).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
            prop_assert_eq!(r.micro_f1, acc);
        }

        #[test]
        fn permutation_invariant(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p, g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (p2, g2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(f1_report(&p, &g, &names(4)).unwrap(), f1_report(&p2, &g2, &names(4)).unwrap());
        }

        #[test]
        fn confusion_reconciles(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40)) {
            let (p, g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = f1_report(&p, &g, &names(4)).unwrap();
            prop_assert_eq!(r.confusion.total(), p.len() as u64);
            for c in 0..4 {
                let tp = p.iter().zip(&g).filter(|(&a, &b)| a == c && b == c).count() as u64;
                let fp = p.iter().zip(&g).filter(|(&a, &b)| a == c && b != c).count() as u64;
                let fn_ = p.iter().zip(&g).filter(|(&a, &b)| a != c && b == c).count() as u64;
                prop_assert_eq!(r.confusion.get(c, c), tp);
                prop_assert_eq!(r.confusion.predicted_count(c), tp + fp);
                prop_assert_eq!(r.confusion.true_count(c), tp + fn_);
                prop_assert_eq!(r.per_class[c].1.support, tp + fn_);
            }
        }
    }
}

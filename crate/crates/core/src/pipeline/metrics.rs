use std::collections::BTreeSet;

use num_rational::Ratio;
use serde_json::json;

use super::io::TextPair;

pub type Rational = Ratio<u64>;

/// Precision, recall and F1 as exact fractions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub precision: Rational,
    pub recall: Rational,
    pub f1: Rational,
    pub true_positives: usize,
    pub result_size: usize,
    pub truth_size: usize,
}

/// Precision is 1 for an empty result, recall is 1 for an empty truth, and
/// F1 is 0 when both precision and recall are 0.
pub fn evaluate(result: &BTreeSet<TextPair>, truth: &BTreeSet<TextPair>) -> Metrics {
    let tp = result.intersection(truth).count();
    let ratio = |n: usize, d: usize| {
        if d == 0 {
            Rational::from_integer(1)
        } else {
            Rational::new(n as u64, d as u64)
        }
    };
    let precision = ratio(tp, result.len());
    let recall = ratio(tp, truth.len());
    let sum = precision + recall;
    let f1 = if sum == Rational::from_integer(0) {
        Rational::from_integer(0)
    } else {
        Rational::from_integer(2) * precision * recall / sum
    };
    Metrics {
        precision,
        recall,
        f1,
        true_positives: tp,
        result_size: result.len(),
        truth_size: truth.len(),
    }
}

fn as_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Metrics {
    pub fn to_json(&self) -> serde_json::Value {
        let num = |r: Rational| json!({ "exact": r.to_string(), "value": as_f64(r) });
        json!({
            "precision": num(self.precision),
            "recall": num(self.recall),
            "f1": num(self.f1),
            "true_positives": self.true_positives,
            "result_size": self.result_size,
            "truth_size": self.truth_size,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::io::text_pair;

    fn set(pairs: &[(&str, &str)]) -> BTreeSet<TextPair> {
        pairs.iter().map(|(a, b)| text_pair(a, b)).collect()
    }

    #[test]
    fn conventions() {
        let truth = set(&[("b1", "b2")]);
        let m = evaluate(&truth, &truth);
        assert_eq!((m.precision, m.recall, m.f1), (Rational::from(1), Rational::from(1), Rational::from(1)));

        let m = evaluate(&set(&[]), &truth);
        assert_eq!(m.precision, Rational::from(1));
        assert_eq!(m.recall, Rational::from(0));
        assert_eq!(m.f1, Rational::from(0));

        let m = evaluate(&set(&[("b1", "b2"), ("s1", "s3")]), &set(&[("b1", "b2"), ("s1", "s2")]));
        assert_eq!(m.precision, Rational::new(1, 2));
        assert_eq!(m.recall, Rational::new(1, 2));
        assert_eq!(m.f1, Rational::new(1, 2));
    }

    #[test]
    fn orientation_does_not_matter() {
        let a = set(&[("x", "y"), ("q", "p")]);
        let b = set(&[("y", "x"), ("p", "q")]);
        assert_eq!(a, b);
        assert_eq!(evaluate(&a, &b).f1, Rational::from(1));
    }
}

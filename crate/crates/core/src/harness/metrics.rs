use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary outcome counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[usize], actual: &[usize]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::Dimension(format!(
                "{} predictions for {} labels",
                predicted.len(),
                actual.len()
            )));
        }
        let mut m = Self::default();
        for (&p, &y) in predicted.iter().zip(actual) {
            match (p, y) {
                (1, 1) => m.tp += 1,
                (0, 0) => m.tn += 1,
                (1, 0) => m.fp += 1,
                (0, 1) => m.fn_ += 1,
                _ => return Err(Error::Dimension(format!("non-binary outcome ({p}, {y})"))),
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, tn: self.tn + o.tn, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Classification metrics; `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricSet {
    pub const NAMES: [&'static str; 5] = ["accuracy", "precision", "recall", "f1", "auc"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auc]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision, recall and F1 from counts. AUC is left unset.
pub fn metrics(m: &ConfusionMatrix) -> MetricSet {
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricSet { accuracy: ratio(m.tp + m.tn, m.total()), precision, recall, f1, auc: None }
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One operating point. `threshold` is `None` for the origin, which sits
/// above every score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

/// AUC from the Mann–Whitney rank statistic (tied scores share their mean
/// rank, i.e. count ½ per tied pair) plus the curve at every distinct score.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Dimension("scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.iter().filter(|&&y| y == 0).count();
    if positives + negatives != labels.len() {
        return Err(Error::Dimension("ROC labels must be 0 or 1".into()));
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::Dimension("ROC needs both classes present".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Ascending pass for midranks.
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + end) as f64 / 2.0 + 1.0;
        let tied_pos = order[start..=end].iter().filter(|&&i| labels[i] == 1).count();
        positive_rank_sum += mid_rank * tied_pos as f64;
        start = end + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    let auc = (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);

    // Descending pass for the curve.
    let mut points = vec![RocPoint { threshold: None, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = order.len();
    while i > 0 {
        let score = scores[order[i - 1]];
        while i > 0 && scores[order[i - 1]] == score {
            if labels[order[i - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i -= 1;
        }
        points.push(RocPoint { threshold: Some(score), fpr: fp as f64 / n, tpr: tp as f64 / p });
    }
    Ok(RocCurve { auc, points })
}

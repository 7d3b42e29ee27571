use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::{self, purpose};
use crate::{Error, Result};

/// Fold membership for every sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Shuffles each class with the seed, then deals its members round-robin
/// across folds. The dealing position carries over between classes so fold
/// sizes stay within one of each other as well.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = seed::stream(seed, purpose::FOLDS);
    let mut assignment = vec![usize::MAX; labels.len()];
    let mut next = 0;
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::Config(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_thousand() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let plan = stratified_folds(&labels, 5, 9).unwrap();
        for f in 0..5 {
            let val = plan.validation_indices(f);
            let pos = val.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!((val.len() - pos, pos), (100, 100));
        }
    }

    #[test]
    fn tiny_forced_partition() {
        let plan = stratified_folds(&[0, 0, 1, 1], 2, 0).unwrap();
        for f in 0..2 {
            let val = plan.validation_indices(f);
            assert_eq!(val.len(), 2);
            let classes: Vec<_> = val.iter().map(|&i| [0, 0, 1, 1][i]).collect();
            assert!(classes.contains(&0) && classes.contains(&1));
        }
    }

    #[test]
    fn deterministic() {
        let labels: Vec<usize> = (0..37).map(|i| usize::from(i % 3 == 0)).collect();
        assert_eq!(stratified_folds(&labels, 4, 5).unwrap(), stratified_folds(&labels, 4, 5).unwrap());
    }

    #[test]
    fn small_class_rejected() {
        assert!(stratified_folds(&[0, 0, 0, 1], 2, 0).is_err());
        assert!(stratified_folds(&[0, 1], 1, 0).is_err());
    }
}

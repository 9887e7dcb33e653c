//! Area under the ROC curve as the Mann-Whitney statistic.

use crate::error::{Error, Result};

/// `(#{pos > neg} + ½ #{pos = neg}) / (n_pos n_neg)` over all
/// positive-negative pairs, computed from mid-ranks in `O(n log n)`.
pub fn auc(scores: &[f64], outcome: &[bool]) -> Result<f64> {
    if scores.len() != outcome.len() {
        return Err(Error::Validation(format!(
            "{} scores for {} outcomes",
            scores.len(),
            outcome.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let n_pos = outcome.iter().filter(|&&o| o).count() as u64;
    let n_neg = outcome.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Validation(
            "AUC is undefined without both positive and negative outcomes".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the positive rank sum, using doubled mid-ranks so that ties stay integral.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end+1; doubled mid-rank = start + end + 2
        let doubled_mid = (start + end + 2) as u64;
        let positives = order[start..=end].iter().filter(|&&k| outcome[k]).count() as u64;
        doubled_rank_sum += doubled_mid * positives;
        start = end + 1;
    }
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(scores: &[f64], outcome: &[bool]) -> f64 {
        let mut doubled = 0u64;
        let (mut np, mut nn) = (0u64, 0u64);
        for (i, &oi) in outcome.iter().enumerate() {
            if oi {
                np += 1;
            } else {
                nn += 1;
            }
            for (j, &oj) in outcome.iter().enumerate() {
                if oi && !oj {
                    if scores[i] > scores[j] {
                        doubled += 2;
                    } else if scores[i] == scores[j] {
                        doubled += 1;
                    }
                }
            }
        }
        doubled as f64 / (2 * np * nn) as f64
    }

    #[test]
    fn perfect_separation_and_ties() {
        assert_eq!(
            auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(auc(&[0.5; 4], &[false, true, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.8, 0.1], &[false, false, true]).unwrap(), 0.0);
    }

    #[test]
    fn one_inversion_among_six() {
        let scores = [0.1, 0.2, 0.35, 0.4, 0.6, 0.7];
        let labels = [false, false, true, false, true, true];
        let a = auc(&scores, &labels).unwrap();
        assert_eq!(a, brute_force(&scores, &labels));
        assert_eq!(a, 8.0 / 9.0);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn equals_pair_counting(pairs in proptest::collection::vec((0u8..6, any::<bool>()), 2..60)) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 5.0).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
                prop_assert_eq!(auc(&scores, &labels).unwrap(), brute_force(&scores, &labels));
                let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
                prop_assert_eq!(auc(&transformed, &labels).unwrap(), auc(&scores, &labels).unwrap());
            }
        }
    }
}

//! Ranking metrics.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("cannot compute AUC without {0} examples")]
    EmptyClass(&'static str),
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc_roc(pos: &[f64], neg: &[f64]) -> Result<f64, MetricError> {
    if pos.is_empty() {
        return Err(MetricError::EmptyClass("positive"));
    }
    if neg.is_empty() {
        return Err(MetricError::EmptyClass("negative"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Count, for each positive, the negatives strictly below it plus half of
    // the tied ones, working in doubled units to stay in integers.
    let mut doubled: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0.total_cmp(&all[i].0).is_eq() {
            j += 1;
        }
        let group = &all[i..j];
        let p = group.iter().filter(|e| e.1).count() as u128;
        let n = group.len() as u128 - p;
        doubled += p * (2 * neg_below + n);
        neg_below += n;
        i = j;
    }
    Ok(doubled as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Mean and sample standard deviation.
pub fn mean_stdev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for &p in pos {
            for &n in neg {
                s += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn small_cases() {
        assert_eq!(auc_roc(&[0.9], &[0.1]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.5], &[0.5]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[0.8, 0.4], &[0.6, 0.2]).unwrap(), 0.75);
        assert_eq!(auc_roc(&[], &[0.1]), Err(MetricError::EmptyClass("positive")));
        assert_eq!(auc_roc(&[0.1], &[]), Err(MetricError::EmptyClass("negative")));
    }

    #[test]
    fn mean_and_spread() {
        assert_eq!(mean_stdev(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_stdev(&[4.0]), (4.0, 0.0));
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(
            pos in proptest::collection::vec(0u8..6, 1..20),
            neg in proptest::collection::vec(0u8..6, 1..20),
        ) {
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
            prop_assert!((auc_roc(&pos, &neg).unwrap() - pairwise(&pos, &neg)).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_maps(
            pos in proptest::collection::vec(-3.0f64..3.0, 1..15),
            neg in proptest::collection::vec(-3.0f64..3.0, 1..15),
        ) {
            let f = |x: &f64| x.exp() * 2.0 + 1.0;
            let a = auc_roc(&pos, &neg).unwrap();
            let b = auc_roc(&pos.iter().map(f).collect::<Vec<_>>(), &neg.iter().map(f).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

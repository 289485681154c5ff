//! Classification metrics from a confusion matrix and clustering accuracy
//! via an exact assignment solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy plus macro-averaged precision, recall and F1. Every class in
/// `[0, K)` counts toward the averages; a ratio with a zero denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// `matrix[true][predicted]` counts.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::Dimension(format!(
                "label pair ({t}, {p}) is outside [0, {num_classes})"
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn report_from_confusion(matrix: &[Vec<usize>]) -> Result<ClassificationReport> {
    let k = matrix.len();
    if k == 0 || matrix.iter().any(|r| r.len() != k) {
        return Err(Error::Dimension("confusion matrix must be square and non-empty".into()));
    }
    let total: usize = matrix.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Argument("confusion matrix is empty".into()));
    }
    let correct: usize = (0..k).map(|i| matrix[i][i]).sum();
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = matrix[c][c];
        let predicted: usize = matrix.iter().map(|row| row[c]).sum();
        let actual: usize = matrix[c].iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        p_sum += p;
        r_sum += r;
        f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let kf = k as f64;
    Ok(ClassificationReport {
        accuracy: ratio(correct, total),
        macro_precision: p_sum / kf,
        macro_recall: r_sum / kf,
        macro_f1: f_sum / kf,
    })
}

pub fn classification_report(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<ClassificationReport> {
    report_from_confusion(&confusion_matrix(pred, truth, num_classes)?)
}

/// Best fraction of matches over all one-to-one relabelings of `pred`.
/// Label values are arbitrary; unequal label-set sizes are allowed.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Argument("clustering accuracy of an empty labelling".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let dense = |labels: &[usize]| -> (Vec<usize>, usize) {
        let mut ids = BTreeMap::new();
        for &l in labels {
            let next = ids.len();
            ids.entry(l).or_insert(next);
        }
        (labels.iter().map(|l| ids[l]).collect(), ids.len())
    };
    let (p, np) = dense(pred);
    let (t, nt) = dense(truth);
    let n = np.max(nt);
    let mut counts = vec![vec![0i64; n]; n];
    for (&a, &b) in p.iter().zip(&t) {
        counts[a][b] += 1;
    }
    let max = pred.len() as i64;
    let cost: Vec<Vec<i64>> = counts.iter().map(|r| r.iter().map(|c| max - c).collect()).collect();
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(i, &j)| counts[i][j]).sum();
    Ok(matched as f64 / pred.len() as f64)
}

/// Hungarian algorithm with potentials on a square integer cost matrix.
/// Returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut min_v = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Try every relabeling of the predicted labels.
    fn brute_force_ca(pred: &[usize], truth: &[usize]) -> f64 {
        let n = pred.iter().chain(truth).max().unwrap() + 1;
        permutations(n)
            .iter()
            .map(|perm| pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count())
            .max()
            .unwrap() as f64
            / pred.len() as f64
    }

    #[test]
    fn hand_built_confusion_matrix() {
        // Rows are true classes, columns predictions.
        let m = vec![vec![5, 1, 0], vec![2, 3, 1], vec![0, 2, 6]];
        let r = report_from_confusion(&m).unwrap();
        // Precisions 5/7, 1/2, 6/7; recalls 5/6, 1/2, 3/4.
        assert!((r.accuracy - 0.7).abs() <= 1e-12);
        assert!((r.macro_precision - 29.0 / 42.0).abs() <= 1e-12);
        assert!((r.macro_recall - 25.0 / 36.0).abs() <= 1e-12);
        assert!((r.macro_f1 - 269.0 / 390.0).abs() <= 1e-12);
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let truth: Vec<usize> = (0..300).map(|i| i % 3).collect();
        let r = classification_report(&truth, &truth, 3).unwrap();
        assert_eq!((r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
        let r = classification_report(&vec![0; 300], &truth, 3).unwrap();
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_recall - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_precision - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ca_examples() {
        assert_eq!(clustering_accuracy(&[0, 0, 1, 1], &[1, 1, 0, 2]).unwrap(), 0.75);
        assert_eq!(brute_force_ca(&[0, 0, 1, 1], &[1, 1, 0, 2]), 0.75);
        let truth = [0, 1, 2, 2, 1, 0, 3];
        assert_eq!(clustering_accuracy(&truth, &truth).unwrap(), 1.0);
        let perm = [2, 0, 3, 1];
        let relabeled: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
        assert_eq!(clustering_accuracy(&relabeled, &truth).unwrap(), 1.0);
        assert!(matches!(clustering_accuracy(&[], &[]), Err(Error::Argument(_))));
        assert!(clustering_accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn ca_matches_brute_force_and_bounds_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let k = rng.random_range(1..=6);
            let n = rng.random_range(1..40);
            let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let ca = clustering_accuracy(&pred, &truth).unwrap();
            assert!((ca - brute_force_ca(&pred, &truth)).abs() < 1e-15);
            let acc = pred.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / n as f64;
            assert!(ca >= acc);
        }
    }

    #[test]
    fn hungarian_on_twenty_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let truth: Vec<usize> = (0..2000).map(|_| rng.random_range(0..20)).collect();
        let mut perm: Vec<usize> = (0..20).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let pred: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
        assert_eq!(clustering_accuracy(&pred, &truth).unwrap(), 1.0);
    }
}

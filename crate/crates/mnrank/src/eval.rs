//! Confusion matrices and the generalized multiclass Matthews
//! correlation coefficient.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label lengths differ: {0} true vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("label {0} not in the class set")]
    UnknownLabel(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows are true ranks, columns predicted ranks, in `classes` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<u8>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|k| self.counts[k][k]).sum()
    }

    /// Row sums: curves per true class.
    pub fn true_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums: curves per predicted class.
    pub fn pred_totals(&self) -> Vec<u64> {
        let c = self.classes.len();
        (0..c).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Percentage of the grand total per cell.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .map(|r| r.iter().map(|&c| 100.0 * c as f64 / total).collect())
            .collect()
    }
}

pub fn confusion(
    true_labels: &[u8],
    pred_labels: &[u8],
    classes: &[u8],
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != pred_labels.len() {
        return Err(EvalError::LengthMismatch(
            true_labels.len(),
            pred_labels.len(),
        ));
    }
    if true_labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let index = |label: u8| {
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or(EvalError::UnknownLabel(label))
    };
    let c = classes.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in true_labels.iter().zip(pred_labels) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Generalized multiclass MCC:
/// `(c·s − Σₖ pₖtₖ) / √((s² − Σₖ pₖ²)(s² − Σₖ tₖ²))`,
/// defined as 0 when either denominator factor vanishes.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.correct() as f64;
    let t = cm.true_totals();
    let p = cm.pred_totals();
    let pt: f64 = p.iter().zip(&t).map(|(&a, &b)| a as f64 * b as f64).sum();
    let pp: f64 = p.iter().map(|&a| (a as f64).powi(2)).sum();
    let tt: f64 = t.iter().map(|&a| (a as f64).powi(2)).sum();
    let dp = s * s - pp;
    let dt = s * s - tt;
    if dp <= 0.0 || dt <= 0.0 {
        return 0.0;
    }
    (c * s - pt) / (dp * dt).sqrt()
}

/// Renders the matrix as CSV (counts and percentages) with an MCC line.
pub fn report_csv(cm: &ConfusionMatrix, mcc_value: f64) -> String {
    let decimals = percent_decimals(cm.classes.len());
    let mut out = String::new();
    out.push_str("section,true_rank");
    for c in &cm.classes {
        let _ = write!(out, ",pred_{c}");
    }
    out.push('\n');
    for (i, row) in cm.counts.iter().enumerate() {
        let _ = write!(out, "counts,{}", cm.classes[i]);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    for (i, row) in cm.percentages().iter().enumerate() {
        let _ = write!(out, "percent,{}", cm.classes[i]);
        for v in row {
            let _ = write!(out, ",{v:.decimals$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "mcc,,{mcc_value:.4}");
    out
}

/// Renders an aligned percentage table: true ranks down, predictions
/// across, cell = percentage of all evaluated curves.
pub fn report_text(cm: &ConfusionMatrix, mcc_value: f64) -> String {
    let decimals = percent_decimals(cm.classes.len());
    let width = decimals + 5;
    let mut out = String::new();
    let _ = write!(out, "{:>6}", "rank");
    for c in &cm.classes {
        let _ = write!(out, " {c:>width$}");
    }
    out.push('\n');
    for (i, row) in cm.percentages().iter().enumerate() {
        let _ = write!(out, "{:>6}", cm.classes[i]);
        for v in row {
            let _ = write!(out, " {v:>width$.decimals$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "MCC = {mcc_value:.4}");
    out
}

fn percent_decimals(n_classes: usize) -> usize {
    if n_classes >= 6 {
        4
    } else {
        3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn hand_counted_matrix() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], &[0, 1]).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn perfect_diagonal_is_one() {
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(cm.correct(), 3);
        assert!((mcc(&cm) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_predictor_is_zero() {
        let cm = confusion(&[0, 0, 1, 2], &[1, 1, 1, 1], &[0, 1, 2]).unwrap();
        assert_eq!(mcc(&cm), 0.0);
    }

    #[test]
    fn binary_formula_value() {
        // [[40,10],[10,40]] → (40·40−10·10)/√(50·50·50·50) = 0.6.
        let mut cm = confusion(&[0, 1], &[0, 1], &[0, 1]).unwrap();
        cm.counts = vec![vec![40, 10], vec![10, 40]];
        assert!((mcc(&cm) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn generalized_matches_binary_on_random_matrices() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..200 {
            let tp = rng.next_below(50) + 1;
            let fn_ = rng.next_below(50) + 1;
            let fp = rng.next_below(50) + 1;
            let tn = rng.next_below(50) + 1;
            let cm = ConfusionMatrix {
                classes: vec![0, 1],
                counts: vec![vec![tp, fn_], vec![fp, tn]],
            };
            let (tp, fn_, fp, tn) = (tp as f64, fn_ as f64, fp as f64, tn as f64);
            let binary = (tp * tn - fp * fn_)
                / ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            assert!((mcc(&cm) - binary).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_predictions_give_zero() {
        // Rank-1 count matrix: counts[i][j] = t_i · p_j pattern.
        let cm = ConfusionMatrix {
            classes: vec![0, 1, 2],
            counts: vec![vec![2, 4, 6], vec![1, 2, 3], vec![3, 6, 9]],
        };
        assert!(mcc(&cm).abs() < 1e-12);
    }

    #[test]
    fn mcc_invariant_under_label_permutation() {
        let cm = ConfusionMatrix {
            classes: vec![0, 1, 2],
            counts: vec![vec![8, 1, 0], vec![2, 7, 1], vec![0, 3, 5]],
        };
        // Swap classes 0 and 2 in both rows and columns.
        let perm = [2usize, 1, 0];
        let swapped = ConfusionMatrix {
            classes: vec![0, 1, 2],
            counts: (0..3)
                .map(|i| (0..3).map(|j| cm.counts[perm[i]][perm[j]]).collect())
                .collect(),
        };
        assert!((mcc(&cm) - mcc(&swapped)).abs() < 1e-15);
    }

    #[test]
    fn percentages_sum_to_hundred() {
        let cm = ConfusionMatrix {
            classes: vec![0, 1],
            counts: vec![vec![1, 2], vec![3, 4]],
        };
        let sum: f64 = cm.percentages().iter().flatten().sum();
        assert!((sum - 100.0).abs() < 0.01);
    }

    #[test]
    fn reports_are_deterministic_and_sized() {
        let cm = confusion(&[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4]).unwrap();
        let m = mcc(&cm);
        let a = report_csv(&cm, m);
        let b = report_csv(&cm, m);
        assert_eq!(a, b);
        let text = report_text(&cm, m);
        assert_eq!(text.lines().count(), 7); // header + 5 rows + MCC line
        assert!(text.contains("MCC = 1.0000"));
        // 6-class report switches to 4 decimals.
        let cm6 = confusion(&[0, 1, 2, 3, 4, 5], &[0, 1, 2, 3, 4, 5], &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!(report_text(&cm6, mcc(&cm6)).contains("16.6667"));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            confusion(&[0], &[0, 1], &[0, 1]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
        assert!(matches!(confusion(&[], &[], &[0, 1]), Err(EvalError::Empty)));
        assert!(matches!(
            confusion(&[0, 3], &[0, 0], &[0, 1]),
            Err(EvalError::UnknownLabel(3))
        ));
    }
}

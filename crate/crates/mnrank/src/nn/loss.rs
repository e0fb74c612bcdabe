//! Class-weighted cross-entropy, normalized by the total batch weight.

use super::tensor::Tensor;
use super::{softmax_rows, NnError};

/// Returns `(loss, dlogits)` for logits of shape [batch, C], integer
/// labels, and per-class weights indexed by label. The per-sample terms
/// `w(label)·(−log p[label])` are averaged with their own weights, i.e.
/// divided by the sum of batch weights, so a single-class batch always
/// reduces to plain cross-entropy.
pub fn weighted_cross_entropy(
    logits: &Tensor,
    labels: &[usize],
    class_weights: &[f64],
) -> Result<(f64, Tensor), NnError> {
    if logits.shape.len() != 2 {
        return Err(NnError::Shape(format!(
            "logits must be [batch, C], got {:?}",
            logits.shape
        )));
    }
    let (batch, c) = (logits.shape[0], logits.shape[1]);
    if labels.len() != batch {
        return Err(NnError::Shape(format!(
            "{} labels for batch of {batch}",
            labels.len()
        )));
    }
    if !logits.is_finite() {
        return Err(NnError::Numeric("non-finite logits".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(NnError::Shape(format!("label {bad} out of range 0..{c}")));
    }

    let probs = softmax_rows(logits);
    let mut weight_sum = 0.0;
    let mut loss = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let w = class_weights[label];
        weight_sum += w;
        // log p = logit[label] − logsumexp(row), via the stable softmax.
        let p = probs.data[b * c + label].max(f64::MIN_POSITIVE);
        loss -= w * p.ln();
    }
    if weight_sum <= 0.0 {
        return Err(NnError::Numeric("total batch weight is not positive".into()));
    }
    loss /= weight_sum;

    let mut dlogits = probs;
    for (b, &label) in labels.iter().enumerate() {
        let w = class_weights[label] / weight_sum;
        let row = &mut dlogits.data[b * c..(b + 1) * c];
        for v in row.iter_mut() {
            *v *= w;
        }
        row[label] -= w;
    }
    Ok((loss, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_c() {
        let logits = Tensor::zeros(vec![3, 5]);
        let (loss, _) = weighted_cross_entropy(&logits, &[0, 2, 4], &[1.0; 5]).unwrap();
        assert!((loss - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_sample_weight_cancels() {
        // One label-0 sample with weight 2: normalization divides it out.
        let logits = Tensor::zeros(vec![1, 2]);
        let (loss, _) = weighted_cross_entropy(&logits, &[0], &[2.0, 1.0]).unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_give_near_zero_loss() {
        let logits = Tensor::from_vec(vec![1, 3], vec![1000.0, 0.0, 0.0]);
        let (loss, _) = weighted_cross_entropy(&logits, &[0], &[1.0; 3]).unwrap();
        assert!(loss.abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = Tensor::from_vec(vec![2, 3], vec![0.2, -0.4, 1.1, -0.3, 0.8, 0.0]);
        let labels = [2usize, 0];
        let weights = [1.5, 1.0, 0.5];
        let (_, grad) = weighted_cross_entropy(&logits, &labels, &weights).unwrap();
        let h = 1e-6;
        for k in 0..logits.data.len() {
            let mut lp = logits.clone();
            let mut lm = logits.clone();
            lp.data[k] += h;
            lm.data[k] -= h;
            let fp = weighted_cross_entropy(&lp, &labels, &weights).unwrap().0;
            let fm = weighted_cross_entropy(&lm, &labels, &weights).unwrap().0;
            let num = (fp - fm) / (2.0 * h);
            assert!((num - grad.data[k]).abs() < 1e-8, "dlogits[{k}]");
        }
    }

    #[test]
    fn nonfinite_logits_rejected() {
        let logits = Tensor::from_vec(vec![1, 2], vec![f64::NAN, 0.0]);
        assert!(weighted_cross_entropy(&logits, &[0], &[1.0, 1.0]).is_err());
    }
}

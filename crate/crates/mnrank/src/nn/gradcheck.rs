//! Finite-difference verification of analytic gradients.

use super::ParamVisitor;
use crate::rng::SplitMix64;

const H: f64 = 1e-5;

/// Compares the gradients produced by `fill_grads` (which must zero and
/// then populate every gradient tensor) against central finite
/// differences of `loss` over up to `max_samples` randomly chosen
/// parameters. Returns the maximum relative error
/// `|analytic − numeric| / max(|analytic| + |numeric|, 1e-8)`.
pub fn grad_check<M: ParamVisitor>(
    model: &mut M,
    mut fill_grads: impl FnMut(&mut M) -> f64,
    mut loss: impl FnMut(&mut M) -> f64,
    max_samples: usize,
    rng: &mut SplitMix64,
) -> f64 {
    fill_grads(model);

    let mut analytic: Vec<Vec<f64>> = Vec::new();
    model.visit_params(&mut |_, g| analytic.push(g.data.clone()));

    // Flat indices over the concatenation of all parameter tensors.
    let total: usize = analytic.iter().map(|g| g.len()).sum();
    let mut picks: Vec<usize> = (0..total).collect();
    rng.shuffle(&mut picks);
    picks.truncate(max_samples);
    picks.sort_unstable();

    let mut max_rel = 0.0f64;
    for flat in picks {
        let (mut tensor_idx, mut elem_idx, mut seen) = (0usize, flat, 0usize);
        for (ti, g) in analytic.iter().enumerate() {
            if flat < seen + g.len() {
                tensor_idx = ti;
                elem_idx = flat - seen;
                break;
            }
            seen += g.len();
        }

        let perturb = |model: &mut M, delta: f64| {
            let mut idx = 0;
            model.visit_params(&mut |p, _| {
                if idx == tensor_idx {
                    p.data[elem_idx] += delta;
                }
                idx += 1;
            });
        };

        perturb(model, H);
        let fp = loss(model);
        perturb(model, -2.0 * H);
        let fm = loss(model);
        perturb(model, H);

        let numeric = (fp - fm) / (2.0 * H);
        let a = analytic[tensor_idx][elem_idx];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::DenseLayer;
    use crate::nn::loss::weighted_cross_entropy;
    use crate::nn::tensor::Tensor;

    #[test]
    fn dense_plus_cross_entropy_passes() {
        let mut rng = SplitMix64::new(42);
        let mut layer = DenseLayer::new(4, 3, &mut rng);
        let x = Tensor::from_vec(
            vec![2, 4],
            vec![0.3, -0.9, 0.5, 1.2, -0.4, 0.1, 0.8, -1.1],
        );
        let labels = [1usize, 2];
        let weights = [1.5, 0.8, 1.0];

        let fill = |m: &mut DenseLayer| {
            m.zero_grads();
            let logits = m.forward(&x);
            let (l, dlogits) = weighted_cross_entropy(&logits, &labels, &weights).unwrap();
            m.backward(&x, &dlogits);
            l
        };
        let loss = |m: &mut DenseLayer| {
            let logits = m.forward(&x);
            weighted_cross_entropy(&logits, &labels, &weights).unwrap().0
        };
        let mut check_rng = SplitMix64::new(7);
        let err = grad_check(&mut layer, fill, loss, 32, &mut check_rng);
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn broken_gradient_is_caught() {
        let mut rng = SplitMix64::new(5);
        let mut layer = DenseLayer::new(2, 2, &mut rng);
        let x = Tensor::from_vec(vec![1, 2], vec![0.7, -0.2]);
        let labels = [0usize];
        let weights = [1.0, 1.0];

        let fill = |m: &mut DenseLayer| {
            m.zero_grads();
            let logits = m.forward(&x);
            let (l, dlogits) = weighted_cross_entropy(&logits, &labels, &weights).unwrap();
            m.backward(&x, &dlogits);
            // Corrupt a gradient on purpose.
            m.dweight.data[0] += 1.0;
            l
        };
        let loss = |m: &mut DenseLayer| {
            let logits = m.forward(&x);
            weighted_cross_entropy(&logits, &labels, &weights).unwrap().0
        };
        let mut check_rng = SplitMix64::new(7);
        let err = grad_check(&mut layer, fill, loss, 6, &mut check_rng);
        assert!(err > 1e-2, "corruption not detected: {err}");
    }
}

//! The two layer kinds used by the model graphs.

use super::tensor::Tensor;
use super::ParamVisitor;
use crate::rng::SplitMix64;

/// Fully connected layer: `y[b,o] = sum_i w[o,i] x[b,i] + bias[o]`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    pub dweight: Tensor,
    pub dbias: Tensor,
}

impl DenseLayer {
    pub fn new(in_features: usize, out_features: usize, rng: &mut SplitMix64) -> Self {
        Self {
            in_features,
            out_features,
            weight: Tensor::kaiming_uniform(vec![out_features, in_features], in_features, rng),
            bias: Tensor::zeros(vec![out_features]),
            dweight: Tensor::zeros(vec![out_features, in_features]),
            dbias: Tensor::zeros(vec![out_features]),
        }
    }

    /// `x` is [batch, in_features]; returns [batch, out_features].
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (ni, no) = (self.in_features, self.out_features);
        assert_eq!(x.shape.len(), 2, "dense input must be 2-d");
        assert_eq!(x.shape[1], ni, "dense input width mismatch");
        let batch = x.shape[0];
        let mut out = Tensor::zeros(vec![batch, no]);
        for b in 0..batch {
            let xrow = &x.data[b * ni..(b + 1) * ni];
            let orow = &mut out.data[b * no..(b + 1) * no];
            for o in 0..no {
                let wrow = &self.weight.data[o * ni..(o + 1) * ni];
                let mut acc = self.bias.data[o];
                for i in 0..ni {
                    acc += wrow[i] * xrow[i];
                }
                orow[o] = acc;
            }
        }
        out
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let (ni, no) = (self.in_features, self.out_features);
        let batch = x.shape[0];
        assert_eq!(dy.shape, vec![batch, no], "dense backward shape mismatch");
        let mut dx = Tensor::zeros(vec![batch, ni]);
        for b in 0..batch {
            let xrow = &x.data[b * ni..(b + 1) * ni];
            let dyrow = &dy.data[b * no..(b + 1) * no];
            let dxrow = &mut dx.data[b * ni..(b + 1) * ni];
            for o in 0..no {
                let g = dyrow[o];
                if g == 0.0 {
                    continue;
                }
                self.dbias.data[o] += g;
                let wrow = &self.weight.data[o * ni..(o + 1) * ni];
                let dwrow = &mut self.dweight.data[o * ni..(o + 1) * ni];
                for i in 0..ni {
                    dwrow[i] += g * xrow[i];
                    dxrow[i] += g * wrow[i];
                }
            }
        }
        dx
    }
}

impl ParamVisitor for DenseLayer {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        f(&mut self.weight, &mut self.dweight);
        f(&mut self.bias, &mut self.dbias);
    }
}

/// Kernel-size-1 convolution over [batch, channels, len]: a channel
/// mixing applied independently at every position.
#[derive(Debug, Clone)]
pub struct PointwiseConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    pub dweight: Tensor,
    pub dbias: Tensor,
}

impl PointwiseConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, rng: &mut SplitMix64) -> Self {
        Self {
            in_channels,
            out_channels,
            weight: Tensor::kaiming_uniform(vec![out_channels, in_channels], in_channels, rng),
            bias: Tensor::zeros(vec![out_channels]),
            dweight: Tensor::zeros(vec![out_channels, in_channels]),
            dbias: Tensor::zeros(vec![out_channels]),
        }
    }

    /// `x` is [batch, in_channels, len]; returns [batch, out_channels, len].
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (ci, co) = (self.in_channels, self.out_channels);
        assert_eq!(x.shape.len(), 3, "conv input must be 3-d");
        assert_eq!(x.shape[1], ci, "conv input channel mismatch");
        let (batch, len) = (x.shape[0], x.shape[2]);
        let mut out = Tensor::zeros(vec![batch, co, len]);
        for b in 0..batch {
            let xb = &x.data[b * ci * len..(b + 1) * ci * len];
            let ob = &mut out.data[b * co * len..(b + 1) * co * len];
            for o in 0..co {
                let orow = &mut ob[o * len..(o + 1) * len];
                orow.fill(self.bias.data[o]);
                let wrow = &self.weight.data[o * ci..(o + 1) * ci];
                for i in 0..ci {
                    let w = wrow[i];
                    if w == 0.0 {
                        continue;
                    }
                    let xrow = &xb[i * len..(i + 1) * len];
                    for t in 0..len {
                        orow[t] += w * xrow[t];
                    }
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let (ci, co) = (self.in_channels, self.out_channels);
        let (batch, len) = (x.shape[0], x.shape[2]);
        assert_eq!(
            dy.shape,
            vec![batch, co, len],
            "conv backward shape mismatch"
        );
        let mut dx = Tensor::zeros(vec![batch, ci, len]);
        for b in 0..batch {
            let xb = &x.data[b * ci * len..(b + 1) * ci * len];
            let dyb = &dy.data[b * co * len..(b + 1) * co * len];
            let dxb = &mut dx.data[b * ci * len..(b + 1) * ci * len];
            for o in 0..co {
                let dyrow = &dyb[o * len..(o + 1) * len];
                self.dbias.data[o] += dyrow.iter().sum::<f64>();
                let wrow = &self.weight.data[o * ci..(o + 1) * ci];
                let dwrow = &mut self.dweight.data[o * ci..(o + 1) * ci];
                for i in 0..ci {
                    let xrow = &xb[i * len..(i + 1) * len];
                    let dxrow = &mut dxb[i * len..(i + 1) * len];
                    let w = wrow[i];
                    let mut dw = 0.0;
                    for t in 0..len {
                        dw += dyrow[t] * xrow[t];
                        dxrow[t] += dyrow[t] * w;
                    }
                    dwrow[i] += dw;
                }
            }
        }
        dx
    }
}

impl ParamVisitor for PointwiseConvLayer {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        f(&mut self.weight, &mut self.dweight);
        f(&mut self.bias, &mut self.dbias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_forward_known_values() {
        let mut rng = SplitMix64::new(1);
        let mut layer = DenseLayer::new(2, 2, &mut rng);
        layer.weight = Tensor::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        layer.bias = Tensor::from_vec(vec![2], vec![0.5, -0.5]);
        let x = Tensor::from_vec(vec![1, 2], vec![1.0, 1.0]);
        let y = layer.forward(&x);
        assert_eq!(y.data, vec![3.5, 6.5]);
    }

    #[test]
    fn dense_backward_matches_hand_computation() {
        let mut rng = SplitMix64::new(1);
        let mut layer = DenseLayer::new(2, 1, &mut rng);
        layer.weight = Tensor::from_vec(vec![1, 2], vec![2.0, -3.0]);
        layer.bias = Tensor::zeros(vec![1]);
        let x = Tensor::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let dy = Tensor::from_vec(vec![2, 1], vec![1.0, 0.5]);
        let dx = layer.backward(&x, &dy);
        // dW[0] = 1*1 + 0.5*3 = 2.5, dW[1] = 1*2 + 0.5*4 = 4
        assert_eq!(layer.dweight.data, vec![2.5, 4.0]);
        assert_eq!(layer.dbias.data, vec![1.5]);
        assert_eq!(dx.data, vec![2.0, -3.0, 1.0, -1.5]);
    }

    #[test]
    fn conv_agrees_with_dense_per_position() {
        // A pointwise conv is a dense layer applied at every position.
        let mut rng = SplitMix64::new(7);
        let conv = PointwiseConvLayer::new(3, 2, &mut rng);
        let mut dense = DenseLayer::new(3, 2, &mut SplitMix64::new(0));
        dense.weight = conv.weight.clone();
        dense.bias = conv.bias.clone();

        let len = 4;
        let mut rng2 = SplitMix64::new(9);
        let x = Tensor::from_vec(
            vec![1, 3, len],
            (0..3 * len).map(|_| rng2.next_range_f64(-1.0, 1.0)).collect(),
        );
        let y = conv.forward(&x);
        for t in 0..len {
            let col = Tensor::from_vec(
                vec![1, 3],
                (0..3).map(|c| x.data[c * len + t]).collect(),
            );
            let yd = dense.forward(&col);
            for o in 0..2 {
                assert!((y.data[o * len + t] - yd.data[o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_backward_matches_finite_difference() {
        let mut rng = SplitMix64::new(11);
        let mut conv = PointwiseConvLayer::new(2, 2, &mut rng);
        let x = Tensor::from_vec(
            vec![1, 2, 3],
            vec![0.3, -0.7, 0.2, 0.9, -0.1, 0.4],
        );
        // Scalar objective: sum of outputs.
        let loss = |c: &PointwiseConvLayer, xx: &Tensor| c.forward(xx).data.iter().sum::<f64>();
        let dy = Tensor::from_vec(vec![1, 2, 3], vec![1.0; 6]);
        let dx = conv.backward(&x, &dy);
        let h = 1e-6;
        for k in 0..x.data.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.data[k] += h;
            xm.data[k] -= h;
            let num = (loss(&conv, &xp) - loss(&conv, &xm)) / (2.0 * h);
            assert!((num - dx.data[k]).abs() < 1e-6, "dx[{k}]");
        }
        for k in 0..conv.weight.data.len() {
            let mut cp = conv.clone();
            let mut cm = conv.clone();
            cp.weight.data[k] += h;
            cm.weight.data[k] -= h;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * h);
            assert!((num - conv.dweight.data[k]).abs() < 1e-6, "dw[{k}]");
        }
    }
}

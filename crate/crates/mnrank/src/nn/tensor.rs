//! A contiguous row-major f64 tensor. Nothing fancy: the two model
//! graphs only need 1-3 dimensions.

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/data length mismatch"
        );
        Self { shape, data }
    }

    /// Kaiming-uniform fan-in init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    pub fn kaiming_uniform(shape: Vec<usize>, fan_in: usize, rng: &mut SplitMix64) -> Self {
        let bound = (6.0 / fan_in as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.next_range_f64(-bound, bound)).collect();
        Self { shape, data }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kaiming_bounds_and_determinism() {
        let mut rng = SplitMix64::new(3);
        let t = Tensor::kaiming_uniform(vec![8, 6], 6, &mut rng);
        let bound = (6.0f64 / 6.0).sqrt();
        assert!(t.data.iter().all(|&v| v.abs() <= bound));
        let mut rng2 = SplitMix64::new(3);
        let t2 = Tensor::kaiming_uniform(vec![8, 6], 6, &mut rng2);
        assert_eq!(t, t2);
    }
}

//! AdamW with decoupled weight decay, and the one-cycle learning-rate
//! schedule used for the learned-sum models.

use super::tensor::Tensor;
use super::{NnError, ParamVisitor};

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// One moment pair per parameter tensor, in visit order.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update to every parameter the model exposes. `lr`
    /// overrides the configured rate when a schedule drives it.
    pub fn step(&mut self, model: &mut dyn ParamVisitor, lr: Option<f64>) {
        self.step += 1;
        let t = self.step as i32;
        let c = self.config;
        let lr = lr.unwrap_or(c.lr);
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (m, v) = (&mut self.m, &mut self.v);
        let mut idx = 0;
        model.visit_params(&mut |p: &mut Tensor, g: &mut Tensor| {
            if idx == m.len() {
                m.push(vec![0.0; p.data.len()]);
                v.push(vec![0.0; p.data.len()]);
            }
            let (mi, vi) = (&mut m[idx], &mut v[idx]);
            assert_eq!(mi.len(), p.data.len(), "parameter layout changed");
            for k in 0..p.data.len() {
                let grad = g.data[k];
                mi[k] = c.beta1 * mi[k] + (1.0 - c.beta1) * grad;
                vi[k] = c.beta2 * vi[k] + (1.0 - c.beta2) * grad * grad;
                let m_hat = mi[k] / bc1;
                let v_hat = vi[k] / bc2;
                p.data[k] -= lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * p.data[k]);
            }
            idx += 1;
        });
    }
}

/// Cosine rise from `max_lr/div_initial` to `max_lr` over the warmup
/// fraction of steps, then cosine decay to `max_lr/div_final`.
#[derive(Debug, Clone, Copy)]
pub struct OneCycleSchedule {
    pub max_lr: f64,
    pub total_steps: usize,
    pub warmup_fraction: f64,
    pub div_initial: f64,
    pub div_final: f64,
}

impl OneCycleSchedule {
    pub fn new(max_lr: f64, total_steps: usize) -> Self {
        Self {
            max_lr,
            total_steps,
            warmup_fraction: 0.3,
            div_initial: 25.0,
            div_final: 1e4,
        }
    }

    pub fn lr_at(&self, step: usize) -> Result<f64, NnError> {
        if step >= self.total_steps {
            return Err(NnError::StepOutOfRange(step, self.total_steps));
        }
        let warmup_steps = (self.warmup_fraction * self.total_steps as f64).round() as usize;
        let cosine = |from: f64, to: f64, frac: f64| {
            to + (from - to) * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
        };
        let lr = if step < warmup_steps {
            let frac = step as f64 / warmup_steps as f64;
            cosine(self.max_lr / self.div_initial, self.max_lr, frac)
        } else {
            let span = (self.total_steps - 1 - warmup_steps).max(1);
            let frac = (step - warmup_steps) as f64 / span as f64;
            cosine(self.max_lr, self.max_lr / self.div_final, frac)
        };
        Ok(lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A bag of free scalar parameters for driving the optimizer.
    struct Scalars {
        p: Tensor,
        g: Tensor,
    }

    impl ParamVisitor for Scalars {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
            f(&mut self.p, &mut self.g);
        }
    }

    #[test]
    fn zero_grad_zero_decay_leaves_params_unchanged() {
        let mut s = Scalars {
            p: Tensor::from_vec(vec![1], vec![1.0]),
            g: Tensor::zeros(vec![1]),
        };
        let mut opt = AdamW::new(AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        });
        opt.step(&mut s, None);
        assert_eq!(s.p.data[0], 1.0);
    }

    #[test]
    fn single_step_hand_recurrence() {
        // p=1, g=1, lr=0.1, wd=0: m̂ = v̂ = 1, so p ← 1 − 0.1·1/(1+ε) ≈ 0.9.
        let mut s = Scalars {
            p: Tensor::from_vec(vec![1], vec![1.0]),
            g: Tensor::from_vec(vec![1], vec![1.0]),
        };
        let mut opt = AdamW::new(AdamWConfig {
            lr: 0.1,
            weight_decay: 0.0,
            ..Default::default()
        });
        opt.step(&mut s, None);
        assert!((s.p.data[0] - 0.9).abs() < 1e-7);
    }

    #[test]
    fn pure_decay_step() {
        let mut s = Scalars {
            p: Tensor::from_vec(vec![1], vec![1.0]),
            g: Tensor::zeros(vec![1]),
        };
        let mut opt = AdamW::new(AdamWConfig {
            lr: 0.1,
            weight_decay: 0.1,
            ..Default::default()
        });
        opt.step(&mut s, None);
        assert!((s.p.data[0] - 0.99).abs() < 1e-12);
    }

    #[test]
    fn adamw_wd_zero_matches_adam_reference_recurrence() {
        let grads = [0.5, -1.2, 0.3, 0.0, 2.0, -0.7];
        let cfg = AdamWConfig {
            lr: 1e-3,
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut s = Scalars {
            p: Tensor::from_vec(vec![1], vec![0.4]),
            g: Tensor::zeros(vec![1]),
        };
        let mut opt = AdamW::new(cfg);

        // Reference Adam recurrence, scalar.
        let (mut p_ref, mut m, mut v) = (0.4f64, 0.0f64, 0.0f64);
        for (t, &g) in grads.iter().enumerate() {
            s.g.data[0] = g;
            opt.step(&mut s, None);
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let m_hat = m / (1.0 - cfg.beta1.powi(t as i32 + 1));
            let v_hat = v / (1.0 - cfg.beta2.powi(t as i32 + 1));
            p_ref -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            assert!((s.p.data[0] - p_ref).abs() < 1e-12, "step {t}");
        }
    }

    #[test]
    fn one_cycle_endpoints() {
        let sched = OneCycleSchedule::new(1e-2, 1000);
        let warmup = (0.3 * 1000.0) as usize;
        assert!((sched.lr_at(0).unwrap() - 1e-2 / 25.0).abs() < 1e-15);
        assert!((sched.lr_at(warmup).unwrap() - 1e-2).abs() < 1e-15);
        let last = sched.lr_at(999).unwrap();
        assert!((last - 1e-2 / 1e4).abs() / (1e-2 / 1e4) < 1e-6);
        assert!(sched.lr_at(1000).is_err());
    }

    #[test]
    fn one_cycle_monotone_up_then_down() {
        let sched = OneCycleSchedule::new(1.0, 100);
        let warmup = 30;
        for s in 1..warmup {
            assert!(sched.lr_at(s).unwrap() >= sched.lr_at(s - 1).unwrap());
        }
        for s in warmup + 1..100 {
            assert!(sched.lr_at(s).unwrap() <= sched.lr_at(s - 1).unwrap());
        }
    }
}

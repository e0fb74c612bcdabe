//! The two rank-classification model graphs and their training loops:
//! a dense MLP over Mestre–Nagao sum features, and the learned-sum
//! network whose pointwise-conv stack emits per-prime weights wₚ from
//! positional encodings (optionally with a conductor channel), forms
//! S_opt = Σ wₚ·aₚ/√p, and classifies (log₁₀N, S_opt) with a dense head.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{confusion, mcc};
use crate::nn::{
    relu, relu_backward, softmax_rows, weighted_cross_entropy, AdamW, AdamWConfig, Checkpoint,
    DenseLayer, NnError, OneCycleSchedule, ParamVisitor, PointwiseConvLayer, Tensor,
};
use crate::primes::{sieve_primes, PrimeTable};
use crate::rng::SplitMix64;
use crate::sums::SumFeatures;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("training diverged at step {step}: {detail}")]
    Training { step: usize, detail: String },
    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

// ---------------------------------------------------------------------------
// Input specification for the sum MLP
// ---------------------------------------------------------------------------

/// Which sums feed the MLP: any of {S₀, S₅} evaluated at a bound
/// subset, always followed by log₁₀ of the conductor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumInputSpec {
    pub use_s0: bool,
    pub use_s5: bool,
    pub bounds: Vec<u64>,
}

impl SumInputSpec {
    pub fn dim(&self) -> usize {
        let sums = usize::from(self.use_s0) + usize::from(self.use_s5);
        sums * self.bounds.len() + 1
    }

    /// Extracts one input row: selected sums in bound order (S₀ block
    /// then S₅ block), then log₁₀N.
    pub fn row(&self, f: &SumFeatures) -> Result<Vec<f64>, ModelError> {
        let mut out = Vec::with_capacity(self.dim());
        if self.use_s0 {
            for &b in &self.bounds {
                out.push(f.s0_at(b).map_err(|e| ModelError::Input(e.to_string()))?);
            }
        }
        if self.use_s5 {
            for &b in &self.bounds {
                out.push(f.s5_at(b).map_err(|e| ModelError::Input(e.to_string()))?);
            }
        }
        out.push(f.log10_conductor);
        Ok(out)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.use_s0 && !self.use_s5 {
            return Err(ModelError::Config("no sums selected".into()));
        }
        if self.bounds.is_empty() {
            return Err(ModelError::Config("empty bound set".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sum MLP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumMlpConfig {
    pub input: SumInputSpec,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub classes: Vec<u8>,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SumMlpConfig {
    fn default() -> Self {
        Self {
            input: SumInputSpec {
                use_s0: true,
                use_s5: true,
                bounds: crate::sums::PAPER_BOUNDS.to_vec(),
            },
            hidden_layers: 4,
            hidden_width: 128,
            classes: vec![0, 1, 2, 3, 4],
            lr: 1e-3,
            weight_decay: 0.01,
            batch_size: 1024,
            epochs: 50,
            seed: 0,
        }
    }
}

impl SumMlpConfig {
    fn validate(&self) -> Result<(), ModelError> {
        self.input.validate()?;
        if !(3..=6).contains(&self.hidden_layers) {
            return Err(ModelError::Config(format!(
                "hidden_layers must be 3..=6, got {}",
                self.hidden_layers
            )));
        }
        if !self.hidden_width.is_power_of_two() || !(8..=512).contains(&self.hidden_width) {
            return Err(ModelError::Config(format!(
                "hidden_width must be a power of two in 8..=512, got {}",
                self.hidden_width
            )));
        }
        if self.classes.len() < 2 {
            return Err(ModelError::Config("need at least two classes".into()));
        }
        Ok(())
    }
}

/// Dense stack: input → width, (hidden_layers − 1) × width → width,
/// width → C, with ReLU after every hidden layer and softmax on top.
#[derive(Debug, Clone)]
pub struct SumMlp {
    pub config: SumMlpConfig,
    layers: Vec<DenseLayer>,
}

impl SumMlp {
    pub fn new(config: SumMlpConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = SplitMix64::new(config.seed);
        let dims: Vec<usize> = std::iter::once(config.input.dim())
            .chain(std::iter::repeat_n(config.hidden_width, config.hidden_layers))
            .chain(std::iter::once(config.classes.len()))
            .collect();
        let layers = dims
            .windows(2)
            .map(|w| DenseLayer::new(w[0], w[1], &mut rng))
            .collect();
        Ok(Self { config, layers })
    }

    pub fn logits(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        if x.shape.len() != 2 || x.shape[1] != self.config.input.dim() {
            return Err(ModelError::Input(format!(
                "expected [batch, {}], got {:?}",
                self.config.input.dim(),
                x.shape
            )));
        }
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i + 1 < self.layers.len() {
                h = relu(&h);
            }
        }
        Ok(h)
    }

    pub fn probabilities(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(softmax_rows(&self.logits(x)?))
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<u8>, ModelError> {
        let probs = self.probabilities(x)?;
        Ok(argmax_classes(&probs, &self.config.classes))
    }

    /// Weighted cross-entropy over one batch, accumulating parameter
    /// gradients. `labels` are ordinals into `config.classes`.
    pub fn loss_and_grads(
        &mut self,
        x: &Tensor,
        labels: &[usize],
        class_weights: &[f64],
    ) -> Result<f64, ModelError> {
        let logits = self.logits(x)?;
        let (loss, dlogits) = weighted_cross_entropy(&logits, labels, class_weights)?;
        self.backward(x, &dlogits);
        Ok(loss)
    }

    /// Forward with cached pre-activations, backward from dlogits.
    fn backward(&mut self, x: &Tensor, dlogits: &Tensor) {
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut acts = vec![x.clone()];
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.forward(acts.last().unwrap());
            if i + 1 < self.layers.len() {
                acts.push(relu(&pre));
            }
            pres.push(pre);
        }
        let mut grad = dlogits.clone();
        for i in (0..self.layers.len()).rev() {
            let dx = self.layers[i].backward(&acts[i], &grad);
            grad = if i > 0 {
                relu_backward(&pres[i - 1], &dx)
            } else {
                dx
            };
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, ModelError> {
        if ckpt.meta["graph"] != "sum_mlp" {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint graph is {}, expected sum_mlp",
                ckpt.meta["graph"]
            )));
        }
        let config: SumMlpConfig = serde_json::from_value(ckpt.meta["config"].clone())
            .map_err(|e| ModelError::Checkpoint(format!("bad config: {e}")))?;
        let mut model = Self::new(config)?;
        ckpt.load_into(&mut model)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        Ok(model)
    }

    pub fn to_checkpoint(&mut self) -> Checkpoint {
        let meta = serde_json::json!({
            "graph": "sum_mlp",
            "config": self.config,
            "seed": self.config.seed,
        });
        Checkpoint::from_model(self, meta)
    }
}

impl ParamVisitor for SumMlp {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        for layer in &mut self.layers {
            layer.visit_params(f);
        }
    }
}

/// Argmax per probability row, ties broken toward the smaller rank.
pub fn argmax_classes(probs: &Tensor, classes: &[u8]) -> Vec<u8> {
    let c = classes.len();
    probs
        .data
        .chunks(c)
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            classes[best]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Learned-sum network
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedSumConfig {
    pub conductor_dependent: bool,
    pub prime_limit: u64,
    /// Hidden channel widths of the weight generator; the stack is
    /// in → conv_hidden[0] → … → conv_hidden[last] → 1.
    pub conv_hidden: Vec<usize>,
    pub head_layers: usize,
    pub head_width: usize,
    pub classes: Vec<u8>,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LearnedSumConfig {
    fn default() -> Self {
        Self {
            conductor_dependent: false,
            prime_limit: 100_000,
            conv_hidden: vec![128, 128, 128, 128],
            head_layers: 4,
            head_width: 128,
            classes: vec![0, 1, 2, 3, 4, 5],
            lr: 1e-4,
            weight_decay: 0.01,
            batch_size: 256,
            epochs: 5,
            seed: 0,
        }
    }
}

impl LearnedSumConfig {
    fn in_channels(&self) -> usize {
        if self.conductor_dependent {
            2
        } else {
            1
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.conv_hidden.is_empty() {
            return Err(ModelError::Config("empty conv stack".into()));
        }
        if self.head_layers == 0 || self.head_width == 0 {
            return Err(ModelError::Config("empty head".into()));
        }
        if self.classes.len() < 2 {
            return Err(ModelError::Config("need at least two classes".into()));
        }
        if self.prime_limit < 3 {
            return Err(ModelError::Config("prime_limit too small".into()));
        }
        Ok(())
    }
}

/// Per-prime weights the network emitted for one log₁₀N value.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedWeights {
    pub w: Vec<f64>,
}

pub struct LearnedSum {
    pub config: LearnedSumConfig,
    conv: Vec<PointwiseConvLayer>,
    head: Vec<DenseLayer>,
    /// −1 + 2π(p)/π(limit−1) per prime below the limit.
    pos_enc: Vec<f64>,
}

impl LearnedSum {
    pub fn new(config: LearnedSumConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let primes = sieve_primes(config.prime_limit)
            .map_err(|e| ModelError::Config(e.to_string()))?;
        Self::with_primes(config, &primes)
    }

    /// Construction path that reuses an existing sieve.
    pub fn with_primes(config: LearnedSumConfig, primes: &PrimeTable) -> Result<Self, ModelError> {
        config.validate()?;
        if primes.limit() < config.prime_limit {
            return Err(ModelError::Config(format!(
                "prime table reaches {}, config needs {}",
                primes.limit(),
                config.prime_limit
            )));
        }
        let pos_enc: Vec<f64> = primes
            .primes()
            .iter()
            .take_while(|&&p| (p as u64) < config.prime_limit)
            .map(|&p| {
                primes
                    .positional_encoding(p as u64, config.prime_limit - 1)
                    .expect("prime below limit")
            })
            .collect();

        let mut rng = SplitMix64::new(config.seed);
        let conv_dims: Vec<usize> = std::iter::once(config.in_channels())
            .chain(config.conv_hidden.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        let conv = conv_dims
            .windows(2)
            .map(|w| PointwiseConvLayer::new(w[0], w[1], &mut rng))
            .collect();
        let head_dims: Vec<usize> = std::iter::once(2)
            .chain(std::iter::repeat_n(config.head_width, config.head_layers))
            .chain(std::iter::once(config.classes.len()))
            .collect();
        let head = head_dims
            .windows(2)
            .map(|w| DenseLayer::new(w[0], w[1], &mut rng))
            .collect();
        Ok(Self {
            config,
            conv,
            head,
            pos_enc,
        })
    }

    pub fn sequence_len(&self) -> usize {
        self.pos_enc.len()
    }

    fn conv_input(&self, log10n: f64) -> Tensor {
        let len = self.pos_enc.len();
        let mut data = self.pos_enc.clone();
        if self.config.conductor_dependent {
            data.extend(std::iter::repeat_n(log10n, len));
        }
        Tensor::from_vec(vec![1, self.config.in_channels(), len], data)
    }

    fn conv_forward_cache(&self, input: &Tensor) -> (Vec<Tensor>, Vec<Tensor>) {
        let mut pres = Vec::with_capacity(self.conv.len());
        let mut acts = vec![input.clone()];
        for (i, layer) in self.conv.iter().enumerate() {
            let pre = layer.forward(acts.last().unwrap());
            if i + 1 < self.conv.len() {
                acts.push(relu(&pre));
            }
            pres.push(pre);
        }
        (pres, acts)
    }

    /// The wₚ vector for a given log₁₀N (which is ignored in the
    /// conductor-independent configuration).
    pub fn weights_for(&self, log10n: f64) -> LearnedWeights {
        let (pres, _) = self.conv_forward_cache(&self.conv_input(log10n));
        LearnedWeights {
            w: pres.last().unwrap().data.clone(),
        }
    }

    fn head_logits(&self, head_in: &Tensor) -> Tensor {
        let mut h = head_in.clone();
        for (i, layer) in self.head.iter().enumerate() {
            h = layer.forward(&h);
            if i + 1 < self.head.len() {
                h = relu(&h);
            }
        }
        h
    }

    /// Full forward pass. `ap_norm` is [batch, len] with entries aₚ/√p;
    /// returns class probabilities and the per-row weight vectors.
    pub fn forward(
        &self,
        ap_norm: &Tensor,
        log10n: &[f64],
    ) -> Result<(Tensor, Vec<LearnedWeights>), ModelError> {
        let len = self.pos_enc.len();
        if ap_norm.shape.len() != 2 || ap_norm.shape[1] != len {
            return Err(ModelError::Input(format!(
                "expected ap_norm [batch, {len}], got {:?}",
                ap_norm.shape
            )));
        }
        let batch = ap_norm.shape[0];
        if log10n.len() != batch {
            return Err(ModelError::Input(format!(
                "{} conductors for batch of {batch}",
                log10n.len()
            )));
        }

        let mut weights = Vec::with_capacity(batch);
        if self.config.conductor_dependent {
            for &n in log10n {
                weights.push(self.weights_for(n));
            }
        } else {
            let shared = self.weights_for(0.0);
            weights.resize(batch, shared);
        }

        let mut head_in = Tensor::zeros(vec![batch, 2]);
        for b in 0..batch {
            let row = &ap_norm.data[b * len..(b + 1) * len];
            let s_opt: f64 = weights[b].w.iter().zip(row).map(|(w, a)| w * a).sum();
            head_in.data[2 * b] = log10n[b];
            head_in.data[2 * b + 1] = s_opt;
        }
        let probs = softmax_rows(&self.head_logits(&head_in));
        Ok((probs, weights))
    }

    pub fn predict(&self, ap_norm: &Tensor, log10n: &[f64]) -> Result<Vec<u8>, ModelError> {
        let (probs, _) = self.forward(ap_norm, log10n)?;
        Ok(argmax_classes(&probs, &self.config.classes))
    }

    /// Weighted cross-entropy over one batch, accumulating parameter
    /// gradients. `labels` are ordinals into `config.classes`.
    pub fn loss_and_grads(
        &mut self,
        ap_norm: &Tensor,
        log10n: &[f64],
        labels: &[usize],
        class_weights: &[f64],
    ) -> Result<f64, ModelError> {
        let cache = self.forward_cache(ap_norm, log10n)?;
        let logits = cache.head_pres.last().unwrap().clone();
        let (loss, dlogits) = weighted_cross_entropy(&logits, labels, class_weights)?;
        self.backward(ap_norm, &cache, &dlogits);
        Ok(loss)
    }

    /// Forward to logits plus everything backward needs.
    fn forward_cache(
        &self,
        ap_norm: &Tensor,
        log10n: &[f64],
    ) -> Result<LearnedSumCache, ModelError> {
        let len = self.pos_enc.len();
        let batch = ap_norm.shape[0];
        // One conv pass per row when the weights depend on the
        // conductor, one shared pass otherwise.
        let conv_passes = if self.config.conductor_dependent {
            log10n
                .iter()
                .map(|&n| {
                    let input = self.conv_input(n);
                    let (pres, acts) = self.conv_forward_cache(&input);
                    (input, pres, acts)
                })
                .collect()
        } else {
            let input = self.conv_input(0.0);
            let (pres, acts) = self.conv_forward_cache(&input);
            vec![(input, pres, acts)]
        };

        let mut head_in = Tensor::zeros(vec![batch, 2]);
        for b in 0..batch {
            let pass = if self.config.conductor_dependent { b } else { 0 };
            let w = &conv_passes[pass].1.last().unwrap().data;
            let row = &ap_norm.data[b * len..(b + 1) * len];
            let s_opt: f64 = w.iter().zip(row).map(|(w, a)| w * a).sum();
            head_in.data[2 * b] = log10n[b];
            head_in.data[2 * b + 1] = s_opt;
        }

        let mut head_pres = Vec::with_capacity(self.head.len());
        let mut head_acts = vec![head_in];
        for (i, layer) in self.head.iter().enumerate() {
            let pre = layer.forward(head_acts.last().unwrap());
            if i + 1 < self.head.len() {
                head_acts.push(relu(&pre));
            }
            head_pres.push(pre);
        }
        Ok(LearnedSumCache {
            conv_passes,
            head_pres,
            head_acts,
        })
    }

    /// Backward from dlogits, accumulating all parameter gradients.
    fn backward(&mut self, ap_norm: &Tensor, cache: &LearnedSumCache, dlogits: &Tensor) {
        let len = self.pos_enc.len();
        let batch = ap_norm.shape[0];

        let mut grad = dlogits.clone();
        for i in (0..self.head.len()).rev() {
            let dx = self.head[i].backward(&cache.head_acts[i], &grad);
            grad = if i > 0 {
                relu_backward(&cache.head_pres[i - 1], &dx)
            } else {
                dx
            };
        }
        // grad is now d head_in [batch, 2]; column 1 is dS_opt.

        // dS_opt/dwₚ = aₚ/√p. Shared weights collect all rows at once.
        let conv_backward =
            |conv: &mut Vec<PointwiseConvLayer>,
             pass: &(Tensor, Vec<Tensor>, Vec<Tensor>),
             dw: Tensor| {
                let (_, pres, acts) = pass;
                let mut g = dw;
                for i in (0..conv.len()).rev() {
                    let dx = conv[i].backward(&acts[i], &g);
                    g = if i > 0 {
                        relu_backward(&pres[i - 1], &dx)
                    } else {
                        dx
                    };
                }
            };

        if self.config.conductor_dependent {
            for b in 0..batch {
                let ds = grad.data[2 * b + 1];
                let row = &ap_norm.data[b * len..(b + 1) * len];
                let dw = Tensor::from_vec(
                    vec![1, 1, len],
                    row.iter().map(|&a| ds * a).collect(),
                );
                conv_backward(&mut self.conv, &cache.conv_passes[b], dw);
            }
        } else {
            let mut dw = vec![0.0; len];
            for b in 0..batch {
                let ds = grad.data[2 * b + 1];
                let row = &ap_norm.data[b * len..(b + 1) * len];
                for (d, &a) in dw.iter_mut().zip(row) {
                    *d += ds * a;
                }
            }
            conv_backward(
                &mut self.conv,
                &cache.conv_passes[0],
                Tensor::from_vec(vec![1, 1, len], dw),
            );
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, ModelError> {
        if ckpt.meta["graph"] != "learned_sum" {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint graph is {}, expected learned_sum",
                ckpt.meta["graph"]
            )));
        }
        let config: LearnedSumConfig = serde_json::from_value(ckpt.meta["config"].clone())
            .map_err(|e| ModelError::Checkpoint(format!("bad config: {e}")))?;
        let mut model = Self::new(config)?;
        ckpt.load_into(&mut model)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        Ok(model)
    }

    pub fn to_checkpoint(&mut self) -> Checkpoint {
        let meta = serde_json::json!({
            "graph": "learned_sum",
            "config": self.config,
            "seed": self.config.seed,
        });
        Checkpoint::from_model(self, meta)
    }
}

struct LearnedSumCache {
    /// (input, pre-activations, post-activations) per conv pass.
    conv_passes: Vec<(Tensor, Vec<Tensor>, Vec<Tensor>)>,
    head_pres: Vec<Tensor>,
    head_acts: Vec<Tensor>,
}

impl ParamVisitor for LearnedSum {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        for layer in &mut self.conv {
            layer.visit_params(f);
        }
        for layer in &mut self.head {
            layer.visit_params(f);
        }
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_mcc: f64,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub best_val_mcc: f64,
}

/// Inverse-frequency weights over `classes` computed from labels, with
/// the per-sample mean normalized to 1 (classes absent from the labels
/// get weight 0 and contribute nothing to the loss).
fn label_weights(labels: &[u8], classes: &[u8]) -> Result<Vec<f64>, ModelError> {
    let mut counts = vec![0usize; classes.len()];
    for &l in labels {
        let k = classes
            .iter()
            .position(|&c| c == l)
            .ok_or_else(|| ModelError::Input(format!("label {l} outside class set")))?;
        counts[k] += 1;
    }
    let present = counts.iter().filter(|&&n| n > 0).count();
    let total = labels.len() as f64;
    Ok(counts
        .iter()
        .map(|&n| {
            if n == 0 {
                0.0
            } else {
                total / (n as f64 * present as f64)
            }
        })
        .collect())
}

fn class_ordinal(classes: &[u8], label: u8) -> Result<usize, ModelError> {
    classes
        .iter()
        .position(|&c| c == label)
        .ok_or_else(|| ModelError::Input(format!("label {label} outside class set")))
}

/// Minibatch AdamW over the sum MLP with best-validation-MCC
/// checkpoint selection. `train`/`val` pair feature tensors with labels.
pub fn train_sum_mlp(
    config: SumMlpConfig,
    train: (&Tensor, &[u8]),
    val: (&Tensor, &[u8]),
) -> Result<TrainOutcome, ModelError> {
    let mut model = SumMlp::new(config.clone())?;
    let classes = config.classes.clone();
    let weights = label_weights(train.1, &classes)?;
    let opt_cfg = AdamWConfig {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..Default::default()
    };
    train_loop(
        &mut model,
        opt_cfg,
        None,
        config.epochs,
        config.batch_size,
        config.seed,
        &weights,
        &classes,
        |m, x, y_ord, w| {
            m.zero_grads();
            let logits = m.logits(x)?;
            let (loss, dlogits) = weighted_cross_entropy(&logits, y_ord, w)?;
            m.backward(x, &dlogits);
            Ok(loss)
        },
        |m, x| m.predict(x),
        train,
        val,
    )
    .map(|(log, best_val_mcc, mut best)| TrainOutcome {
        checkpoint: best.to_checkpoint(),
        log,
        best_val_mcc,
    })
    .map(|mut o| {
        o.checkpoint.meta["weights"] = serde_json::json!(weights);
        o
    })
}

/// Minibatch AdamW over the learned-sum graph with the one-cycle lr
/// schedule. `train`/`val` pair aₚ/√p tensors with (log₁₀N, label) rows.
pub fn train_learned_sum(
    config: LearnedSumConfig,
    train: (&Tensor, &[f64], &[u8]),
    val: (&Tensor, &[f64], &[u8]),
) -> Result<TrainOutcome, ModelError> {
    let mut model = LearnedSum::new(config.clone())?;
    let classes = config.classes.clone();
    let weights = label_weights(train.2, &classes)?;
    let n = train.2.len();
    let batches_per_epoch = n.div_ceil(config.batch_size.max(1)).max(1);
    let total_steps = (config.epochs * batches_per_epoch).max(1);
    let schedule = OneCycleSchedule::new(config.lr, total_steps);
    let opt_cfg = AdamWConfig {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..Default::default()
    };

    // Repackage (ap_norm, log10n) pairs through the generic loop by
    // carrying log10n alongside the feature tensor.
    let (ap_train, n_train, y_train) = train;
    let (ap_val, n_val, y_val) = val;
    let mut log = Vec::new();
    let mut rng = SplitMix64::new(config.seed ^ 0x7261696e);
    let len = model.sequence_len();
    if ap_train.shape != vec![n, len] {
        return Err(ModelError::Input(format!(
            "expected ap_norm [{n}, {len}], got {:?}",
            ap_train.shape
        )));
    }

    let mut opt = AdamW::new(opt_cfg);
    let val_mcc = |m: &LearnedSum| -> Result<f64, ModelError> {
        let pred = m.predict(ap_val, n_val)?;
        let cm = confusion(y_val, &pred, &classes).map_err(|e| ModelError::Input(e.to_string()))?;
        Ok(mcc(&cm))
    };
    let mut best_val = val_mcc(&model)?;
    let mut best_ckpt = model.to_checkpoint();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        rng.shuffle(&mut indices);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for chunk in indices.chunks(config.batch_size.max(1)) {
            let batch = chunk.len();
            let mut x = Tensor::zeros(vec![batch, len]);
            let mut ns = Vec::with_capacity(batch);
            let mut ys = Vec::with_capacity(batch);
            for (j, &i) in chunk.iter().enumerate() {
                x.data[j * len..(j + 1) * len]
                    .copy_from_slice(&ap_train.data[i * len..(i + 1) * len]);
                ns.push(n_train[i]);
                ys.push(class_ordinal(&classes, y_train[i])?);
            }
            model.zero_grads();
            let cache = model.forward_cache(&x, &ns)?;
            let logits = cache.head_pres.last().unwrap().clone();
            let (loss, dlogits) = weighted_cross_entropy(&logits, &ys, &weights)?;
            if !loss.is_finite() {
                return Err(ModelError::Training {
                    step,
                    detail: format!("loss became {loss}"),
                });
            }
            model.backward(&x, &cache, &dlogits);
            let lr = schedule.lr_at(step.min(total_steps - 1))?;
            opt.step(&mut model, Some(lr));
            loss_sum += loss;
            n_batches += 1;
            step += 1;
        }
        let v = val_mcc(&model)?;
        if v > best_val {
            best_val = v;
            best_ckpt = model.to_checkpoint();
        }
        log.push(EpochLog {
            epoch,
            mean_loss: loss_sum / n_batches as f64,
            val_mcc: v,
        });
    }
    best_ckpt.meta["weights"] = serde_json::json!(weights);
    Ok(TrainOutcome {
        checkpoint: best_ckpt,
        log,
        best_val_mcc: best_val,
    })
}

/// Shared minibatch loop for models whose inputs are a single tensor.
#[allow(clippy::too_many_arguments)]
fn train_loop<M: ParamVisitor>(
    model: &mut M,
    opt_cfg: AdamWConfig,
    schedule: Option<OneCycleSchedule>,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    weights: &[f64],
    classes: &[u8],
    mut step_fn: impl FnMut(&mut M, &Tensor, &[usize], &[f64]) -> Result<f64, ModelError>,
    mut predict_fn: impl FnMut(&M, &Tensor) -> Result<Vec<u8>, ModelError>,
    train: (&Tensor, &[u8]),
    val: (&Tensor, &[u8]),
) -> Result<(Vec<EpochLog>, f64, M), ModelError>
where
    M: Clone,
{
    let (x_train, y_train) = train;
    let (x_val, y_val) = val;
    let n = y_train.len();
    let dim = *x_train.shape.last().unwrap();
    if x_train.shape != vec![n, dim] {
        return Err(ModelError::Input(format!(
            "feature tensor {:?} does not match {n} labels",
            x_train.shape
        )));
    }

    let mut opt = AdamW::new(opt_cfg);
    let mut rng = SplitMix64::new(seed ^ 0x7261696e);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut log = Vec::new();

    let val_mcc = |m: &mut M, pf: &mut dyn FnMut(&M, &Tensor) -> Result<Vec<u8>, ModelError>| {
        let pred = pf(m, x_val)?;
        let cm = confusion(y_val, &pred, classes).map_err(|e| ModelError::Input(e.to_string()))?;
        Ok::<f64, ModelError>(mcc(&cm))
    };
    let mut best_val = val_mcc(model, &mut predict_fn)?;
    let mut best_model = model.clone();
    let mut step = 0usize;

    for epoch in 0..epochs {
        rng.shuffle(&mut indices);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for chunk in indices.chunks(batch_size.max(1)) {
            let batch = chunk.len();
            let mut x = Tensor::zeros(vec![batch, dim]);
            let mut ys = Vec::with_capacity(batch);
            for (j, &i) in chunk.iter().enumerate() {
                x.data[j * dim..(j + 1) * dim]
                    .copy_from_slice(&x_train.data[i * dim..(i + 1) * dim]);
                ys.push(class_ordinal(classes, y_train[i])?);
            }
            let loss = step_fn(model, &x, &ys, weights)?;
            if !loss.is_finite() {
                return Err(ModelError::Training {
                    step,
                    detail: format!("loss became {loss}"),
                });
            }
            let lr = schedule
                .map(|s| s.lr_at(step.min(s.total_steps - 1)))
                .transpose()?;
            opt.step(model, lr);
            loss_sum += loss;
            n_batches += 1;
            step += 1;
        }
        let v = val_mcc(model, &mut predict_fn)?;
        if v > best_val {
            best_val = v;
            best_model = model.clone();
        }
        log.push(EpochLog {
            epoch,
            mean_loss: loss_sum / n_batches as f64,
            val_mcc: v,
        });
    }
    Ok((log, best_val, best_model))
}

// ---------------------------------------------------------------------------
// Hyperparameter search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub config: SumMlpConfig,
    pub val_mcc: f64,
}

/// Trains every configuration in `grid` on at most `budget` training
/// rows and returns the argmax by validation MCC (ties → earlier entry)
/// together with the full trial table.
pub fn hyperparameter_search(
    grid: &[SumMlpConfig],
    train: (&Tensor, &[u8]),
    val: (&Tensor, &[u8]),
    budget: usize,
) -> Result<(SumMlpConfig, Vec<TrialResult>), ModelError> {
    if grid.is_empty() {
        return Err(ModelError::Config("empty hyperparameter grid".into()));
    }
    let (x, y) = train;
    let dim = *x.shape.last().unwrap();
    let n = y.len().min(budget.max(1));
    let sub_x = Tensor::from_vec(vec![n, dim], x.data[..n * dim].to_vec());
    let sub_y = &y[..n];

    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<usize> = None;
    for (i, config) in grid.iter().enumerate() {
        let outcome = train_sum_mlp(config.clone(), (&sub_x, sub_y), val)?;
        trials.push(TrialResult {
            config: config.clone(),
            val_mcc: outcome.best_val_mcc,
        });
        if best.is_none_or(|b| trials[i].val_mcc > trials[b].val_mcc) {
            best = Some(i);
        }
    }
    Ok((grid[best.unwrap()].clone(), trials))
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backward::loss_and_gradient;
use super::forward::position_probabilities;
use super::objective::{combination_probability, expected_score, seqgen_transform};
use super::{NetworkConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::scoring::{build_score_tensor, ScoreTensor};
use crate::types::{validate_pattern, ArchConfig, BlockPattern};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 norm the gradient is clipped to before each update.
    pub gradient_clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 1e-3,
            seed: 1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gradient_clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(c) = self.gradient_clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("gradient_clip_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// Dataset-level summary of a parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalStats {
    pub mean_expected_score: f64,
    /// Mean over blocks of the mean row-wise maximum of `P`.
    pub mean_row_max: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mean training loss of every epoch, in order.
    pub loss_history: Vec<f64>,
    /// Training-set statistics before the first and after the last update.
    pub initial: EvalStats,
    pub last: EvalStats,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for k in 0..params.len() {
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * grad[k];
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

fn check_dataset(dataset: &[BlockPattern], arch: &ArchConfig, net: &NetworkConfig) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    arch.validate()?;
    net.validate()?;
    if net.output_dim != arch.num_wordlines || net.input_dim != arch.cells_per_page {
        return Err(Error::dims(
            format!("network for {}x{}", arch.num_wordlines, arch.cells_per_page),
            format!("{}x{}", net.output_dim, net.input_dim),
        ));
    }
    dataset.iter().try_for_each(|b| validate_pattern(b, arch))
}

/// Expected score and sharpness of `params` over `dataset`, using the
/// materialized combination-probability path.
pub fn evaluate(
    dataset: &[BlockPattern],
    tensors: &[ScoreTensor],
    params: &NetworkParams,
    net: &NetworkConfig,
) -> Result<EvalStats> {
    let mut score = 0.0;
    let mut row_max = 0.0;
    for (block, sac) in dataset.iter().zip(tensors) {
        let p = position_probabilities(block, params, net)?;
        row_max += p.mean_row_max();
        score += expected_score(&combination_probability(&seqgen_transform(&p)), sac)?;
    }
    let n = dataset.len().max(1) as f64;
    Ok(EvalStats {
        mean_expected_score: score / n,
        mean_row_max: row_max / n,
    })
}

/// Trains from a seeded initialization with one optimizer step per block.
/// Block order is reshuffled every epoch from the run seed.
pub fn train(
    dataset: &[BlockPattern],
    arch: &ArchConfig,
    net: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_from(dataset, arch, net, cfg, NetworkParams::init(net, cfg.seed))
}

/// [`train`] starting from the given parameters.
pub fn train_from(
    dataset: &[BlockPattern],
    arch: &ArchConfig,
    net: &NetworkConfig,
    cfg: &TrainConfig,
    mut params: NetworkParams,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_dataset(dataset, arch, net)?;
    if !params.shape_matches(net) {
        return Err(Error::dims("parameters for the network config", "mismatched tensors"));
    }
    let tensors = dataset
        .iter()
        .map(|b| build_score_tensor(b, arch))
        .collect::<Result<Vec<_>>>()?;
    let initial = evaluate(dataset, &tensors, &params, net)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut flat = params.to_flat();
    let mut adam = Adam::new(flat.len());
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let lg = match loss_and_gradient(&dataset[k], &tensors[k], &params, net) {
                Ok(lg) => lg,
                Err(Error::NonFiniteGradient) => return Err(Error::NonFiniteLoss { epoch }),
                Err(e) => return Err(e),
            };
            total += lg.loss;
            let mut grad = lg.grad.to_flat();
            if let Some(max_norm) = cfg.gradient_clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max_norm {
                    let scale = max_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= scale);
                }
            }
            adam.update(&mut flat, &grad, cfg);
            params = NetworkParams::from_flat(net, &flat)?;
        }
        let mean = total / dataset.len() as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_history.push(mean);
    }
    let last = evaluate(dataset, &tensors, &params, net)?;
    Ok(TrainOutcome {
        params,
        loss_history,
        initial,
        last,
    })
}

//! LSTM page-arrangement network.
//!
//! The network reads the block one wordline at a time (input dimension `C`,
//! sequence length `N`), maps each hidden state through a small linear head
//! and a softmax, and so produces an `N x N` position-probability matrix:
//! row `i` is a distribution over the source page stored at wordline `i`.
//!
//! Training maximizes the expected block score under a differentiable
//! non-repetition relaxation of that matrix ([`objective`]); inference only
//! runs the network and decodes a permutation ([`decode`]), never touching
//! the score model.

pub mod backward;
pub mod checkpoint;
pub mod decode;
pub mod forward;
pub mod objective;
pub mod train;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use backward::{loss_and_gradient, LossGradient};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use decode::{arrange, extract_permutation};
pub use forward::{head_forward, lstm_forward, position_probabilities};
pub use objective::{
    combination_probability, expected_score, loss, seqgen_transform, CombinationProbMatrix, PositionProbMatrix,
    SeqGenProbMatrix,
};
pub use train::{evaluate, train, train_from, EvalStats, TrainConfig, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    /// Cells per page `C`.
    pub input_dim: usize,
    pub hidden_size: usize,
    /// 1: hidden -> logits. 2: hidden -> hidden (ReLU) -> logits.
    pub num_linear_layers: usize,
    /// Wordlines `N`.
    pub output_dim: usize,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_size: usize, num_linear_layers: usize, output_dim: usize) -> Self {
        NetworkConfig {
            input_dim,
            hidden_size,
            num_linear_layers,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig("input_dim and output_dim must be positive".into()));
        }
        if self.hidden_size == 0 {
            return Err(Error::InvalidConfig("hidden_size must be at least 1".into()));
        }
        if !(1..=2).contains(&self.num_linear_layers) {
            return Err(Error::InvalidConfig(format!(
                "num_linear_layers must be 1 or 2, got {}",
                self.num_linear_layers
            )));
        }
        Ok(())
    }

    /// `(rows, cols)` of each head layer's weight matrix.
    fn head_shapes(&self) -> Vec<(usize, usize)> {
        let (h, n) = (self.hidden_size, self.output_dim);
        match self.num_linear_layers {
            1 => vec![(n, h)],
            _ => vec![(h, h), (n, h)],
        }
    }

    pub fn num_parameters(&self) -> usize {
        let (c, h) = (self.input_dim, self.hidden_size);
        4 * (h * c + h * h + h) + self.head_shapes().iter().map(|(r, k)| r * k + r).sum::<usize>()
    }
}

/// Weights of one LSTM gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    /// `H x C`
    pub w_input: Array2<f64>,
    /// `H x H`
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearParams {
    /// `out x in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gate indices into [`NetworkParams::gates`].
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

/// All trainable parameters. Also used as the gradient container.
///
/// Canonical tensor order (checkpoints, flattening): for each gate in
/// input, forget, cell-candidate, output order: `w_input`, `w_hidden`,
/// `bias`; then for each head layer: `weight`, `bias`. Matrices row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub gates: [GateParams; 4],
    pub head: Vec<LinearParams>,
}

impl NetworkParams {
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        let (c, h) = (cfg.input_dim, cfg.hidden_size);
        let gate = || GateParams {
            w_input: Array2::zeros((h, c)),
            w_hidden: Array2::zeros((h, h)),
            bias: Array1::zeros(h),
        };
        NetworkParams {
            gates: [gate(), gate(), gate(), gate()],
            head: cfg
                .head_shapes()
                .into_iter()
                .map(|(r, k)| LinearParams {
                    weight: Array2::zeros((r, k)),
                    bias: Array1::zeros(r),
                })
                .collect(),
        }
    }

    /// Uniform weights in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, forget-gate
    /// bias 1, other biases 0. Gate fan-in is `C + H`.
    pub fn init(cfg: &NetworkConfig, seed: u64) -> Self {
        let mut p = NetworkParams::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gate_bound = 1.0 / ((cfg.input_dim + cfg.hidden_size) as f64).sqrt();
        for g in p.gates.iter_mut() {
            g.w_input.mapv_inplace(|_| rng.random_range(-gate_bound..=gate_bound));
            g.w_hidden.mapv_inplace(|_| rng.random_range(-gate_bound..=gate_bound));
        }
        p.gates[GATE_FORGET].bias.fill(1.0);
        for layer in p.head.iter_mut() {
            let bound = 1.0 / (layer.weight.ncols() as f64).sqrt();
            layer.weight.mapv_inplace(|_| rng.random_range(-bound..=bound));
        }
        p
    }

    pub fn shape_matches(&self, cfg: &NetworkConfig) -> bool {
        let z = NetworkParams::zeros(cfg);
        self.head.len() == z.head.len()
            && self.gates.iter().zip(&z.gates).all(|(a, b)| {
                a.w_input.dim() == b.w_input.dim() && a.w_hidden.dim() == b.w_hidden.dim() && a.bias.dim() == b.bias.dim()
            })
            && self
                .head
                .iter()
                .zip(&z.head)
                .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.dim() == b.bias.dim())
    }

    /// Parameter tensors in canonical order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(12 + 2 * self.head.len());
        for g in &self.gates {
            out.push(g.w_input.as_slice().expect("standard layout"));
            out.push(g.w_hidden.as_slice().expect("standard layout"));
            out.push(g.bias.as_slice().expect("standard layout"));
        }
        for l in &self.head {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(12 + 2 * self.head.len());
        for g in self.gates.iter_mut() {
            out.push(g.w_input.as_slice_mut().expect("standard layout"));
            out.push(g.w_hidden.as_slice_mut().expect("standard layout"));
            out.push(g.bias.as_slice_mut().expect("standard layout"));
        }
        for l in self.head.iter_mut() {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn from_flat(cfg: &NetworkConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != cfg.num_parameters() {
            return Err(Error::dims(
                format!("{} parameters", cfg.num_parameters()),
                flat.len(),
            ));
        }
        let mut p = NetworkParams::zeros(cfg);
        let mut rest = flat;
        for t in p.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn sq_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }
}

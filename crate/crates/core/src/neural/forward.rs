use ndarray::{s, Array1, Array2, ArrayView1};

use super::objective::PositionProbMatrix;
use super::{NetworkConfig, NetworkParams, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use crate::error::{Error, Result};
use crate::types::BlockPattern;

/// Levels are fed to the network scaled into `[0, 1]`.
pub const INPUT_SCALE: f64 = 1.0 / 15.0;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-step activations kept for backpropagation through time.
#[derive(Clone, Debug)]
pub(crate) struct LstmTrace {
    /// `N x C` scaled inputs.
    pub inputs: Array2<f64>,
    /// Post-activation gate values, `[gate]` of `N x H`.
    pub gates: [Array2<f64>; 4],
    /// Cell states `c_1..c_N`, `N x H`.
    pub cells: Array2<f64>,
    /// `tanh(c_n)`.
    pub cells_tanh: Array2<f64>,
    /// Hidden states `h_1..h_N`, `N x H`.
    pub hidden: Array2<f64>,
}

fn check_dims(pattern: &BlockPattern, cfg: &NetworkConfig) -> Result<()> {
    if pattern.num_wordlines() != cfg.output_dim || pattern.cells_per_page() != cfg.input_dim {
        return Err(Error::dims(
            format!("{}x{}", cfg.output_dim, cfg.input_dim),
            format!("{}x{}", pattern.num_wordlines(), pattern.cells_per_page()),
        ));
    }
    Ok(())
}

pub(crate) fn lstm_trace(pattern: &BlockPattern, params: &NetworkParams, cfg: &NetworkConfig) -> Result<LstmTrace> {
    check_dims(pattern, cfg)?;
    if !params.shape_matches(cfg) {
        return Err(Error::dims("parameters for the network config", "mismatched tensors"));
    }
    let (n, c, h) = (cfg.output_dim, cfg.input_dim, cfg.hidden_size);
    let inputs = Array2::from_shape_fn((n, c), |(i, j)| pattern.get(i, j) as f64 * INPUT_SCALE);
    let mut gates: [Array2<f64>; 4] = std::array::from_fn(|_| Array2::zeros((n, h)));
    let mut cells = Array2::zeros((n, h));
    let mut cells_tanh = Array2::zeros((n, h));
    let mut hidden = Array2::zeros((n, h));
    let mut h_prev = Array1::<f64>::zeros(h);
    let mut c_prev = Array1::<f64>::zeros(h);
    for step in 0..n {
        let x = inputs.row(step);
        let pre: [Array1<f64>; 4] = std::array::from_fn(|k| {
            let g = &params.gates[k];
            g.w_input.dot(&x) + g.w_hidden.dot(&h_prev) + &g.bias
        });
        let i = pre[GATE_INPUT].mapv(sigmoid);
        let f = pre[GATE_FORGET].mapv(sigmoid);
        let g = pre[GATE_CELL].mapv(f64::tanh);
        let o = pre[GATE_OUTPUT].mapv(sigmoid);
        let c_new = &f * &c_prev + &i * &g;
        let c_tanh = c_new.mapv(f64::tanh);
        let h_new = &o * &c_tanh;
        for (k, v) in [i, f, g, o].into_iter().enumerate() {
            gates[k].row_mut(step).assign(&v);
        }
        cells.row_mut(step).assign(&c_new);
        cells_tanh.row_mut(step).assign(&c_tanh);
        hidden.row_mut(step).assign(&h_new);
        h_prev = h_new;
        c_prev = c_new;
    }
    Ok(LstmTrace {
        inputs,
        gates,
        cells,
        cells_tanh,
        hidden,
    })
}

/// Runs the LSTM over the wordlines in physical order from zero initial
/// states and returns the `N x H` hidden-state sequence. Inputs are the raw
/// levels times [`INPUT_SCALE`]; no normalization layer is applied.
pub fn lstm_forward(pattern: &BlockPattern, params: &NetworkParams, cfg: &NetworkConfig) -> Result<Array2<f64>> {
    Ok(lstm_trace(pattern, params, cfg)?.hidden)
}

/// Head activations for one position.
#[derive(Clone, Debug)]
pub(crate) struct HeadTrace {
    /// Pre-activation of the hidden head layer (two-layer heads only).
    pub hidden_pre: Option<Array1<f64>>,
    pub hidden_act: Option<Array1<f64>>,
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub(crate) fn head_row(hidden: ArrayView1<f64>, params: &NetworkParams) -> (Array1<f64>, HeadTrace) {
    match params.head.as_slice() {
        [out] => (
            out.weight.dot(&hidden) + &out.bias,
            HeadTrace {
                hidden_pre: None,
                hidden_act: None,
            },
        ),
        [mid, out] => {
            let pre = mid.weight.dot(&hidden) + &mid.bias;
            let act = pre.mapv(|v| v.max(0.0));
            (
                out.weight.dot(&act) + &out.bias,
                HeadTrace {
                    hidden_pre: Some(pre),
                    hidden_act: Some(act),
                },
            )
        }
        _ => unreachable!("head has one or two layers"),
    }
}

pub(crate) fn head_trace(
    hidden: &Array2<f64>,
    params: &NetworkParams,
    cfg: &NetworkConfig,
) -> Result<(PositionProbMatrix, Vec<HeadTrace>)> {
    if hidden.dim() != (cfg.output_dim, cfg.hidden_size) {
        return Err(Error::dims(
            format!("{}x{} hidden states", cfg.output_dim, cfg.hidden_size),
            format!("{:?}", hidden.dim()),
        ));
    }
    let n = cfg.output_dim;
    let mut probs = Array2::zeros((n, n));
    let mut traces = Vec::with_capacity(n);
    for i in 0..n {
        let (mut logits, t) = head_row(hidden.row(i), params);
        softmax_in_place(logits.as_slice_mut().expect("contiguous"));
        probs.slice_mut(s![i, ..]).assign(&logits);
        traces.push(t);
    }
    Ok((PositionProbMatrix::new_unchecked(probs), traces))
}

/// Linear head plus a standard softmax per position.
pub fn head_forward(hidden: &Array2<f64>, params: &NetworkParams, cfg: &NetworkConfig) -> Result<PositionProbMatrix> {
    Ok(head_trace(hidden, params, cfg)?.0)
}

/// `head_forward(lstm_forward(pattern))`.
pub fn position_probabilities(
    pattern: &BlockPattern,
    params: &NetworkParams,
    cfg: &NetworkConfig,
) -> Result<PositionProbMatrix> {
    let hidden = lstm_forward(pattern, params, cfg)?;
    head_forward(&hidden, params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_zero_hidden_states() {
        let cfg = NetworkConfig::new(6, 5, 1, 4);
        let p = BlockPattern::from_raw(4, 6, (0..24).map(|v| (v % 16) as u8).collect()).unwrap();
        let h = lstm_forward(&p, &NetworkParams::zeros(&cfg), &cfg).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_matches_closed_form() {
        // C = 2, H = 2, N = 1, hand-picked weights
        let cfg = NetworkConfig::new(2, 2, 1, 1);
        let mut params = NetworkParams::zeros(&cfg);
        let weights = [[0.5, -0.25, 0.1, 0.2], [0.3, 0.3, -0.4, 0.0], [-0.7, 0.9, 0.05, -0.1], [0.2, 0.6, -0.3, 0.8]];
        let biases = [[0.1, -0.2], [1.0, 1.0], [0.0, 0.3], [-0.5, 0.25]];
        for k in 0..4 {
            params.gates[k].w_input = Array2::from_shape_vec((2, 2), weights[k].to_vec()).unwrap();
            params.gates[k].bias = Array1::from(biases[k].to_vec());
        }
        let pattern = BlockPattern::from_rows(&[[15u8, 6]]).unwrap();
        let h = lstm_forward(&pattern, &params, &cfg).unwrap();
        let x = [1.0, 6.0 / 15.0];
        for unit in 0..2 {
            let pre = |k: usize| weights[k][2 * unit] * x[0] + weights[k][2 * unit + 1] * x[1] + biases[k][unit];
            let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
            let c = sig(pre(0)) * pre(2).tanh();
            let expected = sig(pre(3)) * c.tanh();
            assert!((h[[0, unit]] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_head_is_uniform() {
        let cfg = NetworkConfig::new(4, 3, 2, 5);
        let mut params = NetworkParams::init(&cfg, 3);
        for l in params.head.iter_mut() {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        let hidden = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64) - (j as f64));
        let p = head_forward(&hidden, &params, &cfg).unwrap();
        assert!(p.as_array().iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut a = [0.3, -1.2, 4.0, 0.0];
        let mut b = a.map(|v| v + 123.0);
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = NetworkConfig::new(4, 3, 1, 5);
        let params = NetworkParams::zeros(&cfg);
        assert!(lstm_forward(&BlockPattern::zeros(5, 3), &params, &cfg).is_err());
    }
}

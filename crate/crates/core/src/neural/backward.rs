//! Reverse-mode gradients of `-Sm` through the objective, the softmax head
//! and the LSTM (backpropagation through time).

use ndarray::{Array1, Array2};

use super::forward::{head_trace, lstm_trace};
use super::objective::{expected_score_grad, seqgen_backward, seqgen_with_prior, PositionProbMatrix};
use super::{NetworkConfig, NetworkParams, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use crate::error::{Error, Result};
use crate::scoring::ScoreTensor;
use crate::types::BlockPattern;

#[derive(Clone, Debug)]
pub struct LossGradient {
    /// `-Sm`
    pub loss: f64,
    pub probs: PositionProbMatrix,
    /// d loss / d parameter, same layout as the parameters.
    pub grad: NetworkParams,
}

impl LossGradient {
    pub fn expected_score(&self) -> f64 {
        -self.loss
    }
}

fn outer_add(acc: &mut Array2<f64>, col: &Array1<f64>, row: ndarray::ArrayView1<f64>) {
    for (i, &a) in col.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        acc.row_mut(i).scaled_add(a, &row);
    }
}

/// Loss and exact gradients for one block with score tensor `sac`.
pub fn loss_and_gradient(
    pattern: &BlockPattern,
    sac: &ScoreTensor,
    params: &NetworkParams,
    cfg: &NetworkConfig,
) -> Result<LossGradient> {
    let n = cfg.output_dim;
    if sac.len() != n {
        return Err(Error::dims(format!("score tensor for N = {n}"), sac.len()));
    }
    let lstm = lstm_trace(pattern, params, cfg)?;
    let (probs, heads) = head_trace(&lstm.hidden, params, cfg)?;
    let p = probs.as_array();
    let (psg, prior) = seqgen_with_prior(p);
    let (score, grad_psg) = expected_score_grad(&psg, sac);
    let loss = -score;
    let grad_p = seqgen_backward(p, &psg, &prior, -grad_psg);

    let mut grad = NetworkParams::zeros(cfg);

    // softmax and head, position by position
    let mut grad_hidden = Array2::<f64>::zeros((n, cfg.hidden_size));
    for i in 0..n {
        let prow = p.row(i);
        let gp = grad_p.row(i);
        let dot: f64 = prow.iter().zip(gp.iter()).map(|(a, b)| a * b).sum();
        let grad_logits: Array1<f64> = prow.iter().zip(gp.iter()).map(|(a, b)| a * (b - dot)).collect();
        let h = lstm.hidden.row(i);
        let gh = match (heads[i].hidden_pre.as_ref(), heads[i].hidden_act.as_ref()) {
            (None, _) => {
                let out = &params.head[0];
                outer_add(&mut grad.head[0].weight, &grad_logits, h);
                grad.head[0].bias += &grad_logits;
                out.weight.t().dot(&grad_logits)
            }
            (Some(pre), Some(act)) => {
                let (mid, out) = (&params.head[0], &params.head[1]);
                outer_add(&mut grad.head[1].weight, &grad_logits, act.view());
                grad.head[1].bias += &grad_logits;
                let grad_act = out.weight.t().dot(&grad_logits);
                let grad_pre: Array1<f64> = grad_act
                    .iter()
                    .zip(pre.iter())
                    .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
                    .collect();
                outer_add(&mut grad.head[0].weight, &grad_pre, h);
                grad.head[0].bias += &grad_pre;
                mid.weight.t().dot(&grad_pre)
            }
            _ => unreachable!(),
        };
        grad_hidden.row_mut(i).assign(&gh);
    }

    // backpropagation through time
    let h_size = cfg.hidden_size;
    let mut dh_next = Array1::<f64>::zeros(h_size);
    let mut dc_next = Array1::<f64>::zeros(h_size);
    let zero = Array1::<f64>::zeros(h_size);
    for step in (0..n).rev() {
        let i = lstm.gates[GATE_INPUT].row(step);
        let f = lstm.gates[GATE_FORGET].row(step);
        let g = lstm.gates[GATE_CELL].row(step);
        let o = lstm.gates[GATE_OUTPUT].row(step);
        let ct = lstm.cells_tanh.row(step);
        let c_prev = if step > 0 { lstm.cells.row(step - 1) } else { zero.view() };
        let h_prev = if step > 0 { lstm.hidden.row(step - 1) } else { zero.view() };
        let dh = &grad_hidden.row(step) + &dh_next;

        let mut d_pre: [Array1<f64>; 4] = std::array::from_fn(|_| Array1::zeros(h_size));
        let mut dc_prev = Array1::zeros(h_size);
        for u in 0..h_size {
            let dc = dh[u] * o[u] * (1.0 - ct[u] * ct[u]) + dc_next[u];
            d_pre[GATE_OUTPUT][u] = dh[u] * ct[u] * o[u] * (1.0 - o[u]);
            d_pre[GATE_INPUT][u] = dc * g[u] * i[u] * (1.0 - i[u]);
            d_pre[GATE_CELL][u] = dc * i[u] * (1.0 - g[u] * g[u]);
            d_pre[GATE_FORGET][u] = dc * c_prev[u] * f[u] * (1.0 - f[u]);
            dc_prev[u] = dc * f[u];
        }
        let x = lstm.inputs.row(step);
        let mut dh_prev = Array1::zeros(h_size);
        for (k, dk) in d_pre.iter().enumerate() {
            outer_add(&mut grad.gates[k].w_input, dk, x);
            if step > 0 {
                outer_add(&mut grad.gates[k].w_hidden, dk, h_prev);
            }
            grad.gates[k].bias += dk;
            dh_prev += &params.gates[k].w_hidden.t().dot(dk);
        }
        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    if !grad.is_finite() || !loss.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    Ok(LossGradient { loss, probs, grad })
}

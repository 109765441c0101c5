//! Cell updates and their backward passes.

use alloc::vec;
use alloc::vec::Vec;

use super::{sigmoid, Architecture, RnnModel};

/// Hidden vector plus the LSTM memory cell (empty for other cells).
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl CellState {
    pub fn initial(model: &RnnModel, h0: &[f64]) -> Self {
        let cell = if model.config.architecture == Architecture::Lstm { vec![0.0; h0.len()] } else { Vec::new() };
        Self { hidden: h0.to_vec(), cell }
    }
}

/// Intermediate values kept per step for the backward pass.
fn aux_width(arch: Architecture, n: usize) -> usize {
    match arch {
        Architecture::Elman | Architecture::SecondOrder => 0,
        Architecture::MiRnn => n,
        Architecture::Lstm => 4 * n,
        Architecture::Gru => 3 * n,
    }
}

#[inline]
fn row_dot(w: &[f64], row: usize, s: &[f64]) -> f64 {
    let n = s.len();
    w[row * n..row * n + n].iter().zip(s).map(|(a, b)| a * b).sum()
}

/// Offsets of the (U, W) pair of gate `g` in a gated cell.
#[inline]
fn gate(model: &RnnModel, g: usize) -> (usize, usize) {
    (model.specs[2 * g].offset, model.specs[2 * g + 1].offset)
}

/// Computes `out` (next hidden), `aux` and, for LSTM, `c_out` from hidden
/// `s`, cell `c` and input symbol `k`.
fn forward_step(model: &RnnModel, k: usize, s: &[f64], c: &[f64], out: &mut [f64], aux: &mut [f64], c_out: &mut [f64]) {
    let n = s.len();
    let ni = model.config.input_size;
    let p = &model.params;
    let act = model.config.activation;
    match model.config.architecture {
        Architecture::Elman => {
            let (ou, ow, ob) = (model.specs[0].offset, model.specs[1].offset, model.specs[2].offset);
            let w = &p[ow..ow + n * n];
            for i in 0..n {
                out[i] = act.apply(p[ou + i * ni + k] + row_dot(w, i, s) + p[ob + i]);
            }
        }
        Architecture::SecondOrder => {
            for i in 0..n {
                let base = i * n * ni + k;
                let a: f64 = (0..n).map(|j| p[base + j * ni] * s[j]).sum();
                out[i] = act.apply(a);
            }
        }
        Architecture::MiRnn => {
            let o: Vec<usize> = model.specs.iter().map(|t| t.offset).collect();
            let w = &p[o[1]..o[1] + n * n];
            for i in 0..n {
                let u = p[o[0] + i * ni + k];
                let ws = row_dot(w, i, s);
                aux[i] = ws;
                out[i] = libm::tanh(p[o[2] + i] * u * ws + p[o[3] + i] * ws + p[o[4] + i] * u + p[o[5] + i]);
            }
        }
        Architecture::Lstm => {
            for g in 0..4 {
                let (ou, ow) = gate(model, g);
                let w = &p[ow..ow + n * n];
                for i in 0..n {
                    let a = p[ou + i * ni + k] + row_dot(w, i, s);
                    aux[g * n + i] = if g == 3 { libm::tanh(a) } else { sigmoid(a) };
                }
            }
            for i in 0..n {
                let (ig, fg, og, gg) = (aux[i], aux[n + i], aux[2 * n + i], aux[3 * n + i]);
                c_out[i] = c[i] * fg + gg * ig;
                out[i] = libm::tanh(c_out[i]) * og;
            }
        }
        Architecture::Gru => {
            for g in 0..2 {
                let (ou, ow) = gate(model, g);
                let w = &p[ow..ow + n * n];
                for i in 0..n {
                    aux[g * n + i] = sigmoid(p[ou + i * ni + k] + row_dot(w, i, s));
                }
            }
            let (ou, ow) = gate(model, 2);
            let w = &p[ow..ow + n * n];
            for i in 0..n {
                let a: f64 = p[ou + i * ni + k] + (0..n).map(|j| w[i * n + j] * s[j] * aux[n + j]).sum::<f64>();
                aux[2 * n + i] = libm::tanh(a);
            }
            for i in 0..n {
                let (z, h) = (aux[i], aux[2 * n + i]);
                out[i] = (1.0 - z) * h + z * s[i];
            }
        }
    }
}

pub(super) fn step(model: &RnnModel, state: &CellState, k: usize) -> CellState {
    let n = state.hidden.len();
    let mut hidden = vec![0.0; n];
    let mut aux = vec![0.0; aux_width(model.config.architecture, n)];
    let mut cell = vec![0.0; state.cell.len()];
    forward_step(model, k, &state.hidden, &state.cell, &mut hidden, &mut aux, &mut cell);
    CellState { hidden, cell }
}

/// Reusable buffers for one forward/backward pass.
#[derive(Debug, Default, Clone)]
pub(crate) struct Tape {
    hidden: Vec<f64>,
    cells: Vec<f64>,
    aux: Vec<f64>,
    dh: Vec<f64>,
    dprev: Vec<f64>,
    dc: Vec<f64>,
    scratch: Vec<f64>,
}

/// Accumulates `da_i * s_j` into a row-major `n x n` block at `ow`, the
/// input column `k` of the `n x ni` block at `ou`, and `W^T da` into `dprev`.
#[inline]
fn accumulate_affine(p: &[f64], grad: &mut [f64], ou: usize, ow: usize, ni: usize, k: usize, da: &[f64], s: &[f64], dprev: &mut [f64]) {
    let n = s.len();
    for i in 0..n {
        let d = da[i];
        if d == 0.0 {
            continue;
        }
        grad[ou + i * ni + k] += d;
        let row = ow + i * n;
        for j in 0..n {
            grad[row + j] += d * s[j];
            dprev[j] += p[row + j] * d;
        }
    }
}

/// Squared-error loss on the final response; adds its gradient to `grad`.
pub(crate) fn loss_and_gradient(model: &RnnModel, symbols: &[u8], label: bool, h0: &[f64], tape: &mut Tape, grad: &mut [f64]) -> f64 {
    let arch = model.config.architecture;
    let n = h0.len();
    let ni = model.config.input_size;
    let t_len = symbols.len();
    let aw = aux_width(arch, n);
    let lstm = arch == Architecture::Lstm;

    tape.hidden.clear();
    tape.hidden.resize((t_len + 1) * n, 0.0);
    tape.hidden[..n].copy_from_slice(h0);
    tape.aux.clear();
    tape.aux.resize(t_len * aw, 0.0);
    tape.cells.clear();
    if lstm {
        tape.cells.resize((t_len + 1) * n, 0.0);
    }
    for (t, &k) in symbols.iter().enumerate() {
        let (prev, next) = tape.hidden.split_at_mut((t + 1) * n);
        let s = &prev[t * n..];
        let out = &mut next[..n];
        let aux = &mut tape.aux[t * aw..(t + 1) * aw];
        if lstm {
            let (cp, cn) = tape.cells.split_at_mut((t + 1) * n);
            forward_step(model, k as usize, s, &cp[t * n..], out, aux, &mut cn[..n]);
        } else {
            forward_step(model, k as usize, s, &[], out, aux, &mut []);
        }
    }

    let y = if label { 1.0 } else { 0.0 };
    let response = model.config.response_from_raw(tape.hidden[t_len * n]);
    let loss = 0.5 * (y - response) * (y - response);

    tape.dh.clear();
    tape.dh.resize(n, 0.0);
    tape.dh[0] = (response - y) * model.config.response_slope();
    tape.dc.clear();
    tape.dc.resize(n, 0.0);
    tape.dprev.resize(n, 0.0);
    tape.scratch.resize(4 * n, 0.0);

    let p = &model.params;
    let act = model.config.activation;
    for t in (0..t_len).rev() {
        let k = symbols[t] as usize;
        let s = &tape.hidden[t * n..(t + 1) * n];
        let s_next = &tape.hidden[(t + 1) * n..(t + 2) * n];
        let aux = &tape.aux[t * aw..(t + 1) * aw];
        let dh = &tape.dh;
        let dprev = &mut tape.dprev;
        dprev.iter_mut().for_each(|x| *x = 0.0);
        let da = &mut tape.scratch;
        match arch {
            Architecture::Elman => {
                let (ou, ow, ob) = (model.specs[0].offset, model.specs[1].offset, model.specs[2].offset);
                for i in 0..n {
                    da[i] = dh[i] * act.derivative_at_output(s_next[i]);
                    grad[ob + i] += da[i];
                }
                accumulate_affine(p, grad, ou, ow, ni, k, &da[..n], s, dprev);
            }
            Architecture::SecondOrder => {
                for i in 0..n {
                    let d = dh[i] * act.derivative_at_output(s_next[i]);
                    if d == 0.0 {
                        continue;
                    }
                    let base = i * n * ni + k;
                    for j in 0..n {
                        grad[base + j * ni] += d * s[j];
                        dprev[j] += p[base + j * ni] * d;
                    }
                }
            }
            Architecture::MiRnn => {
                let o: [usize; 6] = core::array::from_fn(|x| model.specs[x].offset);
                for i in 0..n {
                    let d = dh[i] * (1.0 - s_next[i] * s_next[i]);
                    let u = p[o[0] + i * ni + k];
                    let ws = aux[i];
                    grad[o[2] + i] += d * u * ws;
                    grad[o[3] + i] += d * ws;
                    grad[o[4] + i] += d * u;
                    grad[o[5] + i] += d;
                    grad[o[0] + i * ni + k] += d * (p[o[2] + i] * ws + p[o[4] + i]);
                    let dw = d * (p[o[2] + i] * u + p[o[3] + i]);
                    let row = o[1] + i * n;
                    for j in 0..n {
                        grad[row + j] += dw * s[j];
                        dprev[j] += p[row + j] * dw;
                    }
                }
            }
            Architecture::Lstm => {
                let c_prev = &tape.cells[t * n..(t + 1) * n];
                let c_next = &tape.cells[(t + 1) * n..(t + 2) * n];
                let dc = &mut tape.dc;
                for i in 0..n {
                    let (ig, fg, og, gg) = (aux[i], aux[n + i], aux[2 * n + i], aux[3 * n + i]);
                    let tc = libm::tanh(c_next[i]);
                    let dcell = dc[i] + dh[i] * og * (1.0 - tc * tc);
                    da[i] = dcell * gg * ig * (1.0 - ig);
                    da[n + i] = dcell * c_prev[i] * fg * (1.0 - fg);
                    da[2 * n + i] = dh[i] * tc * og * (1.0 - og);
                    da[3 * n + i] = dcell * ig * (1.0 - gg * gg);
                    dc[i] = dcell * fg;
                }
                for g in 0..4 {
                    let (ou, ow) = gate(model, g);
                    accumulate_affine(p, grad, ou, ow, ni, k, &da[g * n..(g + 1) * n], s, dprev);
                }
            }
            Architecture::Gru => {
                let (ouh, owh) = gate(model, 2);
                // da[0..n]: z pre-activation, da[n..2n]: r pre-activation,
                // da[2n..3n]: candidate pre-activation, da[3n..4n]: d(r*s)
                for i in 0..n {
                    let (z, h) = (aux[i], aux[2 * n + i]);
                    da[i] = dh[i] * (s[i] - h) * z * (1.0 - z);
                    da[2 * n + i] = dh[i] * (1.0 - z) * (1.0 - h * h);
                    dprev[i] += dh[i] * z;
                }
                for j in 0..n {
                    da[3 * n + j] = 0.0;
                }
                for i in 0..n {
                    let d = da[2 * n + i];
                    if d == 0.0 {
                        continue;
                    }
                    grad[ouh + i * ni + k] += d;
                    let row = owh + i * n;
                    for j in 0..n {
                        let r = aux[n + j];
                        grad[row + j] += d * r * s[j];
                        da[3 * n + j] += p[row + j] * d;
                    }
                }
                for j in 0..n {
                    let r = aux[n + j];
                    let drs = da[3 * n + j];
                    da[n + j] = drs * s[j] * r * (1.0 - r);
                    dprev[j] += drs * r;
                }
                for g in 0..2 {
                    let (ou, ow) = gate(model, g);
                    accumulate_affine(p, grad, ou, ow, ni, k, &da[g * n..(g + 1) * n], s, dprev);
                }
            }
        }
        core::mem::swap(&mut tape.dh, &mut tape.dprev);
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::super::{Activation, ModelConfig};
    use super::*;
    use crate::automata::parse_word;
    use crate::grammars::encode;

    fn finite_difference_check(arch: Architecture, act: Activation) {
        let cfg = ModelConfig::new(arch, Some(act), 4, 11).unwrap();
        let mut model = RnnModel::init(cfg.clone()).unwrap();
        // larger weights so every path carries signal
        model.params_mut().iter_mut().for_each(|w| *w *= 8.0);
        let h0 = super::super::initial_hidden(&cfg, 5);
        let seq = encode(&parse_word("10110").unwrap()).unwrap();
        for label in [true, false] {
            let (loss, grad) = model.gradient(&seq, label, &h0).unwrap();
            assert!(loss.is_finite());
            let eps = 1e-5;
            for idx in 0..model.params().len() {
                let mut plus = model.clone();
                plus.params_mut()[idx] += eps;
                let mut minus = model.clone();
                minus.params_mut()[idx] -= eps;
                let lp = super::super::loss(plus.response(&seq, &h0).unwrap(), label);
                let lm = super::super::loss(minus.response(&seq, &h0).unwrap(), label);
                let numeric = (lp - lm) / (2.0 * eps);
                let err = (numeric - grad[idx]).abs() / numeric.abs().max(grad[idx].abs()).max(1e-6);
                assert!(err < 1e-4, "{arch} {act} param {idx}: numeric {numeric} analytic {}", grad[idx]);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_difference_check(Architecture::Elman, Activation::Sigmoid);
        finite_difference_check(Architecture::Elman, Activation::Tanh);
        finite_difference_check(Architecture::SecondOrder, Activation::Sigmoid);
        finite_difference_check(Architecture::SecondOrder, Activation::Tanh);
        finite_difference_check(Architecture::MiRnn, Activation::Tanh);
        finite_difference_check(Architecture::Lstm, Activation::Tanh);
        finite_difference_check(Architecture::Gru, Activation::Tanh);
    }

    #[test]
    fn step_matches_tape_forward() {
        for arch in Architecture::ALL {
            let cfg = ModelConfig::new(arch, None, 3, 2).unwrap();
            let model = RnnModel::init(cfg.clone()).unwrap();
            let h0 = super::super::initial_hidden(&cfg, 1);
            let seq = encode(&[0, 1, 1]).unwrap();
            let trace = model.forward(&seq, &h0).unwrap();
            let mut tape = Tape::default();
            let mut grad = vec![0.0; model.params().len()];
            let loss = loss_and_gradient(&model, seq.symbols(), true, &h0, &mut tape, &mut grad);
            assert_eq!(loss, super::super::loss(trace.response, true));
            for (t, h) in trace.hidden.iter().enumerate() {
                assert_eq!(&tape.hidden[t * 3..(t + 1) * 3], &h[..]);
            }
        }
    }
}

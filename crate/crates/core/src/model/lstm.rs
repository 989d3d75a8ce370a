use super::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];
}

/// Borrowed view of one LSTM direction's weights.
///
/// Layout, repeated for each gate in `Gate::ALL` order: `W` (`H × D`,
/// row-major), `U` (`H × H`), `b` (`H`).
#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    pub hidden: usize,
    pub input: usize,
    data: &'a [f64],
}

impl<'a> LstmParams<'a> {
    pub fn len_for(hidden: usize, input: usize) -> usize {
        4 * Self::gate_len(hidden, input)
    }

    fn gate_len(hidden: usize, input: usize) -> usize {
        hidden * input + hidden * hidden + hidden
    }

    pub fn new(hidden: usize, input: usize, data: &'a [f64]) -> Result<Self> {
        let expected = Self::len_for(hidden, input);
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "LSTM(H={hidden}, D={input}) needs {expected} weights, got {}",
                data.len()
            )));
        }
        Ok(LstmParams {
            hidden,
            input,
            data,
        })
    }

    pub(crate) fn w_offset(hidden: usize, input: usize, gate: Gate) -> usize {
        gate as usize * Self::gate_len(hidden, input)
    }

    pub(crate) fn u_offset(hidden: usize, input: usize, gate: Gate) -> usize {
        Self::w_offset(hidden, input, gate) + hidden * input
    }

    pub(crate) fn b_offset(hidden: usize, input: usize, gate: Gate) -> usize {
        Self::u_offset(hidden, input, gate) + hidden * hidden
    }

    pub fn w(&self, gate: Gate) -> &'a [f64] {
        let o = Self::w_offset(self.hidden, self.input, gate);
        &self.data[o..o + self.hidden * self.input]
    }

    pub fn u(&self, gate: Gate) -> &'a [f64] {
        let o = Self::u_offset(self.hidden, self.input, gate);
        &self.data[o..o + self.hidden * self.hidden]
    }

    pub fn b(&self, gate: Gate) -> &'a [f64] {
        let o = Self::b_offset(self.hidden, self.input, gate);
        &self.data[o..o + self.hidden]
    }
}

/// Activations kept from one forward step for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    /// Candidate cell value `tanh(...)`.
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One LSTM step:
///
/// ```text
/// i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
/// g = tanh(W_c x + U_c h + b_c)   o = σ(W_o x + U_o h + b_o)
/// c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')
/// ```
pub fn lstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmParams<'_>,
) -> Result<(Vec<f64>, Vec<f64>, CellCache)> {
    let (hd, d) = (p.hidden, p.input);
    if x.len() != d || h_prev.len() != hd || c_prev.len() != hd {
        return Err(Error::Shape(format!(
            "cell expects x[{d}], h[{hd}], c[{hd}]; got x[{}], h[{}], c[{}]",
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let pre = |gate: Gate| -> Vec<f64> {
        let w = p.w(gate);
        let u = p.u(gate);
        let b = p.b(gate);
        (0..hd)
            .map(|r| {
                let wx: f64 = w[r * d..(r + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                let uh: f64 = u[r * hd..(r + 1) * hd]
                    .iter()
                    .zip(h_prev)
                    .map(|(a, b)| a * b)
                    .sum();
                wx + uh + b[r]
            })
            .collect()
    };
    let i: Vec<f64> = pre(Gate::Input).into_iter().map(sigmoid).collect();
    let f: Vec<f64> = pre(Gate::Forget).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = pre(Gate::Cell).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(Gate::Output).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..hd).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    let cache = CellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        c: c.clone(),
        tanh_c,
    };
    Ok((h, c, cache))
}

/// Runs one direction over `steps`, returning the per-step caches.
pub(crate) fn run_direction<'s>(
    steps: impl Iterator<Item = &'s [f64]>,
    p: &LstmParams<'_>,
) -> Result<Vec<CellCache>> {
    let mut h = vec![0.0; p.hidden];
    let mut c = vec![0.0; p.hidden];
    let mut caches = Vec::new();
    for x in steps {
        let (h_next, c_next, cache) = lstm_cell_forward(x, &h, &c, p)?;
        h = h_next;
        c = c_next;
        caches.push(cache);
    }
    Ok(caches)
}

/// Backpropagation through time for one direction. `dh_last` is the
/// gradient w.r.t. the final hidden state; gradients are accumulated into
/// `grad` (same layout as the weights).
pub(crate) fn backward_direction(
    p: &LstmParams<'_>,
    caches: &[CellCache],
    dh_last: &[f64],
    grad: &mut [f64],
) {
    let (hd, d) = (p.hidden, p.input);
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; hd];
    let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
    for cache in caches.iter().rev() {
        for k in 0..hd {
            let (i, f, g, o, tc) = (cache.i[k], cache.f[k], cache.g[k], cache.o[k], cache.tanh_c[k]);
            let d_o = dh[k] * tc;
            dc[k] += dh[k] * o * (1.0 - tc * tc);
            da[Gate::Input as usize][k] = dc[k] * g * i * (1.0 - i);
            da[Gate::Forget as usize][k] = dc[k] * cache.c_prev[k] * f * (1.0 - f);
            da[Gate::Cell as usize][k] = dc[k] * i * (1.0 - g * g);
            da[Gate::Output as usize][k] = d_o * o * (1.0 - o);
            dc[k] *= f;
        }
        let mut dh_prev = vec![0.0; hd];
        for gate in Gate::ALL {
            let a = &da[gate as usize];
            let wo = LstmParams::w_offset(hd, d, gate);
            let uo = LstmParams::u_offset(hd, d, gate);
            let bo = LstmParams::b_offset(hd, d, gate);
            let u = p.u(gate);
            for r in 0..hd {
                let ar = a[r];
                for (gw, x) in grad[wo + r * d..wo + (r + 1) * d].iter_mut().zip(&cache.x) {
                    *gw += ar * x;
                }
                for (gu, h) in grad[uo + r * hd..uo + (r + 1) * hd]
                    .iter_mut()
                    .zip(&cache.h_prev)
                {
                    *gu += ar * h;
                }
                grad[bo + r] += ar;
                for (dp, uw) in dh_prev.iter_mut().zip(&u[r * hd..(r + 1) * hd]) {
                    *dp += uw * ar;
                }
            }
        }
        dh = dh_prev;
    }
}

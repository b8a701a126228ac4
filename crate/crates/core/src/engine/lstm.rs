//! Peephole LSTM.
//!
//! For input `x`, previous hidden state `h` and previous cell state `c`:
//!
//! ```text
//! i  = σ(U_i x + V_i h + Z_i ∘ c + b_i)
//! f  = σ(U_f x + V_f h + Z_f ∘ c + b_f)
//! o  = σ(U_o x + V_o h + Z_o ∘ c + b_o)
//! g  = tanh(U_c x + V_c h + b_c)
//! c' = f ∘ c + i ∘ g
//! h' = o ∘ tanh(c')
//! ```
//!
//! `U` and `V` are dense matrices and `Z` is a per-unit diagonal peephole.
//! The output gate looks at the previous cell state `c`, not `c'`.

use crate::engine::linalg::{matmul_acc, matmul_at_acc, matmul_bt_acc, sigmoid};
use crate::engine::{GradBundle, ParamSet};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Weights feeding one gate (or the cell candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    /// `[hidden, input]`
    pub input_weight: Tensor,
    /// `[hidden, hidden]`
    pub recurrent_weight: Tensor,
    /// `[hidden]`; `None` when peepholes are disabled and always for the candidate.
    pub peephole: Option<Tensor>,
    /// `[hidden]`
    pub bias: Tensor,
}

impl GateParams {
    fn zeros(input: usize, hidden: usize, peephole: bool) -> Self {
        GateParams {
            input_weight: Tensor::zeros(&[hidden, input]),
            recurrent_weight: Tensor::zeros(&[hidden, hidden]),
            peephole: peephole.then(|| Tensor::zeros(&[hidden])),
            bias: Tensor::zeros(&[hidden]),
        }
    }

    /// Pre-activation `x Uᵀ + h Vᵀ + Z ∘ c + b` for the whole batch.
    fn preactivation(&self, x: &[f64], h: &[f64], c: &[f64], batch: usize, input: usize, hidden: usize) -> Vec<f64> {
        let mut a = Vec::with_capacity(batch * hidden);
        for _ in 0..batch {
            a.extend_from_slice(self.bias.data());
        }
        matmul_bt_acc(x, self.input_weight.data(), &mut a, batch, input, hidden);
        matmul_bt_acc(h, self.recurrent_weight.data(), &mut a, batch, hidden, hidden);
        if let Some(z) = &self.peephole {
            for (row_a, row_c) in a.chunks_exact_mut(hidden).zip(c.chunks_exact(hidden)) {
                for ((av, zv), cv) in row_a.iter_mut().zip(z.data()).zip(row_c) {
                    *av += zv * cv;
                }
            }
        }
        a
    }

    /// Accumulates parameter gradients for pre-activation gradient `da` and
    /// adds this gate's contribution to `dx`, `dh`, `dc`.
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        grad: &mut GateParams,
        da: &[f64],
        cache: &LstmCellCache,
        dx: &mut [f64],
        dh: &mut [f64],
        dc: &mut [f64],
    ) {
        let (batch, input, hidden) = (cache.batch, cache.input, cache.hidden);
        matmul_at_acc(da, cache.x.data(), grad.input_weight.data_mut(), batch, hidden, input);
        matmul_at_acc(
            da,
            cache.h_prev.data(),
            grad.recurrent_weight.data_mut(),
            batch,
            hidden,
            hidden,
        );
        let gb = grad.bias.data_mut();
        for row in da.chunks_exact(hidden) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        matmul_acc(da, self.input_weight.data(), dx, batch, hidden, input);
        matmul_acc(da, self.recurrent_weight.data(), dh, batch, hidden, hidden);
        if let (Some(z), Some(gz)) = (&self.peephole, grad.peephole.as_mut()) {
            let gz = gz.data_mut();
            let c = cache.c_prev.data();
            for b in 0..batch {
                for j in 0..hidden {
                    let k = b * hidden + j;
                    gz[j] += da[k] * c[k];
                    dc[k] += z.data()[j] * da[k];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize, peephole: bool) -> Self {
        LstmParams {
            input_gate: GateParams::zeros(input, hidden, peephole),
            forget_gate: GateParams::zeros(input, hidden, peephole),
            output_gate: GateParams::zeros(input, hidden, peephole),
            candidate: GateParams::zeros(input, hidden, false),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_gate.input_weight.dim(1)
    }

    pub fn hidden(&self) -> usize {
        self.input_gate.input_weight.dim(0)
    }

    pub fn peephole_enabled(&self) -> bool {
        self.input_gate.peephole.is_some()
    }

    fn gates(&self) -> [(&'static str, &GateParams); 4] {
        [
            ("i", &self.input_gate),
            ("f", &self.forget_gate),
            ("o", &self.output_gate),
            ("c", &self.candidate),
        ]
    }

    /// All gates share shapes; peepholes present on i/f/o together or not at all.
    pub fn validate(&self) -> Result<()> {
        let (h, d) = (self.hidden(), self.input_dim());
        let peep = self.peephole_enabled();
        for (name, g) in self.gates() {
            g.input_weight.expect_shape("lstm input weight", &[h, d])?;
            g.recurrent_weight.expect_shape("lstm recurrent weight", &[h, h])?;
            g.bias.expect_shape("lstm bias", &[h])?;
            let want_peep = peep && name != "c";
            match &g.peephole {
                Some(z) if want_peep => z.expect_shape("lstm peephole", &[h])?,
                None if !want_peep => {}
                _ => return Err(Error::Param(format!("gate {name}: peephole presence inconsistent"))),
            }
        }
        Ok(())
    }
}

impl ParamSet for LstmParams {
    fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(15);
        for (g, p) in self.gates() {
            out.push((format!("U_{g}"), &p.input_weight));
            out.push((format!("V_{g}"), &p.recurrent_weight));
            if let Some(z) = &p.peephole {
                out.push((format!("Z_{g}"), z));
            }
            out.push((format!("b_{g}"), &p.bias));
        }
        out
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::with_capacity(15);
        for (g, p) in [
            ("i", &mut self.input_gate),
            ("f", &mut self.forget_gate),
            ("o", &mut self.output_gate),
            ("c", &mut self.candidate),
        ] {
            out.push((format!("U_{g}"), &mut p.input_weight));
            out.push((format!("V_{g}"), &mut p.recurrent_weight));
            if let Some(z) = &mut p.peephole {
                out.push((format!("Z_{g}"), z));
            }
            out.push((format!("b_{g}"), &mut p.bias));
        }
        out
    }
}

/// Everything one cell step needs for its reverse pass.
#[derive(Debug, Clone)]
pub struct LstmCellCache {
    batch: usize,
    input: usize,
    hidden: usize,
    peephole: bool,
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub candidate: Vec<f64>,
    tanh_c: Vec<f64>,
}

pub fn lstm_cell_forward(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    p: &LstmParams,
) -> Result<(Tensor, Tensor, LstmCellCache)> {
    p.validate()?;
    let (input, hidden) = (p.input_dim(), p.hidden());
    if x.rank() != 2 || x.dim(1) != input {
        return Err(Error::dim(
            "lstm_cell_forward input",
            &[x.shape().first().copied().unwrap_or(0), input],
            x.shape(),
        ));
    }
    let batch = x.dim(0);
    h_prev.expect_shape("lstm_cell_forward hidden state", &[batch, hidden])?;
    c_prev.expect_shape("lstm_cell_forward cell state", &[batch, hidden])?;

    let (xd, hd, cd) = (x.data(), h_prev.data(), c_prev.data());
    let mut i = p.input_gate.preactivation(xd, hd, cd, batch, input, hidden);
    let mut f = p.forget_gate.preactivation(xd, hd, cd, batch, input, hidden);
    let mut o = p.output_gate.preactivation(xd, hd, cd, batch, input, hidden);
    let mut g = p.candidate.preactivation(xd, hd, cd, batch, input, hidden);
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    o.iter_mut().for_each(|v| *v = sigmoid(*v));
    g.iter_mut().for_each(|v| *v = v.tanh());

    let n = batch * hidden;
    let mut c = Vec::with_capacity(n);
    let mut tanh_c = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for k in 0..n {
        let ck = f[k] * cd[k] + i[k] * g[k];
        let tc = ck.tanh();
        c.push(ck);
        tanh_c.push(tc);
        h.push(o[k] * tc);
    }

    let cache = LstmCellCache {
        batch,
        input,
        hidden,
        peephole: p.peephole_enabled(),
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        input_gate: i,
        forget_gate: f,
        output_gate: o,
        candidate: g,
        tanh_c,
    };
    Ok((
        Tensor::new(&[batch, hidden], h)?,
        Tensor::new(&[batch, hidden], c)?,
        cache,
    ))
}

/// Gradients of one cell step.
#[derive(Debug, Clone)]
pub struct LstmCellGrads {
    /// Parameter gradients; `input` is the gradient of `x`.
    pub bundle: GradBundle<LstmParams>,
    pub h_prev: Tensor,
    pub c_prev: Tensor,
}

pub fn lstm_cell_backward(cache: &LstmCellCache, dh: &Tensor, dc: &Tensor, p: &LstmParams) -> Result<LstmCellGrads> {
    let mut grads = p.zeros_like();
    let mut dx = vec![0.0; cache.batch * cache.input];
    let (dh_prev, dc_prev) = cell_backward_into(
        cache,
        dh.data(),
        dc.data(),
        dh.shape(),
        dc.shape(),
        p,
        &mut grads,
        &mut dx,
    )?;
    let shape = [cache.batch, cache.hidden];
    Ok(LstmCellGrads {
        bundle: GradBundle {
            params: grads,
            input: Tensor::new(&[cache.batch, cache.input], dx)?,
        },
        h_prev: Tensor::new(&shape, dh_prev)?,
        c_prev: Tensor::new(&shape, dc_prev)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn cell_backward_into(
    cache: &LstmCellCache,
    dh: &[f64],
    dc_in: &[f64],
    dh_shape: &[usize],
    dc_shape: &[usize],
    p: &LstmParams,
    grads: &mut LstmParams,
    dx: &mut [f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if cache.input != p.input_dim() || cache.hidden != p.hidden() || cache.peephole != p.peephole_enabled() {
        return Err(Error::Contract(format!(
            "LSTM cache built for input {} hidden {} peephole {}, parameters have input {} hidden {} peephole {}",
            cache.input,
            cache.hidden,
            cache.peephole,
            p.input_dim(),
            p.hidden(),
            p.peephole_enabled()
        )));
    }
    let state = [cache.batch, cache.hidden];
    if dh_shape != state || dc_shape != state {
        return Err(Error::Contract(format!(
            "upstream gradients {dh_shape:?}/{dc_shape:?} do not match cached state {state:?}"
        )));
    }

    let n = cache.batch * cache.hidden;
    let (i, f, o, g) = (
        &cache.input_gate,
        &cache.forget_gate,
        &cache.output_gate,
        &cache.candidate,
    );
    let c_prev = cache.c_prev.data();
    let mut da_i = vec![0.0; n];
    let mut da_f = vec![0.0; n];
    let mut da_o = vec![0.0; n];
    let mut da_g = vec![0.0; n];
    let mut dc_prev = vec![0.0; n];
    for k in 0..n {
        let tc = cache.tanh_c[k];
        let dc = dc_in[k] + dh[k] * o[k] * (1.0 - tc * tc);
        da_o[k] = dh[k] * tc * o[k] * (1.0 - o[k]);
        da_i[k] = dc * g[k] * i[k] * (1.0 - i[k]);
        da_f[k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
        da_g[k] = dc * i[k] * (1.0 - g[k] * g[k]);
        dc_prev[k] = dc * f[k];
    }

    let mut dh_prev = vec![0.0; n];
    p.input_gate
        .accumulate(&mut grads.input_gate, &da_i, cache, dx, &mut dh_prev, &mut dc_prev);
    p.forget_gate
        .accumulate(&mut grads.forget_gate, &da_f, cache, dx, &mut dh_prev, &mut dc_prev);
    p.output_gate
        .accumulate(&mut grads.output_gate, &da_o, cache, dx, &mut dh_prev, &mut dc_prev);
    p.candidate
        .accumulate(&mut grads.candidate, &da_g, cache, dx, &mut dh_prev, &mut dc_prev);
    Ok((dh_prev, dc_prev))
}

/// Per-step caches of a full sequence pass.
#[derive(Debug, Clone)]
pub struct LstmLayerCache {
    steps: Vec<LstmCellCache>,
    input_shape: Vec<usize>,
}

impl LstmLayerCache {
    pub fn steps(&self) -> &[LstmCellCache] {
        &self.steps
    }
}

/// Runs the cell over `x_seq: [batch, steps, input]` from zero initial state
/// and returns the final hidden state `[batch, hidden]`.
pub fn lstm_layer_forward(x_seq: &Tensor, p: &LstmParams) -> Result<(Tensor, LstmLayerCache)> {
    if x_seq.rank() != 3 || x_seq.dim(2) != p.input_dim() {
        return Err(Error::dim("lstm_layer_forward", &[0, 0, p.input_dim()], x_seq.shape()));
    }
    let (batch, steps, input) = (x_seq.dim(0), x_seq.dim(1), x_seq.dim(2));
    if steps == 0 {
        return Err(Error::EmptySequence);
    }
    let mut h = Tensor::zeros(&[batch, p.hidden()]);
    let mut c = Tensor::zeros(&[batch, p.hidden()]);
    let mut caches = Vec::with_capacity(steps);
    for t in 0..steps {
        let x_t = step_slice(x_seq, t, batch, steps, input);
        let (h_next, c_next, cache) = lstm_cell_forward(&x_t, &h, &c, p)?;
        h = h_next;
        c = c_next;
        caches.push(cache);
    }
    Ok((
        h,
        LstmLayerCache {
            steps: caches,
            input_shape: x_seq.shape().to_vec(),
        },
    ))
}

/// Backpropagation through time from the gradient of the final hidden state.
pub fn lstm_layer_backward(cache: &LstmLayerCache, dh_last: &Tensor, p: &LstmParams) -> Result<GradBundle<LstmParams>> {
    let (batch, steps, input) = (cache.input_shape[0], cache.input_shape[1], cache.input_shape[2]);
    let hidden = p.hidden();
    dh_last.expect_shape("lstm_layer_backward", &[batch, hidden])?;
    let state = [batch, hidden];
    let mut grads = p.zeros_like();
    let mut dx_seq = vec![0.0; batch * steps * input];
    let mut dh = dh_last.data().to_vec();
    let mut dc = vec![0.0; batch * hidden];
    let mut dx = vec![0.0; batch * input];
    for t in (0..steps).rev() {
        dx.fill(0.0);
        let (dh_prev, dc_prev) = cell_backward_into(&cache.steps[t], &dh, &dc, &state, &state, p, &mut grads, &mut dx)?;
        for b in 0..batch {
            let dst = (b * steps + t) * input;
            dx_seq[dst..dst + input].copy_from_slice(&dx[b * input..(b + 1) * input]);
        }
        dh = dh_prev;
        dc = dc_prev;
    }
    Ok(GradBundle {
        params: grads,
        input: Tensor::new(&cache.input_shape, dx_seq)?,
    })
}

fn step_slice(x_seq: &Tensor, t: usize, batch: usize, steps: usize, input: usize) -> Tensor {
    let mut data = Vec::with_capacity(batch * input);
    for b in 0..batch {
        let src = (b * steps + t) * input;
        data.extend_from_slice(&x_seq.data()[src..src + input]);
    }
    Tensor::new(&[batch, input], data).expect("slice shape")
}

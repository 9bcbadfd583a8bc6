//! Input layer (linear + ReLU) -> single LSTM layer -> linear output, with
//! exact gradients by backpropagation through time.
//!
//! Gate equations, with `a_t = relu(W_in x_t + b_in)`:
//!
//! ```text
//! i = σ(W_i a_t + U_i h_{t-1} + b_i)    f = σ(W_f a_t + U_f h_{t-1} + b_f)
//! o = σ(W_o a_t + U_o h_{t-1} + b_o)    g = tanh(W_g a_t + U_g h_{t-1} + b_g)
//! c_t = f ∘ c_{t-1} + i ∘ g             h_t = o ∘ tanh(c_t)
//! y_t = w_out · h_t + b_out
//! ```
//!
//! All parameters live in one flat vector so optimizers and checkpoints can
//! treat them uniformly; [`Layout`] names the blocks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gemm::{gemm, View};
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDims {
    /// Forcing features plus static attributes.
    pub input: usize,
    pub hidden: usize,
}

impl NetworkDims {
    pub const OUTPUT: usize = 1;

    pub fn new(input: usize, hidden: usize) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "network dims must be >= 1 (input {input}, hidden {hidden})"
            )));
        }
        Ok(Self { input, hidden })
    }

    pub fn layout(&self) -> Layout {
        Layout::new(*self)
    }
}

/// LSTM gate order used throughout the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateLayout {
    /// `H x H`, applied to `h_{t-1}`.
    pub recurrent: Range<usize>,
    /// `H x H`, applied to the input-layer activation.
    pub input: Range<usize>,
    pub bias: Range<usize>,
}

/// Offsets of each parameter block, in checkpoint order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub dims: NetworkDims,
    pub in_weight: Range<usize>,
    pub in_bias: Range<usize>,
    pub gates: [GateLayout; 4],
    pub out_weight: Range<usize>,
    pub out_bias: Range<usize>,
    pub len: usize,
}

impl Layout {
    fn new(dims: NetworkDims) -> Self {
        let (d, h) = (dims.input, dims.hidden);
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let in_weight = take(h * d);
        let in_bias = take(h);
        let gates = core::array::from_fn(|_| GateLayout {
            recurrent: take(h * h),
            input: take(h * h),
            bias: take(h),
        });
        let out_weight = take(h);
        let out_bias = take(1);
        Self {
            dims,
            in_weight,
            in_bias,
            gates,
            out_weight,
            out_bias,
            len: at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dims: NetworkDims,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: NetworkDims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.layout().len],
        }
    }

    pub fn from_values(dims: NetworkDims, values: Vec<f64>) -> Result<Self> {
        let want = dims.layout().len;
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "{} parameter values for dims {dims:?}, expected {want}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> NetworkDims {
        self.dims
    }

    pub fn layout(&self) -> Layout {
        self.dims.layout()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, r: &Range<usize>) -> &[f64] {
        &self.values[r.clone()]
    }

    pub fn block_mut(&mut self, r: &Range<usize>) -> &mut [f64] {
        &mut self.values[r.clone()]
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|x| *x *= s);
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Weights uniform in `±1/sqrt(fan_in)` per matrix; biases zero except the
/// forget gate, which starts at 1.
pub fn init_params(dims: NetworkDims, rng: &mut Stream) -> ModelParams {
    let mut p = ModelParams::zeros(dims);
    let l = dims.layout();
    let mut uniform = |p: &mut ModelParams, r: &Range<usize>, fan_in: usize| {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        for v in p.block_mut(r) {
            *v = rng.random_range(-bound..=bound);
        }
    };
    uniform(&mut p, &l.in_weight, dims.input);
    for g in &l.gates {
        uniform(&mut p, &g.recurrent, dims.hidden);
        uniform(&mut p, &g.input, dims.hidden);
    }
    uniform(&mut p, &l.out_weight, dims.hidden);
    p.block_mut(&l.gates[Gate::Forget as usize].bias).fill(1.0);
    p
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

#[inline]
fn tanh(z: f64) -> f64 {
    1.0 - 2.0 / (libm::exp(2.0 * z) + 1.0)
}

/// Weights rearranged for batched products: the four gates stacked into
/// one `4H x 2H` matrix whose columns are `[input part | recurrent part]`.
struct Packed {
    d: usize,
    h: usize,
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_gates: Vec<f64>,
    b_gates: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

impl Packed {
    fn new(p: &ModelParams) -> Self {
        let (d, h) = (p.dims.input, p.dims.hidden);
        let l = p.layout();
        let mut w_gates = vec![0.0; 4 * h * 2 * h];
        let mut b_gates = vec![0.0; 4 * h];
        for (gi, g) in l.gates.iter().enumerate() {
            let (wi, ur) = (p.block(&g.input), p.block(&g.recurrent));
            for k in 0..h {
                let row = &mut w_gates[(gi * h + k) * 2 * h..(gi * h + k + 1) * 2 * h];
                row[..h].copy_from_slice(&wi[k * h..(k + 1) * h]);
                row[h..].copy_from_slice(&ur[k * h..(k + 1) * h]);
            }
            b_gates[gi * h..(gi + 1) * h].copy_from_slice(p.block(&g.bias));
        }
        Self {
            d,
            h,
            w_in: p.block(&l.in_weight).to_vec(),
            b_in: p.block(&l.in_bias).to_vec(),
            w_gates,
            b_gates,
            w_out: p.block(&l.out_weight).to_vec(),
            b_out: p.block(&l.out_bias)[0],
        }
    }
}

/// Intermediates of a batched forward pass, laid out `[t][window][unit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    dims: NetworkDims,
    batch: usize,
    len: usize,
    x: Vec<f64>,
    /// Input-layer pre-activations.
    pre: Vec<f64>,
    /// `[a_t | h_{t-1}]` rows, `2H` wide.
    joint: Vec<f64>,
    dropout: Option<Vec<f64>>,
    /// Activated gates, `4H` wide in [`Gate`] order.
    gates: Vec<f64>,
    cell_tanh: Vec<f64>,
    cell: Vec<f64>,
    hidden: Vec<f64>,
}

impl ForwardCache {
    /// Window length.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn dims(&self) -> NetworkDims {
        self.dims
    }

    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }

    pub fn cell(&self) -> &[f64] {
        &self.cell
    }

    /// Activations of one gate across all steps and windows.
    pub fn gate(&self, g: Gate) -> Vec<f64> {
        let h = self.dims.hidden;
        self.gates
            .chunks_exact(4 * h)
            .flat_map(|row| row[g as usize * h..(g as usize + 1) * h].iter().copied())
            .collect()
    }
}

fn check_windows(dims: NetworkDims, xs: &[&[f64]]) -> Result<usize> {
    let d = dims.input;
    let first = xs.first().ok_or_else(|| Error::Dimension("empty batch".into()))?;
    let len = first.len() / d;
    for (b, x) in xs.iter().enumerate() {
        if x.is_empty() || x.len() % d != 0 || x.len() / d != len {
            return Err(Error::Dimension(format!(
                "window {b} has {} values; expected a non-empty L x {d} window of length {len}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite input at step {} feature {}",
                i / d,
                i % d
            )));
        }
    }
    Ok(len)
}

fn non_finite(window: usize, t: usize) -> Error {
    Error::Numeric {
        context: format!("forward window {window} step {t}"),
        detail: "non-finite output".into(),
    }
}

/// Batched recurrence state for one pass.
struct Runner<'a> {
    pk: Packed,
    xs: &'a [&'a [f64]],
    masks: Option<&'a [&'a [f64]]>,
    batch: usize,
    x: Vec<f64>,
    pre: Vec<f64>,
    joint: Vec<f64>,
    z: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    h: Vec<f64>,
}

impl<'a> Runner<'a> {
    fn new(params: &ModelParams, xs: &'a [&'a [f64]], masks: Option<&'a [&'a [f64]]>) -> Self {
        let pk = Packed::new(params);
        let (b, d, h) = (xs.len(), pk.d, pk.h);
        Self {
            xs,
            masks,
            batch: b,
            x: vec![0.0; b * d],
            pre: vec![0.0; b * h],
            joint: vec![0.0; b * 2 * h],
            z: vec![0.0; b * 4 * h],
            c: vec![0.0; b * h],
            tc: vec![0.0; b * h],
            h: vec![0.0; b * h],
            pk,
        }
    }

    /// Advances every window one step, writing outputs to `y`.
    fn step(&mut self, t: usize, y: &mut [f64]) {
        let (b, d, h) = (self.batch, self.pk.d, self.pk.h);
        let pk = &self.pk;
        for (w, x) in self.xs.iter().enumerate() {
            self.x[w * d..(w + 1) * d].copy_from_slice(&x[t * d..(t + 1) * d]);
        }
        gemm(
            b,
            d,
            h,
            View::rows(&self.x, d),
            View::transposed(&pk.w_in, d),
            0.0,
            &mut self.pre,
            h,
        );
        for w in 0..b {
            let mask = self.masks.map(|m| &m[w][t * h..(t + 1) * h]);
            let pre = &mut self.pre[w * h..(w + 1) * h];
            let joint = &mut self.joint[w * 2 * h..(w + 1) * 2 * h];
            for k in 0..h {
                pre[k] += pk.b_in[k];
                let a = pre[k].max(0.0);
                joint[k] = mask.map_or(a, |m| a * m[k]);
            }
            joint[h..].copy_from_slice(&self.h[w * h..(w + 1) * h]);
        }
        gemm(
            b,
            2 * h,
            4 * h,
            View::rows(&self.joint, 2 * h),
            View::transposed(&pk.w_gates, 2 * h),
            0.0,
            &mut self.z,
            4 * h,
        );
        for (w, yw) in y.iter_mut().enumerate().take(b) {
            let z = &mut self.z[w * 4 * h..(w + 1) * 4 * h];
            for (j, v) in z.iter_mut().enumerate() {
                let pre = *v + pk.b_gates[j];
                *v = if j >= 3 * h { tanh(pre) } else { sigmoid(pre) };
            }
            let (c, tc, hs) = (
                &mut self.c[w * h..(w + 1) * h],
                &mut self.tc[w * h..(w + 1) * h],
                &mut self.h[w * h..(w + 1) * h],
            );
            for k in 0..h {
                let (i, f, o, g) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
                c[k] = f * c[k] + i * g;
                tc[k] = tanh(c[k]);
                hs[k] = o * tc[k];
            }
            *yw = pk.b_out + hs.iter().zip(&pk.w_out).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Runs the network over one `L x D` window (time-major) from zero state.
pub fn forward(params: &ModelParams, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    forward_batch(params, &[x], None)
}

/// As [`forward`], scaling input-layer activations by `mask` (`L x H`,
/// entries 0 or `1/(1-rate)`).
pub fn forward_with_dropout(params: &ModelParams, x: &[f64], mask: Option<&[f64]>) -> Result<(Vec<f64>, ForwardCache)> {
    match mask {
        Some(m) => forward_batch(params, &[x], Some(&[m])),
        None => forward_batch(params, &[x], None),
    }
}

/// Runs `B` equal-length windows in lockstep. Outputs are window-major
/// (`B x L`).
pub fn forward_batch(
    params: &ModelParams,
    xs: &[&[f64]],
    masks: Option<&[&[f64]]>,
) -> Result<(Vec<f64>, ForwardCache)> {
    let dims = params.dims;
    let len = check_windows(dims, xs)?;
    let (b, d, h) = (xs.len(), dims.input, dims.hidden);
    if let Some(m) = masks {
        if m.len() != b || m.iter().any(|m| m.len() != len * h) {
            return Err(Error::Dimension("dropout mask shape".into()));
        }
    }
    let mut cache = ForwardCache {
        dims,
        batch: b,
        len,
        x: Vec::with_capacity(len * b * d),
        pre: Vec::with_capacity(len * b * h),
        joint: Vec::with_capacity(len * b * 2 * h),
        dropout: masks.map(|_| Vec::with_capacity(len * b * h)),
        gates: Vec::with_capacity(len * b * 4 * h),
        cell_tanh: Vec::with_capacity(len * b * h),
        cell: Vec::with_capacity(len * b * h),
        hidden: Vec::with_capacity(len * b * h),
    };
    let mut run = Runner::new(params, xs, masks);
    let mut step_y = vec![0.0; b];
    let mut yhat = vec![0.0; b * len];
    for t in 0..len {
        run.step(t, &mut step_y);
        for (w, y) in step_y.iter().enumerate() {
            if !y.is_finite() {
                return Err(non_finite(w, t));
            }
            yhat[w * len + t] = *y;
        }
        cache.x.extend_from_slice(&run.x);
        cache.pre.extend_from_slice(&run.pre);
        cache.joint.extend_from_slice(&run.joint);
        if let (Some(dst), Some(m)) = (cache.dropout.as_mut(), masks) {
            for mw in m {
                dst.extend_from_slice(&mw[t * h..(t + 1) * h]);
            }
        }
        cache.gates.extend_from_slice(&run.z);
        cache.cell_tanh.extend_from_slice(&run.tc);
        cache.cell.extend_from_slice(&run.c);
        cache.hidden.extend_from_slice(&run.h);
    }
    Ok((yhat, cache))
}

/// Forward pass without keeping intermediates.
pub fn predict(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(predict_batch(params, &[x])?.pop().expect("one window"))
}

/// Batched [`predict`] over equal-length windows.
pub fn predict_batch(params: &ModelParams, xs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let len = check_windows(params.dims, xs)?;
    let mut run = Runner::new(params, xs, None);
    let mut step_y = vec![0.0; xs.len()];
    let mut out = vec![Vec::with_capacity(len); xs.len()];
    for t in 0..len {
        run.step(t, &mut step_y);
        for (w, y) in step_y.iter().enumerate() {
            if !y.is_finite() {
                return Err(non_finite(w, t));
            }
            out[w].push(*y);
        }
    }
    Ok(out)
}

/// Gradient of a scalar loss with per-output derivatives `dy` (window-major,
/// `B x L`).
pub fn backward(params: &ModelParams, cache: &ForwardCache, dy: &[f64]) -> Result<ModelParams> {
    let mut grad = ModelParams::zeros(params.dims);
    backward_into(params, cache, dy, &mut grad)?;
    Ok(grad)
}

/// As [`backward`], accumulating into `grad`.
pub fn backward_into(params: &ModelParams, cache: &ForwardCache, dy: &[f64], grad: &mut ModelParams) -> Result<()> {
    let dims = params.dims;
    if cache.dims != dims || grad.dims != dims {
        return Err(Error::Contract(format!(
            "cache dims {:?} / gradient dims {:?} do not match params {dims:?}",
            cache.dims, grad.dims
        )));
    }
    let (b, len, d, h) = (cache.batch, cache.len, dims.input, dims.hidden);
    if dy.len() != b * len {
        return Err(Error::Dimension(format!(
            "{} output derivatives for {b} windows of {len}",
            dy.len()
        )));
    }
    let pk = Packed::new(params);
    let mut d_gates_w = vec![0.0; 4 * h * 2 * h];
    let mut d_gates_b = vec![0.0; 4 * h];
    let mut d_in_w = vec![0.0; h * d];
    let mut d_in_b = vec![0.0; h];
    let mut d_out_w = vec![0.0; h];
    let mut d_out_b = 0.0;

    let mut dh_next = vec![0.0; b * h];
    let mut dc_next = vec![0.0; b * h];
    let mut dz = vec![0.0; b * 4 * h];
    let mut d_joint = vec![0.0; b * 2 * h];
    let mut dp = vec![0.0; b * h];

    for t in (0..len).rev() {
        let s1 = t * b * h..(t + 1) * b * h;
        let hid = &cache.hidden[s1.clone()];
        let tc = &cache.cell_tanh[s1.clone()];
        let pre = &cache.pre[s1.clone()];
        let gates = &cache.gates[t * b * 4 * h..(t + 1) * b * 4 * h];
        let joint = &cache.joint[t * b * 2 * h..(t + 1) * b * 2 * h];
        for w in 0..b {
            let g_out = dy[w * len + t];
            d_out_b += g_out;
            let hw = &hid[w * h..(w + 1) * h];
            for k in 0..h {
                d_out_w[k] += g_out * hw[k];
            }
            let gz = &gates[w * 4 * h..(w + 1) * 4 * h];
            let c_prev = if t > 0 {
                &cache.cell[(t - 1) * b * h + w * h..(t - 1) * b * h + (w + 1) * h]
            } else {
                &[][..]
            };
            let dzw = &mut dz[w * 4 * h..(w + 1) * 4 * h];
            for k in 0..h {
                let (i, f, o, g) = (gz[k], gz[h + k], gz[2 * h + k], gz[3 * h + k]);
                let tck = tc[w * h + k];
                let dh = g_out * pk.w_out[k] + dh_next[w * h + k];
                let dc = dh * o * (1.0 - tck * tck) + dc_next[w * h + k];
                let cp = if t > 0 { c_prev[k] } else { 0.0 };
                dzw[k] = dc * g * i * (1.0 - i);
                dzw[h + k] = dc * cp * f * (1.0 - f);
                dzw[2 * h + k] = dh * tck * o * (1.0 - o);
                dzw[3 * h + k] = dc * i * (1.0 - g * g);
                dc_next[w * h + k] = dc * f;
            }
            for (acc, v) in d_gates_b.iter_mut().zip(dzw.iter()) {
                *acc += v;
            }
        }
        gemm(
            4 * h,
            b,
            2 * h,
            View::transposed(&dz, 4 * h),
            View::rows(joint, 2 * h),
            1.0,
            &mut d_gates_w,
            2 * h,
        );
        gemm(
            b,
            4 * h,
            2 * h,
            View::rows(&dz, 4 * h),
            View::rows(&pk.w_gates, 2 * h),
            0.0,
            &mut d_joint,
            2 * h,
        );
        for w in 0..b {
            for k in 0..h {
                let idx = w * h + k;
                dh_next[idx] = d_joint[w * 2 * h + h + k];
                let mut g = if pre[idx] > 0.0 { d_joint[w * 2 * h + k] } else { 0.0 };
                if let Some(m) = &cache.dropout {
                    g *= m[t * b * h + idx];
                }
                dp[idx] = g;
                d_in_b[k] += g;
            }
        }
        gemm(
            h,
            b,
            d,
            View::transposed(&dp, h),
            View::rows(&cache.x[t * b * d..(t + 1) * b * d], d),
            1.0,
            &mut d_in_w,
            d,
        );
    }

    let l = params.layout();
    let add = |dst: &mut [f64], src: &[f64]| {
        for (a, v) in dst.iter_mut().zip(src) {
            *a += v;
        }
    };
    add(grad.block_mut(&l.in_weight), &d_in_w);
    add(grad.block_mut(&l.in_bias), &d_in_b);
    for (gi, g) in l.gates.iter().enumerate() {
        for k in 0..h {
            let row = &d_gates_w[(gi * h + k) * 2 * h..(gi * h + k + 1) * 2 * h];
            add(
                &mut grad.values[g.input.start + k * h..g.input.start + (k + 1) * h],
                &row[..h],
            );
            add(
                &mut grad.values[g.recurrent.start + k * h..g.recurrent.start + (k + 1) * h],
                &row[h..],
            );
        }
        add(grad.block_mut(&g.bias), &d_gates_b[gi * h..(gi + 1) * h]);
    }
    add(grad.block_mut(&l.out_weight), &d_out_w);
    grad.block_mut(&l.out_bias)[0] += d_out_b;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn layout_counts() {
        let dims = NetworkDims::new(5, 8).unwrap();
        let l = dims.layout();
        assert_eq!(l.len, 8 * 5 + 8 + 4 * (2 * 64 + 8) + 8 + 1);
        assert_eq!(l.out_bias.end, l.len);
        assert!(NetworkDims::new(0, 3).is_err());
    }

    #[test]
    fn init_bounds_and_determinism() {
        let dims = NetworkDims::new(5, 8).unwrap();
        let p = init_params(dims, &mut rng::stream(4));
        let l = p.layout();
        let bound = 1.0 / libm::sqrt(5.0);
        assert!(p.block(&l.in_weight).iter().all(|w| w.abs() <= bound));
        assert!(p.block(&l.gates[Gate::Forget as usize].bias).iter().all(|b| *b == 1.0));
        assert!(p.block(&l.gates[Gate::Input as usize].bias).iter().all(|b| *b == 0.0));
        assert!(p.block(&l.in_bias).iter().all(|b| *b == 0.0));
        assert_eq!(p.block(&l.out_bias), &[0.0]);
        assert_eq!(p, init_params(dims, &mut rng::stream(4)));
        assert_ne!(p, init_params(dims, &mut rng::stream(5)));
    }

    #[test]
    fn zero_networks_predict_zero() {
        let dims = NetworkDims::new(3, 4).unwrap();
        let x: Vec<f64> = (0..18).map(|i| i as f64 * 0.1).collect();
        let p = ModelParams::zeros(dims);
        let (y, cache) = forward(&p, &x).unwrap();
        assert_eq!(y, vec![0.0; 6]);
        assert_eq!(cache.len(), 6);
        let mut q = ModelParams::zeros(dims);
        let fb = q.layout().gates[Gate::Forget as usize].bias.clone();
        q.block_mut(&fb).fill(1.0);
        assert_eq!(forward(&q, &[0.0; 18]).unwrap().0, vec![0.0; 6]);
    }

    #[test]
    fn shape_errors() {
        let p = ModelParams::zeros(NetworkDims::new(3, 2).unwrap());
        assert!(matches!(forward(&p, &[1.0; 4]), Err(Error::Dimension(_))));
        assert!(matches!(forward(&p, &[]), Err(Error::Dimension(_))));
        assert!(forward(&p, &[1.0, f64::NAN, 0.0]).is_err());
        let (_, cache) = forward(&p, &[1.0; 6]).unwrap();
        let other = ModelParams::zeros(NetworkDims::new(3, 3).unwrap());
        assert!(matches!(backward(&other, &cache, &[1.0, 1.0]), Err(Error::Contract(_))));
        assert!(matches!(backward(&p, &cache, &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn overflow_is_reported_with_step() {
        let dims = NetworkDims::new(1, 1).unwrap();
        let mut p = ModelParams::zeros(dims);
        let l = p.layout();
        p.block_mut(&l.out_bias)[0] = f64::INFINITY;
        match predict(&p, &[0.0, 0.0]) {
            Err(Error::Numeric { context, .. }) => assert!(context.contains("window 0 step 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trivial_gradients() {
        let dims = NetworkDims::new(3, 4).unwrap();
        let p = init_params(dims, &mut rng::stream(1));
        let x: Vec<f64> = (0..15).map(|i| libm::sin(i as f64)).collect();
        let (_, cache) = forward(&p, &x).unwrap();
        let g = backward(&p, &cache, &[0.0; 5]).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0));
        let dy = [0.3, -1.0, 2.0, 0.5, 0.25];
        let g = backward(&p, &cache, &dy).unwrap();
        let l = g.layout();
        assert!((g.block(&l.out_bias)[0] - dy.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn predict_matches_forward() {
        let dims = NetworkDims::new(2, 5).unwrap();
        let p = init_params(dims, &mut rng::stream(9));
        let x: Vec<f64> = (0..40).map(|i| libm::cos(i as f64 * 0.7)).collect();
        assert_eq!(predict(&p, &x).unwrap(), forward(&p, &x).unwrap().0);
    }
}

//! From-scratch FiLM-conditioned residual score network.
//!
//! The network maps (t, x) ∈ [0,1] × R^D to R^D: a sinusoidal embedding of t
//! passes through a one-layer MLP, an input projection lifts x to width H,
//! and B pre-LayerNorm residual blocks apply FiLM modulation
//! (h ← γ(e)⊙h + δ(e)) followed by a GELU MLP. The output projection is
//! zero-initialised so a fresh network is identically zero.
//!
//! Parameters live in one flat buffer with typed views; gradients share the
//! layout, which keeps the Adam update and checkpoint format trivial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::root_rng;
use crate::scalar::Scalar;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub blocks: usize,
    pub time_embed: usize,
    pub seed: u64,
}

impl NetConfig {
    /// Width/depth rule used by the experiments: H = max(64, 2D),
    /// B = 3 for D ≤ 128 and 4 above, E = 64.
    pub fn for_dim(input_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden: 64.max(2 * input_dim),
            blocks: if input_dim <= 128 { 3 } else { 4 },
            time_embed: 64,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.blocks == 0 || self.time_embed == 0 {
            return Err(Error::Parameter("net dimensions must be positive".into()));
        }
        if self.time_embed % 2 != 0 {
            return Err(Error::Parameter(
                "time embedding dimension must be even (sin/cos pairs)".into(),
            ));
        }
        Ok(())
    }
}

/// Offsets of the typed views into the flat parameter buffer.
#[derive(Debug, Clone, Copy)]
struct Layout {
    d: usize,
    h: usize,
    e: usize,
    blocks: usize,
    time_w: usize,
    time_b: usize,
    in_w: usize,
    in_b: usize,
    block_base: usize,
    block_stride: usize,
    out_w: usize,
    out_b: usize,
    total: usize,
}

// Per-block field order:
// ln_gain H | ln_bias H | film_scale_w H*E | film_scale_b H |
// film_shift_w H*E | film_shift_b H | w1 H*H | b1 H | w2 H*H | b2 H
#[derive(Debug, Clone, Copy)]
struct BlockOffsets {
    ln_gain: usize,
    ln_bias: usize,
    scale_w: usize,
    scale_b: usize,
    shift_w: usize,
    shift_b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Layout {
    fn new(cfg: &NetConfig) -> Self {
        let (d, h, e, blocks) = (cfg.input_dim, cfg.hidden, cfg.time_embed, cfg.blocks);
        let time_w = 0;
        let time_b = time_w + e * e;
        let in_w = time_b + e;
        let in_b = in_w + h * d;
        let block_base = in_b + h;
        let block_stride = 2 * h + 2 * (h * e + h) + 2 * (h * h + h);
        let out_w = block_base + blocks * block_stride;
        let out_b = out_w + d * h;
        let total = out_b + d;
        Self {
            d,
            h,
            e,
            blocks,
            time_w,
            time_b,
            in_w,
            in_b,
            block_base,
            block_stride,
            out_w,
            out_b,
            total,
        }
    }

    fn block(&self, b: usize) -> BlockOffsets {
        let (h, e) = (self.h, self.e);
        let base = self.block_base + b * self.block_stride;
        let ln_gain = base;
        let ln_bias = ln_gain + h;
        let scale_w = ln_bias + h;
        let scale_b = scale_w + h * e;
        let shift_w = scale_b + h;
        let shift_b = shift_w + h * e;
        let w1 = shift_b + h;
        let b1 = w1 + h * h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        BlockOffsets {
            ln_gain,
            ln_bias,
            scale_w,
            scale_b,
            shift_w,
            shift_b,
            w1,
            b1,
            w2,
            b2,
        }
    }
}

/// Number of parameters implied by a configuration.
pub fn param_count(cfg: &NetConfig) -> usize {
    Layout::new(cfg).total
}

/// Network parameters: configuration plus one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    cfg: NetConfig,
    buf: Vec<T>,
}

const LN_EPS: f64 = 1e-5;
const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu<T: Scalar>(x: T) -> T {
    let k = T::of(GELU_K);
    let a = T::of(GELU_A);
    let w = k * (x + a * x * x * x);
    T::of(0.5) * x * (T::one() + w.tanh())
}

fn gelu_prime<T: Scalar>(x: T) -> T {
    let k = T::of(GELU_K);
    let a = T::of(GELU_A);
    let half = T::of(0.5);
    let w = k * (x + a * x * x * x);
    let th = w.tanh();
    let sech_sq = T::one() - th * th;
    half * (T::one() + th) + half * x * sech_sq * k * (T::one() + T::of(3.0) * a * x * x)
}

fn matvec<T: Scalar>(w: &[T], rows: usize, cols: usize, x: &[T], out: &mut [T]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = T::zero();
        for (wv, xv) in row.iter().zip(x) {
            acc = acc + *wv * *xv;
        }
        out[r] = acc;
    }
}

/// out[c] += Σ_r w[r,c]·d[r].
fn matvec_transpose_acc<T: Scalar>(w: &[T], rows: usize, cols: usize, d: &[T], out: &mut [T]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let dr = d[r];
        for (o, wv) in out.iter_mut().zip(row) {
            *o = *o + *wv * dr;
        }
    }
}

/// gw[r,c] += d[r]·x[c].
fn outer_acc<T: Scalar>(gw: &mut [T], d: &[T], x: &[T]) {
    let cols = x.len();
    for (r, &dr) in d.iter().enumerate() {
        let row = &mut gw[r * cols..(r + 1) * cols];
        for (gv, xv) in row.iter_mut().zip(x) {
            *gv = *gv + dr * *xv;
        }
    }
}

fn vec_acc<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a = *a + *b;
    }
}

impl<T: Scalar> NetParams<T> {
    /// Seeded initialisation. Hidden layers draw Gaussian weights scaled by
    /// fan-in; FiLM maps start as the identity modulation (γ ≡ 1, δ ≡ 0) and
    /// the output projection starts at zero.
    pub fn init(cfg: &NetConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        let mut buf = vec![T::zero(); layout.total];
        let mut rng = root_rng(cfg.seed);
        let mut fill_gaussian = |buf: &mut [T], range: std::ops::Range<usize>, std: f64| {
            let s = T::of(std);
            for v in &mut buf[range] {
                *v = s * T::standard_normal(&mut rng);
            }
        };
        let (d, h, e) = (layout.d, layout.h, layout.e);
        fill_gaussian(&mut buf, layout.time_w..layout.time_w + e * e, (1.0 / e as f64).sqrt());
        fill_gaussian(&mut buf, layout.in_w..layout.in_w + h * d, (1.0 / d as f64).sqrt());
        for b in 0..layout.blocks {
            let off = layout.block(b);
            for v in &mut buf[off.ln_gain..off.ln_gain + h] {
                *v = T::one();
            }
            for v in &mut buf[off.scale_b..off.scale_b + h] {
                *v = T::one();
            }
            fill_gaussian(&mut buf, off.w1..off.w1 + h * h, (2.0 / h as f64).sqrt());
            fill_gaussian(&mut buf, off.w2..off.w2 + h * h, (1.0 / h as f64).sqrt());
        }
        // out_w, out_b stay zero.
        Ok(Self {
            cfg: cfg.clone(),
            buf,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn buffer(&self) -> &[T] {
        &self.buf
    }

    pub fn buffer_mut(&mut self) -> &mut [T] {
        &mut self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Replace the whole buffer (used by checkpoint loading and tests).
    pub fn from_buffer(cfg: &NetConfig, buf: Vec<T>) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        if buf.len() != layout.total {
            return Err(Error::Shape(format!(
                "buffer has {} values, layout needs {}",
                buf.len(),
                layout.total
            )));
        }
        Ok(Self {
            cfg: cfg.clone(),
            buf,
        })
    }
}

/// Per-sample intermediate activations retained for the backward pass.
struct Cache<T> {
    tau: Vec<T>,
    ut: Vec<T>,
    e: Vec<T>,
    x: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    h_final: Vec<T>,
}

struct BlockCache<T> {
    n: Vec<T>,
    inv: T,
    v: Vec<T>,
    gamma: Vec<T>,
    f: Vec<T>,
    p: Vec<T>,
    g: Vec<T>,
}

fn sinusoidal_embedding<T: Scalar>(t: T, e: usize) -> Vec<T> {
    let half = e / 2;
    let mut tau = Vec::with_capacity(e);
    for k in 0..half {
        let freq = if half > 1 {
            T::of(1000.0f64.powf(k as f64 / (half as f64 - 1.0)))
        } else {
            T::one()
        };
        tau.push((freq * t).sin());
        tau.push((freq * t).cos());
    }
    tau
}

fn forward_cached<T: Scalar>(params: &NetParams<T>, t: T, x: &[T]) -> (Vec<T>, Cache<T>) {
    let layout = Layout::new(&params.cfg);
    let (d, h, e) = (layout.d, layout.h, layout.e);
    let buf = &params.buf;

    let tau = sinusoidal_embedding(t, e);
    let mut ut = vec![T::zero(); e];
    matvec(&buf[layout.time_w..layout.time_w + e * e], e, e, &tau, &mut ut);
    vec_acc(&mut ut, &buf[layout.time_b..layout.time_b + e]);
    let emb: Vec<T> = ut.iter().map(|&v| gelu(v)).collect();

    let mut hid = vec![T::zero(); h];
    matvec(&buf[layout.in_w..layout.in_w + h * d], h, d, x, &mut hid);
    vec_acc(&mut hid, &buf[layout.in_b..layout.in_b + h]);

    let mut blocks = Vec::with_capacity(layout.blocks);
    for b in 0..layout.blocks {
        let off = layout.block(b);
        let mean = hid.iter().copied().sum::<T>() / T::of(h as f64);
        let var = hid
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<T>()
            / T::of(h as f64);
        let inv = (var + T::of(LN_EPS)).sqrt().recip();
        let n: Vec<T> = hid.iter().map(|&v| (v - mean) * inv).collect();
        let v: Vec<T> = n
            .iter()
            .zip(&buf[off.ln_gain..off.ln_gain + h])
            .zip(&buf[off.ln_bias..off.ln_bias + h])
            .map(|((&nj, &gj), &bj)| gj * nj + bj)
            .collect();

        let mut gamma = vec![T::zero(); h];
        matvec(&buf[off.scale_w..off.scale_w + h * e], h, e, &emb, &mut gamma);
        vec_acc(&mut gamma, &buf[off.scale_b..off.scale_b + h]);
        let mut delta = vec![T::zero(); h];
        matvec(&buf[off.shift_w..off.shift_w + h * e], h, e, &emb, &mut delta);
        vec_acc(&mut delta, &buf[off.shift_b..off.shift_b + h]);

        let f: Vec<T> = gamma
            .iter()
            .zip(&v)
            .zip(&delta)
            .map(|((&gj, &vj), &dj)| gj * vj + dj)
            .collect();

        let mut p = vec![T::zero(); h];
        matvec(&buf[off.w1..off.w1 + h * h], h, h, &f, &mut p);
        vec_acc(&mut p, &buf[off.b1..off.b1 + h]);
        let g: Vec<T> = p.iter().map(|&v| gelu(v)).collect();
        let mut q = vec![T::zero(); h];
        matvec(&buf[off.w2..off.w2 + h * h], h, h, &g, &mut q);
        vec_acc(&mut q, &buf[off.b2..off.b2 + h]);

        for (hj, qj) in hid.iter_mut().zip(&q) {
            *hj = *hj + *qj;
        }
        blocks.push(BlockCache {
            n,
            inv,
            v,
            gamma,
            f,
            p,
            g,
        });
    }

    let mut out = vec![T::zero(); d];
    matvec(&buf[layout.out_w..layout.out_w + d * h], d, h, &hid, &mut out);
    vec_acc(&mut out, &buf[layout.out_b..layout.out_b + d]);

    let cache = Cache {
        tau,
        ut,
        e: emb,
        x: x.to_vec(),
        blocks,
        h_final: hid,
    };
    (out, cache)
}

/// Evaluate s_θ(t, x) with t already scaled to [0,1].
pub fn forward<T: Scalar>(params: &NetParams<T>, t: T, x: &[T]) -> Result<Vec<T>> {
    if x.len() != params.cfg.input_dim {
        return Err(Error::Shape(format!(
            "input dim {} != configured {}",
            x.len(),
            params.cfg.input_dim
        )));
    }
    Ok(forward_cached(params, t, x).0)
}

/// One weighted regression sample for the loss
/// (1/N)·Σ_i Σ_j w_ij·(s_θ(t_i, x_i)_j − target_ij)².
#[derive(Debug, Clone)]
pub struct WeightedSample<T> {
    /// Time scaled to [0,1].
    pub t: T,
    pub x: Vec<T>,
    pub target: Vec<T>,
    pub weight: Vec<T>,
}

/// Reverse-mode gradient of the weighted mean squared error over a batch.
/// Returns (loss, gradient) with the gradient laid out like the parameter
/// buffer. Rejects non-finite inputs without touching any state.
pub fn backward<T: Scalar>(
    params: &NetParams<T>,
    batch: &[WeightedSample<T>],
) -> Result<(T, Vec<T>)> {
    if batch.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    let d = params.cfg.input_dim;
    for s in batch {
        if s.x.len() != d || s.target.len() != d || s.weight.len() != d {
            return Err(Error::Shape("batch sample dim mismatch".into()));
        }
        if !s.t.is_finite()
            || s.x.iter().any(|v| !v.is_finite())
            || s.target.iter().any(|v| !v.is_finite())
            || s.weight.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("batch contains non-finite values".into()));
        }
    }
    let layout = Layout::new(&params.cfg);
    let mut grad = vec![T::zero(); layout.total];
    let inv_n = T::one() / T::of(batch.len() as f64);
    let mut loss = T::zero();
    for sample in batch {
        let (out, cache) = forward_cached(params, sample.t, &sample.x);
        let mut dout = vec![T::zero(); d];
        for j in 0..d {
            let r = out[j] - sample.target[j];
            loss = loss + inv_n * sample.weight[j] * r * r;
            dout[j] = T::of(2.0) * inv_n * sample.weight[j] * r;
        }
        backward_sample(params, &layout, &cache, &dout, &mut grad);
    }
    Ok((loss, grad))
}

fn backward_sample<T: Scalar>(
    params: &NetParams<T>,
    layout: &Layout,
    cache: &Cache<T>,
    dout: &[T],
    grad: &mut [T],
) {
    let (d, h, e) = (layout.d, layout.h, layout.e);
    let buf = &params.buf;

    // Output projection.
    outer_acc(&mut grad[layout.out_w..layout.out_w + d * h], dout, &cache.h_final);
    vec_acc(&mut grad[layout.out_b..layout.out_b + d], dout);
    let mut dh = vec![T::zero(); h];
    matvec_transpose_acc(&buf[layout.out_w..layout.out_w + d * h], d, h, dout, &mut dh);

    let mut demb = vec![T::zero(); e];
    for b in (0..layout.blocks).rev() {
        let off = layout.block(b);
        let bc = &cache.blocks[b];

        // h_out = h_in + q; dq = dh, and dh also flows straight to h_in.
        let dq = dh.clone();
        outer_acc(&mut grad[off.w2..off.w2 + h * h], &dq, &bc.g);
        vec_acc(&mut grad[off.b2..off.b2 + h], &dq);
        let mut dg = vec![T::zero(); h];
        matvec_transpose_acc(&buf[off.w2..off.w2 + h * h], h, h, &dq, &mut dg);

        let dp: Vec<T> = dg
            .iter()
            .zip(&bc.p)
            .map(|(&dgj, &pj)| dgj * gelu_prime(pj))
            .collect();
        outer_acc(&mut grad[off.w1..off.w1 + h * h], &dp, &bc.f);
        vec_acc(&mut grad[off.b1..off.b1 + h], &dp);
        let mut df = vec![T::zero(); h];
        matvec_transpose_acc(&buf[off.w1..off.w1 + h * h], h, h, &dp, &mut df);

        // f = γ⊙v + δ.
        let dgamma: Vec<T> = df.iter().zip(&bc.v).map(|(&a, &b)| a * b).collect();
        let ddelta = df.clone();
        let dv: Vec<T> = df.iter().zip(&bc.gamma).map(|(&a, &b)| a * b).collect();
        outer_acc(&mut grad[off.scale_w..off.scale_w + h * e], &dgamma, &cache.e);
        vec_acc(&mut grad[off.scale_b..off.scale_b + h], &dgamma);
        matvec_transpose_acc(&buf[off.scale_w..off.scale_w + h * e], h, e, &dgamma, &mut demb);
        outer_acc(&mut grad[off.shift_w..off.shift_w + h * e], &ddelta, &cache.e);
        vec_acc(&mut grad[off.shift_b..off.shift_b + h], &ddelta);
        matvec_transpose_acc(&buf[off.shift_w..off.shift_w + h * e], h, e, &ddelta, &mut demb);

        // v = gain⊙n + bias.
        for j in 0..h {
            grad[off.ln_gain + j] = grad[off.ln_gain + j] + dv[j] * bc.n[j];
            grad[off.ln_bias + j] = grad[off.ln_bias + j] + dv[j];
        }
        let dn: Vec<T> = dv
            .iter()
            .zip(&buf[off.ln_gain..off.ln_gain + h])
            .map(|(&a, &g)| a * g)
            .collect();

        // LayerNorm: dh_in = inv·(dn − mean(dn) − n·mean(dn⊙n)).
        let hf = T::of(h as f64);
        let mean_dn = dn.iter().copied().sum::<T>() / hf;
        let mean_dn_n = dn
            .iter()
            .zip(&bc.n)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            / hf;
        for j in 0..h {
            dh[j] = dh[j] + bc.inv * (dn[j] - mean_dn - bc.n[j] * mean_dn_n);
        }
    }

    // Input projection.
    outer_acc(&mut grad[layout.in_w..layout.in_w + h * d], &dh, &cache.x);
    vec_acc(&mut grad[layout.in_b..layout.in_b + h], &dh);

    // Time MLP.
    let dut: Vec<T> = demb
        .iter()
        .zip(&cache.ut)
        .map(|(&a, &u)| a * gelu_prime(u))
        .collect();
    outer_acc(&mut grad[layout.time_w..layout.time_w + e * e], &dut, &cache.tau);
    vec_acc(&mut grad[layout.time_b..layout.time_b + e], &dut);
}

/// Adam moment accumulators.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    step: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(param_len: usize) -> Self {
        Self {
            m: vec![T::zero(); param_len],
            v: vec![T::zero(); param_len],
            step: 0,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[T], &[T]) {
        (&self.m, &self.v)
    }

    pub fn restore(m: Vec<T>, v: Vec<T>, step: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::Shape("moment buffers differ in length".into()));
        }
        Ok(Self {
            m,
            v,
            step,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
        })
    }
}

/// Bias-corrected Adam update, in place.
pub fn adam_step<T: Scalar>(
    params: &mut NetParams<T>,
    grads: &[T],
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    if grads.len() != params.buf.len() || state.m.len() != params.buf.len() {
        return Err(Error::Shape("gradient/state length mismatch".into()));
    }
    state.step += 1;
    let t = state.step;
    let b1 = state.beta1;
    let b2 = state.beta2;
    let corr1 = T::one() - b1.powi(t as i32);
    let corr2 = T::one() - b2.powi(t as i32);
    for i in 0..grads.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (T::one() - b1) * g;
        state.v[i] = b2 * state.v[i] + (T::one() - b2) * g * g;
        let m_hat = state.m[i] / corr1;
        let v_hat = state.v[i] / corr2;
        params.buf[i] = params.buf[i] - lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Persist parameters: a one-line JSON header with the configuration,
/// followed by one parameter per line in buffer order.
pub fn save_checkpoint<T: Scalar>(path: &std::path::Path, params: &NetParams<T>) -> Result<()> {
    use std::io::Write;
    let header = serde_json::to_string(&params.cfg)
        .map_err(|e| Error::Io(format!("checkpoint header: {e}")))?;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for v in &params.buf {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Load parameters written by [`save_checkpoint`].
pub fn load_checkpoint<T: Scalar>(path: &std::path::Path) -> Result<NetParams<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty checkpoint".into()))?;
    let cfg: NetConfig = serde_json::from_str(header)
        .map_err(|e| Error::Io(format!("checkpoint header: {e}")))?;
    let mut buf = Vec::with_capacity(param_count(&cfg));
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let v = line
            .parse::<T>()
            .map_err(|_| Error::Io(format!("bad parameter value: {line}")))?;
        buf.push(v);
    }
    NetParams::from_buffer(&cfg, buf)
}

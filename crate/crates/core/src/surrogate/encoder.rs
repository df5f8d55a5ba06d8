//! Encoder forward pass with activation caching, and its reverse pass.

use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{acc_a_bt, acc_at_b, acc_colsum, affine, axpy, dot, layer_norm, layer_norm_backward, softmax};
use super::{LayerSpans, NormPlacement, SurrogateModel};
use crate::codec::SparseSequence;

/// Small enough that normalized rows have unit variance to well within
/// 1e-6 for any non-degenerate hidden state.
pub const LAYER_NORM_EPS: f64 = 1e-9;

/// `PE[p, 2i] = sin(p / 10000^(2i/d))`, `PE[p, 2i+1] = cos(...)`.
pub(super) fn sinusoidal_table(max_len: usize, d: usize) -> Vec<f64> {
    let mut pe = vec![0.0; max_len * d];
    for p in 0..max_len {
        for c in 0..d {
            let i = (c / 2) as f64;
            let angle = p as f64 / libm::pow(10000.0, 2.0 * i / d as f64);
            pe[p * d + c] = if c % 2 == 0 { libm::sin(angle) } else { libm::cos(angle) };
        }
    }
    pe
}

pub(super) struct Norm {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    out: Vec<f64>,
}

impl Norm {
    fn apply(x: &[f64], d: usize, gain: &[f64], bias: &[f64]) -> Norm {
        let rows = x.len() / d;
        let mut n = Norm {
            xhat: vec![0.0; x.len()],
            inv_std: vec![0.0; rows],
            out: vec![0.0; x.len()],
        };
        layer_norm(x, d, gain, bias, LAYER_NORM_EPS, &mut n.xhat, &mut n.inv_std, &mut n.out);
        n
    }

    fn backward(&self, dy: &[f64], d: usize, gain: &[f64], grads: &mut [f64], g_span: super::Span, b_span: super::Span) -> Vec<f64> {
        let mut dx = vec![0.0; dy.len()];
        let mut dgain = vec![0.0; d];
        let mut dbias = vec![0.0; d];
        layer_norm_backward(dy, d, &self.xhat, &self.inv_std, gain, &mut dgain, &mut dbias, &mut dx);
        axpy(1.0, &dgain, g_span.of_mut(grads));
        axpy(1.0, &dbias, b_span.of_mut(grads));
        dx
    }
}

pub(super) struct LayerCache {
    /// Tensor fed to the Q/K/V projections.
    attn_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `heads × L × L` attention probabilities.
    pub(super) probs: Vec<f64>,
    ctx: Vec<f64>,
    norm_a: Norm,
    /// Tensor fed to the feed-forward block.
    ff_in: Vec<f64>,
    pre_act: Vec<f64>,
    act: Vec<f64>,
    norm_b: Norm,
}

pub(super) struct Pass {
    pub(super) logit: f64,
    pub(super) layers: Vec<LayerCache>,
    last_hidden: Vec<f64>,
}

pub(super) fn forward(m: &SurrogateModel, seq: &SparseSequence, keep: bool) -> Pass {
    let c = &m.config;
    let p = &m.params;
    let (d, l) = (c.d_model, seq.len());

    // Sparse input projection plus position encoding.
    let w_in = m.layout.input_w.of(p);
    let b_in = m.layout.input_b.of(p);
    let mut h = vec![0.0; l * d];
    for (r, (row, &pos)) in seq.rows.iter().zip(&seq.positions).enumerate() {
        let out = &mut h[r * d..(r + 1) * d];
        out.copy_from_slice(b_in);
        for &(j, x) in row {
            axpy(x, &w_in[j * d..(j + 1) * d], out);
        }
        axpy(1.0, &m.positional[pos * d..(pos + 1) * d], out);
    }

    let mut layers = Vec::with_capacity(if keep { c.n_layers } else { 0 });
    for spans in &m.layout.layers {
        let (next, cache) = layer_forward(m, spans, h, l);
        h = next;
        if keep {
            layers.push(cache);
        }
    }
    let last = &h[(l - 1) * d..l * d];
    let logit = dot(last, m.layout.readout_w.of(p)) + m.layout.readout_b.of(p)[0];
    Pass {
        logit,
        layers,
        last_hidden: last.to_vec(),
    }
}

fn layer_forward(m: &SurrogateModel, s: &LayerSpans, h: Vec<f64>, l: usize) -> (Vec<f64>, LayerCache) {
    let c = &m.config;
    let p = &m.params;
    let (d, f) = (c.d_model, c.d_ff);
    let post = c.norm_placement == NormPlacement::Post;

    let (attn_in, pre_norm_a) = if post {
        (h.clone(), None)
    } else {
        let n = Norm::apply(&h, d, s.ln1_gain.of(p), s.ln1_bias.of(p));
        (n.out.clone(), Some(n))
    };
    let (q, k, v, probs, ctx, o) = attention(m, s, &attn_in, l);

    // residual around attention
    let mut mid = h;
    axpy(1.0, &o, &mut mid);
    let norm_a = match pre_norm_a {
        Some(n) => n,
        None => {
            let n = Norm::apply(&mid, d, s.ln1_gain.of(p), s.ln1_bias.of(p));
            mid.copy_from_slice(&n.out);
            n
        }
    };

    let (ff_in, pre_norm_b) = if post {
        (mid.clone(), None)
    } else {
        let n = Norm::apply(&mid, d, s.ln2_gain.of(p), s.ln2_bias.of(p));
        (n.out.clone(), Some(n))
    };
    let mut pre_act = vec![0.0; l * f];
    affine(&ff_in, l, d, s.w1.of(p), f, s.b1.of(p), &mut pre_act);
    let act: Vec<f64> = pre_act.iter().map(|x| x.max(0.0)).collect();
    let mut g = vec![0.0; l * d];
    affine(&act, l, f, s.w2.of(p), d, s.b2.of(p), &mut g);

    let mut out = mid;
    axpy(1.0, &g, &mut out);
    let norm_b = match pre_norm_b {
        Some(n) => n,
        None => {
            let n = Norm::apply(&out, d, s.ln2_gain.of(p), s.ln2_bias.of(p));
            out.copy_from_slice(&n.out);
            n
        }
    };
    let cache = LayerCache {
        attn_in,
        q,
        k,
        v,
        probs,
        ctx,
        norm_a,
        ff_in,
        pre_act,
        act,
        norm_b,
    };
    (out, cache)
}

type AttentionOut = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn attention(m: &SurrogateModel, s: &LayerSpans, x: &[f64], l: usize) -> AttentionOut {
    let c = &m.config;
    let p = &m.params;
    let (d, heads, dh) = (c.d_model, c.n_heads, c.head_dim());
    let scale = 1.0 / libm::sqrt(dh as f64);
    let mut q = vec![0.0; l * d];
    let mut k = vec![0.0; l * d];
    let mut v = vec![0.0; l * d];
    affine(x, l, d, s.wq.of(p), d, s.bq.of(p), &mut q);
    affine(x, l, d, s.wk.of(p), d, s.bk.of(p), &mut k);
    affine(x, l, d, s.wv.of(p), d, s.bv.of(p), &mut v);

    let mut probs = vec![0.0; heads * l * l];
    let mut ctx = vec![0.0; l * d];
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let a = &mut probs[h * l * l..(h + 1) * l * l];
        for i in 0..l {
            let qi = &q[i * d..][cols.clone()];
            let row = &mut a[i * l..(i + 1) * l];
            for (j, sc) in row.iter_mut().enumerate() {
                *sc = scale * dot(qi, &k[j * d..][cols.clone()]);
            }
            softmax(row);
            let out = &mut ctx[i * d..][cols.clone()];
            for (j, &w) in row.iter().enumerate() {
                axpy(w, &v[j * d..][cols.clone()], out);
            }
        }
    }
    let mut o = vec![0.0; l * d];
    affine(&ctx, l, d, s.wo.of(p), d, s.bo.of(p), &mut o);
    (q, k, v, probs, ctx, o)
}

/// Accumulates `dlogit · ∂logit/∂θ` into `grads`.
pub(super) fn backward(m: &SurrogateModel, seq: &SparseSequence, pass: &Pass, dlogit: f64, grads: &mut [f64]) {
    let c = &m.config;
    let p = &m.params;
    let (d, l) = (c.d_model, seq.len());

    axpy(dlogit, &pass.last_hidden, m.layout.readout_w.of_mut(grads));
    m.layout.readout_b.of_mut(grads)[0] += dlogit;
    let mut dh = vec![0.0; l * d];
    axpy(dlogit, m.layout.readout_w.of(p), &mut dh[(l - 1) * d..]);

    for (spans, cache) in m.layout.layers.iter().zip(&pass.layers).rev() {
        dh = layer_backward(m, spans, cache, dh, l, grads);
    }

    let gw = m.layout.input_w.of_mut(grads);
    for (r, row) in seq.rows.iter().enumerate() {
        let dr = &dh[r * d..(r + 1) * d];
        for &(j, x) in row {
            axpy(x, dr, &mut gw[j * d..(j + 1) * d]);
        }
    }
    acc_colsum(&dh, d, m.layout.input_b.of_mut(grads));
}

fn layer_backward(m: &SurrogateModel, s: &LayerSpans, cache: &LayerCache, dout: Vec<f64>, l: usize, grads: &mut [f64]) -> Vec<f64> {
    let c = &m.config;
    let p = &m.params;
    let d = c.d_model;
    let post = c.norm_placement == NormPlacement::Post;

    // Through the feed-forward residual block to d(mid).
    let dmid = if post {
        let dr2 = cache.norm_b.backward(&dout, d, s.ln2_gain.of(p), grads, s.ln2_gain, s.ln2_bias);
        let mut dmid = ff_backward(m, s, cache, &dr2, l, grads);
        axpy(1.0, &dr2, &mut dmid);
        dmid
    } else {
        let dn2 = ff_backward(m, s, cache, &dout, l, grads);
        let mut dmid = cache.norm_b.backward(&dn2, d, s.ln2_gain.of(p), grads, s.ln2_gain, s.ln2_bias);
        axpy(1.0, &dout, &mut dmid);
        dmid
    };

    // Through the attention residual block to d(input).
    if post {
        let dr1 = cache.norm_a.backward(&dmid, d, s.ln1_gain.of(p), grads, s.ln1_gain, s.ln1_bias);
        let mut dh = attention_backward(m, s, cache, &dr1, l, grads);
        axpy(1.0, &dr1, &mut dh);
        dh
    } else {
        let dn1 = attention_backward(m, s, cache, &dmid, l, grads);
        let mut dh = cache.norm_a.backward(&dn1, d, s.ln1_gain.of(p), grads, s.ln1_gain, s.ln1_bias);
        axpy(1.0, &dmid, &mut dh);
        dh
    }
}

/// Given d(ff output), returns d(ff input).
fn ff_backward(m: &SurrogateModel, s: &LayerSpans, cache: &LayerCache, dg: &[f64], l: usize, grads: &mut [f64]) -> Vec<f64> {
    let p = &m.params;
    let (d, f) = (m.config.d_model, m.config.d_ff);
    acc_at_b(&cache.act, l, f, dg, d, s.w2.of_mut(grads));
    acc_colsum(dg, d, s.b2.of_mut(grads));
    let mut dpre = vec![0.0; l * f];
    acc_a_bt(dg, l, d, s.w2.of(p), f, &mut dpre);
    for (g, &z) in dpre.iter_mut().zip(&cache.pre_act) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    acc_at_b(&cache.ff_in, l, d, &dpre, f, s.w1.of_mut(grads));
    acc_colsum(&dpre, f, s.b1.of_mut(grads));
    let mut dx = vec![0.0; l * d];
    acc_a_bt(&dpre, l, f, s.w1.of(p), d, &mut dx);
    dx
}

/// Given d(attention output), returns d(attention input).
fn attention_backward(m: &SurrogateModel, s: &LayerSpans, cache: &LayerCache, do_: &[f64], l: usize, grads: &mut [f64]) -> Vec<f64> {
    let p = &m.params;
    let c = &m.config;
    let (d, heads, dh) = (c.d_model, c.n_heads, c.head_dim());
    let scale = 1.0 / libm::sqrt(dh as f64);

    acc_at_b(&cache.ctx, l, d, do_, d, s.wo.of_mut(grads));
    acc_colsum(do_, d, s.bo.of_mut(grads));
    let mut dctx = vec![0.0; l * d];
    acc_a_bt(do_, l, d, s.wo.of(p), d, &mut dctx);

    let mut dq = vec![0.0; l * d];
    let mut dk = vec![0.0; l * d];
    let mut dv = vec![0.0; l * d];
    let mut da = vec![0.0; l];
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let a = &cache.probs[h * l * l..(h + 1) * l * l];
        for i in 0..l {
            let dci = &dctx[i * d..][cols.clone()];
            let arow = &a[i * l..(i + 1) * l];
            // ctx_i = Σ_j a_ij v_j
            for j in 0..l {
                da[j] = dot(dci, &cache.v[j * d..][cols.clone()]);
                axpy(arow[j], dci, &mut dv[j * d..][cols.clone()]);
            }
            // softmax: ds_j = a_j (da_j - Σ_k a_k da_k)
            let centre = dot(arow, &da);
            let qi = &cache.q[i * d..][cols.clone()];
            for j in 0..l {
                let ds = arow[j] * (da[j] - centre) * scale;
                if ds != 0.0 {
                    axpy(ds, &cache.k[j * d..][cols.clone()], &mut dq[i * d..][cols.clone()]);
                    axpy(ds, qi, &mut dk[j * d..][cols.clone()]);
                }
            }
        }
    }

    let mut dx = vec![0.0; l * d];
    for (dproj, w, b) in [(&dq, s.wq, s.bq), (&dk, s.wk, s.bk), (&dv, s.wv, s.bv)] {
        acc_at_b(&cache.attn_in, l, d, dproj, d, w.of_mut(grads));
        acc_colsum(dproj, d, b.of_mut(grads));
        acc_a_bt(dproj, l, d, w.of(p), d, &mut dx);
    }
    dx
}

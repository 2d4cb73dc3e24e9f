//! Forward-only dense building blocks with seeded weights.
//!
//! Activations are row-major `rows × dim` slices of `f64`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `[out][in]`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    /// Uniform in `±gain/√in_dim`; biases drawn from the same range.
    pub fn seeded(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize, gain: f64) -> Self {
        let bound = gain / (in_dim as f64).sqrt();
        let weight = (0..in_dim * out_dim).map(|_| rng.gen_range(-bound..bound)).collect();
        let bias = (0..out_dim).map(|_| rng.gen_range(-bound..bound) * 0.1).collect();
        Self {
            in_dim,
            out_dim,
            weight,
            bias,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len() % self.in_dim, 0);
        let rows = x.len() / self.in_dim;
        let mut out = Vec::with_capacity(rows * self.out_dim);
        for row in x.chunks_exact(self.in_dim) {
            for o in 0..self.out_dim {
                let w = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                out.push(dot(w, row) + self.bias[o]);
            }
        }
        out
    }
}

/// Dot product with four independent partial sums, so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        let (x, y): (&[f64; 4], &[f64; 4]) = (x.try_into().unwrap(), y.try_into().unwrap());
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Parameter-free layer normalization of each row.
pub fn layer_norm(x: &[f64], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks_exact(dim) {
        let mean = row.iter().sum::<f64>() / dim as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dim as f64;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        out.extend(row.iter().map(|v| (v - mean) * inv));
    }
    out
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (0.797_884_560_802_865_4 * (x + 0.044_715 * x * x * x)).tanh())
}

pub fn add_in_place(x: &mut [f64], y: &[f64]) {
    for (a, b) in x.iter_mut().zip(y) {
        *a += b;
    }
}

/// Multi-head scaled dot-product attention of `queries` over `keys` /
/// `values`, all already projected. `allowed(q, k)` masks individual pairs;
/// every query must be allowed at least one key.
pub fn multi_head_attention(
    queries: &[f64],
    keys: &[f64],
    values: &[f64],
    dim: usize,
    heads: usize,
    mut allowed: impl FnMut(usize, usize) -> bool,
) -> Vec<f64> {
    let head_dim = dim / heads;
    let scale = 1.0 / (head_dim as f64).sqrt();
    let nq = queries.len() / dim;
    let nk = keys.len() / dim;
    let mut out = vec![0.0; nq * dim];
    let mut scores = vec![0.0; nk];
    for q in 0..nq {
        for h in 0..heads {
            let qv = &queries[q * dim + h * head_dim..q * dim + (h + 1) * head_dim];
            let mut max = f64::NEG_INFINITY;
            for (k, s) in scores.iter_mut().enumerate() {
                if !allowed(q, k) {
                    *s = f64::NEG_INFINITY;
                    continue;
                }
                let kv = &keys[k * dim + h * head_dim..k * dim + (h + 1) * head_dim];
                *s = qv.iter().zip(kv).map(|(a, b)| a * b).sum::<f64>() * scale;
                max = max.max(*s);
            }
            let mut denom = 0.0;
            for s in scores.iter_mut() {
                *s = if s.is_finite() { (*s - max).exp() } else { 0.0 };
                denom += *s;
            }
            let o = &mut out[q * dim + h * head_dim..q * dim + (h + 1) * head_dim];
            for (k, &s) in scores.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                let w = s / denom;
                let vv = &values[k * dim + h * head_dim..k * dim + (h + 1) * head_dim];
                for (a, b) in o.iter_mut().zip(vv) {
                    *a += w * b;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

impl AttentionWeights {
    /// Keys and values may come from a source of width `kv_dim`.
    pub fn seeded(rng: &mut ChaCha8Rng, dim: usize, kv_dim: usize) -> Self {
        Self {
            query: Linear::seeded(rng, dim, dim, 1.0),
            key: Linear::seeded(rng, kv_dim, dim, 1.0),
            value: Linear::seeded(rng, kv_dim, dim, 1.0),
            output: Linear::seeded(rng, dim, dim, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

impl Mlp {
    pub fn seeded(rng: &mut ChaCha8Rng, dim: usize, hidden: usize, out: usize) -> Self {
        Self {
            fc1: Linear::seeded(rng, dim, hidden, 1.0),
            fc2: Linear::seeded(rng, hidden, out, 0.5),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.fc1.forward(x);
        h.iter_mut().for_each(|v| *v = gelu(*v));
        self.fc2.forward(&h)
    }
}

/// Pre-norm transformer block: `x += Attn(LN x)`, optional
/// `x += CrossAttn(LN x, ctx)`, then `x += MLP(LN x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub heads: usize,
    pub attention: AttentionWeights,
    pub cross: Option<AttentionWeights>,
    pub mlp: Mlp,
}

impl Block {
    pub fn seeded(rng: &mut ChaCha8Rng, dim: usize, heads: usize, cross_dim: Option<usize>) -> Self {
        Self {
            dim,
            heads,
            attention: AttentionWeights::seeded(rng, dim, dim),
            cross: cross_dim.map(|c| AttentionWeights::seeded(rng, dim, c)),
            mlp: Mlp::seeded(rng, dim, 2 * dim, dim),
        }
    }

    /// Self-attention restricted to groups of `group` consecutive rows.
    pub fn forward_grouped(&self, x: &mut [f64], group: usize, context: Option<&[f64]>) {
        let d = self.dim;
        let h = layer_norm(x, d);
        let q = self.attention.query.forward(&h);
        let k = self.attention.key.forward(&h);
        let v = self.attention.value.forward(&h);
        let attn = multi_head_attention(&q, &k, &v, d, self.heads, |qi, ki| qi / group == ki / group);
        add_in_place(x, &self.attention.output.forward(&attn));
        self.finish(x, context);
    }

    /// Cross-attention (when present) and the MLP half of the block.
    pub fn finish(&self, x: &mut [f64], context: Option<&[f64]>) {
        let d = self.dim;
        if let (Some(cross), Some(ctx)) = (&self.cross, context) {
            let h = layer_norm(x, d);
            let q = cross.query.forward(&h);
            let k = cross.key.forward(ctx);
            let v = cross.value.forward(ctx);
            let attn = multi_head_attention(&q, &k, &v, d, self.heads, |_, _| true);
            add_in_place(x, &cross.output.forward(&attn));
        }
        let h = layer_norm(x, d);
        add_in_place(x, &self.mlp.forward(&h));
    }
}

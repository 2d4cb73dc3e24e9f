//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamsplat::streamformer::{CachePolicy, Decoder, ModelProfile, Retention, ViewTokens};

/// Seeded token grid for one view, `tokens × d`.
pub fn random_view(rng: &mut ChaCha8Rng, grid: (usize, usize), d: usize) -> ViewTokens {
    let tokens = grid.0 * grid.1 + 1;
    ViewTokens {
        grid_width: grid.0,
        grid_height: grid.1,
        dim: d,
        data: (0..tokens * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

pub fn random_stream(seed: u64, views: usize, grid: (usize, usize), d: usize) -> Vec<ViewTokens> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..views).map(|_| random_view(&mut rng, grid, d)).collect()
}

/// Chunk boundaries: a first chunk of 8, then chunks of `n`, the last one
/// possibly short.
pub fn chunks(views: usize, n: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = vec![0..views.min(8)];
    let mut start = 8;
    while start < views {
        out.push(start..(start + n).min(views));
        start += n;
    }
    out
}

/// Streams `views` through the chunked decoder with `policy`.
pub fn stream_decode(decoder: &Decoder, views: &[ViewTokens], n: usize, policy: CachePolicy) -> Vec<Vec<f64>> {
    let mut cache = decoder.new_cache(policy);
    let mut out = Vec::new();
    for r in chunks(views.len(), n) {
        for v in decoder.decode_chunk(&views[r], &mut cache).unwrap() {
            out.push(v.data);
        }
    }
    out
}

fn ln(row: &[f64]) -> Vec<f64> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    row.iter().map(|x| (x - mean) / (var + 1e-5).sqrt()).collect()
}

fn rows(x: &[f64], d: usize) -> Vec<Vec<f64>> {
    x.chunks(d).map(<[f64]>::to_vec).collect()
}

/// Softmax attention of one query over an explicit key list, per head.
fn attend(q: &[f64], keys: &[&[f64]], values: &[&[f64]], heads: usize) -> Vec<f64> {
    let d = q.len();
    let hd = d / heads;
    let mut out = vec![0.0; d];
    for h in 0..heads {
        let r = h * hd..(h + 1) * hd;
        let logits: Vec<f64> = keys
            .iter()
            .map(|k| q[r.clone()].iter().zip(&k[r.clone()]).map(|(a, b)| a * b).sum::<f64>() / (hd as f64).sqrt())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        for (wi, v) in w.iter().zip(values) {
            for (o, x) in out[r.clone()].iter_mut().zip(&v[r.clone()]) {
                *o += wi / z * x;
            }
        }
    }
    out
}

/// Dense reference: all views decoded at once, layer by layer, with the
/// cache expressed as an attention mask over plain and marked keys.
///
/// A query of chunk `c` sees the plain keys of chunk `c`; at a cached layer
/// it also sees the retained views of every earlier chunk, through keys and
/// values computed from `LN(x) + register` when retention is selective.
pub fn dense_decode(decoder: &Decoder, views: &[ViewTokens], n: usize, policy: CachePolicy) -> Vec<Vec<f64>> {
    let p: &ModelProfile = &decoder.profile;
    let d = p.d_model;
    let t = views[0].token_count();
    let ranges = chunks(views.len(), n);
    let chunk_of: Vec<usize> = (0..views.len())
        .map(|v| ranges.iter().position(|r| r.contains(&v)).unwrap())
        .collect();
    let selective = policy.retention == Retention::Selective;
    let retained: Vec<bool> = (0..views.len())
        .map(|v| !selective || chunk_of[v] == 0 || v + 1 == ranges[chunk_of[v]].end)
        .collect();
    let first_cached = if policy.truncate_early_layers {
        p.layer_pairs - p.cached_global_layers
    } else {
        0
    };

    let mut x: Vec<Vec<f64>> = views.iter().flat_map(|v| rows(&v.data, d)).collect();
    let view_of = |row: usize| row / t;
    for layer in 0..p.layer_pairs {
        // Frame attention: tokens of the same view only.
        let b = &decoder.frame_blocks[layer];
        let h: Vec<f64> = x.iter().flat_map(|r| ln(r)).collect();
        let (q, k, v) = (
            rows(&b.attention.query.forward(&h), d),
            rows(&b.attention.key.forward(&h), d),
            rows(&b.attention.value.forward(&h), d),
        );
        let attn: Vec<f64> = (0..x.len())
            .flat_map(|i| {
                let js: Vec<usize> = (0..x.len()).filter(|&j| view_of(j) == view_of(i)).collect();
                let ks: Vec<&[f64]> = js.iter().map(|&j| k[j].as_slice()).collect();
                let vs: Vec<&[f64]> = js.iter().map(|&j| v[j].as_slice()).collect();
                attend(&q[i], &ks, &vs, b.heads)
            })
            .collect();
        residual(&mut x, &b.attention.output.forward(&attn), d);
        mlp_half(b, &mut x, d);

        // Global attention with the cache mask.
        let b = &decoder.global_blocks[layer];
        let h: Vec<f64> = x.iter().flat_map(|r| ln(r)).collect();
        let marked: Vec<f64> = h
            .chunks(d)
            .flat_map(|r| r.iter().zip(&decoder.register).map(|(a, g)| a + g).collect::<Vec<_>>())
            .collect();
        let (q, k, v) = (
            rows(&b.attention.query.forward(&h), d),
            rows(&b.attention.key.forward(&h), d),
            rows(&b.attention.value.forward(&h), d),
        );
        let src = if selective { &marked } else { &h };
        let km = rows(&b.attention.key.forward(src), d);
        let vm = rows(&b.attention.value.forward(src), d);
        let cached = layer >= first_cached;
        let attn: Vec<f64> = (0..x.len())
            .flat_map(|i| {
                let c = chunk_of[view_of(i)];
                let mut ks: Vec<&[f64]> = Vec::new();
                let mut vs: Vec<&[f64]> = Vec::new();
                if cached {
                    for j in (0..x.len()).filter(|&j| chunk_of[view_of(j)] < c && retained[view_of(j)]) {
                        ks.push(&km[j]);
                        vs.push(&vm[j]);
                    }
                }
                for j in (0..x.len()).filter(|&j| chunk_of[view_of(j)] == c) {
                    ks.push(&k[j]);
                    vs.push(&v[j]);
                }
                attend(&q[i], &ks, &vs, b.heads)
            })
            .collect();
        residual(&mut x, &b.attention.output.forward(&attn), d);
        mlp_half(b, &mut x, d);
    }
    x.chunks(t)
        .map(|view| view.iter().flat_map(|r| ln(r)).collect())
        .collect()
}

fn residual(x: &mut [Vec<f64>], y: &[f64], d: usize) {
    for (r, add) in x.iter_mut().zip(y.chunks(d)) {
        r.iter_mut().zip(add).for_each(|(a, b)| *a += b);
    }
}

fn mlp_half(b: &streamsplat::streamformer::layers::Block, x: &mut [Vec<f64>], d: usize) {
    let h: Vec<f64> = x.iter().flat_map(|r| ln(r)).collect();
    residual(x, &b.mlp.forward(&h), d);
}

/// Largest `|a − b| / max(|b|, 1)` over all entries.
pub fn max_relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs() / q.abs().max(1.0)))
        .fold(0.0, f64::max)
}

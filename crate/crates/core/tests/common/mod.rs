#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdfusion::{Image, ParamSet, Tensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::new(h, w, (0..h * w).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// `‖ad − fd‖∞ / ‖fd‖∞`.
pub fn rel(ad: &[f64], fd: &[f64]) -> f64 {
    let diff = ad.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` at `x` in every coordinate.
pub fn central_diff(x: &[f64], eps: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut y = x.to_vec();
            y[k] = x[k] + eps;
            let up = f(&y);
            y[k] = x[k] - eps;
            (up - f(&y)) / (2.0 * eps)
        })
        .collect()
}

pub fn flat(ts: &[Tensor]) -> Vec<f64> {
    ts.iter().flat_map(|t| t.data().iter().copied()).collect()
}

pub fn tensor_like(t: &Tensor, data: &[f64]) -> Tensor {
    Tensor::new(t.shape().to_vec(), data.to_vec()).unwrap()
}

pub fn same_bits(a: &ParamSet, b: &ParamSet) -> bool {
    a.to_le_bytes() == b.to_le_bytes()
}

//! Raw slice kernels behind the tape ops. Shapes are validated by the callers.

use crate::exec;

/// Valid (no padding) 2-D cross-correlation.
///
/// `x` is `[c, h, w]`, `k` is `[o, c, kh, kw]`, result is `[o, h - kh + 1, w - kw + 1]`.
pub fn conv_valid(x: &[f64], xs: [usize; 3], k: &[f64], ks: [usize; 4]) -> Vec<f64> {
    let [c, h, w] = xs;
    let [o, _, kh, kw] = ks;
    let (oh, ow) = (h + 1 - kh, w + 1 - kw);
    let mut y = vec![0.0; o * oh * ow];
    exec::for_each_chunk(&mut y, oh * ow, |oc, plane| {
        for ci in 0..c {
            for u in 0..kh {
                for v in 0..kw {
                    let wv = k[((oc * c + ci) * kh + u) * kw + v];
                    for i in 0..oh {
                        let src = &x[(ci * h + i + u) * w + v..][..ow];
                        let dst = &mut plane[i * ow..][..ow];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    });
    y
}

/// Adjoint of [`conv_valid`] with respect to its input.
///
/// `g` is `[o, oh, ow]`, result is `[c, oh + kh - 1, ow + kw - 1]`.
pub fn conv_input_grad(g: &[f64], gs: [usize; 3], k: &[f64], ks: [usize; 4]) -> Vec<f64> {
    let [o, oh, ow] = gs;
    let [_, c, kh, kw] = ks;
    let (h, w) = (oh + kh - 1, ow + kw - 1);
    let mut dx = vec![0.0; c * h * w];
    exec::for_each_chunk(&mut dx, h * w, |ci, plane| {
        for oc in 0..o {
            for u in 0..kh {
                for v in 0..kw {
                    let wv = k[((oc * c + ci) * kh + u) * kw + v];
                    for i in 0..oh {
                        let src = &g[(oc * oh + i) * ow..][..ow];
                        let dst = &mut plane[(i + u) * w + v..][..ow];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    });
    dx
}

/// Adjoint of [`conv_valid`] with respect to its kernel.
///
/// `x` is `[c, h, w]`, `g` is `[o, oh, ow]`, result is `[o, c, h - oh + 1, w - ow + 1]`.
pub fn conv_weight_grad(x: &[f64], xs: [usize; 3], g: &[f64], gs: [usize; 3]) -> Vec<f64> {
    let [c, h, w] = xs;
    let [o, oh, ow] = gs;
    let (kh, kw) = (h + 1 - oh, w + 1 - ow);
    let mut dk = vec![0.0; o * c * kh * kw];
    exec::for_each_chunk(&mut dk, c * kh * kw, |oc, block| {
        for ci in 0..c {
            for u in 0..kh {
                for v in 0..kw {
                    let mut acc = 0.0;
                    for i in 0..oh {
                        let xs = &x[(ci * h + i + u) * w + v..][..ow];
                        let gs = &g[(oc * oh + i) * ow..][..ow];
                        acc += xs.iter().zip(gs).map(|(a, b)| a * b).sum::<f64>();
                    }
                    block[(ci * kh + u) * kw + v] = acc;
                }
            }
        }
    });
    dk
}

/// Mirror index for padding; valid while the overshoot is below `n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Reflect padding (edge sample not repeated) of every channel plane.
pub fn pad_reflect(x: &[f64], xs: [usize; 3], p: usize) -> Vec<f64> {
    let [c, h, w] = xs;
    let (ph, pw) = (h + 2 * p, w + 2 * p);
    let mut y = vec![0.0; c * ph * pw];
    for ci in 0..c {
        for i in 0..ph {
            let si = reflect(i as isize - p as isize, h);
            for j in 0..pw {
                let sj = reflect(j as isize - p as isize, w);
                y[(ci * ph + i) * pw + j] = x[(ci * h + si) * w + sj];
            }
        }
    }
    y
}

/// Adjoint of [`pad_reflect`]: folds the padded border back onto its sources.
pub fn pad_reflect_adjoint(g: &[f64], xs: [usize; 3], p: usize) -> Vec<f64> {
    let [c, h, w] = xs;
    let (ph, pw) = (h + 2 * p, w + 2 * p);
    let mut y = vec![0.0; c * h * w];
    for ci in 0..c {
        for i in 0..ph {
            let si = reflect(i as isize - p as isize, h);
            for j in 0..pw {
                let sj = reflect(j as isize - p as isize, w);
                y[(ci * h + si) * w + sj] += g[(ci * ph + i) * pw + j];
            }
        }
    }
    y
}

/// Per-pixel softmax across the channel axis of `[c, hw]`.
pub fn softmax_channels(x: &[f64], c: usize, hw: usize) -> Vec<f64> {
    let mut y = vec![0.0; c * hw];
    for p in 0..hw {
        let m = (0..c).map(|k| x[k * hw + p]).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for k in 0..c {
            let e = (x[k * hw + p] - m).exp();
            y[k * hw + p] = e;
            z += e;
        }
        for k in 0..c {
            y[k * hw + p] /= z;
        }
    }
    y
}

/// Mean over pixels of `logsumexp(x[:, p]) - x[label_p, p]`.
pub fn cross_entropy(x: &[f64], c: usize, hw: usize, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (p, &label) in labels.iter().enumerate().take(hw) {
        let m = (0..c).map(|k| x[k * hw + p]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..c).map(|k| (x[k * hw + p] - m).exp()).sum();
        total += m + z.ln() - x[label * hw + p];
    }
    total / hw as f64
}

/// Row-major `[m, k] x [k, n]`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut y[i * n..][..n];
        for t in 0..k {
            let av = a[i * k + t];
            for (d, s) in row.iter_mut().zip(&b[t * n..][..n]) {
                *d += av * s;
            }
        }
    }
    y
}

pub fn transpose(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            y[j * m + i] = a[i * n + j];
        }
    }
    y
}

//! Direct transcriptions of the six metric definitions, written without
//! reference to the library code, and the random triples they are compared on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdfusion::metrics;
use tdfusion::Image;

/// Per-metric tolerance against the references, in report order.
pub const TOL: [f64; 6] = [1e-6, 1e-6, 1e-6, 1e-3, 1e-3, 1e-6];

fn noise(h: usize, w: usize, r: &mut ChaCha8Rng) -> Image {
    Image::new(h, w, (0..h * w).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap()
}

pub fn px(img: &Image) -> Vec<Vec<f64>> {
    (0..img.height())
        .map(|i| (0..img.width()).map(|j| img.get(i, j)).collect())
        .collect()
}

fn mirror(i: i64, n: i64) -> usize {
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    r as usize
}

// Index loops mirror the formulas.
#[allow(clippy::needless_range_loop)]
pub mod reference {
    use super::mirror;
    use std::f64::consts::PI;

    pub fn entropy(x: &[Vec<f64>]) -> f64 {
        let mut bins = vec![0.0f64; 256];
        let mut n = 0.0f64;
        for row in x {
            for &v in row {
                let level = (v * 255.0).round().clamp(0.0, 255.0) as usize;
                bins[level] += 1.0;
                n += 1.0;
            }
        }
        let mut h = 0.0;
        for c in bins {
            if c > 0.0 {
                h -= (c / n) * (c / n).ln() / 2f64.ln();
            }
        }
        h
    }

    pub fn sf(x: &[Vec<f64>]) -> f64 {
        let (h, w) = (x.len(), x[0].len());
        let mut rf = Vec::new();
        let mut cf = Vec::new();
        for i in 0..h {
            for j in 1..w {
                rf.push((x[i][j] - x[i][j - 1]).powi(2));
            }
        }
        for i in 1..h {
            for j in 0..w {
                cf.push((x[i][j] - x[i - 1][j]).powi(2));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (mean(&rf) + mean(&cf)).sqrt()
    }

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        if vx == 0.0 || vy == 0.0 {
            0.0
        } else {
            cov / (vx * vy).sqrt()
        }
    }

    pub fn scd(a: &[Vec<f64>], b: &[Vec<f64>], f: &[Vec<f64>]) -> f64 {
        let flat = |m: &[Vec<f64>]| m.concat();
        let (a, b, f) = (flat(a), flat(b), flat(f));
        let d1: Vec<f64> = f.iter().zip(&b).map(|(x, y)| x - y).collect();
        let d2: Vec<f64> = f.iter().zip(&a).map(|(x, y)| x - y).collect();
        corr(&d1, &a) + corr(&d2, &b)
    }

    /// 2-D Gaussian window normalised to unit sum.
    fn window(n: usize, sigma: f64) -> Vec<Vec<f64>> {
        let c = (n as f64 - 1.0) / 2.0;
        let mut w = vec![vec![0.0; n]; n];
        let mut s = 0.0;
        for (u, row) in w.iter_mut().enumerate() {
            for (v, x) in row.iter_mut().enumerate() {
                *x = (-((u as f64 - c).powi(2) + (v as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp();
                s += *x;
            }
        }
        for row in &mut w {
            for x in row {
                *x /= s;
            }
        }
        w
    }

    fn ssim_map_mean(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        let win = window(11, 1.5);
        let (h, w) = (x.len(), x[0].len());
        let (c1, c2) = (1e-4, 9e-4);
        let mut total = 0.0;
        let mut count = 0.0;
        for i in 0..=h - 11 {
            for j in 0..=w - 11 {
                let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for u in 0..11 {
                    for v in 0..11 {
                        let (p, q, k) = (x[i + u][j + v], y[i + u][j + v], win[u][v]);
                        mx += k * p;
                        my += k * q;
                        xx += k * p * p;
                        yy += k * q * q;
                        xy += k * p * q;
                    }
                }
                let (vx, vy, cxy) = (xx - mx * mx, yy - my * my, xy - mx * my);
                total += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1.0;
            }
        }
        total / count
    }

    pub fn ssim(a: &[Vec<f64>], b: &[Vec<f64>], f: &[Vec<f64>]) -> f64 {
        (ssim_map_mean(f, a) + ssim_map_mean(f, b)) / 2.0
    }

    fn sobel(x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let gx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        let gy = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
        let (h, w) = (x.len() as i64, x[0].len() as i64);
        let mut g = vec![vec![0.0; w as usize]; h as usize];
        let mut a = g.clone();
        for i in 0..h {
            for j in 0..w {
                let (mut sx, mut sy) = (0.0, 0.0);
                for u in 0..3 {
                    for v in 0..3 {
                        let p = x[mirror(i + u - 1, h)][mirror(j + v - 1, w)];
                        sx += gx[u as usize][v as usize] * p;
                        sy += gy[u as usize][v as usize] * p;
                    }
                }
                g[i as usize][j as usize] = sx.hypot(sy);
                a[i as usize][j as usize] = if sx == 0.0 { PI / 2.0 } else { (sy / sx).atan() };
            }
        }
        (g, a)
    }

    pub fn qabf(a: &[Vec<f64>], b: &[Vec<f64>], f: &[Vec<f64>]) -> f64 {
        let (ga, aa) = sobel(a);
        let (gb, ab) = sobel(b);
        let (gf, af) = sobel(f);
        let q = |g1: f64, a1: f64, g2: f64, a2: f64| {
            let gr = if g1 == g2 { 1.0 } else { g1.min(g2) / g1.max(g2) };
            let ar = 1.0 - (a1 - a2).abs() / (PI / 2.0);
            let qg = 0.9994 / (1.0 + (-15.0 * (gr - 0.5)).exp());
            let qa = 0.9879 / (1.0 + (-22.0 * (ar - 0.8)).exp());
            qg * qa
        };
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..a.len() {
            for j in 0..a[0].len() {
                num += q(ga[i][j], aa[i][j], gf[i][j], af[i][j]) * ga[i][j];
                num += q(gb[i][j], ab[i][j], gf[i][j], af[i][j]) * gb[i][j];
                den += ga[i][j] + gb[i][j];
            }
        }
        num / den
    }

    fn blur(x: &[Vec<f64>], win: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = win.len() as i64;
        let p = n / 2;
        let (h, w) = (x.len() as i64, x[0].len() as i64);
        let mut out = vec![vec![0.0; w as usize]; h as usize];
        for i in 0..h {
            for j in 0..w {
                let mut s = 0.0;
                for u in 0..n {
                    for v in 0..n {
                        s += win[u as usize][v as usize] * x[mirror(i + u - p, h)][mirror(j + v - p, w)];
                    }
                }
                out[i as usize][j as usize] = s;
            }
        }
        out
    }

    fn times(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .zip(y)
            .map(|(r, s)| r.iter().zip(s).map(|(p, q)| p * q).collect())
            .collect()
    }

    fn vif_one(reference: &[Vec<f64>], distorted: &[Vec<f64>]) -> f64 {
        let scale255 =
            |m: &[Vec<f64>]| -> Vec<Vec<f64>> { m.iter().map(|r| r.iter().map(|v| v * 255.0).collect()).collect() };
        let mut r = scale255(reference);
        let mut d = scale255(distorted);
        let (mut num, mut den) = (0.0, 0.0);
        for s in 1..=4u32 {
            let n = 2usize.pow(4 - s + 1) + 1;
            let win = window(n, n as f64 / 5.0);
            if s > 1 {
                let (br, bd) = (blur(&r, &win), blur(&d, &win));
                r = br
                    .iter()
                    .step_by(2)
                    .map(|row| row.iter().step_by(2).copied().collect())
                    .collect();
                d = bd
                    .iter()
                    .step_by(2)
                    .map(|row| row.iter().step_by(2).copied().collect())
                    .collect();
            }
            let mu1 = blur(&r, &win);
            let mu2 = blur(&d, &win);
            let e11 = blur(&times(&r, &r), &win);
            let e22 = blur(&times(&d, &d), &win);
            let e12 = blur(&times(&r, &d), &win);
            for i in 0..r.len() {
                for j in 0..r[0].len() {
                    let mut s1 = (e11[i][j] - mu1[i][j].powi(2)).max(0.0);
                    let s2 = (e22[i][j] - mu2[i][j].powi(2)).max(0.0);
                    let s12 = e12[i][j] - mu1[i][j] * mu2[i][j];
                    let mut g = s12 / (s1 + 1e-10);
                    let mut sv = s2 - g * s12;
                    if s1 < 1e-10 {
                        g = 0.0;
                        sv = s2;
                        s1 = 0.0;
                    }
                    if s2 < 1e-10 {
                        g = 0.0;
                        sv = 0.0;
                    }
                    if g < 0.0 {
                        sv = s2;
                        g = 0.0;
                    }
                    if sv <= 1e-10 {
                        sv = 1e-10;
                    }
                    num += (1.0 + g * g * s1 / (sv + 2.0)).log10();
                    den += (1.0 + s1 / 2.0).log10();
                }
            }
        }
        num / den
    }

    pub fn vif(a: &[Vec<f64>], b: &[Vec<f64>], f: &[Vec<f64>]) -> f64 {
        (vif_one(a, f) + vif_one(b, f)) / 2.0
    }
}

pub fn rel_err(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(1e-12)
}

/// Smooth random scene with edges, closer to real images than white noise.
pub fn structured(h: usize, w: usize, r: &mut impl Rng) -> Image {
    let (fx, fy, ph): (f64, f64, f64) = (r.gen_range(0.1..0.6), r.gen_range(0.1..0.6), r.gen_range(0.0..6.0));
    let (cy, cx, rad) = (
        r.gen_range(0.0..h as f64),
        r.gen_range(0.0..w as f64),
        r.gen_range(3.0..10.0),
    );
    let noise: Vec<f64> = (0..h * w).map(|_| r.gen_range(-0.05..0.05)).collect();
    Image::from_fn(h, w, |i, j| {
        let disc = if (i as f64 - cy).hypot(j as f64 - cx) < rad {
            0.3
        } else {
            0.0
        };
        (0.4 + 0.2 * (fx * j as f64 + fy * i as f64 + ph).sin() + disc + noise[i * w + j]).clamp(0.0, 1.0)
    })
}

pub fn triples() -> Vec<(Image, Image, Image)> {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|k| {
            if k % 2 == 0 {
                (noise(32, 32, &mut r), noise(32, 32, &mut r), noise(32, 32, &mut r))
            } else {
                let a = structured(32, 32, &mut r);
                let b = structured(32, 32, &mut r);
                let f = Image::from_fn(32, 32, |i, j| 0.5 * (a.get(i, j) + b.get(i, j)));
                (a, b, f)
            }
        })
        .collect()
}

/// Worst relative error per metric over the 20 triples, in report order.
pub fn worst_errors() -> [f64; 6] {
    let mut worst = [0.0f64; 6];
    for (a, b, f) in triples() {
        let (pa, pb, pf) = (px(&a), px(&b), px(&f));
        let got = metrics::evaluate(&a, &b, &f).unwrap();
        let want = [
            reference::entropy(&pf),
            reference::sf(&pf),
            reference::scd(&pa, &pb, &pf),
            reference::vif(&pa, &pb, &pf),
            reference::qabf(&pa, &pb, &pf),
            reference::ssim(&pa, &pb, &pf),
        ];
        for (k, (g, w)) in got.values().iter().zip(want).enumerate() {
            worst[k] = worst[k].max(rel_err(*g, w));
        }
    }
    worst
}

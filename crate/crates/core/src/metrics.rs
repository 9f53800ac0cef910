//! Fusion-quality metrics on `(I_a, I_b, I_f)` triples of `[0, 1]` images.
//!
//! Conventions:
//!
//! * EN: 256 bins of `round(255·I)`, base-2 logarithm.
//! * SF: RMS of interior horizontal and vertical first differences.
//! * SCD: Pearson correlations; a zero-variance argument contributes 0.
//! * SSIM: 11×11 Gaussian window (σ = 1.5), valid positions only,
//!   `C1 = 0.01²`, `C2 = 0.03²`; mean of SSIM(f, a) and SSIM(f, b).
//! * Q^AB/F: reflect-padded Sobel, `g^1` weighting, standard sigmoid constants.
//! * VIF: pixel-domain four-scale VIF on the 0–255 scale with noise variance
//!   2, reflect-padded Gaussian filtering; mean over both sources as reference.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::{exec, Error, Image, Result};

/// The six metrics for one fused image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub en: f64,
    pub sf: f64,
    pub scd: f64,
    pub vif: f64,
    pub qabf: f64,
    pub ssim: f64,
}

impl MetricsReport {
    pub const NAMES: [&'static str; 6] = ["EN", "SF", "SCD", "VIF", "Qabf", "SSIM"];

    pub fn values(&self) -> [f64; 6] {
        [self.en, self.sf, self.scd, self.vif, self.qabf, self.ssim]
    }

    /// Column-wise mean; `None` for an empty slice.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mut acc = [0.0; 6];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let [en, sf, scd, vif, qabf, ssim] = acc.map(|v| v / n);
        Some(MetricsReport {
            en,
            sf,
            scd,
            vif,
            qabf,
            ssim,
        })
    }
}

fn check_shapes(op: &'static str, imgs: &[&Image]) -> Result<()> {
    for w in imgs.windows(2) {
        if w[0].dims() != w[1].dims() {
            let (a, b) = (w[0].dims(), w[1].dims());
            return Err(Error::ShapeMismatch {
                op,
                lhs: vec![a.0, a.1],
                rhs: vec![b.0, b.1],
            });
        }
    }
    Ok(())
}

fn check_min(metric: &'static str, img: &Image, min: usize) -> Result<()> {
    let (height, width) = img.dims();
    if height < min || width < min {
        return Err(Error::ImageTooSmall {
            metric,
            min,
            height,
            width,
        });
    }
    Ok(())
}

/// Shannon entropy in bits of the 256-level histogram.
pub fn entropy(img: &Image) -> f64 {
    let mut hist = [0usize; 256];
    for &v in img.data() {
        hist[(v * 255.0).round().clamp(0.0, 255.0) as usize] += 1;
    }
    let n = img.data().len() as f64;
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // A single occupied bin gives -0.0.
    h.max(0.0)
}

/// `sqrt(RF² + CF²)` over interior first differences.
pub fn spatial_frequency(img: &Image) -> Result<f64> {
    check_min("SF", img, 2)?;
    let (h, w) = img.dims();
    let mut rf = 0.0;
    let mut cf = 0.0;
    for i in 0..h {
        for j in 0..w {
            if j > 0 {
                rf += (img.get(i, j) - img.get(i, j - 1)).powi(2);
            }
            if i > 0 {
                cf += (img.get(i, j) - img.get(i - 1, j)).powi(2);
            }
        }
    }
    let rf = rf / (h * (w - 1)) as f64;
    let cf = cf / ((h - 1) * w) as f64;
    Ok((rf + cf).sqrt())
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    // Tested exactly: the mean of a constant vector can round away from it.
    let flat = |v: &[f64]| v.iter().all(|&t| t == v[0]);
    if flat(x) || flat(y) {
        return 0.0;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Sum of correlation differences.
pub fn scd(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    check_shapes("SCD", &[a, b, f])?;
    let diff = |x: &Image| -> Vec<f64> { f.data().iter().zip(x.data()).map(|(p, q)| p - q).collect() };
    Ok(pearson(&diff(b), a.data()) + pearson(&diff(a), b.data()))
}

/// Normalized 1-D Gaussian of length `n`.
fn gaussian(n: usize, sigma: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..n)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable filtering with a symmetric kernel.
/// `same = false` keeps valid positions; `same = true` reflect-pads.
fn filter(data: &[f64], h: usize, w: usize, k: &[f64], same: bool) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let p = n / 2;
    let at = |v: isize, len: usize| crate::autodiff::kernels::reflect(v, len);
    let (oh, ow) = if same { (h, w) } else { (h + 1 - n, w + 1 - n) };
    let off = if same { -(p as isize) } else { 0 };
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * data[i * w + at(j as isize + off + t as isize, w)];
            }
            rows[i * ow + j] = s;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * rows[at(i as isize + off + t as isize, h) * ow + j];
            }
            out[i * ow + j] = s;
        }
    }
    (out, oh, ow)
}

const SSIM_WIN: usize = 11;

fn ssim_pair(x: &Image, y: &Image) -> f64 {
    let (h, w) = x.dims();
    let k = gaussian(SSIM_WIN, 1.5);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let prod = |p: &Image, q: &Image| -> Vec<f64> { p.data().iter().zip(q.data()).map(|(a, b)| a * b).collect() };
    let (mx, ..) = filter(x.data(), h, w, &k, false);
    let (my, ..) = filter(y.data(), h, w, &k, false);
    let (sxx, ..) = filter(&prod(x, x), h, w, &k, false);
    let (syy, ..) = filter(&prod(y, y), h, w, &k, false);
    let (sxy, ..) = filter(&prod(x, y), h, w, &k, false);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    total / mx.len() as f64
}

/// Mean of SSIM(f, a) and SSIM(f, b).
pub fn ssim_fusion(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    check_shapes("SSIM", &[a, b, f])?;
    check_min("SSIM", f, SSIM_WIN)?;
    Ok(0.5 * (ssim_pair(f, a) + ssim_pair(f, b)))
}

/// Xydeas–Petrović model constants.
pub const QABF_GAMMA_G: f64 = 0.9994;
pub const QABF_KAPPA_G: f64 = -15.0;
pub const QABF_SIGMA_G: f64 = 0.5;
pub const QABF_GAMMA_A: f64 = 0.9879;
pub const QABF_KAPPA_A: f64 = -22.0;
pub const QABF_SIGMA_A: f64 = 0.8;

/// Edge strength and orientation from the reflect-padded Sobel pair.
fn sobel_polar(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = img.dims();
    let sx = crate::loss::SOBEL_X;
    let mut g = vec![0.0; h * w];
    let mut alpha = vec![0.0; h * w];
    let at = |v: isize, len: usize| crate::autodiff::kernels::reflect(v, len);
    for i in 0..h {
        for j in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (u, row) in sx.iter().enumerate() {
                for (v, &kv) in row.iter().enumerate() {
                    let px = img.get(at(i as isize + u as isize - 1, h), at(j as isize + v as isize - 1, w));
                    gx += kv * px;
                    // The vertical kernel is the transpose.
                    let py = img.get(at(i as isize + v as isize - 1, h), at(j as isize + u as isize - 1, w));
                    gy += kv * py;
                }
            }
            g[i * w + j] = (gx * gx + gy * gy).sqrt();
            alpha[i * w + j] = if gx == 0.0 { FRAC_PI_2 } else { (gy / gx).atan() };
        }
    }
    (g, alpha)
}

/// Per-pixel edge preservation `Q^{XF}` of source `x` in the fused image.
fn edge_preservation(gx: &[f64], ax: &[f64], gf: &[f64], af: &[f64]) -> Vec<f64> {
    (0..gx.len())
        .map(|p| {
            let (s, t) = (gx[p], gf[p]);
            let strength = if s == t {
                1.0
            } else if s > t {
                t / s
            } else {
                s / t
            };
            let orient = 1.0 - (ax[p] - af[p]).abs() / FRAC_PI_2;
            let qg = QABF_GAMMA_G / (1.0 + (QABF_KAPPA_G * (strength - QABF_SIGMA_G)).exp());
            let qa = QABF_GAMMA_A / (1.0 + (QABF_KAPPA_A * (orient - QABF_SIGMA_A)).exp());
            qg * qa
        })
        .collect()
}

/// Perfect-transfer value of the edge model, `Q_g(1)·Q_α(1)`.
pub fn qabf_ceiling() -> f64 {
    QABF_GAMMA_G / (1.0 + (QABF_KAPPA_G * (1.0 - QABF_SIGMA_G)).exp())
        * (QABF_GAMMA_A / (1.0 + (QABF_KAPPA_A * (1.0 - QABF_SIGMA_A)).exp()))
}

/// Gradient-based edge-transfer quality Q^AB/F. Zero when neither source
/// has any edge.
pub fn qabf(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    check_shapes("Qabf", &[a, b, f])?;
    let (ga, aa) = sobel_polar(a);
    let (gb, ab) = sobel_polar(b);
    let (gf, af) = sobel_polar(f);
    let qa = edge_preservation(&ga, &aa, &gf, &af);
    let qb = edge_preservation(&gb, &ab, &gf, &af);
    let (mut num, mut den) = (0.0, 0.0);
    for p in 0..ga.len() {
        num += qa[p] * ga[p] + qb[p] * gb[p];
        den += ga[p] + gb[p];
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

const VIF_SCALES: usize = 4;
const VIF_SIGMA_NSQ: f64 = 2.0;
const VIF_EPS: f64 = 1e-10;

/// Smallest side for which all four scales fit their windows.
pub const VIF_MIN_SIDE: usize = 17;

fn vif_window(scale: usize) -> usize {
    (1 << (VIF_SCALES - scale + 1)) + 1
}

fn downsample(data: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Vec::with_capacity(oh * ow);
    for i in (0..h).step_by(2) {
        for j in (0..w).step_by(2) {
            out.push(data[i * w + j]);
        }
    }
    (out, oh, ow)
}

/// `(numerator, denominator)` information sums, reference `r`, distorted `d`.
fn vif_terms(r: &Image, d: &Image) -> (f64, f64) {
    let (mut h, mut w) = r.dims();
    let mut rr: Vec<f64> = r.data().iter().map(|v| v * 255.0).collect();
    let mut dd: Vec<f64> = d.data().iter().map(|v| v * 255.0).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for scale in 1..=VIF_SCALES {
        let n = vif_window(scale);
        let k = gaussian(n, n as f64 / 5.0);
        if scale > 1 {
            let (fr, ..) = filter(&rr, h, w, &k, true);
            let (fd, ..) = filter(&dd, h, w, &k, true);
            let (sr, nh, nw) = downsample(&fr, h, w);
            (dd, ..) = downsample(&fd, h, w);
            rr = sr;
            (h, w) = (nh, nw);
        }
        let sq = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
        let (mu1, ..) = filter(&rr, h, w, &k, true);
        let (mu2, ..) = filter(&dd, h, w, &k, true);
        let (s11, ..) = filter(&sq(&rr, &rr), h, w, &k, true);
        let (s22, ..) = filter(&sq(&dd, &dd), h, w, &k, true);
        let (s12, ..) = filter(&sq(&rr, &dd), h, w, &k, true);
        for p in 0..h * w {
            let mut sigma1_sq = (s11[p] - mu1[p] * mu1[p]).max(0.0);
            let sigma2_sq = (s22[p] - mu2[p] * mu2[p]).max(0.0);
            let sigma12 = s12[p] - mu1[p] * mu2[p];
            let mut g = sigma12 / (sigma1_sq + VIF_EPS);
            let mut sv_sq = sigma2_sq - g * sigma12;
            if sigma1_sq < VIF_EPS {
                g = 0.0;
                sv_sq = sigma2_sq;
                sigma1_sq = 0.0;
            }
            if sigma2_sq < VIF_EPS {
                g = 0.0;
                sv_sq = 0.0;
            }
            if g < 0.0 {
                sv_sq = sigma2_sq;
                g = 0.0;
            }
            sv_sq = sv_sq.max(VIF_EPS);
            num += (1.0 + g * g * sigma1_sq / (sv_sq + VIF_SIGMA_NSQ)).log10();
            den += (1.0 + sigma1_sq / VIF_SIGMA_NSQ).log10();
        }
    }
    (num, den)
}

fn vif_single(r: &Image, d: &Image) -> f64 {
    let (num, den) = vif_terms(r, d);
    // A flat reference carries no information; count it as fully preserved.
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Pixel-domain visual information fidelity, mean over both references.
pub fn vif(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    check_shapes("VIF", &[a, b, f])?;
    check_min("VIF", f, VIF_MIN_SIDE)?;
    Ok(0.5 * (vif_single(a, f) + vif_single(b, f)))
}

/// All six metrics for one triple.
pub fn evaluate(a: &Image, b: &Image, f: &Image) -> Result<MetricsReport> {
    check_shapes("metrics", &[a, b, f])?;
    Ok(MetricsReport {
        en: entropy(f),
        sf: spatial_frequency(f)?,
        scd: scd(a, b, f)?,
        vif: vif(a, b, f)?,
        qabf: qabf(a, b, f)?,
        ssim: ssim_fusion(a, b, f)?,
    })
}

/// [`evaluate`] over many triples, in parallel.
pub fn evaluate_all(triples: &[(Image, Image, Image)]) -> Result<Vec<MetricsReport>> {
    exec::map_indices(triples.len(), |i| {
        let (a, b, f) = &triples[i];
        evaluate(a, b, f)
    })
    .into_iter()
    .collect()
}

/// Aligned plain-text table: one row per image and a final `mean` row.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let mut label_w = "image".len().max("mean".len());
    for (name, _) in rows {
        label_w = label_w.max(name.len());
    }
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "image");
    for n in MetricsReport::NAMES {
        let _ = write!(out, " {n:>10}");
    }
    out.push('\n');
    let mut line = |name: &str, r: &MetricsReport| {
        let _ = write!(out, "{name:<label_w$}");
        for v in r.values() {
            let _ = write!(out, " {v:>10.4}");
        }
        out.push('\n');
    };
    for (name, r) in rows {
        line(name, r);
    }
    let reports: Vec<MetricsReport> = rows.iter().map(|(_, r)| *r).collect();
    if let Some(m) = MetricsReport::mean(&reports) {
        line("mean", &m);
    }
    out
}

/// Line-delimited `key=value` records, full precision, plus a mean record.
pub fn format_records(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    let mut line = |name: &str, r: &MetricsReport| {
        let _ = write!(out, "image={name}");
        for (n, v) in MetricsReport::NAMES.iter().zip(r.values()) {
            let _ = write!(out, " {n}={v}");
        }
        out.push('\n');
    };
    for (name, r) in rows {
        line(name, r);
    }
    let reports: Vec<MetricsReport> = rows.iter().map(|(_, r)| *r).collect();
    if let Some(m) = MetricsReport::mean(&reports) {
        line("mean", &m);
    }
    out
}

//! Learnable fusion loss and downstream task loss.
//!
//! ```text
//! L_f    = L_int + α·L_grad
//! L_int  = mean_ij Σ_k w_k (I_f − I_k)²
//! L_grad = mean_ij | S(I_f) − max_k S(I_k) |
//! ```
//!
//! `S` is the Sobel magnitude `|Gx ⋆ I| + |Gy ⋆ I|` with reflect padding.

use crate::autodiff::{ops, Tensor};
use crate::{Error, Result};

/// Horizontal Sobel kernel; the vertical one is its transpose.
pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// Simplex tolerance accepted by [`fusion_loss`].
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Per-pixel intensity weights `(w_a, w_b)`, each `[1, h, w]`.
#[derive(Clone, Debug)]
pub struct FusionWeights {
    pub wa: Tensor,
    pub wb: Tensor,
}

impl FusionWeights {
    /// The fixed one-half weights used by the non-learned baseline.
    pub fn half(height: usize, width: usize) -> Self {
        Self {
            wa: Tensor::full(vec![1, height, width], 0.5),
            wb: Tensor::full(vec![1, height, width], 0.5),
        }
    }

    /// Largest violation of `w_a + w_b = 1`, `w ≥ 0` over all pixels.
    pub fn simplex_deviation(&self) -> f64 {
        self.wa
            .data()
            .iter()
            .zip(self.wb.data())
            .map(|(&a, &b)| (a + b - 1.0).abs().max(-a).max(-b))
            .fold(0.0, f64::max)
    }

    /// `(mean, min, max)` of `w_a`.
    pub fn stats(&self) -> (f64, f64, f64) {
        let d = self.wa.data();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (mean, min, max)
    }

    pub fn detach(&self) -> Self {
        Self {
            wa: self.wa.detach(),
            wb: self.wb.detach(),
        }
    }
}

/// Loss components; `total = intensity + alpha * gradient`.
#[derive(Clone, Debug)]
pub struct LossTerms {
    pub total: Tensor,
    pub intensity: Tensor,
    pub gradient: Tensor,
    pub alpha: f64,
}

impl LossTerms {
    /// `(total, intensity, gradient)` as plain numbers.
    pub fn values(&self) -> (f64, f64, f64) {
        (self.total.data()[0], self.intensity.data()[0], self.gradient.data()[0])
    }
}

fn sobel_kernels() -> Tensor {
    let mut k = Vec::with_capacity(18);
    for row in SOBEL_X {
        k.extend(row);
    }
    for i in 0..3 {
        for row in SOBEL_X {
            k.push(row[i]);
        }
    }
    Tensor::new(vec![2, 1, 3, 3], k).expect("finite kernel")
}

/// `|Gx ⋆ I| + |Gy ⋆ I|` for an image `[1, h, w]`.
pub fn sobel_magnitude(img: &Tensor) -> Result<Tensor> {
    let responses = ops::conv2d(img, &sobel_kernels(), None)?;
    ops::sum_channels(&ops::abs(&responses)?)
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// The learnable fusion loss. Differentiable in `fused` and in the weights.
pub fn fusion_loss(ia: &Tensor, ib: &Tensor, fused: &Tensor, w: &FusionWeights, alpha: f64) -> Result<LossTerms> {
    same_shape("fusion_loss", ia, ib)?;
    same_shape("fusion_loss", ia, fused)?;
    same_shape("fusion_loss", ia, &w.wa)?;
    same_shape("fusion_loss", ia, &w.wb)?;
    let dev = w.simplex_deviation();
    if dev > SIMPLEX_TOL {
        return Err(Error::OffSimplex(dev));
    }
    let da = ops::square(&ops::sub(fused, ia)?)?;
    let db = ops::square(&ops::sub(fused, ib)?)?;
    let weighted = ops::add(&ops::mul(&w.wa, &da)?, &ops::mul(&w.wb, &db)?)?;
    let intensity = ops::mean(&weighted)?;

    let target = ops::maximum(&sobel_magnitude(ia)?, &sobel_magnitude(ib)?)?;
    let gap = ops::sub(&sobel_magnitude(fused)?, &target)?;
    let gradient = ops::mean(&ops::abs(&gap)?)?;

    let total = ops::add(&intensity, &ops::scale(&gradient, alpha)?)?;
    Ok(LossTerms {
        total,
        intensity,
        gradient,
        alpha,
    })
}

/// Mean per-pixel cross-entropy of `[C, h, w]` logits.
pub fn task_loss(logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
    ops::cross_entropy(logits, labels)
}

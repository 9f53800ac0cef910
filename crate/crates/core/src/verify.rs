//! Finite-difference oracles for the hypergradient `∂L_t/∂θ_G`.
//!
//! Two references, both built from forward evaluations only:
//!
//! * the full chain: perturb one `θ_G` coordinate, redo the inner step of
//!   `θ_F` and evaluate the meta-test task loss, central differences;
//! * the expansion `−η_F'·(∂L_t/∂θ_F')·(∂²L_f/∂θ_F∂θ_G)`, with the first
//!   factor from central differences in `θ_F'` and the mixed partials from
//!   four-point differences of `L_f`.
//!
//! Neither path uses a retained graph. The inner step itself still needs
//! `∂L_f/∂θ_F`, taken with a plain first-order backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{grad, ops, Tape, Tensor};
use crate::loss::{fusion_loss, task_loss};
use crate::networks::{fuse, gen_weights, init_params, task_forward, ParamSet};
use crate::synthdata::{gen_item, ImagePair, SceneSpec};
use crate::trainer::{hypergradient, inner_update, TrainConfig, WeightMode};
use crate::{exec, Error, Result};

/// Step for central differences of the task loss.
pub const FD_EPS: f64 = 1e-5;
/// Step for the four-point mixed partials.
pub const MIXED_EPS: f64 = 1e-4;

/// Parameters and batches at which the hypergradient is checked.
#[derive(Clone, Debug)]
pub struct Problem {
    pub cfg: TrainConfig,
    pub fusion: ParamSet,
    pub task: ParamSet,
    pub lossgen: ParamSet,
    pub meta_train: Vec<ImagePair>,
    pub meta_test: Vec<ImagePair>,
}

/// Uniform noise of amplitude `scale` added to every parameter.
pub fn jitter(params: &ParamSet, scale: f64, seed: u64) -> Result<ParamSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = params
        .flatten()
        .iter()
        .map(|v| v + rng.gen_range(-scale..scale))
        .collect();
    params.from_flat(&flat)
}

impl Problem {
    /// Fresh networks for `cfg` and one synthetic batch each for meta-train
    /// and meta-test. `θ_G` is jittered so the zero-initialised head does
    /// not hide the hidden-layer gradients.
    pub fn synthetic(cfg: &TrainConfig, side: usize) -> Result<Self> {
        Self::with_scene(cfg, &SceneSpec::with_size(side, side))
    }

    /// As [`Problem::synthetic`] with an explicit scene generator.
    pub fn with_scene(cfg: &TrainConfig, scene: &SceneSpec) -> Result<Self> {
        if cfg.weights != WeightMode::Learned {
            return Err(Error::InvalidConfig("gradient checks need learned weights".into()));
        }
        let b = cfg.batch_size;
        let items = (0..2 * b)
            .map(|i| gen_item(scene, cfg.seed, i))
            .collect::<Result<Vec<_>>>()?;
        let (meta_train, meta_test) = items.split_at(b);
        Ok(Self {
            cfg: cfg.clone(),
            fusion: init_params(&cfg.fusion_net, cfg.seed ^ 0x11)?,
            task: init_params(&cfg.task_net, cfg.seed ^ 0x22)?,
            lossgen: jitter(&init_params(&cfg.lossgen_net, cfg.seed ^ 0x33)?, 0.5, cfg.seed ^ 0x44)?,
            meta_train: meta_train.to_vec(),
            meta_test: meta_test.to_vec(),
        })
    }

    fn train_batch(&self) -> Vec<&ImagePair> {
        self.meta_train.iter().collect()
    }

    fn test_batch(&self) -> Vec<&ImagePair> {
        self.meta_test.iter().collect()
    }

    /// Hypergradient by reverse mode through the retained inner step.
    pub fn hypergradient_ad(&self) -> Result<Vec<f64>> {
        let inner = inner_update(&self.train_batch(), &self.fusion, &self.task, &self.lossgen, &self.cfg)?;
        let (_, hg) = hypergradient(&inner, &self.test_batch())?;
        Ok(hg.iter().flat_map(|t| t.data().iter().copied()).collect())
    }

    /// Mean fusion loss over the meta-train batch.
    fn fusion_objective(&self, fusion: &ParamSet, lossgen: &ParamSet) -> Result<Tensor> {
        let mut total: Option<Tensor> = None;
        for pair in &self.meta_train {
            let (ia, ib) = (pair.a.to_tensor(), pair.b.to_tensor());
            let w = gen_weights(&ia, &ib, lossgen)?;
            let l = fusion_loss(&ia, &ib, &fuse(&ia, &ib, fusion)?, &w, self.cfg.alpha)?.total;
            total = Some(match total {
                Some(t) => ops::add(&t, &l)?,
                None => l,
            });
        }
        let total = total.ok_or(Error::InvalidConfig("empty meta-train batch".into()))?;
        ops::scale(&total, 1.0 / self.meta_train.len() as f64)
    }

    /// `θ_F'` for the given `θ_G`, as constants.
    fn fusion_prime(&self, lossgen: &ParamSet) -> Result<ParamSet> {
        let tape = Tape::new();
        let f = self.fusion.attach(&tape);
        let loss = self.fusion_objective(&f, &lossgen.detach())?;
        let g = grad(&loss, &f.tensors(), false)?;
        self.fusion.detach().sgd_step(&g, self.cfg.lr_inner_fusion, false)
    }

    /// `θ_T'`; independent of `θ_G`.
    fn task_prime(&self) -> Result<ParamSet> {
        let tape = Tape::new();
        let t = self.task.attach(&tape);
        let mut grads: Option<Vec<Tensor>> = None;
        for pair in &self.meta_train {
            let fused = fuse(&pair.a.to_tensor(), &pair.b.to_tensor(), &self.fusion)?;
            let l = task_loss(&task_forward(&fused, &t)?, &pair.labels)?;
            let g = grad(&l, &t.tensors(), false)?;
            grads = Some(match grads {
                Some(acc) => acc.iter().zip(&g).map(|(a, b)| ops::add(a, b)).collect::<Result<_>>()?,
                None => g,
            });
        }
        let n = self.meta_train.len() as f64;
        let grads = grads
            .ok_or(Error::InvalidConfig("empty meta-train batch".into()))?
            .iter()
            .map(|g| ops::scale(g, 1.0 / n))
            .collect::<Result<Vec<_>>>()?;
        self.task.detach().sgd_step(&grads, self.cfg.lr_inner_task, false)
    }

    /// Meta-test task loss through the given clones.
    fn outer_loss(&self, fusion_prime: &ParamSet, task_prime: &ParamSet) -> Result<f64> {
        let mut total = 0.0;
        for pair in &self.meta_test {
            let fused = fuse(&pair.a.to_tensor(), &pair.b.to_tensor(), fusion_prime)?;
            total += task_loss(&task_forward(&fused, task_prime)?, &pair.labels)?.item()?;
        }
        Ok(total / self.meta_test.len() as f64)
    }

    /// Central differences of the full inner+outer chain in every `θ_G`
    /// coordinate.
    pub fn hypergradient_fd(&self, eps: f64) -> Result<Vec<f64>> {
        let task_prime = self.task_prime()?;
        let base = self.lossgen.flatten();
        let loss_at = |flat: &[f64]| -> Result<f64> {
            let g = self.lossgen.from_flat(flat)?;
            self.outer_loss(&self.fusion_prime(&g)?, &task_prime)
        };
        exec::map_indices(base.len(), |j| {
            let mut x = base.clone();
            x[j] = base[j] + eps;
            let up = loss_at(&x)?;
            x[j] = base[j] - eps;
            let down = loss_at(&x)?;
            Ok((up - down) / (2.0 * eps))
        })
        .into_iter()
        .collect()
    }

    /// `−η_F'·(∂L_t/∂θ_F')·(∂²L_f/∂θ_F∂θ_G)` from forward evaluations.
    pub fn hypergradient_expansion(&self, eps: f64, mixed_eps: f64) -> Result<Vec<f64>> {
        let task_prime = self.task_prime()?;
        let fp = self.fusion_prime(&self.lossgen)?;
        let fp_flat = fp.flatten();
        let outer_grad: Vec<f64> = exec::map_indices(fp_flat.len(), |i| {
            let mut x = fp_flat.clone();
            x[i] = fp_flat[i] + eps;
            let up = self.outer_loss(&fp.from_flat(&x)?, &task_prime)?;
            x[i] = fp_flat[i] - eps;
            let down = self.outer_loss(&fp.from_flat(&x)?, &task_prime)?;
            Ok((up - down) / (2.0 * eps))
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let f0 = self.fusion.flatten();
        let g0 = self.lossgen.flatten();
        let (nf, ng) = (f0.len(), g0.len());
        let lf = |df: (usize, f64), dg: (usize, f64)| -> Result<f64> {
            let mut f = f0.clone();
            let mut g = g0.clone();
            f[df.0] += df.1;
            g[dg.0] += dg.1;
            self.fusion_objective(&self.fusion.from_flat(&f)?, &self.lossgen.from_flat(&g)?)?
                .item()
        };
        let h = mixed_eps;
        let mixed: Vec<f64> = exec::map_indices(nf * ng, |k| {
            let (i, j) = (k / ng, k % ng);
            let pp = lf((i, h), (j, h))?;
            let pm = lf((i, h), (j, -h))?;
            let mp = lf((i, -h), (j, h))?;
            let mm = lf((i, -h), (j, -h))?;
            Ok((pp - pm - mp + mm) / (4.0 * h * h))
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let eta = self.cfg.lr_inner_fusion;
        Ok((0..ng)
            .map(|j| -eta * (0..nf).map(|i| outer_grad[i] * mixed[i * ng + j]).sum::<f64>())
            .collect())
    }
}

/// `‖ad − reference‖∞ / ‖reference‖∞`; the absolute error when the
/// reference is zero.
pub fn max_rel_error(ad: &[f64], reference: &[f64]) -> f64 {
    let diff = ad.iter().zip(reference).map(|(a, r)| (a - r).abs()).fold(0.0, f64::max);
    let scale = reference.iter().map(|r| r.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Outcome of comparing the reverse-mode hypergradient with one oracle.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub ad: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_rel_error: f64,
}

impl Comparison {
    pub fn new(ad: Vec<f64>, reference: Vec<f64>) -> Self {
        let max_rel_error = max_rel_error(&ad, &reference);
        Self {
            ad,
            reference,
            max_rel_error,
        }
    }

    /// Largest absolute component of the reverse-mode result.
    pub fn ad_max_abs(&self) -> f64 {
        self.ad.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

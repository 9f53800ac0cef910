//! Alternating training of the loss-generation network and the
//! fusion/task networks.
//!
//! Each epoch:
//!
//! 1. draw disjoint meta-train / meta-test subsets of size `M`;
//! 2. `M` times: an inner update producing one-step clones `F'`, `T'` from a
//!    meta-train batch (keeping `θ_F'` differentiable in `θ_G`), then an outer
//!    update of `θ_G` on the task loss of a meta-test batch through `F'`, `T'`;
//! 3. `N` fusion updates of `θ_F` (fusion loss) and `θ_T` (task loss) with
//!    `θ_G` frozen.

use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{grad, ops, Tape, Tensor};
use crate::loss::{fusion_loss, task_loss, FusionWeights};
use crate::networks::{fuse, gen_weights, init_params, task_forward, NetSpec, ParamSet};
use crate::optim::{Optimizer, OptimizerKind};
use crate::synthdata::{ImagePair, BACKGROUND, TARGET, TEXTURE};
use crate::{Error, Result};

/// Where the fusion-loss weights come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Produced by the loss-generation network, trained by meta-learning.
    Learned,
    /// Fixed at one half; the meta phase is skipped.
    FixedHalf,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::Learned => "learned",
            WeightMode::FixedHalf => "fixed_half",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// `L`.
    pub epochs: usize,
    /// `M`: meta steps per epoch and size of each meta subset.
    pub meta_steps: usize,
    /// `N`; `None` means one pass over the dataset per epoch.
    pub fusion_steps: Option<usize>,
    pub lr_inner_fusion: f64,
    pub lr_inner_task: f64,
    pub lr_lossgen: f64,
    pub lr_fusion: f64,
    pub lr_task: f64,
    pub alpha: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub classes: usize,
    pub fusion_net: NetSpec,
    pub task_net: NetSpec,
    pub lossgen_net: NetSpec,
    /// Optimizer for the outer and fusion phases.
    pub optimizer: OptimizerKind,
    pub weights: WeightMode,
}

impl TrainConfig {
    /// Desk-scale defaults: 16-wide 4-layer 3x3 networks, `L = 10`, `M = 8`,
    /// plain gradient descent in every phase.
    pub fn desk() -> Self {
        Self {
            epochs: 10,
            meta_steps: 8,
            fusion_steps: None,
            lr_inner_fusion: 0.5,
            lr_inner_task: 0.5,
            lr_lossgen: 0.1,
            lr_fusion: 0.1,
            lr_task: 0.1,
            alpha: 1.0,
            batch_size: 2,
            seed: 0,
            classes: 3,
            fusion_net: NetSpec::fusion(16, 4, 3),
            task_net: NetSpec::task(16, 4, 3, 3),
            lossgen_net: NetSpec::lossgen(16, 4, 3),
            optimizer: OptimizerKind::Sgd,
            weights: WeightMode::Learned,
        }
    }

    /// Full-scale hyperparameters: `L = 50`, `M = 200`, step size 1e-4, batch
    /// 2, `α = 1`, Adam.
    pub fn full() -> Self {
        Self {
            epochs: 50,
            meta_steps: 200,
            lr_inner_fusion: 1e-4,
            lr_inner_task: 1e-4,
            lr_lossgen: 1e-4,
            lr_fusion: 1e-4,
            lr_task: 1e-4,
            optimizer: OptimizerKind::Adam,
            ..Self::desk()
        }
    }

    /// Tiny networks for gradient verification.
    pub fn toy() -> Self {
        Self {
            fusion_net: NetSpec::fusion(4, 2, 3),
            task_net: NetSpec::task(4, 2, 3, 3),
            lossgen_net: NetSpec::lossgen(4, 2, 3),
            lr_inner_fusion: 0.5,
            lr_inner_task: 0.5,
            ..Self::desk()
        }
    }

    /// Single 1x1-layer networks, 15 parameters in total.
    pub fn micro() -> Self {
        Self {
            fusion_net: NetSpec::fusion(1, 1, 1),
            task_net: NetSpec::task(1, 1, 1, 3),
            lossgen_net: NetSpec::lossgen(1, 1, 1),
            ..Self::toy()
        }
    }

    /// Total trainable parameters of the three networks.
    pub fn param_count(&self) -> usize {
        self.fusion_net.param_count() + self.task_net.param_count() + self.lossgen_net.param_count()
    }

    /// Fusion steps per epoch for a dataset of `len` items.
    pub fn fusion_steps_for(&self, len: usize) -> usize {
        self.fusion_steps
            .unwrap_or_else(|| len.div_ceil(self.batch_size.max(1)))
    }

    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.epochs == 0 || self.meta_steps == 0 || self.batch_size == 0 || self.fusion_steps == Some(0) {
            return bad("epochs, meta_steps, fusion_steps and batch_size must be at least 1".into());
        }
        // A zero inner step is allowed: it switches the hypergradient off.
        for (name, v) in [
            ("lr_inner_fusion", self.lr_inner_fusion),
            ("lr_inner_task", self.lr_inner_task),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative step size, got {v}"));
            }
        }
        let rates = [
            ("lr_lossgen", self.lr_lossgen),
            ("lr_fusion", self.lr_fusion),
            ("lr_task", self.lr_task),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a positive step size, got {v}"));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if 2 * self.meta_steps > dataset_len {
            return bad(format!(
                "meta_steps M={} needs 2*M <= dataset size ({dataset_len}) for disjoint meta sets",
                self.meta_steps
            ));
        }
        if self.task_net.out_channels != self.classes {
            return bad(format!(
                "task network outputs {} channels but classes = {}",
                self.task_net.out_channels, self.classes
            ));
        }
        for spec in [&self.fusion_net, &self.task_net, &self.lossgen_net] {
            spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Inner,
    Outer,
    Fusion,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Inner => "inner",
            Phase::Outer => "outer",
            Phase::Fusion => "fusion",
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub phase: Phase,
    pub step: usize,
    pub l_f: f64,
    pub l_int: f64,
    pub l_grad: f64,
    pub l_t: f64,
    pub w_mean: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase={} step={} L_f={} L_int={} L_grad={} L_t={} w_mean={} w_min={} w_max={}",
            self.phase.as_str(),
            self.step,
            self.l_f,
            self.l_int,
            self.l_grad,
            self.l_t,
            self.w_mean,
            self.w_min,
            self.w_max
        )
    }
}

/// Parameters of all three networks at one instant.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub fusion: ParamSet,
    pub task: ParamSet,
    pub lossgen: ParamSet,
}

/// Passed to the observer after every update.
pub struct UpdateEvent<'a> {
    pub record: &'a LogRecord,
    pub before: &'a Snapshot,
    pub after: &'a Snapshot,
    /// For outer updates: weights generated by the updated `θ_G` on the
    /// meta-test batch. For the other phases: the weights the loss used.
    pub weights: &'a [FusionWeights],
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub fusion: ParamSet,
    pub task: ParamSet,
    pub lossgen: ParamSet,
    pub epoch: usize,
    pub rng: ChaCha8Rng,
    pub logs: Vec<LogRecord>,
    opt_fusion: Optimizer,
    opt_task: Optimizer,
    opt_lossgen: Optimizer,
}

impl TrainState {
    /// Fresh parameters seeded from `cfg.seed`.
    pub fn init(cfg: &TrainConfig) -> Result<Self> {
        let base = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Ok(Self {
            fusion: init_params(&cfg.fusion_net, base ^ 0x0F)?,
            task: init_params(&cfg.task_net, base ^ 0x7A)?,
            lossgen: init_params(&cfg.lossgen_net, base ^ 0x96)?,
            epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            logs: Vec::new(),
            opt_fusion: Optimizer::new(cfg.optimizer, cfg.lr_fusion),
            opt_task: Optimizer::new(cfg.optimizer, cfg.lr_task),
            opt_lossgen: Optimizer::new(cfg.optimizer, cfg.lr_lossgen),
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            fusion: self.fusion.clone(),
            task: self.task.clone(),
            lossgen: self.lossgen.clone(),
        }
    }
}

/// Indices of the disjoint meta-train and meta-test subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub meta_train: Vec<usize>,
    pub meta_test: Vec<usize>,
}

/// Draws two disjoint uniformly random subsets of size `m` from `0..len`.
pub fn sample_meta_sets<R: Rng>(len: usize, m: usize, rng: &mut R) -> Result<DatasetSplit> {
    if 2 * m > len || m == 0 {
        return Err(Error::DatasetTooSmall {
            available: len,
            meta: m,
        });
    }
    let picked = index::sample(rng, len, 2 * m).into_vec();
    Ok(DatasetSplit {
        meta_train: picked[..m].to_vec(),
        meta_test: picked[m..].to_vec(),
    })
}

/// Fusion-loss weights for one image pair under `cfg.weights`.
pub fn weights_for(pair: (&Tensor, &Tensor), lossgen: &ParamSet, cfg: &TrainConfig) -> Result<FusionWeights> {
    match cfg.weights {
        WeightMode::Learned => gen_weights(pair.0, pair.1, lossgen),
        WeightMode::FixedHalf => {
            let s = pair.0.shape();
            Ok(FusionWeights::half(s[1], s[2]))
        }
    }
}

fn batch_weight_stats(ws: &[FusionWeights]) -> (f64, f64, f64) {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for w in ws {
        for &v in w.wa.data() {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
    }
    (sum / n.max(1) as f64, min, max)
}

struct FusionPass {
    loss: Tensor,
    int: f64,
    grad: f64,
    fused: Vec<Tensor>,
    weights: Vec<FusionWeights>,
}

/// Mean fusion loss over the batch, differentiable in whatever `fusion` and
/// `lossgen` are attached to.
fn fusion_pass(batch: &[&ImagePair], fusion: &ParamSet, lossgen: &ParamSet, cfg: &TrainConfig) -> Result<FusionPass> {
    let mut total: Option<Tensor> = None;
    let (mut int, mut grd) = (0.0, 0.0);
    let mut fused_all = Vec::with_capacity(batch.len());
    let mut weights = Vec::with_capacity(batch.len());
    for pair in batch {
        let (ia, ib) = (pair.a.to_tensor(), pair.b.to_tensor());
        let fused = fuse(&ia, &ib, fusion)?;
        let w = weights_for((&ia, &ib), lossgen, cfg)?;
        let terms = fusion_loss(&ia, &ib, &fused, &w, cfg.alpha)?;
        let (_, i, g) = terms.values();
        int += i;
        grd += g;
        total = Some(match total {
            Some(t) => ops::add(&t, &terms.total)?,
            None => terms.total,
        });
        fused_all.push(fused);
        weights.push(w);
    }
    let b = batch.len() as f64;
    let loss = ops::scale(&total.ok_or(Error::InvalidConfig("empty batch".into()))?, 1.0 / b)?;
    Ok(FusionPass {
        loss,
        int: int / b,
        grad: grd / b,
        fused: fused_all,
        weights,
    })
}

/// Mean task loss of `task` over fused images.
fn task_pass(fused: &[Tensor], batch: &[&ImagePair], task: &ParamSet) -> Result<Tensor> {
    let mut total: Option<Tensor> = None;
    for (f, pair) in fused.iter().zip(batch) {
        let l = task_loss(&task_forward(f, task)?, &pair.labels)?;
        total = Some(match total {
            Some(t) => ops::add(&t, &l)?,
            None => l,
        });
    }
    ops::scale(
        &total.ok_or(Error::InvalidConfig("empty batch".into()))?,
        1.0 / batch.len() as f64,
    )
}

fn in_phase<T>(phase: Phase, step: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::NonFinite(what) => Error::NonFiniteLoss {
            phase: phase.as_str(),
            step,
            what,
        },
        other => other,
    })
}

/// Result of the inner update. Holds the tape on which `fusion_prime`
/// remains a differentiable function of `lossgen_vars`.
pub struct InnerOutput {
    pub tape: Tape,
    /// `θ_G` as leaves of `tape`.
    pub lossgen_vars: ParamSet,
    /// `θ_F' = θ_F − η_F'·∂L_f/∂θ_F`, recorded on `tape`.
    pub fusion_prime: ParamSet,
    /// `θ_T' = θ_T − η_T'·∂L_t/∂θ_T`, constants.
    pub task_prime: ParamSet,
    pub record: LogRecord,
    pub weights: Vec<FusionWeights>,
}

/// One differentiable gradient step of the fusion network (and a plain step
/// of the task network) on a meta-train batch. The inputs are not modified.
pub fn inner_update(
    batch: &[&ImagePair],
    fusion: &ParamSet,
    task: &ParamSet,
    lossgen: &ParamSet,
    cfg: &TrainConfig,
) -> Result<InnerOutput> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty meta-train batch".into()));
    }
    let tape = Tape::new();
    let f = fusion.attach(&tape);
    let g = lossgen.attach(&tape);
    let pass = fusion_pass(batch, &f, &g, cfg)?;
    let grads = grad(&pass.loss, &f.tensors(), true)?;
    let fusion_prime = f.sgd_step(&grads, cfg.lr_inner_fusion, true)?;

    let task_tape = Tape::new();
    let t = task.attach(&task_tape);
    let fused: Vec<Tensor> = pass.fused.iter().map(Tensor::detach).collect();
    let lt = task_pass(&fused, batch, &t)?;
    let tg = grad(&lt, &t.tensors(), false)?;
    let task_prime = task.detach().sgd_step(&tg, cfg.lr_inner_task, false)?;

    let (w_mean, w_min, w_max) = batch_weight_stats(&pass.weights);
    let record = LogRecord {
        phase: Phase::Inner,
        step: 0,
        l_f: pass.loss.item()?,
        l_int: pass.int,
        l_grad: pass.grad,
        l_t: lt.item()?,
        w_mean,
        w_min,
        w_max,
    };
    Ok(InnerOutput {
        tape,
        lossgen_vars: g,
        fusion_prime,
        task_prime,
        record,
        weights: pass.weights.iter().map(FusionWeights::detach).collect(),
    })
}

/// Task loss on a meta-test batch through `F'` and `T'`, and its gradient
/// with respect to `θ_G`. Only `θ_F'` carries a dependence on `θ_G`.
pub fn hypergradient(inner: &InnerOutput, batch: &[&ImagePair]) -> Result<(f64, Vec<Tensor>)> {
    if !inner.fusion_prime.all_tracked() {
        return Err(Error::GraphNotRetained);
    }
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty meta-test batch".into()));
    }
    let mut fused = Vec::with_capacity(batch.len());
    for pair in batch {
        fused.push(fuse(&pair.a.to_tensor(), &pair.b.to_tensor(), &inner.fusion_prime)?);
    }
    let lt = task_pass(&fused, batch, &inner.task_prime)?;
    let hg = grad(&lt, &inner.lossgen_vars.tensors(), false)?;
    Ok((lt.item()?, hg))
}

pub struct OuterOutput {
    pub lossgen: ParamSet,
    pub hypergradient: Vec<Tensor>,
    pub task_loss: f64,
}

/// Updates `θ_G` with the hypergradient from [`hypergradient`].
pub fn outer_update(
    inner: &InnerOutput,
    batch: &[&ImagePair],
    lossgen: &ParamSet,
    opt: &mut Optimizer,
) -> Result<OuterOutput> {
    let (task_loss, hg) = hypergradient(inner, batch)?;
    let lossgen = opt.step(lossgen, &hg)?;
    Ok(OuterOutput {
        lossgen,
        hypergradient: hg,
        task_loss,
    })
}

pub struct FusionOutput {
    pub fusion: ParamSet,
    pub task: ParamSet,
    pub record: LogRecord,
    pub weights: Vec<FusionWeights>,
}

/// Ordinary step of `θ_F` on the fusion loss (weights from the frozen
/// `θ_G`) and of `θ_T` on the task loss of the fused images.
pub fn fusion_update(
    batch: &[&ImagePair],
    fusion: &ParamSet,
    task: &ParamSet,
    lossgen: &ParamSet,
    opt_fusion: &mut Optimizer,
    opt_task: &mut Optimizer,
    cfg: &TrainConfig,
) -> Result<FusionOutput> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty fusion batch".into()));
    }
    let tape = Tape::new();
    let f = fusion.attach(&tape);
    let pass = fusion_pass(batch, &f, &lossgen.detach(), cfg)?;
    let gf = grad(&pass.loss, &f.tensors(), false)?;

    let t = task.attach(&tape);
    let fused: Vec<Tensor> = pass.fused.iter().map(Tensor::detach).collect();
    let lt = task_pass(&fused, batch, &t)?;
    let gt = grad(&lt, &t.tensors(), false)?;

    let (w_mean, w_min, w_max) = batch_weight_stats(&pass.weights);
    let record = LogRecord {
        phase: Phase::Fusion,
        step: 0,
        l_f: pass.loss.item()?,
        l_int: pass.int,
        l_grad: pass.grad,
        l_t: lt.item()?,
        w_mean,
        w_min,
        w_max,
    };
    Ok(FusionOutput {
        fusion: opt_fusion.step(fusion, &gf)?,
        task: opt_task.step(task, &gt)?,
        record,
        weights: pass.weights.iter().map(FusionWeights::detach).collect(),
    })
}

/// Full alternating schedule. `observe` sees every update as it happens.
pub fn run_with(
    dataset: &[ImagePair],
    cfg: &TrainConfig,
    mut observe: impl FnMut(&UpdateEvent<'_>),
) -> Result<TrainState> {
    cfg.validate(dataset.len())?;
    let mut state = TrainState::init(cfg)?;
    let fusion_steps = cfg.fusion_steps_for(dataset.len());
    let (mut meta_step, mut fusion_step) = (0usize, 0usize);

    for _ in 0..cfg.epochs {
        if cfg.weights == WeightMode::Learned {
            let split = sample_meta_sets(dataset.len(), cfg.meta_steps, &mut state.rng)?;
            for _ in 0..cfg.meta_steps {
                let mtr: Vec<&ImagePair> = (0..cfg.batch_size)
                    .map(|_| &dataset[*split.meta_train.choose(&mut state.rng).expect("non-empty")])
                    .collect();
                let mts: Vec<&ImagePair> = (0..cfg.batch_size)
                    .map(|_| &dataset[*split.meta_test.choose(&mut state.rng).expect("non-empty")])
                    .collect();

                let before = state.snapshot();
                let inner = in_phase(
                    Phase::Inner,
                    meta_step,
                    inner_update(&mtr, &state.fusion, &state.task, &state.lossgen, cfg),
                )?;
                let mut record = inner.record.clone();
                record.step = meta_step;
                observe(&UpdateEvent {
                    record: &record,
                    before: &before,
                    after: &state.snapshot(),
                    weights: &inner.weights,
                });
                state.logs.push(record);

                let outer = in_phase(
                    Phase::Outer,
                    meta_step,
                    outer_update(&inner, &mts, &state.lossgen, &mut state.opt_lossgen),
                )?;
                let inner_record = inner.record.clone();
                drop(inner);
                state.lossgen = outer.lossgen;
                let weights = in_phase(
                    Phase::Outer,
                    meta_step,
                    mts.iter()
                        .map(|p| gen_weights(&p.a.to_tensor(), &p.b.to_tensor(), &state.lossgen))
                        .collect::<Result<Vec<_>>>(),
                )?;
                let (w_mean, w_min, w_max) = batch_weight_stats(&weights);
                let record = LogRecord {
                    phase: Phase::Outer,
                    step: meta_step,
                    l_f: inner_record.l_f,
                    l_int: inner_record.l_int,
                    l_grad: inner_record.l_grad,
                    l_t: outer.task_loss,
                    w_mean,
                    w_min,
                    w_max,
                };
                observe(&UpdateEvent {
                    record: &record,
                    before: &before,
                    after: &state.snapshot(),
                    weights: &weights,
                });
                state.logs.push(record);
                meta_step += 1;
            }
        }

        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut state.rng);
        for s in 0..fusion_steps {
            let batch: Vec<&ImagePair> = (0..cfg.batch_size)
                .map(|k| &dataset[order[(s * cfg.batch_size + k) % order.len()]])
                .collect();
            let before = state.snapshot();
            let out = in_phase(
                Phase::Fusion,
                fusion_step,
                fusion_update(
                    &batch,
                    &state.fusion,
                    &state.task,
                    &state.lossgen,
                    &mut state.opt_fusion,
                    &mut state.opt_task,
                    cfg,
                ),
            )?;
            state.fusion = out.fusion;
            state.task = out.task;
            let mut record = out.record;
            record.step = fusion_step;
            observe(&UpdateEvent {
                record: &record,
                before: &before,
                after: &state.snapshot(),
                weights: &out.weights,
            });
            state.logs.push(record);
            fusion_step += 1;
        }
        state.epoch += 1;
    }
    Ok(state)
}

/// [`run_with`] without an observer.
pub fn run(dataset: &[ImagePair], cfg: &TrainConfig) -> Result<TrainState> {
    run_with(dataset, cfg, |_| {})
}

/// Held-out behaviour of a trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    /// Pixel accuracy of the task network on fused images.
    pub accuracy: f64,
    pub wa_target: f64,
    pub wa_texture: f64,
    pub wa_background: f64,
}

/// Fuses every pair, classifies the result and averages `w_a` per class.
pub fn evaluate(
    dataset: &[ImagePair],
    fusion: &ParamSet,
    task: &ParamSet,
    lossgen: &ParamSet,
    cfg: &TrainConfig,
) -> Result<EvalSummary> {
    let per_item = crate::exec::map_indices(dataset.len(), |i| -> Result<([f64; 3], [usize; 3], usize, usize)> {
        let pair = &dataset[i];
        let (ia, ib) = (pair.a.to_tensor(), pair.b.to_tensor());
        let fused = fuse(&ia, &ib, fusion)?;
        let logits = task_forward(&fused, task)?;
        let w = weights_for((&ia, &ib), lossgen, cfg)?;
        let c = logits.shape()[0];
        let hw = pair.labels.len();
        let mut correct = 0;
        for (p, &label) in pair.labels.iter().enumerate() {
            let best = (0..c)
                .max_by(|&x, &y| logits.data()[x * hw + p].total_cmp(&logits.data()[y * hw + p]))
                .expect("at least one class");
            correct += usize::from(best == label);
        }
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for (&label, &v) in pair.labels.iter().zip(w.wa.data()) {
            if label < 3 {
                sums[label] += v;
                counts[label] += 1;
            }
        }
        Ok((sums, counts, correct, hw))
    });
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    let (mut correct, mut total) = (0, 0);
    for item in per_item {
        let (s, c, ok, n) = item?;
        for k in 0..3 {
            sums[k] += s[k];
            counts[k] += c[k];
        }
        correct += ok;
        total += n;
    }
    let avg = |k: usize| {
        if counts[k] > 0 {
            sums[k] / counts[k] as f64
        } else {
            f64::NAN
        }
    };
    Ok(EvalSummary {
        accuracy: correct as f64 / total.max(1) as f64,
        wa_target: avg(TARGET),
        wa_texture: avg(TEXTURE),
        wa_background: avg(BACKGROUND),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_sets_partition_small_dataset() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_meta_sets(4, 2, &mut rng).unwrap();
        let mut all: Vec<usize> = s.meta_train.iter().chain(&s.meta_test).copied().collect();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn meta_sets_deterministic_and_checked() {
        let a = sample_meta_sets(10, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_meta_sets(10, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            sample_meta_sets(5, 3, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::DatasetTooSmall { available: 5, meta: 3 })
        ));
    }

    #[test]
    fn every_item_reaches_meta_train() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut seen = [false; 10];
        for _ in 0..1000 {
            let s = sample_meta_sets(10, 2, &mut rng).unwrap();
            assert!(s.meta_train.iter().all(|i| !s.meta_test.contains(i)));
            for &i in &s.meta_train {
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn config_validation_names_constraint() {
        let cfg = TrainConfig {
            meta_steps: 40,
            ..TrainConfig::desk()
        };
        match cfg.validate(64) {
            Err(Error::InvalidConfig(m)) => assert!(m.contains("2*M"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(TrainConfig::desk().validate(64).is_ok());
        assert_eq!(TrainConfig::desk().fusion_steps_for(64), 32);
        assert_eq!(TrainConfig::desk().fusion_steps_for(65), 33);
    }

    #[test]
    fn log_record_format() {
        let r = LogRecord {
            phase: Phase::Fusion,
            step: 3,
            l_f: 0.5,
            l_int: 0.25,
            l_grad: 0.25,
            l_t: 1.0,
            w_mean: 0.5,
            w_min: 0.5,
            w_max: 0.5,
        };
        assert_eq!(
            r.to_string(),
            "phase=fusion step=3 L_f=0.5 L_int=0.25 L_grad=0.25 L_t=1 w_mean=0.5 w_min=0.5 w_max=0.5"
        );
    }
}

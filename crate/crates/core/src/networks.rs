//! The three parametric maps: fusion network, task network and
//! loss-generation network.
//!
//! All three are plain stacks of same-size convolutions (reflect padding)
//! with ReLU between layers. They differ in input/output channels and head:
//!
//! | kind    | input           | output                     |
//! |---------|-----------------|----------------------------|
//! | fusion  | `[I_a; I_b]`    | sigmoid, 1 channel         |
//! | task    | `I_f`           | `C` class logits           |
//! | lossgen | `[I_a; I_b]`    | 2-channel softmax weights  |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{self, ops, Tape, Tensor};
use crate::loss::FusionWeights;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetworkKind {
    Fusion,
    Task,
    LossGen,
}

impl NetworkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Fusion => "fusion",
            NetworkKind::Task => "task",
            NetworkKind::LossGen => "lossgen",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            NetworkKind::Fusion => 0,
            NetworkKind::Task => 1,
            NetworkKind::LossGen => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NetworkKind::Fusion),
            1 => Some(NetworkKind::Task),
            2 => Some(NetworkKind::LossGen),
            _ => None,
        }
    }
}

/// Architecture of one convolution stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSpec {
    pub kind: NetworkKind,
    pub in_channels: usize,
    /// Hidden channel width.
    pub width: usize,
    pub layers: usize,
    /// Square kernel side, odd.
    pub kernel: usize,
    pub out_channels: usize,
}

impl NetSpec {
    pub fn fusion(width: usize, layers: usize, kernel: usize) -> Self {
        Self {
            kind: NetworkKind::Fusion,
            in_channels: 2,
            width,
            layers,
            kernel,
            out_channels: 1,
        }
    }

    pub fn task(width: usize, layers: usize, kernel: usize, classes: usize) -> Self {
        Self {
            kind: NetworkKind::Task,
            in_channels: 1,
            width,
            layers,
            kernel,
            out_channels: classes,
        }
    }

    pub fn lossgen(width: usize, layers: usize, kernel: usize) -> Self {
        Self {
            kind: NetworkKind::LossGen,
            in_channels: 2,
            width,
            layers,
            kernel,
            out_channels: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("{} network: {m}", self.kind.as_str())));
        if self.width == 0 || self.layers == 0 || self.kernel == 0 {
            return bad("width, layers and kernel must be positive");
        }
        if self.kernel.is_multiple_of(2) {
            return bad("kernel size must be odd");
        }
        let (inputs, outputs_ok) = match self.kind {
            NetworkKind::Fusion => (2, self.out_channels == 1),
            NetworkKind::Task => (1, self.out_channels >= 2),
            NetworkKind::LossGen => (2, self.out_channels == 2),
        };
        if self.in_channels != inputs || !outputs_ok {
            return bad("channel counts do not match the network kind");
        }
        Ok(())
    }

    /// `(in, out)` channels of each layer.
    pub fn layer_channels(&self) -> Vec<(usize, usize)> {
        (0..self.layers)
            .map(|i| {
                let cin = if i == 0 { self.in_channels } else { self.width };
                let cout = if i + 1 == self.layers {
                    self.out_channels
                } else {
                    self.width
                };
                (cin, cout)
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_channels()
            .iter()
            .map(|&(i, o)| o * i * self.kernel * self.kernel + o)
            .sum()
    }
}

/// Named, ordered trainable tensors of one network.
#[derive(Clone, Debug)]
pub struct ParamSet {
    kind: NetworkKind,
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new(kind: NetworkKind, entries: Vec<(String, Tensor)>) -> Result<Self> {
        for (i, (name, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidSpec(format!("duplicate parameter name {name}")));
            }
        }
        Ok(Self { kind, entries })
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn entries(&self) -> &[(String, Tensor)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.entries.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Same names, new tensors (shapes must match).
    pub fn with_tensors(&self, tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.len() != self.entries.len() {
            return Err(Error::Misaligned {
                params: self.entries.len(),
                grads: tensors.len(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(tensors)
            .map(|((name, old), t)| {
                if old.shape() != t.shape() {
                    return Err(Error::ShapeMismatch {
                        op: "param_set",
                        lhs: old.shape().to_vec(),
                        rhs: t.shape().to_vec(),
                    });
                }
                Ok((name.clone(), t))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: self.kind,
            entries,
        })
    }

    /// Registers every tensor as a fresh leaf on `tape`.
    pub fn attach(&self, tape: &Tape) -> Self {
        Self {
            kind: self.kind,
            entries: self.entries.iter().map(|(n, t)| (n.clone(), tape.var(t))).collect(),
        }
    }

    pub fn detach(&self) -> Self {
        Self {
            kind: self.kind,
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.detach())).collect(),
        }
    }

    pub fn all_tracked(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_tracked())
    }

    /// `θ − lr·g` for every entry; see [`autodiff::sgd_step`].
    pub fn sgd_step(&self, grads: &[Tensor], lr: f64, differentiable: bool) -> Result<Self> {
        let stepped = autodiff::sgd_step(&self.tensors(), grads, lr, differentiable)?;
        self.with_tensors(stepped)
    }

    /// All values concatenated in entry order.
    pub fn flatten(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|(_, t)| t.data().iter().copied())
            .collect()
    }

    /// Inverse of [`ParamSet::flatten`]; produces constants.
    pub fn from_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::Misaligned {
                params: self.num_params(),
                grads: flat.len(),
            });
        }
        let mut offset = 0;
        let tensors = self
            .entries
            .iter()
            .map(|(_, t)| {
                let n = t.numel();
                let out = Tensor::new(t.shape().to_vec(), flat[offset..offset + n].to_vec());
                offset += n;
                out
            })
            .collect::<Result<_>>()?;
        self.with_tensors(tensors)
    }

    /// Little-endian bytes of every value, in entry order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|(_, t)| t.to_le_bytes()).collect()
    }

    /// Bit-level equality of names, shapes and values.
    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.kind == other.kind
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((na, a), (nb, b))| na == nb && a.shape() == b.shape() && a.to_le_bytes() == b.to_le_bytes())
    }
}

/// Fan-in scaled uniform initialization, deterministic in `seed`. The final
/// layer of a loss-generation network starts at zero, so its first weights
/// are exactly one half everywhere.
pub fn init_params(spec: &NetSpec, seed: u64) -> Result<ParamSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.kernel;
    let layers = spec.layer_channels();
    let mut entries = Vec::with_capacity(2 * layers.len());
    for (i, &(cin, cout)) in layers.iter().enumerate() {
        let zero = spec.kind == NetworkKind::LossGen && i + 1 == layers.len();
        let bound = 1.0 / ((cin * k * k) as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            if zero {
                vec![0.0; n]
            } else {
                (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
            }
        };
        let w = draw(cout * cin * k * k);
        let b = draw(cout);
        entries.push((format!("conv{i}.weight"), Tensor::new(vec![cout, cin, k, k], w)?));
        entries.push((format!("conv{i}.bias"), Tensor::new(vec![cout], b)?));
    }
    ParamSet::new(spec.kind, entries)
}

/// Runs the convolution stack on `x: [c, h, w]`, returning the raw output of
/// the last layer.
fn stack(params: &ParamSet, x: &Tensor) -> Result<Tensor> {
    let entries = params.entries();
    if entries.is_empty() || !entries.len().is_multiple_of(2) {
        return Err(Error::InvalidSpec("parameter set is not a conv stack".into()));
    }
    let layers = entries.len() / 2;
    let mut h = x.clone();
    for i in 0..layers {
        let w = &entries[2 * i].1;
        let b = &entries[2 * i + 1].1;
        h = ops::conv2d(&h, w, Some(b))?;
        if i + 1 < layers {
            h = ops::relu(&h)?;
        }
    }
    Ok(h)
}

fn check_pair(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() || a.shape().len() != 3 || a.shape()[0] != 1 {
        return Err(Error::ShapeMismatch {
            op: "image_pair",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// Fused image `[1, h, w]` in `[0, 1]`.
pub fn fuse(ia: &Tensor, ib: &Tensor, fusion: &ParamSet) -> Result<Tensor> {
    check_pair(ia, ib)?;
    let x = ops::concat_channels(&[ia, ib])?;
    ops::sigmoid(&stack(fusion, &x)?)
}

/// Per-pixel class logits `[C, h, w]` for a fused image `[1, h, w]`.
pub fn task_forward(fused: &Tensor, task: &ParamSet) -> Result<Tensor> {
    if fused.shape().len() != 3 || fused.shape()[0] != 1 {
        return Err(Error::ShapeMismatch {
            op: "task_forward",
            lhs: fused.shape().to_vec(),
            rhs: vec![1, 0, 0],
        });
    }
    stack(task, fused)
}

/// Per-pixel intensity weights on the simplex, from a 2-channel softmax.
pub fn gen_weights(ia: &Tensor, ib: &Tensor, lossgen: &ParamSet) -> Result<FusionWeights> {
    check_pair(ia, ib)?;
    let x = ops::concat_channels(&[ia, ib])?;
    let logits = stack(lossgen, &x)?;
    if logits.shape()[0] != 2 {
        return Err(Error::InvalidSpec("loss generation head must have 2 channels".into()));
    }
    let w = ops::softmax_channels(&logits)?;
    Ok(FusionWeights {
        wa: ops::slice_channels(&w, 0, 1)?,
        wb: ops::slice_channels(&w, 1, 1)?,
    })
}

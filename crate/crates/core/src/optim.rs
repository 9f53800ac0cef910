//! First-order optimizers for the outer and fusion phases.
//!
//! The inner step is always the differentiable plain-descent step of
//! [`ParamSet::sgd_step`]; these optimizers never record on a tape.

use crate::{Error, ParamSet, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::InvalidConfig(format!(
                "unknown optimizer {s:?} (expected sgd or adam)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
struct AdamState {
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    adam: Option<AdamState>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self { kind, lr, adam: None }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Applies one update and returns the new (constant) parameters.
    pub fn step(&mut self, params: &ParamSet, grads: &[Tensor]) -> Result<ParamSet> {
        match self.kind {
            OptimizerKind::Sgd => params.detach().sgd_step(grads, self.lr, false),
            OptimizerKind::Adam => {
                let n = params.num_params();
                let g: Vec<f64> = grads.iter().flat_map(|t| t.data().iter().copied()).collect();
                if g.len() != n {
                    return Err(Error::Misaligned {
                        params: n,
                        grads: g.len(),
                    });
                }
                let st = self.adam.get_or_insert_with(|| AdamState {
                    t: 0,
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                });
                st.t += 1;
                let c1 = 1.0 - BETA1.powi(st.t);
                let c2 = 1.0 - BETA2.powi(st.t);
                let mut flat = params.flatten();
                for i in 0..n {
                    st.m[i] = BETA1 * st.m[i] + (1.0 - BETA1) * g[i];
                    st.v[i] = BETA2 * st.v[i] + (1.0 - BETA2) * g[i] * g[i];
                    let mh = st.m[i] / c1;
                    let vh = st.v[i] / c2;
                    flat[i] -= self.lr * mh / (vh.sqrt() + EPS);
                }
                params.from_flat(&flat)
            }
        }
    }
}

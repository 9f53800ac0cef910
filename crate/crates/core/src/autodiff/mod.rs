//! Reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! Operations on tensors that live on a [`Tape`] append nodes to it. [`grad`]
//! walks the tape backwards. With `retain` set, the backward pass is built
//! from the same differentiable operations against the tape-resident inputs,
//! so the returned gradients are themselves on the tape and can be
//! differentiated again. Without `retain` it appends nothing.

pub(crate) mod kernels;
pub mod ops;
mod tensor;

use std::collections::HashSet;

pub use ops::*;
pub use tensor::{Tape, Tensor};

use ops::Op;
use tensor::NodeRef;

use crate::{Error, Result};

/// Gradients of the scalar `output` with respect to each tensor in `wrt`.
///
/// Tensors in `wrt` that `output` does not depend on (including constants)
/// get a zero gradient of their own shape.
pub fn grad(output: &Tensor, wrt: &[Tensor], retain: bool) -> Result<Vec<Tensor>> {
    if output.numel() != 1 {
        return Err(Error::NotScalar(output.shape().to_vec()));
    }
    let root = output.node.as_ref().ok_or(Error::NotOnTape)?;
    let tape = root.tape.clone();
    let n = root.id;

    let mut targets = HashSet::new();
    for t in wrt {
        if let Some(node) = &t.node {
            if !node.tape.same(&tape) {
                return Err(Error::TapeMismatch("grad"));
            }
            if node.id <= n {
                targets.insert(node.id);
            }
        }
    }

    // Nodes that depend on at least one target; everything else is constant here.
    let mut live = vec![false; n + 1];
    {
        let nodes = tape.lock();
        for id in 0..=n {
            live[id] = targets.contains(&id) || nodes[id].inputs.iter().any(|i| i.id.is_some_and(|p| live[p]));
        }
    }

    let mut grads: Vec<Option<Tensor>> = vec![None; n + 1];
    grads[n] = Some(Tensor::full(output.shape().to_vec(), 1.0));
    let node_ref = |id: Option<usize>| -> Option<NodeRef> {
        if retain {
            id.map(|id| NodeRef { tape: tape.clone(), id })
        } else {
            None
        }
    };

    for id in (0..=n).rev() {
        if !live[id] {
            continue;
        }
        let g = if targets.contains(&id) {
            grads[id].clone()
        } else {
            grads[id].take()
        };
        let Some(g) = g else { continue };
        let (op, inputs, value) = {
            let nodes = tape.lock();
            let node = &nodes[id];
            (node.op.clone(), node.inputs.clone(), node.value.clone())
        };
        if matches!(op, Op::Leaf) {
            continue;
        }
        let needs: Vec<bool> = inputs.iter().map(|i| i.id.is_some_and(|p| live[p])).collect();
        let in_t: Vec<Tensor> = inputs
            .iter()
            .map(|i| Tensor::from_value(&i.value, node_ref(i.id)))
            .collect();
        let out_t = Tensor::from_value(&value, node_ref(Some(id)));
        let g = if retain { g } else { g.detach() };
        let contributions = ops::backward(&op, &in_t, &out_t, &g, &needs)?;
        for (input, c) in inputs.iter().zip(contributions) {
            if let (Some(pid), Some(c)) = (input.id, c) {
                grads[pid] = Some(match grads[pid].take() {
                    Some(acc) => ops::add(&acc, &c)?,
                    None => c,
                });
            }
        }
    }

    Ok(wrt
        .iter()
        .map(|t| {
            t.node_id()
                .filter(|id| targets.contains(id))
                .and_then(|id| grads[id].clone())
                .unwrap_or_else(|| Tensor::zeros(t.shape().to_vec()))
        })
        .collect())
}

/// One gradient-descent step `p - lr * g` per parameter.
///
/// With `differentiable` the results are recorded on the tape as functions of
/// both the parameters and the gradients. Otherwise they are constants.
pub fn sgd_step(params: &[Tensor], grads: &[Tensor], lr: f64, differentiable: bool) -> Result<Vec<Tensor>> {
    if params.len() != grads.len() {
        return Err(Error::Misaligned {
            params: params.len(),
            grads: grads.len(),
        });
    }
    params
        .iter()
        .zip(grads)
        .map(|(p, g)| {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    op: "sgd_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if differentiable {
                ops::sub(p, &ops::scale(g, lr)?)
            } else {
                let data = p.data().iter().zip(g.data()).map(|(a, b)| a - lr * b).collect();
                Tensor::new(p.shape().to_vec(), data)
            }
        })
        .collect()
}

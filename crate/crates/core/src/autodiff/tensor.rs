use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use super::ops::Op;
use crate::{Error, Result};

/// Shape and payload of a computed value, without any tape linkage.
#[derive(Clone)]
pub(crate) struct Value {
    pub shape: Vec<usize>,
    pub data: Arc<Vec<f64>>,
}

/// An operation input as remembered by the tape.
#[derive(Clone)]
pub(crate) struct Input {
    pub id: Option<usize>,
    pub value: Value,
}

pub(crate) struct Node {
    pub op: Op,
    pub inputs: Vec<Input>,
    pub value: Value,
}

/// Append-only record of operations.
///
/// A tape is cheap to clone; clones share the same node list. Build a fresh
/// tape per training step and drop it afterwards.
#[derive(Clone, Default)]
pub struct Tape {
    nodes: Arc<Mutex<Vec<Node>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers `t`'s value as a new leaf on this tape.
    pub fn var(&self, t: &Tensor) -> Tensor {
        let value = t.value();
        let id = self.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value: value.clone(),
        });
        Tensor {
            shape: value.shape,
            data: value.data,
            node: Some(NodeRef { tape: self.clone(), id }),
        }
    }

    pub(crate) fn lock(&self) -> MutexGuard<'_, Vec<Node>> {
        self.nodes.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn push(&self, node: Node) -> usize {
        let mut nodes = self.lock();
        nodes.push(node);
        nodes.len() - 1
    }

    pub(crate) fn same(&self, other: &Tape) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes)
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tape({} nodes)", self.len())
    }
}

#[derive(Clone)]
pub(crate) struct NodeRef {
    pub tape: Tape,
    pub id: usize,
}

/// Dense row-major array of `f64`, optionally recorded on a [`Tape`].
///
/// Tensors are immutable; every op returns a new tensor. A tensor without a
/// tape node is a constant.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Arc<Vec<f64>>,
    pub(crate) node: Option<NodeRef>,
}

impl Tensor {
    /// Creates a constant, checking length and finiteness.
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) || numel != data.len() {
            return Err(Error::ShapeMismatch {
                op: "tensor",
                lhs: shape,
                rhs: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor"));
        }
        Ok(Self::from_parts(shape, data))
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            shape,
            data: Arc::new(data),
            node: None,
        }
    }

    pub(crate) fn from_value(value: &Value, node: Option<NodeRef>) -> Self {
        Self {
            shape: value.shape.clone(),
            data: value.data.clone(),
            node,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self::from_parts(vec![1], vec![v])
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: impl Into<Vec<usize>>, v: f64) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self::from_parts(shape, vec![v; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<f64> {
        if self.numel() == 1 {
            Ok(self.data[0])
        } else {
            Err(Error::NotScalar(self.shape.clone()))
        }
    }

    /// Whether this tensor is recorded on a tape.
    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    pub fn tape(&self) -> Option<&Tape> {
        self.node.as_ref().map(|n| &n.tape)
    }

    /// A constant copy sharing the same payload.
    pub fn detach(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: None,
        }
    }

    /// Same values with a new shape of equal element count.
    pub fn reshape_const(&self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        Self::new(shape, self.data.to_vec())
    }

    pub(crate) fn value(&self) -> Value {
        Value {
            shape: self.shape.clone(),
            data: self.data.clone(),
        }
    }

    pub(crate) fn node_id(&self) -> Option<usize> {
        self.node.as_ref().map(|n| n.id)
    }

    /// Raw bytes of the payload in little-endian order, for equality checks.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Tensor");
        s.field("shape", &self.shape);
        if self.numel() <= 8 {
            s.field("data", &self.data);
        }
        s.field("node", &self.node_id()).finish()
    }
}

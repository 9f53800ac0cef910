//! Differentiable tensor operations.
//!
//! Every backward rule is itself written with these operations, so when the
//! inputs and upstream gradient live on a tape the gradient computation is
//! recorded too. That is what makes gradients of gradients available.

use std::cell::Cell;
use std::sync::Arc;

use super::kernels;
use super::tensor::{Input, Node, NodeRef, Tape, Tensor, Value};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar,
    Square,
    Abs,
    Maximum,
    Relu,
    Sigmoid,
    Sum,
    ExpandScalar,
    MatMul,
    Transpose,
    PadReflect(usize),
    PadReflectAdjoint(usize),
    ConvValid,
    ConvInputGrad,
    ConvWeightGrad,
    SumPixels,
    ExpandPixels,
    SumChannels,
    ExpandChannels,
    SliceChannels { start: usize },
    EmbedChannels { start: usize },
    Concat,
    SoftmaxChannels,
    CrossEntropy(Arc<Vec<usize>>),
}

thread_local! {
    static CORRUPT_SIGMOID: Cell<bool> = const { Cell::new(false) };
}

/// Test hook: when enabled on the current thread, the sigmoid backward rule
/// is scaled by 1.5. Used as a negative control for gradient checks.
pub fn set_corrupt_sigmoid_backward(on: bool) {
    CORRUPT_SIGMOID.with(|c| c.set(on));
}

fn corrupt_sigmoid() -> bool {
    CORRUPT_SIGMOID.with(|c| c.get())
}

fn record(op: Op, name: &'static str, inputs: &[&Tensor], shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    let mut tape: Option<&Tape> = None;
    for t in inputs {
        if let Some(n) = &t.node {
            match tape {
                None => tape = Some(&n.tape),
                Some(tp) if !tp.same(&n.tape) => return Err(Error::TapeMismatch(name)),
                Some(_) => {}
            }
        }
    }
    let value = Value {
        shape,
        data: Arc::new(data),
    };
    let node = tape.map(|tape| {
        let id = tape.push(Node {
            op,
            inputs: inputs
                .iter()
                .map(|t| Input {
                    id: t.node_id(),
                    value: t.value(),
                })
                .collect(),
            value: value.clone(),
        });
        NodeRef { tape: tape.clone(), id }
    });
    Ok(Tensor::from_value(&value, node))
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.shape.clone(),
        rhs: b.shape.clone(),
    }
}

fn rank3(op: &'static str, t: &Tensor) -> Result<[usize; 3]> {
    match t.shape[..] {
        [c, h, w] => Ok([c, h, w]),
        _ => Err(Error::ShapeMismatch {
            op,
            lhs: t.shape.clone(),
            rhs: vec![0, 0, 0],
        }),
    }
}

fn is_unit(t: &Tensor) -> bool {
    t.shape == [1]
}

fn broadcast(op: &'static str, a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<(Vec<usize>, Vec<f64>)> {
    if a.shape == b.shape {
        let data = a.data.iter().zip(b.data.iter()).map(|(&x, &y)| f(x, y)).collect();
        Ok((a.shape.clone(), data))
    } else if is_unit(b) {
        let y = b.data[0];
        Ok((a.shape.clone(), a.data.iter().map(|&x| f(x, y)).collect()))
    } else if is_unit(a) {
        let x = a.data[0];
        Ok((b.shape.clone(), b.data.iter().map(|&y| f(x, y)).collect()))
    } else {
        Err(mismatch(op, a, b))
    }
}

fn unary(op: Op, name: &'static str, a: &Tensor, f: impl Fn(f64) -> f64) -> Result<Tensor> {
    let data = a.data.iter().map(|&x| f(x)).collect();
    record(op, name, &[a], a.shape.clone(), data)
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (shape, data) = broadcast("add", a, b, |x, y| x + y)?;
    record(Op::Add, "add", &[a, b], shape, data)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (shape, data) = broadcast("sub", a, b, |x, y| x - y)?;
    record(Op::Sub, "sub", &[a, b], shape, data)
}

/// Element-wise product; either side may be a `[1]` scalar.
pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (shape, data) = broadcast("mul", a, b, |x, y| x * y)?;
    record(Op::Mul, "mul", &[a, b], shape, data)
}

pub fn scale(a: &Tensor, c: f64) -> Result<Tensor> {
    unary(Op::Scale(c), "scale", a, |x| c * x)
}

pub fn add_scalar(a: &Tensor, c: f64) -> Result<Tensor> {
    unary(Op::AddScalar, "add_scalar", a, |x| x + c)
}

pub fn square(a: &Tensor) -> Result<Tensor> {
    unary(Op::Square, "square", a, |x| x * x)
}

pub fn abs(a: &Tensor) -> Result<Tensor> {
    unary(Op::Abs, "abs", a, f64::abs)
}

pub fn relu(a: &Tensor) -> Result<Tensor> {
    unary(Op::Relu, "relu", a, |x| if x > 0.0 { x } else { 0.0 })
}

pub fn sigmoid(a: &Tensor) -> Result<Tensor> {
    unary(Op::Sigmoid, "sigmoid", a, |x| {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    })
}

/// Element-wise maximum of two equally shaped tensors. Ties route the
/// gradient to `a`.
pub fn maximum(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape != b.shape {
        return Err(mismatch("maximum", a, b));
    }
    let data = a.data.iter().zip(b.data.iter()).map(|(&x, &y)| x.max(y)).collect();
    record(Op::Maximum, "maximum", &[a, b], a.shape.clone(), data)
}

/// Sum of all elements, shape `[1]`.
pub fn sum(a: &Tensor) -> Result<Tensor> {
    let s = a.data.iter().sum();
    record(Op::Sum, "sum", &[a], vec![1], vec![s])
}

pub fn mean(a: &Tensor) -> Result<Tensor> {
    scale(&sum(a)?, 1.0 / a.numel() as f64)
}

/// Repeats a `[1]` scalar into `shape`.
pub fn expand_scalar(a: &Tensor, shape: &[usize]) -> Result<Tensor> {
    if !is_unit(a) {
        return Err(Error::NotScalar(a.shape.clone()));
    }
    let n = shape.iter().product();
    record(
        Op::ExpandScalar,
        "expand_scalar",
        &[a],
        shape.to_vec(),
        vec![a.data[0]; n],
    )
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    match (&a.shape[..], &b.shape[..]) {
        (&[m, k], &[k2, n]) if k == k2 => {
            let data = kernels::matmul(&a.data, &b.data, m, k, n);
            record(Op::MatMul, "matmul", &[a, b], vec![m, n], data)
        }
        _ => Err(mismatch("matmul", a, b)),
    }
}

pub fn transpose(a: &Tensor) -> Result<Tensor> {
    match a.shape[..] {
        [m, n] => record(
            Op::Transpose,
            "transpose",
            &[a],
            vec![n, m],
            kernels::transpose(&a.data, m, n),
        ),
        _ => Err(Error::ShapeMismatch {
            op: "transpose",
            lhs: a.shape.clone(),
            rhs: vec![0, 0],
        }),
    }
}

/// Reflect-pads every `[h, w]` plane of a `[c, h, w]` tensor by `p` pixels.
pub fn pad_reflect(x: &Tensor, p: usize) -> Result<Tensor> {
    let [c, h, w] = rank3("pad_reflect", x)?;
    if p >= h || p >= w {
        return Err(Error::ShapeMismatch {
            op: "pad_reflect",
            lhs: x.shape.clone(),
            rhs: vec![p],
        });
    }
    let data = kernels::pad_reflect(&x.data, [c, h, w], p);
    record(
        Op::PadReflect(p),
        "pad_reflect",
        &[x],
        vec![c, h + 2 * p, w + 2 * p],
        data,
    )
}

pub fn pad_reflect_adjoint(g: &Tensor, p: usize) -> Result<Tensor> {
    let [c, ph, pw] = rank3("pad_reflect_adjoint", g)?;
    if ph < 3 * p + 1 || pw < 3 * p + 1 {
        return Err(Error::ShapeMismatch {
            op: "pad_reflect_adjoint",
            lhs: g.shape.clone(),
            rhs: vec![p],
        });
    }
    let xs = [c, ph - 2 * p, pw - 2 * p];
    let data = kernels::pad_reflect_adjoint(&g.data, xs, p);
    record(Op::PadReflectAdjoint(p), "pad_reflect_adjoint", &[g], xs.to_vec(), data)
}

fn kernel4(op: &'static str, k: &Tensor) -> Result<[usize; 4]> {
    match k.shape[..] {
        [o, c, kh, kw] => Ok([o, c, kh, kw]),
        _ => Err(Error::ShapeMismatch {
            op,
            lhs: k.shape.clone(),
            rhs: vec![0, 0, 0, 0],
        }),
    }
}

/// Valid cross-correlation of `x: [c, h, w]` with `k: [o, c, kh, kw]`.
pub fn conv2d_valid(x: &Tensor, k: &Tensor) -> Result<Tensor> {
    let xs = rank3("conv2d", x)?;
    let ks = kernel4("conv2d", k)?;
    if xs[0] != ks[1] || ks[2] > xs[1] || ks[3] > xs[2] {
        return Err(mismatch("conv2d", x, k));
    }
    let data = kernels::conv_valid(&x.data, xs, &k.data, ks);
    let shape = vec![ks[0], xs[1] + 1 - ks[2], xs[2] + 1 - ks[3]];
    record(Op::ConvValid, "conv2d", &[x, k], shape, data)
}

/// Gradient of [`conv2d_valid`] with respect to its input, as an op.
pub fn conv2d_input_grad(g: &Tensor, k: &Tensor) -> Result<Tensor> {
    let gs = rank3("conv2d_input_grad", g)?;
    let ks = kernel4("conv2d_input_grad", k)?;
    if gs[0] != ks[0] {
        return Err(mismatch("conv2d_input_grad", g, k));
    }
    let data = kernels::conv_input_grad(&g.data, gs, &k.data, ks);
    let shape = vec![ks[1], gs[1] + ks[2] - 1, gs[2] + ks[3] - 1];
    record(Op::ConvInputGrad, "conv2d_input_grad", &[g, k], shape, data)
}

/// Gradient of [`conv2d_valid`] with respect to its kernel, as an op.
pub fn conv2d_weight_grad(x: &Tensor, g: &Tensor) -> Result<Tensor> {
    let xs = rank3("conv2d_weight_grad", x)?;
    let gs = rank3("conv2d_weight_grad", g)?;
    if gs[1] > xs[1] || gs[2] > xs[2] {
        return Err(mismatch("conv2d_weight_grad", x, g));
    }
    let data = kernels::conv_weight_grad(&x.data, xs, &g.data, gs);
    let shape = vec![gs[0], xs[0], xs[1] + 1 - gs[1], xs[2] + 1 - gs[2]];
    record(Op::ConvWeightGrad, "conv2d_weight_grad", &[x, g], shape, data)
}

/// Same-size convolution: reflect padding of `kh / 2`, then valid
/// cross-correlation, then an optional per-channel bias.
pub fn conv2d(x: &Tensor, k: &Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
    let ks = kernel4("conv2d", k)?;
    if ks[2] != ks[3] || ks[2] % 2 == 0 {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            lhs: k.shape.clone(),
            rhs: vec![ks[2], ks[2]],
        });
    }
    let p = ks[2] / 2;
    let padded;
    let input = if p > 0 {
        padded = pad_reflect(x, p)?;
        &padded
    } else {
        x
    };
    let y = conv2d_valid(input, k)?;
    match bias {
        Some(b) => {
            let [_, h, w] = rank3("conv2d", &y)?;
            add(&y, &expand_pixels(b, h, w)?)
        }
        None => Ok(y),
    }
}

/// `[c, h, w] -> [c]`.
pub fn sum_pixels(x: &Tensor) -> Result<Tensor> {
    let [c, h, w] = rank3("sum_pixels", x)?;
    let data = x.data.chunks(h * w).map(|p| p.iter().sum()).collect();
    record(Op::SumPixels, "sum_pixels", &[x], vec![c], data)
}

/// `[c] -> [c, h, w]`, each channel value repeated over the plane.
pub fn expand_pixels(b: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    if b.shape.len() != 1 {
        return Err(Error::ShapeMismatch {
            op: "expand_pixels",
            lhs: b.shape.clone(),
            rhs: vec![0],
        });
    }
    let c = b.shape[0];
    let data = b.data.iter().flat_map(|&v| std::iter::repeat_n(v, h * w)).collect();
    record(Op::ExpandPixels, "expand_pixels", &[b], vec![c, h, w], data)
}

/// `[c, h, w] -> [1, h, w]`.
pub fn sum_channels(x: &Tensor) -> Result<Tensor> {
    let [_, h, w] = rank3("sum_channels", x)?;
    let mut data = vec![0.0; h * w];
    for plane in x.data.chunks(h * w) {
        for (d, s) in data.iter_mut().zip(plane) {
            *d += s;
        }
    }
    record(Op::SumChannels, "sum_channels", &[x], vec![1, h, w], data)
}

/// `[1, h, w] -> [c, h, w]`.
pub fn expand_channels(x: &Tensor, c: usize) -> Result<Tensor> {
    let [one, h, w] = rank3("expand_channels", x)?;
    if one != 1 {
        return Err(Error::ShapeMismatch {
            op: "expand_channels",
            lhs: x.shape.clone(),
            rhs: vec![1, h, w],
        });
    }
    let data = (0..c).flat_map(|_| x.data.iter().copied()).collect();
    record(Op::ExpandChannels, "expand_channels", &[x], vec![c, h, w], data)
}

/// Channels `start..start + len` of a `[c, h, w]` tensor.
pub fn slice_channels(x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
    let [c, h, w] = rank3("slice_channels", x)?;
    if len == 0 || start + len > c {
        return Err(Error::ShapeMismatch {
            op: "slice_channels",
            lhs: x.shape.clone(),
            rhs: vec![start, len],
        });
    }
    let data = x.data[start * h * w..(start + len) * h * w].to_vec();
    record(
        Op::SliceChannels { start },
        "slice_channels",
        &[x],
        vec![len, h, w],
        data,
    )
}

/// Places `x` at channel offset `start` of a zero `[total, h, w]` tensor.
pub fn embed_channels(x: &Tensor, start: usize, total: usize) -> Result<Tensor> {
    let [c, h, w] = rank3("embed_channels", x)?;
    if start + c > total {
        return Err(Error::ShapeMismatch {
            op: "embed_channels",
            lhs: x.shape.clone(),
            rhs: vec![start, total],
        });
    }
    let mut data = vec![0.0; total * h * w];
    data[start * h * w..(start + c) * h * w].copy_from_slice(&x.data);
    record(
        Op::EmbedChannels { start },
        "embed_channels",
        &[x],
        vec![total, h, w],
        data,
    )
}

/// Stacks `[c_i, h, w]` tensors along the channel axis.
pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or(Error::InvalidSpec("empty concat".into()))?;
    let [_, h, w] = rank3("concat", first)?;
    let mut total = 0;
    let mut data = Vec::new();
    for p in parts {
        let [c, ph, pw] = rank3("concat", p)?;
        if (ph, pw) != (h, w) {
            return Err(mismatch("concat", first, p));
        }
        total += c;
        data.extend_from_slice(&p.data);
    }
    record(Op::Concat, "concat", parts, vec![total, h, w], data)
}

/// Per-pixel softmax across channels of `[c, h, w]`.
pub fn softmax_channels(x: &Tensor) -> Result<Tensor> {
    let [c, h, w] = rank3("softmax_channels", x)?;
    let data = kernels::softmax_channels(&x.data, c, h * w);
    record(Op::SoftmaxChannels, "softmax_channels", &[x], x.shape.clone(), data)
}

/// Mean per-pixel cross-entropy of `[c, h, w]` logits against `h * w` labels.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let [c, h, w] = rank3("cross_entropy", logits)?;
    if labels.len() != h * w {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            lhs: logits.shape.clone(),
            rhs: vec![labels.len()],
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::LabelOutOfRange { label, classes: c });
    }
    let v = kernels::cross_entropy(&logits.data, c, h * w, labels);
    record(
        Op::CrossEntropy(Arc::new(labels.to_vec())),
        "cross_entropy",
        &[logits],
        vec![1],
        vec![v],
    )
}

fn reduce_to(g: Tensor, shape: &[usize]) -> Result<Tensor> {
    if g.shape == shape {
        Ok(g)
    } else {
        sum(&g)
    }
}

fn constant_map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(x.shape.clone(), x.data.iter().map(|&v| f(v)).collect())
}

/// Contributions of `g` (the gradient at `out`) to each input of `op`.
/// Only entries with `needs[i]` set are computed.
pub(crate) fn backward(
    op: &Op,
    inputs: &[Tensor],
    out: &Tensor,
    g: &Tensor,
    needs: &[bool],
) -> Result<Vec<Option<Tensor>>> {
    let want = |i: usize| needs.get(i).copied().unwrap_or(false);
    let mut res: Vec<Option<Tensor>> = vec![None; inputs.len()];
    match op {
        Op::Leaf => {}
        Op::Add => {
            for (i, inp) in inputs.iter().enumerate() {
                if want(i) {
                    res[i] = Some(reduce_to(g.clone(), &inp.shape)?);
                }
            }
        }
        Op::Sub => {
            if want(0) {
                res[0] = Some(reduce_to(g.clone(), &inputs[0].shape)?);
            }
            if want(1) {
                res[1] = Some(reduce_to(scale(g, -1.0)?, &inputs[1].shape)?);
            }
        }
        Op::Mul => {
            if want(0) {
                res[0] = Some(reduce_to(mul(g, &inputs[1])?, &inputs[0].shape)?);
            }
            if want(1) {
                res[1] = Some(reduce_to(mul(g, &inputs[0])?, &inputs[1].shape)?);
            }
        }
        Op::Scale(c) => res[0] = Some(scale(g, *c)?),
        Op::AddScalar => res[0] = Some(g.clone()),
        Op::Square => res[0] = Some(mul(g, &scale(&inputs[0], 2.0)?)?),
        Op::Abs => {
            let sign = constant_map(&inputs[0], |v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            });
            res[0] = Some(mul(g, &sign)?);
        }
        Op::Relu => {
            let mask = constant_map(&inputs[0], |v| if v > 0.0 { 1.0 } else { 0.0 });
            res[0] = Some(mul(g, &mask)?);
        }
        Op::Sigmoid => {
            // y * (1 - y) * g
            let one_minus = add_scalar(&scale(out, -1.0)?, 1.0)?;
            let mut d = mul(g, &mul(out, &one_minus)?)?;
            if corrupt_sigmoid() {
                d = scale(&d, 1.5)?;
            }
            res[0] = Some(d);
        }
        Op::Maximum => {
            let (a, b) = (&inputs[0], &inputs[1]);
            let mask_a: Vec<f64> = a
                .data
                .iter()
                .zip(b.data.iter())
                .map(|(x, y)| if x >= y { 1.0 } else { 0.0 })
                .collect();
            if want(1) {
                let mask_b = Tensor::from_parts(a.shape.clone(), mask_a.iter().map(|m| 1.0 - m).collect());
                res[1] = Some(mul(g, &mask_b)?);
            }
            if want(0) {
                res[0] = Some(mul(g, &Tensor::from_parts(a.shape.clone(), mask_a))?);
            }
        }
        Op::Sum => res[0] = Some(expand_scalar(g, &inputs[0].shape)?),
        Op::ExpandScalar => res[0] = Some(sum(g)?),
        Op::MatMul => {
            if want(0) {
                res[0] = Some(matmul(g, &transpose(&inputs[1])?)?);
            }
            if want(1) {
                res[1] = Some(matmul(&transpose(&inputs[0])?, g)?);
            }
        }
        Op::Transpose => res[0] = Some(transpose(g)?),
        Op::PadReflect(p) => res[0] = Some(pad_reflect_adjoint(g, *p)?),
        Op::PadReflectAdjoint(p) => res[0] = Some(pad_reflect(g, *p)?),
        // All three conv ops are slices of the trilinear form
        // T(x, k, g) = sum x[c, i+u, j+v] k[o, c, u, v] g[o, i, j],
        // so each one's derivatives are the other two.
        Op::ConvValid => {
            let (x, k) = (&inputs[0], &inputs[1]);
            if want(0) {
                res[0] = Some(conv2d_input_grad(g, k)?);
            }
            if want(1) {
                res[1] = Some(conv2d_weight_grad(x, g)?);
            }
        }
        Op::ConvInputGrad => {
            let (gy, k) = (&inputs[0], &inputs[1]);
            if want(0) {
                res[0] = Some(conv2d_valid(g, k)?);
            }
            if want(1) {
                res[1] = Some(conv2d_weight_grad(g, gy)?);
            }
        }
        Op::ConvWeightGrad => {
            let (x, gy) = (&inputs[0], &inputs[1]);
            if want(0) {
                res[0] = Some(conv2d_input_grad(gy, g)?);
            }
            if want(1) {
                res[1] = Some(conv2d_valid(x, g)?);
            }
        }
        Op::SumPixels => {
            let [_, h, w] = rank3("sum_pixels", &inputs[0])?;
            res[0] = Some(expand_pixels(g, h, w)?);
        }
        Op::ExpandPixels => res[0] = Some(sum_pixels(g)?),
        Op::SumChannels => res[0] = Some(expand_channels(g, inputs[0].shape[0])?),
        Op::ExpandChannels => res[0] = Some(sum_channels(g)?),
        Op::SliceChannels { start } => {
            res[0] = Some(embed_channels(g, *start, inputs[0].shape[0])?);
        }
        Op::EmbedChannels { start } => {
            res[0] = Some(slice_channels(g, *start, inputs[0].shape[0])?);
        }
        Op::Concat => {
            let mut offset = 0;
            for (i, inp) in inputs.iter().enumerate() {
                let c = inp.shape[0];
                if want(i) {
                    res[i] = Some(slice_channels(g, offset, c)?);
                }
                offset += c;
            }
        }
        Op::SoftmaxChannels => {
            // y * (g - sum_c(y * g))
            let c = inputs[0].shape[0];
            let yg = mul(out, g)?;
            let s = expand_channels(&sum_channels(&yg)?, c)?;
            res[0] = Some(mul(out, &sub(g, &s)?)?);
        }
        Op::CrossEntropy(labels) => {
            let x = &inputs[0];
            let [c, h, w] = rank3("cross_entropy", x)?;
            let hw = h * w;
            let mut onehot = vec![0.0; c * hw];
            for (p, &l) in labels.iter().enumerate() {
                onehot[l * hw + p] = 1.0;
            }
            let onehot = Tensor::from_parts(x.shape.clone(), onehot);
            let d = scale(&sub(&softmax_channels(x)?, &onehot)?, 1.0 / hw as f64)?;
            res[0] = Some(mul(&d, g)?);
        }
    }
    Ok(res)
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        add(self, other)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        sub(self, other)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        mul(self, other)
    }

    pub fn scale(&self, c: f64) -> Result<Tensor> {
        scale(self, c)
    }

    pub fn square(&self) -> Result<Tensor> {
        square(self)
    }

    pub fn abs(&self) -> Result<Tensor> {
        abs(self)
    }

    pub fn sum(&self) -> Result<Tensor> {
        sum(self)
    }

    pub fn mean(&self) -> Result<Tensor> {
        mean(self)
    }
}

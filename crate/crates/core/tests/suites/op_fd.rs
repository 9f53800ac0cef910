//! Every primitive op against central finite differences, first order and
//! through the retained backward graph, plus exact polynomial derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdfusion::autodiff::{self as ad, grad, Tape, Tensor};
use tdfusion::Result;

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-6;
pub const POLY_TOL: f64 = 1e-8;

pub fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn with_value(t: &Tensor, k: usize, v: f64) -> Tensor {
    let mut d = t.data().to_vec();
    d[k] = v;
    Tensor::new(t.shape().to_vec(), d).unwrap()
}

fn rel(ad: &[f64], fd: &[f64]) -> f64 {
    let diff = ad.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub type OpFn = Box<dyn Fn(&[Tensor]) -> Result<Tensor>>;

pub struct Case {
    pub name: &'static str,
    pub f: OpFn,
    pub shapes: Vec<Vec<usize>>,
    pub seed: u64,
}

fn case(name: &'static str, f: impl Fn(&[Tensor]) -> Result<Tensor> + 'static, shapes: &[&[usize]], seed: u64) -> Case {
    Case {
        name,
        f: Box::new(f),
        shapes: shapes.iter().map(|s| s.to_vec()).collect(),
        seed,
    }
}

/// One case per op, plus broadcasting variants and a composite chain.
pub fn cases() -> Vec<Case> {
    let labels = [0, 2, 1, 1, 0, 2];
    vec![
        case("add", |x| ad::add(&x[0], &x[1]), &[&[2, 3], &[2, 3]], 1),
        case("add scalar operand", |x| ad::add(&x[0], &x[1]), &[&[2, 3], &[1]], 2),
        case("sub", |x| ad::sub(&x[0], &x[1]), &[&[4], &[4]], 3),
        case("sub scalar lhs", |x| ad::sub(&x[0], &x[1]), &[&[1], &[5]], 4),
        case("mul", |x| ad::mul(&x[0], &x[1]), &[&[3, 2], &[3, 2]], 5),
        case("mul scalar operand", |x| ad::mul(&x[0], &x[1]), &[&[6], &[1]], 6),
        case("maximum", |x| ad::maximum(&x[0], &x[1]), &[&[2, 4], &[2, 4]], 7),
        case("scale", |x| ad::scale(&x[0], -1.7), &[&[5]], 10),
        case("add_scalar", |x| ad::add_scalar(&x[0], 0.3), &[&[5]], 11),
        case("square", |x| ad::square(&x[0]), &[&[2, 3]], 12),
        case("abs", |x| ad::abs(&x[0]), &[&[8]], 13),
        case("relu", |x| ad::relu(&x[0]), &[&[8]], 14),
        case("sigmoid", |x| ad::sigmoid(&x[0]), &[&[2, 2]], 15),
        case("sum", |x| ad::sum(&x[0]), &[&[3, 2]], 20),
        case("mean", |x| ad::mean(&x[0]), &[&[7]], 21),
        case("expand_scalar", |x| ad::expand_scalar(&x[0], &[2, 3]), &[&[1]], 22),
        case("sum_pixels", |x| ad::sum_pixels(&x[0]), &[&[2, 3, 2]], 23),
        case("expand_pixels", |x| ad::expand_pixels(&x[0], 2, 3), &[&[3]], 24),
        case("sum_channels", |x| ad::sum_channels(&x[0]), &[&[3, 2, 2]], 25),
        case("expand_channels", |x| ad::expand_channels(&x[0], 3), &[&[1, 2, 2]], 26),
        case("matmul", |x| ad::matmul(&x[0], &x[1]), &[&[2, 3], &[3, 4]], 30),
        case("transpose", |x| ad::transpose(&x[0]), &[&[2, 5]], 31),
        case("slice_channels", |x| ad::slice_channels(&x[0], 1, 2), &[&[4, 2, 2]], 40),
        case("embed_channels", |x| ad::embed_channels(&x[0], 1, 4), &[&[2, 2, 2]], 41),
        case(
            "concat",
            |x| ad::concat_channels(&[&x[0], &x[1]]),
            &[&[1, 2, 3], &[2, 2, 3]],
            42,
        ),
        case("pad_reflect", |x| ad::pad_reflect(&x[0], 2), &[&[2, 4, 3]], 50),
        case(
            "pad_reflect_adjoint",
            |x| ad::pad_reflect_adjoint(&x[0], 1),
            &[&[2, 5, 6]],
            51,
        ),
        case(
            "conv2d_valid",
            |x| ad::conv2d_valid(&x[0], &x[1]),
            &[&[2, 5, 4], &[3, 2, 3, 2]],
            52,
        ),
        case(
            "conv2d_input_grad",
            |x| ad::conv2d_input_grad(&x[0], &x[1]),
            &[&[3, 3, 3], &[3, 2, 3, 2]],
            53,
        ),
        case(
            "conv2d_weight_grad",
            |x| ad::conv2d_weight_grad(&x[0], &x[1]),
            &[&[2, 5, 4], &[3, 3, 3]],
            54,
        ),
        case(
            "conv2d",
            |x| ad::conv2d(&x[0], &x[1], Some(&x[2])),
            &[&[2, 5, 6], &[3, 2, 3, 3], &[3]],
            55,
        ),
        case(
            "conv2d 1x1",
            |x| ad::conv2d(&x[0], &x[1], None),
            &[&[2, 3, 3], &[1, 2, 1, 1]],
            56,
        ),
        case("softmax_channels", |x| ad::softmax_channels(&x[0]), &[&[3, 2, 2]], 60),
        case(
            "cross_entropy",
            move |x| ad::cross_entropy(&x[0], &labels),
            &[&[3, 2, 3]],
            61,
        ),
        case(
            "sigmoid(conv) * softmax",
            |x| {
                let y = ad::sigmoid(&ad::conv2d(&x[0], &x[1], None)?)?;
                let s = ad::softmax_channels(&ad::concat_channels(&[&y, &x[0]])?)?;
                ad::mul(&ad::slice_channels(&s, 0, 1)?, &y)
            },
            &[&[1, 4, 4], &[1, 1, 3, 3]],
            70,
        ),
    ]
}

/// `sum(f(inputs) ∘ r)` for a fixed random projection `r`.
fn projected(f: &OpFn, inputs: &[Tensor], r: &Tensor) -> Result<Tensor> {
    let y = f(inputs)?;
    ad::sum(&ad::mul(&y, r)?)
}

/// Worst relative error over all inputs of the first-order gradient, and of
/// `d/dx <grad, s>` from the retained graph (`None` when the gradient does not
/// depend on the inputs).
pub fn measure(c: &Case) -> (f64, Option<f64>) {
    let f = &c.f;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let base: Vec<Tensor> = c.shapes.iter().map(|s| rand_tensor(s, &mut rng)).collect();
    let out_shape = f(&base).unwrap().shape().to_vec();
    let r = rand_tensor(&out_shape, &mut rng);

    let value = |xs: &[Tensor]| projected(f, xs, &r).unwrap().item().unwrap();
    let tape = Tape::new();
    let vars: Vec<Tensor> = base.iter().map(|t| tape.var(t)).collect();
    let loss = projected(f, &vars, &r).unwrap();
    let g = grad(&loss, &vars, true).unwrap();
    let fd_each = |eval: &dyn Fn(&[Tensor]) -> f64, i: usize| -> Vec<f64> {
        let x = &base[i];
        (0..x.numel())
            .map(|k| {
                let mut xs = base.clone();
                xs[i] = with_value(x, k, x.data()[k] + EPS);
                let up = eval(&xs);
                xs[i] = with_value(x, k, x.data()[k] - EPS);
                (up - eval(&xs)) / (2.0 * EPS)
            })
            .collect()
    };
    let first = (0..base.len())
        .map(|i| rel(g[i].data(), &fd_each(&value, i)))
        .fold(0.0, f64::max);

    let s: Vec<Tensor> = base.iter().map(|t| rand_tensor(t.shape(), &mut rng)).collect();
    let mut inner = Tensor::scalar(0.0);
    for (gi, si) in g.iter().zip(&s) {
        inner = ad::add(&inner, &ad::sum(&ad::mul(gi, si).unwrap()).unwrap()).unwrap();
    }
    if !inner.is_tracked() {
        return (first, None);
    }
    let h = grad(&inner, &vars, false).unwrap();
    let directional = |xs: &[Tensor]| -> f64 {
        let tape = Tape::new();
        let v: Vec<Tensor> = xs.iter().map(|t| tape.var(t)).collect();
        let l = projected(f, &v, &r).unwrap();
        let g = grad(&l, &v, false).unwrap();
        g.iter()
            .zip(&s)
            .map(|(gi, si)| gi.data().iter().zip(si.data()).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    };
    let second = (0..base.len())
        .map(|i| rel(h[i].data(), &fd_each(&directional, i)))
        .fold(0.0, f64::max);
    (first, Some(second))
}

/// `p(x) = Σ c_k x^k` built from tape ops.
fn poly(x: &Tensor, c: &[f64]) -> Tensor {
    let mut acc = Tensor::scalar(c[0]);
    let mut pow = Tensor::scalar(1.0);
    for &ck in &c[1..] {
        pow = ad::mul(&pow, x).unwrap();
        acc = ad::add(&acc, &ad::scale(&pow, ck).unwrap()).unwrap();
    }
    acc
}

/// Worst relative error of first and second derivatives of random
/// polynomials up to degree 4 against their closed forms.
pub fn polynomial_errors() -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for degree in 0..=4 {
        for _ in 0..10 {
            let c: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x0: f64 = rng.gen_range(-2.0..2.0);
            let tape = Tape::new();
            let x = tape.var(&Tensor::scalar(x0));
            let p = poly(&x, &c);
            if !p.is_tracked() {
                continue;
            }
            let g = grad(&p, std::slice::from_ref(&x), true).unwrap().remove(0);
            let h = if g.is_tracked() {
                grad(&g, std::slice::from_ref(&x), false).unwrap()[0].item().unwrap()
            } else {
                0.0
            };
            let d1: f64 = (1..=degree).map(|k| k as f64 * c[k] * x0.powi(k as i32 - 1)).sum();
            let d2: f64 = (2..=degree)
                .map(|k| (k * (k - 1)) as f64 * c[k] * x0.powi(k as i32 - 2))
                .sum();
            let err = |got: f64, want: f64| {
                if want == 0.0 {
                    got.abs()
                } else {
                    (got - want).abs() / want.abs()
                }
            };
            worst1 = worst1.max(err(g.item().unwrap(), d1));
            worst2 = worst2.max(err(h, d2));
        }
    }
    (worst1, worst2)
}

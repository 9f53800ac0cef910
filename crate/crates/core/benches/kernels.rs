//! Rayon pool versus a single-thread pool on the hot paths.
//!
//! `cargo bench -p tdfusion` compares the two pools; adding
//! `--no-default-features` measures the plain sequential build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use tdfusion::autodiff::{conv2d, grad, ops, Tape};
use tdfusion::metrics::evaluate_all;
use tdfusion::synthdata::{gen_dataset, SceneSpec};
use tdfusion::trainer::TrainConfig;
use tdfusion::verify::{Problem, FD_EPS};
use tdfusion::{Image, Tensor};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = ThreadPoolBuilder::new().build().unwrap();
    let one = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("pool", all), ("single", one)]
}

fn ramp(shape: &[usize], step: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|i| ((i as f64) * step).sin()).collect()).unwrap()
}

fn conv(c: &mut Criterion) {
    let x = ramp(&[16, 64, 64], 0.37);
    let k = ramp(&[16, 16, 3, 3], 0.11);
    let mut g = c.benchmark_group("conv16x64x64");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("forward", name), |b| {
            b.iter(|| pool.install(|| conv2d(&x, &k, None).unwrap()))
        });
        g.bench_function(BenchmarkId::new("forward_backward", name), |b| {
            b.iter(|| {
                pool.install(|| {
                    let tape = Tape::new();
                    let (xv, kv) = (tape.var(&x), tape.var(&k));
                    let y = ops::sum(&conv2d(&xv, &kv, None).unwrap()).unwrap();
                    grad(&y, &[xv, kv], false).unwrap()
                })
            })
        });
    }
    g.finish();
}

fn finite_differences(c: &mut Criterion) {
    let p = Problem::synthetic(&TrainConfig::micro(), 12).unwrap();
    let mut g = c.benchmark_group("hypergradient_fd_micro");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(name, |b| {
            b.iter(|| pool.install(|| p.hypergradient_fd(FD_EPS).unwrap()))
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let data = gen_dataset(&SceneSpec::with_size(64, 64), 8, 1).unwrap();
    let triples: Vec<(Image, Image, Image)> = data
        .iter()
        .map(|p| {
            let f = Image::from_fn(64, 64, |i, j| 0.5 * (p.a.get(i, j) + p.b.get(i, j)));
            (p.a.clone(), p.b.clone(), f)
        })
        .collect();
    let mut g = c.benchmark_group("metrics_8x64x64");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(name, |b| b.iter(|| pool.install(|| evaluate_all(&triples).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, conv, finite_differences, metrics);
criterion_main!(benches);

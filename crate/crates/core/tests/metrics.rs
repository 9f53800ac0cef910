//! Metrics against direct transcriptions of their definitions, plus the
//! identity cases.

mod common;
#[path = "suites/metric_refs.rs"]
mod metric_refs;

use common::{random_image, rng};
use metric_refs::{px, structured, triples, worst_errors, TOL};
use tdfusion::metrics::{self, qabf, scd, spatial_frequency, ssim_fusion, vif};
use tdfusion::Image;

#[test]
fn all_metrics_match_brute_force_references() {
    let worst = worst_errors();
    eprintln!("worst relative errors {worst:?}");
    for (k, name) in metrics::MetricsReport::NAMES.iter().enumerate() {
        assert!(worst[k] <= TOL[k], "{name}: {}", worst[k]);
    }
}

#[test]
fn identity_cases() {
    let mut r = rng(7);
    let a = structured(32, 32, &mut r);
    assert_eq!(metrics::entropy(&Image::filled(32, 32, 0.42)), 0.0);
    assert_eq!(spatial_frequency(&Image::filled(32, 32, 0.42)).unwrap(), 0.0);
    assert!((ssim_fusion(&a, &a, &a).unwrap() - 1.0).abs() <= 1e-9);
    assert!((vif(&a, &a, &a).unwrap() - 1.0).abs() <= 1e-6);
    let b = structured(32, 32, &mut r);
    let sum = Image::from_fn(32, 32, |i, j| a.get(i, j) + b.get(i, j));
    assert!((scd(&a, &b, &sum).unwrap() - 2.0).abs() <= 1e-6);
    // The edge model tops out at Q_g(1)·Q_α(1) for perfect transfer.
    let q = qabf(&a, &a, &a).unwrap();
    assert!((q - metrics::qabf_ceiling()).abs() <= 1e-12, "{q}");
}

#[test]
fn constant_fusion_scd_is_minus_twice_the_source_correlation() {
    let mut r = rng(8);
    let (a, b) = (random_image(16, 16, &mut r), random_image(16, 16, &mut r));
    let f = Image::filled(16, 16, 0.5);
    let (pa, pb) = (px(&a).concat(), px(&b).concat());
    let n = pa.len() as f64;
    let (ma, mb) = (pa.iter().sum::<f64>() / n, pb.iter().sum::<f64>() / n);
    let cov: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = pa.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = pb.iter().map(|y| (y - mb).powi(2)).sum();
    let expected = -2.0 * cov / (va * vb).sqrt();
    assert!((scd(&a, &b, &f).unwrap() - expected).abs() <= 1e-12);
    assert_eq!(
        scd(&a, &Image::filled(16, 16, 0.3), &Image::filled(16, 16, 0.7)).unwrap(),
        0.0
    );
}

#[test]
fn bounds_symmetry_and_degradation() {
    for (a, b, f) in triples() {
        let q = qabf(&a, &b, &f).unwrap();
        assert!((0.0..=1.0).contains(&q));
        assert_eq!(q, qabf(&b, &a, &f).unwrap());
        assert!(vif(&a, &b, &f).unwrap() >= 0.0);
        let s = ssim_fusion(&a, &b, &f).unwrap();
        assert!((-1.0..=1.0).contains(&s));
        let scd_v = scd(&a, &b, &f).unwrap();
        assert!((-2.0..=2.0).contains(&scd_v));
    }
    let mut r = rng(9);
    let (x, y) = (structured(32, 32, &mut r), structured(32, 32, &mut r));
    // SSIM(f, a) is symmetric in its arguments.
    let s1 = ssim_fusion(&x, &x, &y).unwrap();
    let s2 = ssim_fusion(&y, &y, &x).unwrap();
    assert!((s1 - s2).abs() <= 1e-12);
    // Inverted structure correlates negatively.
    let inv = x.map(|v| 1.0 - v);
    assert!(ssim_fusion(&x, &x, &inv).unwrap() < 0.0);
    // A heavy box blur loses information.
    let k = 4i64;
    let blurred = Image::from_fn(32, 32, |i, j| {
        let (mut s, mut n) = (0.0, 0.0);
        for u in -k..=k {
            for v in -k..=k {
                let (p, q) = (i as i64 + u, j as i64 + v);
                if (0..32).contains(&p) && (0..32).contains(&q) {
                    s += x.get(p as usize, q as usize);
                    n += 1.0;
                }
            }
        }
        s / n
    });
    assert!(vif(&x, &x, &blurred).unwrap() < vif(&x, &x, &x).unwrap());
}

#[test]
fn small_images_are_rejected() {
    let tiny = Image::filled(10, 10, 0.5);
    assert!(ssim_fusion(&tiny, &tiny, &tiny).is_err());
    let small = Image::filled(16, 16, 0.5);
    assert!(vif(&small, &small, &small).is_err());
    assert!(scd(&small, &tiny, &small).is_err());
}

#[test]
fn parallel_batch_matches_single_calls() {
    let t = triples();
    let batch = metrics::evaluate_all(&t).unwrap();
    for ((a, b, f), m) in t.iter().zip(&batch) {
        assert_eq!(*m, metrics::evaluate(a, b, f).unwrap());
    }
    let rows: Vec<(String, metrics::MetricsReport)> = batch
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("pair{i:02}"), *m))
        .collect();
    assert_eq!(metrics::format_table(&rows).lines().count(), rows.len() + 2);
    assert_eq!(metrics::format_records(&rows).lines().count(), rows.len() + 1);
}

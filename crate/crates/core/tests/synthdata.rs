use tdfusion::synthdata::{gen_dataset, gen_item, ImagePair, SceneSpec, BACKGROUND, CLASSES, TARGET, TEXTURE};
use tdfusion::Image;

fn dataset() -> Vec<ImagePair> {
    gen_dataset(&SceneSpec::default(), 64, 17).unwrap()
}

/// Best balanced accuracy of a single threshold on `feature` separating
/// class `pos` from class `neg`, over either orientation.
fn best_threshold_accuracy(
    data: &[ImagePair],
    feature: impl Fn(&ImagePair) -> Vec<f64>,
    pos: usize,
    neg: usize,
) -> f64 {
    let mut samples: Vec<(f64, bool)> = Vec::new();
    for p in data {
        for (v, &l) in feature(p).into_iter().zip(&p.labels) {
            if l == pos || l == neg {
                samples.push((v, l == pos));
            }
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let npos = samples.iter().filter(|s| s.1).count() as f64;
    let nneg = samples.len() as f64 - npos;
    let (mut pos_below, mut neg_below) = (0.0, 0.0);
    let mut best: f64 = 0.5;
    for (_, is_pos) in &samples {
        if *is_pos {
            pos_below += 1.0;
        } else {
            neg_below += 1.0;
        }
        // Predict positive above the cut, or below it.
        let above = 0.5 * ((npos - pos_below) / npos + neg_below / nneg);
        best = best.max(above).max(1.0 - above);
    }
    best
}

fn threshold_accuracy(
    data: &[ImagePair],
    feature: impl Fn(&ImagePair) -> Vec<f64>,
    pos: usize,
    neg: usize,
    t: f64,
) -> f64 {
    let (mut ok, mut n) = (0usize, 0usize);
    for p in data {
        for (v, &l) in feature(p).into_iter().zip(&p.labels) {
            if l == pos || l == neg {
                ok += usize::from((v > t) == (l == pos));
                n += 1;
            }
        }
    }
    ok as f64 / n as f64
}

fn window_variance(img: &Image, top: usize, left: usize) -> f64 {
    let mut vals = [0.0; 9];
    for u in 0..3 {
        for v in 0..3 {
            vals[u * 3 + v] = img.get(top + u, left + v);
        }
    }
    let m = vals.iter().sum::<f64>() / 9.0;
    vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0
}

/// Smallest variance among the in-image 3x3 windows covering each pixel,
/// so flat pixels next to a textured region still read as flat.
fn local_variance(img: &Image) -> Vec<f64> {
    let (h, w) = img.dims();
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let mut best = f64::INFINITY;
            for top in i.saturating_sub(2)..=i.min(h - 3) {
                for left in j.saturating_sub(2)..=j.min(w - 3) {
                    best = best.min(window_variance(img, top, left));
                }
            }
            out.push(best);
        }
    }
    out
}

#[test]
fn targets_live_in_a_and_textures_in_b() {
    let data = dataset();
    let a = |p: &ImagePair| p.a.data().to_vec();
    let b = |p: &ImagePair| p.b.data().to_vec();
    let va = |p: &ImagePair| local_variance(&p.a);
    let vb = |p: &ImagePair| local_variance(&p.b);

    let target_a = threshold_accuracy(&data, a, TARGET, BACKGROUND, 0.5);
    let target_b = best_threshold_accuracy(&data, b, TARGET, BACKGROUND);
    let texture_b = best_threshold_accuracy(&data, vb, TEXTURE, BACKGROUND);
    let texture_a = best_threshold_accuracy(&data, va, TEXTURE, BACKGROUND);
    eprintln!("target/A {target_a} target/B {target_b} texture/B {texture_b} texture/A {texture_a}");
    assert!(target_a >= 0.99);
    assert!(target_b <= 0.60);
    assert!(texture_b >= 0.99);
    assert!(texture_a <= 0.60);
}

#[test]
fn class_frequencies_are_balanced_enough() {
    let data = dataset();
    let mut counts = [0usize; CLASSES];
    for p in &data {
        for &l in &p.labels {
            counts[l] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    for (c, &n) in counts.iter().enumerate() {
        let f = n as f64 / total as f64;
        eprintln!("class {c}: {f:.3}");
        assert!((0.02..=0.60).contains(&f), "class {c} at {f}");
    }
}

#[test]
fn items_are_distinct_and_reproducible() {
    let spec = SceneSpec::default();
    let data = gen_dataset(&spec, 32, 3).unwrap();
    assert_eq!(data.len(), 32);
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            assert_ne!(data[i].labels, data[j].labels, "items {i} and {j}");
        }
    }
    assert_eq!(data[17], gen_item(&spec, 3, 17).unwrap());
}

#[test]
fn masks_partition_and_values_are_in_range() {
    for p in gen_dataset(&SceneSpec::with_size(32, 32), 8, 1).unwrap() {
        let masks: Vec<Vec<bool>> = (0..CLASSES).map(|c| p.mask(c)).collect();
        for k in 0..p.labels.len() {
            assert_eq!(masks.iter().filter(|m| m[k]).count(), 1);
        }
        assert!(p.a.data().iter().chain(p.b.data()).all(|v| (0.0..=1.0).contains(v)));
    }
}

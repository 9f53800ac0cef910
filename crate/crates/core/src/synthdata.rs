//! Synthetic two-modality scenes with a known information split.
//!
//! * Modality A (infrared-like): bright discs ("targets") on a dark
//!   background. Texture patches are rendered at background level.
//! * Modality B (visible-like): striped patches ("texture") on a mid-grey
//!   background. Targets are rendered at background level.
//!
//! Labels: 0 background, 1 target, 2 texture. A pixel classifier therefore
//! needs intensity from A on targets and structure from B on texture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{exec, Error, Image, Result};

pub const BACKGROUND: usize = 0;
pub const TARGET: usize = 1;
pub const TEXTURE: usize = 2;
pub const CLASSES: usize = 3;

const PATCH_GAP: usize = 3;
const PLACEMENT_TRIES: usize = 50;

/// Scene generator parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub targets: (usize, usize),
    pub target_radius: (usize, usize),
    pub textures: (usize, usize),
    pub texture_size: (usize, usize),
    /// Full period of the stripe pattern in pixels.
    pub stripe_period: usize,
    pub a_target: f64,
    pub a_background: f64,
    pub b_background: f64,
    pub stripe_low: f64,
    pub stripe_high: f64,
    /// Amplitude of the additive uniform noise on both modalities.
    pub noise: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            targets: (3, 5),
            target_radius: (4, 8),
            textures: (4, 6),
            texture_size: (14, 26),
            stripe_period: 4,
            a_target: 0.9,
            a_background: 0.1,
            b_background: 0.5,
            stripe_low: 0.15,
            stripe_high: 0.85,
            noise: 0.05,
        }
    }
}

impl SceneSpec {
    /// Same scene statistics on a different canvas, with shapes scaled down
    /// for small canvases.
    pub fn with_size(height: usize, width: usize) -> Self {
        let mut s = Self {
            height,
            width,
            ..Self::default()
        };
        let side = height.min(width);
        if side < 64 {
            let f = |v: usize| ((v * side) / 64).max(1);
            s.target_radius = (f(s.target_radius.0), f(s.target_radius.1));
            s.texture_size = (f(s.texture_size.0).max(2), f(s.texture_size.1).max(2));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let side = self.height.min(self.width);
        let bad = |m: String| Err(Error::SceneTooLarge(m));
        if side < 4 {
            return bad(format!("canvas {}x{} is smaller than 4x4", self.height, self.width));
        }
        if self.targets.0 > self.targets.1
            || self.textures.0 > self.textures.1
            || self.target_radius.0 > self.target_radius.1
            || self.texture_size.0 > self.texture_size.1
        {
            return bad("a (min, max) range is inverted".into());
        }
        if 2 * self.target_radius.1 + 1 > side {
            return bad(format!(
                "target radius {} exceeds canvas side {side}",
                self.target_radius.1
            ));
        }
        if self.texture_size.1 > side || self.texture_size.0 == 0 {
            return bad(format!(
                "texture size {} exceeds canvas side {side}",
                self.texture_size.1
            ));
        }
        if self.stripe_period < 2 {
            return bad("stripe period must be at least 2".into());
        }
        if (self.a_target - self.a_background).abs() < 0.3 {
            return bad("target contrast in modality A is below 0.3".into());
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return bad("noise amplitude must lie in [0, 0.5]".into());
        }
        Ok(())
    }
}

/// One two-modality sample with its per-pixel labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePair {
    pub a: Image,
    pub b: Image,
    pub labels: Vec<usize>,
}

impl ImagePair {
    pub fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }

    /// Boolean mask of pixels labelled `class`.
    pub fn mask(&self, class: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l == class).collect()
    }
}

/// Draws one scene.
pub fn gen_pair<R: Rng>(spec: &SceneSpec, rng: &mut R) -> Result<ImagePair> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut labels = vec![BACKGROUND; h * w];
    let mut stripe = vec![0.0; h * w];

    let patches = rng.gen_range(spec.textures.0..=spec.textures.1);
    let mut placed: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(patches);
    for _ in 0..patches {
        let ph = rng.gen_range(spec.texture_size.0..=spec.texture_size.1);
        let pw = rng.gen_range(spec.texture_size.0..=spec.texture_size.1);
        let vertical = rng.gen_bool(0.5);
        // Patches keep a gap of PATCH_GAP pixels; give up after a few tries.
        let mut spot = None;
        for _ in 0..PLACEMENT_TRIES {
            let y0 = rng.gen_range(0..=h - ph);
            let x0 = rng.gen_range(0..=w - pw);
            let clear = placed.iter().all(|&(py, px, qh, qw)| {
                y0 >= py + qh + PATCH_GAP
                    || py >= y0 + ph + PATCH_GAP
                    || x0 >= px + qw + PATCH_GAP
                    || px >= x0 + pw + PATCH_GAP
            });
            if clear {
                spot = Some((y0, x0));
                break;
            }
        }
        let Some((y0, x0)) = spot else { continue };
        placed.push((y0, x0, ph, pw));
        let half = spec.stripe_period / 2;
        for i in y0..y0 + ph {
            for j in x0..x0 + pw {
                let phase = if vertical { j - x0 } else { i - y0 };
                labels[i * w + j] = TEXTURE;
                stripe[i * w + j] = if (phase / half.max(1)).is_multiple_of(2) {
                    spec.stripe_high
                } else {
                    spec.stripe_low
                };
            }
        }
    }

    let discs = rng.gen_range(spec.targets.0..=spec.targets.1);
    for _ in 0..discs {
        let r = rng.gen_range(spec.target_radius.0..=spec.target_radius.1);
        let cy = rng.gen_range(r..h - r) as isize;
        let cx = rng.gen_range(r..w - r) as isize;
        let r = r as isize;
        for i in (cy - r)..=(cy + r) {
            for j in (cx - r)..=(cx + r) {
                if (i - cy).pow(2) + (j - cx).pow(2) <= r * r {
                    labels[i as usize * w + j as usize] = TARGET;
                }
            }
        }
    }

    let noise = |v: f64, rng: &mut R| -> f64 {
        let n = if spec.noise > 0.0 {
            rng.gen_range(-spec.noise..spec.noise)
        } else {
            0.0
        };
        (v + n).clamp(0.0, 1.0)
    };
    let mut a = Vec::with_capacity(h * w);
    let mut b = Vec::with_capacity(h * w);
    for (p, &l) in labels.iter().enumerate() {
        let va = if l == TARGET { spec.a_target } else { spec.a_background };
        let vb = if l == TEXTURE { stripe[p] } else { spec.b_background };
        a.push(noise(va, rng));
        b.push(noise(vb, rng));
    }
    Ok(ImagePair {
        a: Image::new(h, w, a)?,
        b: Image::new(h, w, b)?,
        labels,
    })
}

/// Item `index` of the dataset seeded by `seed`, reproducible in isolation.
pub fn gen_item(spec: &SceneSpec, seed: u64, index: usize) -> Result<ImagePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    gen_pair(spec, &mut rng)
}

/// `count` independent scenes, item `i` drawn from stream `i` of `seed`.
pub fn gen_dataset(spec: &SceneSpec, count: usize, seed: u64) -> Result<Vec<ImagePair>> {
    spec.validate()?;
    exec::map_indices(count, |i| gen_item(spec, seed, i))
        .into_iter()
        .collect()
}

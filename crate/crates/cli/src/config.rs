//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! `preset` selects the starting point (`desk`, `full`, `toy`, `micro`);
//! every other key overrides one field of it. Unknown or repeated keys are
//! errors. [`RunConfig::render`] writes every key, so the output parses
//! back to the same configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use tdfusion::optim::OptimizerKind;
use tdfusion::synthdata::{SceneSpec, CLASSES};
use tdfusion::trainer::{TrainConfig, WeightMode};
use tdfusion::{metrics, NetSpec};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
    Toy,
    Micro,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
            Preset::Toy => "toy",
            Preset::Micro => "micro",
        }
    }

    fn train(self) -> TrainConfig {
        match self {
            Preset::Desk => TrainConfig::desk(),
            Preset::Full => TrainConfig::full(),
            Preset::Toy => TrainConfig::toy(),
            Preset::Micro => TrainConfig::micro(),
        }
    }

    /// Training canvas side, dataset size and held-out canvas side.
    fn data(self) -> (usize, usize, usize) {
        match self {
            Preset::Desk => (64, 64, 64),
            Preset::Full => (64, 400, 64),
            Preset::Toy => (16, 16, 32),
            Preset::Micro => (8, 16, 32),
        }
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            "toy" => Ok(Preset::Toy),
            "micro" => Ok(Preset::Micro),
            _ => Err(format!("unknown preset {s:?} (desk, full, toy, micro)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub train: TrainConfig,
    pub scene: SceneSpec,
    /// Training set size and the seed it is drawn from.
    pub dataset_size: usize,
    pub dataset_seed: u64,
    /// Held-out set used for reports. Its canvas may differ from the
    /// training canvas; the metrics need at least 17x17 pixels.
    pub eval_size: usize,
    pub eval_seed: u64,
    pub eval_height: usize,
    pub eval_width: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (side, size, eval_side) = preset.data();
        Self {
            preset,
            train: preset.train(),
            scene: SceneSpec::with_size(side, side),
            dataset_size: size,
            dataset_seed: 1,
            eval_size: 16,
            eval_seed: 2,
            eval_height: eval_side,
            eval_width: eval_side,
            out_dir: PathBuf::from("run"),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if entries.insert(k.to_string(), (n + 1, v.to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: key {k:?} given twice", n + 1)));
            }
        }
        let preset = match entries.remove("preset") {
            Some((n, v)) => v.parse().map_err(|e| CliError::Config(format!("line {n}: {e}")))?,
            None => Preset::Desk,
        };
        let mut cfg = Self::preset(preset);
        for (k, (n, v)) in entries {
            cfg.set(&k, &v)
                .map_err(|e| CliError::Config(format!("line {n}: {k}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `TDF_SEED` if it is set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var("TDF_SEED") {
            self.train.seed = num(&v).map_err(|e| CliError::Config(format!("TDF_SEED: {e}")))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let t = &mut self.train;
        let s = &mut self.scene;
        match key {
            "epochs" => t.epochs = num(v)?,
            "meta_steps" => t.meta_steps = num(v)?,
            "fusion_steps" => t.fusion_steps = if v == "auto" { None } else { Some(num(v)?) },
            "lr_inner_fusion" => t.lr_inner_fusion = num(v)?,
            "lr_inner_task" => t.lr_inner_task = num(v)?,
            "lr_lossgen" => t.lr_lossgen = num(v)?,
            "lr_fusion" => t.lr_fusion = num(v)?,
            "lr_task" => t.lr_task = num(v)?,
            "alpha" => t.alpha = num(v)?,
            "batch_size" => t.batch_size = num(v)?,
            "seed" => t.seed = num(v)?,
            "classes" => {
                t.classes = num(v)?;
                t.task_net.out_channels = t.classes;
            }
            "optimizer" => t.optimizer = v.parse::<OptimizerKind>().map_err(|e| e.to_string())?,
            "weights" => {
                t.weights = match v {
                    "learned" => WeightMode::Learned,
                    "fixed_half" => WeightMode::FixedHalf,
                    _ => return Err(format!("expected learned or fixed_half, got {v:?}")),
                }
            }
            "fusion_width" => t.fusion_net.width = num(v)?,
            "fusion_layers" => t.fusion_net.layers = num(v)?,
            "fusion_kernel" => t.fusion_net.kernel = num(v)?,
            "task_width" => t.task_net.width = num(v)?,
            "task_layers" => t.task_net.layers = num(v)?,
            "task_kernel" => t.task_net.kernel = num(v)?,
            "lossgen_width" => t.lossgen_net.width = num(v)?,
            "lossgen_layers" => t.lossgen_net.layers = num(v)?,
            "lossgen_kernel" => t.lossgen_net.kernel = num(v)?,
            "height" => s.height = num(v)?,
            "width" => s.width = num(v)?,
            "targets" => s.targets = range(v)?,
            "target_radius" => s.target_radius = range(v)?,
            "textures" => s.textures = range(v)?,
            "texture_size" => s.texture_size = range(v)?,
            "stripe_period" => s.stripe_period = num(v)?,
            "a_target" => s.a_target = num(v)?,
            "a_background" => s.a_background = num(v)?,
            "b_background" => s.b_background = num(v)?,
            "stripe_low" => s.stripe_low = num(v)?,
            "stripe_high" => s.stripe_high = num(v)?,
            "noise" => s.noise = num(v)?,
            "dataset_size" => self.dataset_size = num(v)?,
            "dataset_seed" => self.dataset_seed = num(v)?,
            "eval_size" => self.eval_size = num(v)?,
            "eval_seed" => self.eval_seed = num(v)?,
            "eval_height" => self.eval_height = num(v)?,
            "eval_width" => self.eval_width = num(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Checks everything that can be checked before data is generated.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.train.classes != CLASSES {
            return Err(CliError::Config(format!(
                "classes = {} but the synthetic scenes have {CLASSES} classes",
                self.train.classes
            )));
        }
        if self.eval_size == 0 {
            return Err(CliError::Config("eval_size must be at least 1".into()));
        }
        self.scene.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.eval_scene()
            .validate()
            .map_err(|e| CliError::Config(format!("held-out set: {e}")))?;
        let side = self.eval_height.min(self.eval_width);
        if side < metrics::VIF_MIN_SIDE {
            return Err(CliError::Config(format!(
                "eval_height and eval_width must be at least {}, got {}x{}",
                metrics::VIF_MIN_SIDE,
                self.eval_height,
                self.eval_width
            )));
        }
        self.train
            .validate(self.dataset_size)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Scene generator of the held-out set: the training scene on the
    /// held-out canvas.
    pub fn eval_scene(&self) -> SceneSpec {
        SceneSpec {
            height: self.eval_height,
            width: self.eval_width,
            ..self.scene.clone()
        }
    }

    /// Every key with its current value, in a fixed order.
    pub fn render(&self) -> String {
        let t = &self.train;
        let s = &self.scene;
        let net = |n: &NetSpec| (n.width, n.layers, n.kernel);
        let (fw, fl, fk) = net(&t.fusion_net);
        let (tw, tl, tk) = net(&t.task_net);
        let (gw, gl, gk) = net(&t.lossgen_net);
        let pair = |p: (usize, usize)| format!("{},{}", p.0, p.1);
        let rows: Vec<(&str, String)> = vec![
            ("preset", self.preset.as_str().into()),
            ("epochs", t.epochs.to_string()),
            ("meta_steps", t.meta_steps.to_string()),
            ("fusion_steps", t.fusion_steps.map_or("auto".into(), |n| n.to_string())),
            ("lr_inner_fusion", float(t.lr_inner_fusion)),
            ("lr_inner_task", float(t.lr_inner_task)),
            ("lr_lossgen", float(t.lr_lossgen)),
            ("lr_fusion", float(t.lr_fusion)),
            ("lr_task", float(t.lr_task)),
            ("alpha", float(t.alpha)),
            ("batch_size", t.batch_size.to_string()),
            ("seed", t.seed.to_string()),
            ("classes", t.classes.to_string()),
            ("optimizer", t.optimizer.as_str().into()),
            ("weights", t.weights.as_str().into()),
            ("fusion_width", fw.to_string()),
            ("fusion_layers", fl.to_string()),
            ("fusion_kernel", fk.to_string()),
            ("task_width", tw.to_string()),
            ("task_layers", tl.to_string()),
            ("task_kernel", tk.to_string()),
            ("lossgen_width", gw.to_string()),
            ("lossgen_layers", gl.to_string()),
            ("lossgen_kernel", gk.to_string()),
            ("height", s.height.to_string()),
            ("width", s.width.to_string()),
            ("targets", pair(s.targets)),
            ("target_radius", pair(s.target_radius)),
            ("textures", pair(s.textures)),
            ("texture_size", pair(s.texture_size)),
            ("stripe_period", s.stripe_period.to_string()),
            ("a_target", float(s.a_target)),
            ("a_background", float(s.a_background)),
            ("b_background", float(s.b_background)),
            ("stripe_low", float(s.stripe_low)),
            ("stripe_high", float(s.stripe_high)),
            ("noise", float(s.noise)),
            ("dataset_size", self.dataset_size.to_string()),
            ("dataset_seed", self.dataset_seed.to_string()),
            ("eval_size", self.eval_size.to_string()),
            ("eval_seed", self.eval_seed.to_string()),
            ("eval_height", self.eval_height.to_string()),
            ("eval_width", self.eval_width.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ];
        debug_assert_eq!(rows.len(), KEYS.len());
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Every accepted key.
pub const KEYS: [&str; 44] = [
    "preset",
    "epochs",
    "meta_steps",
    "fusion_steps",
    "lr_inner_fusion",
    "lr_inner_task",
    "lr_lossgen",
    "lr_fusion",
    "lr_task",
    "alpha",
    "batch_size",
    "seed",
    "classes",
    "optimizer",
    "weights",
    "fusion_width",
    "fusion_layers",
    "fusion_kernel",
    "task_width",
    "task_layers",
    "task_kernel",
    "lossgen_width",
    "lossgen_layers",
    "lossgen_kernel",
    "height",
    "width",
    "targets",
    "target_radius",
    "textures",
    "texture_size",
    "stripe_period",
    "a_target",
    "a_background",
    "b_background",
    "stripe_low",
    "stripe_high",
    "noise",
    "dataset_size",
    "dataset_seed",
    "eval_size",
    "eval_seed",
    "eval_height",
    "eval_width",
    "out_dir",
];

fn num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("{v:?}: {e}"))
}

/// `lo,hi` inclusive range.
fn range(v: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = v
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got {v:?}"))?;
    Ok((num(lo.trim())?, num(hi.trim())?))
}

/// Shortest text that parses back to the same bits.
fn float(v: f64) -> String {
    format!("{v:?}")
}

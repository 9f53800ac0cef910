//! One function per subcommand. Each returns the text it prints.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tdfusion::autodiff::set_corrupt_sigmoid_backward;
use tdfusion::metrics::{self, MetricsReport};
use tdfusion::networks::{fuse, init_params};
use tdfusion::synthdata::{gen_dataset, gen_item, ImagePair};
use tdfusion::trainer::{evaluate, run_with, weights_for, TrainConfig};
use tdfusion::verify::{max_rel_error, Problem, FD_EPS, MIXED_EPS};
use tdfusion::{Image, ParamSet};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::{pgm, CliError};

/// Largest total parameter count `check-grad` accepts.
pub const CHECK_GRAD_MAX_PARAMS: usize = 1000;
/// Tolerance against full-chain finite differences.
pub const FD_TOL: f64 = 1e-4;
/// Tolerance against the mixed-partial expansion.
pub const EXPANSION_TOL: f64 = 1e-3;

pub const CHECKPOINT_FILE: &str = "model.tdf";
pub const LOG_FILE: &str = "train.log";
pub const REPORT_FILE: &str = "metrics.txt";

/// Reads a config file and applies `TDF_SEED`.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

pub struct TrainOutput {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub report: PathBuf,
    pub summary: String,
}

/// Trains on the configured synthetic set and writes the checkpoint, the
/// per-update log and a metrics report on the held-out set.
pub fn train(config: &Path, out: Option<&Path>) -> Result<TrainOutput, CliError> {
    let cfg = load_config(config)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.clone());
    let data = gen_dataset(&cfg.scene, cfg.dataset_size, cfg.dataset_seed)?;
    cfg.train.validate(data.len())?;
    create_dir(&dir)?;

    let log_path = dir.join(LOG_FILE);
    let mut log = BufWriter::new(fs::File::create(&log_path).map_err(io(&log_path))?);
    let mut log_err = None;
    let result = run_with(&data, &cfg.train, |ev| {
        if log_err.is_none() {
            log_err = writeln!(log, "{}", ev.record).err();
        }
    });
    let flushed = log.flush();
    if let Some(e) = log_err {
        return Err(io(&log_path)(e));
    }
    flushed.map_err(io(&log_path))?;
    let state = result?;

    let ckpt = Checkpoint {
        fusion: state.fusion,
        task: state.task,
        lossgen: state.lossgen,
        epoch: state.epoch as u64,
        rng: state.rng,
        config: cfg.render(),
    };
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    ckpt.save(&ckpt_path)?;

    let report = report(&cfg, &ckpt, &cfg.train)?;
    let report_path = dir.join(REPORT_FILE);
    fs::write(&report_path, &report).map_err(io(&report_path))?;

    let summary = format!(
        "trained {} epochs, {} updates\ncheckpoint {}\nlog {}\nreport {}\n",
        state.epoch,
        state.logs.len(),
        ckpt_path.display(),
        log_path.display(),
        report_path.display()
    );
    Ok(TrainOutput {
        checkpoint: ckpt_path,
        log: log_path,
        report: report_path,
        summary,
    })
}

/// Metrics table on the held-out set, then task accuracy and the mean `w_a`
/// per class.
fn report(cfg: &RunConfig, ckpt: &Checkpoint, train: &TrainConfig) -> Result<String, CliError> {
    let held_out = gen_dataset(&cfg.eval_scene(), cfg.eval_size, cfg.eval_seed)?;
    let triples = held_out
        .iter()
        .map(|p| Ok((p.a.clone(), p.b.clone(), fused_image(p, &ckpt.fusion)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows: Vec<(String, MetricsReport)> = metrics::evaluate_all(&triples)?
        .into_iter()
        .enumerate()
        .map(|(i, m)| (format!("eval{i:03}"), m))
        .collect();
    let summary = evaluate(&held_out, &ckpt.fusion, &ckpt.task, &ckpt.lossgen, train)?;
    let mut out = metrics::format_table(&rows);
    let _ = writeln!(out, "accuracy = {:.6}", summary.accuracy);
    let _ = writeln!(
        out,
        "w_a target = {:.6} texture = {:.6} background = {:.6}",
        summary.wa_target, summary.wa_texture, summary.wa_background
    );
    Ok(out)
}

fn fused_image(pair: &ImagePair, fusion: &ParamSet) -> Result<Image, CliError> {
    Ok(Image::from_tensor(&fuse(
        &pair.a.to_tensor(),
        &pair.b.to_tensor(),
        fusion,
    )?)?)
}

/// Training configuration recorded in a checkpoint.
fn trained_config(ckpt: &Checkpoint) -> Result<RunConfig, CliError> {
    RunConfig::parse(&ckpt.config).map_err(|e| CliError::Checkpoint(format!("stored config: {e}")))
}

/// Fails unless every network in `ckpt` has the shapes `train` describes.
fn check_shapes(ckpt: &Checkpoint, train: &TrainConfig) -> Result<(), CliError> {
    let nets = [
        (&ckpt.fusion, &train.fusion_net),
        (&ckpt.task, &train.task_net),
        (&ckpt.lossgen, &train.lossgen_net),
    ];
    for (params, spec) in nets {
        let expected = init_params(spec, 0)?;
        let same = params.len() == expected.len()
            && params
                .entries()
                .iter()
                .zip(expected.entries())
                .all(|((n1, t1), (n2, t2))| n1 == n2 && t1.shape() == t2.shape());
        if !same {
            return Err(CliError::Config(format!(
                "checkpoint/config mismatch: {} network shapes differ",
                spec.kind.as_str()
            )));
        }
    }
    Ok(())
}

/// Fuses the held-out set of `config` with a checkpoint and reports metrics
/// and task accuracy.
pub fn eval(ckpt_path: &Path, config: &Path) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let ckpt = Checkpoint::load(ckpt_path)?;
    check_shapes(&ckpt, &cfg.train)?;
    // Weights are produced the way the checkpoint was trained.
    let trained = trained_config(&ckpt)?;
    report(&cfg, &ckpt, &trained.train)
}

/// Gradient checks of the hypergradient on a small configuration.
pub fn check_grad(config: &Path, corrupt_backward: bool) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let params = cfg.train.param_count();
    if params > CHECK_GRAD_MAX_PARAMS {
        return Err(CliError::Config(format!(
            "check-grad needs at most {CHECK_GRAD_MAX_PARAMS} parameters, config has {params}"
        )));
    }
    let problem = Problem::with_scene(&cfg.train, &cfg.scene)?;
    set_corrupt_sigmoid_backward(corrupt_backward);
    let ad = problem.hypergradient_ad();
    set_corrupt_sigmoid_backward(false);
    let ad = ad?;
    let fd = problem.hypergradient_fd(FD_EPS)?;
    let ex = problem.hypergradient_expansion(FD_EPS, MIXED_EPS)?;
    let (e_fd, e_ex) = (max_rel_error(&ad, &fd), max_rel_error(&ad, &ex));
    let max_abs = ad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let verdict = |e: f64, tol: f64| if e <= tol { "ok" } else { "FAIL" };
    let text = format!(
        "params={params} lossgen_params={}\nhypergradient_max_abs={max_abs:e}\n\
         fd_max_rel_error={e_fd:e} tol={FD_TOL:e} {}\nexpansion_max_rel_error={e_ex:e} tol={EXPANSION_TOL:e} {}\n",
        ad.len(),
        verdict(e_fd, FD_TOL),
        verdict(e_ex, EXPANSION_TOL),
    );
    if e_fd <= FD_TOL && e_ex <= EXPANSION_TOL {
        Ok(text)
    } else {
        Err(CliError::Verify(text))
    }
}

/// Which pair `export-weights` should use.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSource {
    /// Item of the training set described by the checkpoint's config.
    Index(usize),
    Files(PathBuf, PathBuf),
}

impl std::str::FromStr for PairSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(i) = s.parse() {
            return Ok(PairSource::Index(i));
        }
        match s.split_once(',') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(PairSource::Files(a.into(), b.into())),
            _ => Err(format!("expected an index or `a.pgm,b.pgm`, got {s:?}")),
        }
    }
}

pub const WA_FILE: &str = "w_a.pgm";
pub const WB_FILE: &str = "w_b.pgm";
pub const FUSED_FILE: &str = "fused.pgm";

/// Writes the weight heatmaps and the fused image for one pair.
pub fn export_weights(ckpt_path: &Path, pair: &PairSource, out: &Path) -> Result<String, CliError> {
    let ckpt = Checkpoint::load(ckpt_path)?;
    let cfg = trained_config(&ckpt)?;
    let (a, b) = match pair {
        PairSource::Index(i) => {
            let p = gen_item(&cfg.scene, cfg.dataset_seed, *i)?;
            (p.a, p.b)
        }
        PairSource::Files(pa, pb) => (pgm::read(pa)?, pgm::read(pb)?),
    };
    let expected = (cfg.scene.height, cfg.scene.width);
    if a.dims() != expected || b.dims() != expected {
        return Err(CliError::Input(format!(
            "pair is {:?} and {:?} but the checkpoint was trained on {expected:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (ta, tb) = (a.to_tensor(), b.to_tensor());
    let w = weights_for((&ta, &tb), &ckpt.lossgen, &cfg.train)?;
    let fused = Image::from_tensor(&fuse(&ta, &tb, &ckpt.fusion)?)?;
    create_dir(out)?;
    let files = [
        (WA_FILE, Image::from_tensor(&w.wa)?),
        (WB_FILE, Image::from_tensor(&w.wb)?),
        (FUSED_FILE, fused),
    ];
    let mut text = String::new();
    for (name, img) in &files {
        let path = out.join(name);
        pgm::write(&path, &pgm::encode(img))?;
        let _ = writeln!(text, "wrote {}", path.display());
    }
    Ok(text)
}

/// Writes the configured training set as PGM files.
pub fn gen_data(config: &Path, out: &Path) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let data = gen_dataset(&cfg.scene, cfg.dataset_size, cfg.dataset_seed)?;
    create_dir(out)?;
    for (i, p) in data.iter().enumerate() {
        let (h, w) = p.dims();
        pgm::write(&out.join(format!("pair{i:03}_a.pgm")), &pgm::encode(&p.a))?;
        pgm::write(&out.join(format!("pair{i:03}_b.pgm")), &pgm::encode(&p.b))?;
        pgm::write(
            &out.join(format!("pair{i:03}_labels.pgm")),
            &pgm::encode_labels(h, w, &p.labels, cfg.train.classes),
        )?;
    }
    Ok(format!("wrote {} pairs to {}\n", data.len(), out.display()))
}

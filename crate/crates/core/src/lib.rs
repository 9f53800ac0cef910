//! Task-driven infrared/visible image fusion with a learnable fusion loss.
//!
//! A loss-generation network produces per-pixel intensity weights for the
//! fusion loss. Its parameters are trained by differentiating a downstream
//! task loss through one gradient step of the fusion network, which needs
//! the second-order reverse-mode machinery in [`autodiff`].
//!
//! Module map:
//!
//! * [`autodiff`]: tape-based reverse mode with differentiable backward passes.
//! * [`networks`]: fusion, task and loss-generation convolutional networks.
//! * [`loss`]: Sobel operator, learnable fusion loss and task cross-entropy.
//! * [`trainer`]: meta-set sampling, inner/outer/fusion updates, full schedule.
//! * [`synthdata`]: two-modality scenes whose informative modality is known.
//! * [`metrics`]: EN, SF, SCD, VIF, Q^AB/F and SSIM fusion-quality metrics.
//! * [`verify`]: finite-difference oracles for the hypergradient.

pub mod autodiff;
mod error;
pub mod exec;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod networks;
pub mod optim;
pub mod synthdata;
pub mod trainer;
pub mod verify;

pub use autodiff::{grad, sgd_step, Tape, Tensor};
pub use error::{Error, Result};
pub use image::Image;
pub use networks::{NetSpec, NetworkKind, ParamSet};

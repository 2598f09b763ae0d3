//! Convolutional self-attention (SE, ECA, CBAM) in a ResNet-18-style
//! backbone for SAR target recognition, built on a small reverse-mode
//! autodiff engine, with Grad-CAM saliency and accuracy/robustness
//! protocols.

pub mod attention;
pub mod backbone;
pub mod data;
pub mod error;
pub mod exec;
pub mod explain;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Exec;
pub use tensor::{Tape, Tensor, Var};

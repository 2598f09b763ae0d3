//! ResNet-18-style classifier with pluggable attention.

mod config;
mod resnet;

pub use config::{InsertionMode, ModelConfig};
pub use resnet::{BasicBlock, ResNet};

use crate::error::Result;
use crate::nn::Mode;
use crate::tensor::{Tape, Var};

/// Anything mapping an N×C×H×W batch to N×K logits on a tape.
///
/// Implementations may `tag` intermediate feature maps so that Grad-CAM can
/// find them by name.
pub trait Classifier {
    fn num_classes(&self) -> usize;
    fn forward(&self, tape: &mut Tape, x: Var, mode: Mode) -> Result<Var>;
}

//! Shape-preserving channel/spatial attention blocks for C×H×W feature maps.
//!
//! Each block computes gates in (0, 1) from pooled statistics of its input
//! and multiplies them back onto the input.

mod cbam;
mod eca;
mod se;

pub use cbam::CbamBlock;
pub use eca::{eca_kernel_size, EcaBlock};
pub use se::SeBlock;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{Param, Parameterized};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttentionKind {
    None,
    Se,
    Eca,
    Cbam,
}

impl AttentionKind {
    pub const ALL: [AttentionKind; 4] = [AttentionKind::None, AttentionKind::Se, AttentionKind::Eca, AttentionKind::Cbam];

    pub fn as_str(self) -> &'static str {
        match self {
            AttentionKind::None => "none",
            AttentionKind::Se => "se",
            AttentionKind::Eca => "eca",
            AttentionKind::Cbam => "cbam",
        }
    }

    /// Row label used in accuracy tables.
    pub fn model_label(self) -> &'static str {
        match self {
            AttentionKind::None => "Standard ResNet-18",
            AttentionKind::Se => "SENet ResNet-18",
            AttentionKind::Eca => "ECANet ResNet-18",
            AttentionKind::Cbam => "CBAM ResNet-18",
        }
    }
}

impl fmt::Display for AttentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "baseline" => Ok(AttentionKind::None),
            "se" | "senet" => Ok(AttentionKind::Se),
            "eca" | "ecanet" => Ok(AttentionKind::Eca),
            "cbam" => Ok(AttentionKind::Cbam),
            other => Err(Error::InvalidConfig(format!("unknown attention kind {other:?} (none, se, eca, cbam)"))),
        }
    }
}

/// Hyperparameters shared by the blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionParams {
    /// Reduction ratio of the SE and CBAM channel MLPs.
    pub reduction: usize,
    /// ECA kernel-size divisor.
    pub eca_gamma: usize,
    /// CBAM spatial convolution kernel size (odd).
    pub spatial_kernel: usize,
}

impl Default for AttentionParams {
    fn default() -> Self {
        Self { reduction: 16, eca_gamma: 16, spatial_kernel: 7 }
    }
}

impl AttentionParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.reduction == 0 {
            bad.push("attention.reduction must be >= 1");
        }
        if self.eca_gamma == 0 {
            bad.push("attention.eca_gamma must be >= 1");
        }
        if self.spatial_kernel == 0 || self.spatial_kernel % 2 == 0 {
            bad.push("attention.spatial_kernel must be odd");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join("; ")))
        }
    }
}

/// Hidden width of a reduction-ratio bottleneck, never below one unit.
pub fn hidden_width(channels: usize, reduction: usize) -> usize {
    (channels / reduction).max(1)
}

fn check_channels(tape: &Tape, x: Var, channels: usize) -> Result<()> {
    let s = tape.shape(x);
    if s.len() != 4 {
        return Err(Error::RankMismatch { expected: 4, shape: s.to_vec() });
    }
    if s[1] != channels {
        return Err(Error::ChannelMismatch { expected: channels, actual: s[1] });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum AttentionBlock {
    Se(SeBlock),
    Eca(EcaBlock),
    Cbam(CbamBlock),
}

impl AttentionBlock {
    /// Builds the block for `kind` (`None` yields no block). Parameters are
    /// named under `prefix`.
    pub fn build(kind: AttentionKind, prefix: &str, channels: usize, hp: &AttentionParams, rng: &mut SplitMix64) -> Result<Option<Self>> {
        Ok(match kind {
            AttentionKind::None => None,
            AttentionKind::Se => Some(AttentionBlock::Se(SeBlock::new(prefix, channels, hp.reduction, rng))),
            AttentionKind::Eca => Some(AttentionBlock::Eca(EcaBlock::new(prefix, channels, hp.eca_gamma, rng)?)),
            AttentionKind::Cbam => {
                Some(AttentionBlock::Cbam(CbamBlock::new(prefix, channels, hp.reduction, hp.spatial_kernel, rng)?))
            }
        })
    }

    pub fn kind(&self) -> AttentionKind {
        match self {
            AttentionBlock::Se(_) => AttentionKind::Se,
            AttentionBlock::Eca(_) => AttentionKind::Eca,
            AttentionBlock::Cbam(_) => AttentionKind::Cbam,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            AttentionBlock::Se(b) => b.forward(tape, x),
            AttentionBlock::Eca(b) => b.forward(tape, x),
            AttentionBlock::Cbam(b) => b.forward(tape, x),
        }
    }
}

impl Parameterized for AttentionBlock {
    fn params(&self) -> Vec<&Param> {
        match self {
            AttentionBlock::Se(b) => b.params(),
            AttentionBlock::Eca(b) => b.params(),
            AttentionBlock::Cbam(b) => b.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            AttentionBlock::Se(b) => b.params_mut(),
            AttentionBlock::Eca(b) => b.params_mut(),
            AttentionBlock::Cbam(b) => b.params_mut(),
        }
    }
}

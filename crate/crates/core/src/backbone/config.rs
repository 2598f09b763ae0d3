use std::fmt;
use std::str::FromStr;

use crate::attention::{AttentionKind, AttentionParams};
use crate::error::{Error, Result};

/// Where an attention block sits inside each basic block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionMode {
    /// Refines the residual branch before the skip addition.
    InBlock,
    /// Wraps the finished block output as `y = x + att(x)`.
    ResidualWrap,
}

impl InsertionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InsertionMode::InBlock => "in_block",
            InsertionMode::ResidualWrap => "residual_wrap",
        }
    }
}

impl fmt::Display for InsertionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InsertionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "in_block" => Ok(InsertionMode::InBlock),
            "residual_wrap" => Ok(InsertionMode::ResidualWrap),
            other => Err(Error::InvalidConfig(format!("unknown insertion mode {other:?} (in_block, residual_wrap)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub input_size: [usize; 2],
    pub classes: usize,
    pub widths: Vec<usize>,
    pub blocks_per_stage: usize,
    pub attention: AttentionKind,
    pub insertion: InsertionMode,
    pub attention_params: AttentionParams,
}

impl Default for ModelConfig {
    /// Single-channel 128×128 input, 10 classes, ResNet-18 widths.
    fn default() -> Self {
        Self {
            in_channels: 1,
            input_size: [128, 128],
            classes: 10,
            widths: vec![64, 128, 256, 512],
            blocks_per_stage: 2,
            attention: AttentionKind::None,
            insertion: InsertionMode::InBlock,
            attention_params: AttentionParams::default(),
        }
    }
}

impl ModelConfig {
    /// The reduced configuration used for desk-scale experiments: 32×32
    /// input, widths [4, 8, 16, 32], 3 classes.
    pub fn desk() -> Self {
        Self { input_size: [32, 32], classes: 3, widths: vec![4, 8, 16, 32], ..Self::default() }
    }

    pub fn with_attention(mut self, kind: AttentionKind) -> Self {
        self.attention = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        if self.classes < 2 {
            bad.push(format!("model.classes = {} (need >= 2)", self.classes));
        }
        if self.input_size[0] < 32 || self.input_size[1] < 32 {
            bad.push(format!("model.input_size = {}x{} (need >= 32x32)", self.input_size[0], self.input_size[1]));
        }
        if self.in_channels == 0 {
            bad.push("model.in_channels = 0".into());
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            bad.push(format!("model.widths = {:?} (need non-empty, positive)", self.widths));
        }
        if self.blocks_per_stage == 0 {
            bad.push("model.blocks_per_stage = 0".into());
        }
        if let Err(Error::InvalidConfig(msg)) = self.attention_params.validate() {
            bad.push(msg);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join("; ")))
        }
    }

    /// Tag of the last block of the final stage, the default Grad-CAM layer.
    pub fn default_cam_layer(&self) -> String {
        format!("layer{}.{}", self.widths.len(), self.blocks_per_stage - 1)
    }
}

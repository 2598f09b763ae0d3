use super::{check_channels, hidden_width};
use crate::error::{Error, Result};
use crate::nn::linear::linear_forward;
use crate::nn::{Param, Parameterized, PoolKind};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Var};

/// Convolutional block attention: a channel pass followed by a spatial pass.
///
/// The channel pass feeds the spatially average- and max-pooled descriptors
/// through one shared bias-free MLP and gates with `σ(mlp(avg) + mlp(max))`.
/// The spatial pass stacks the per-pixel channel mean and channel max into a
/// 2×H×W map, convolves it to 1×H×W and gates with its sigmoid.
#[derive(Debug, Clone)]
pub struct CbamBlock {
    pub channels: usize,
    /// (C/r)×C
    pub w1: Param,
    /// C×(C/r)
    pub w2: Param,
    /// 1×2×ks×ks, no bias.
    pub spatial: Param,
}

impl CbamBlock {
    pub fn new(prefix: &str, channels: usize, reduction: usize, spatial_kernel: usize, rng: &mut SplitMix64) -> Result<Self> {
        if spatial_kernel % 2 == 0 {
            return Err(Error::InvalidConfig(format!("CBAM spatial kernel must be odd, got {spatial_kernel}")));
        }
        let hidden = hidden_width(channels, reduction);
        let ks = spatial_kernel;
        Ok(Self {
            channels,
            w1: Param::uniform(format!("{prefix}.mlp.w1"), &[hidden, channels], channels, rng),
            w2: Param::uniform(format!("{prefix}.mlp.w2"), &[channels, hidden], hidden, rng),
            spatial: Param::uniform(format!("{prefix}.spatial.weight"), &[1, 2, ks, ks], 2 * ks * ks, rng),
        })
    }

    pub fn spatial_kernel(&self) -> usize {
        self.spatial.value.shape()[2]
    }

    fn mlp(&self, tape: &mut Tape, z: Var) -> Result<Var> {
        let w1 = tape.param(&self.w1);
        let w2 = tape.param(&self.w2);
        let h = linear_forward(tape, w1, None, z)?;
        let h = tape.relu(h);
        linear_forward(tape, w2, None, h)
    }

    /// Returns the channel map (N×C×1×1) and the refined features.
    pub fn channel_attention(&self, tape: &mut Tape, f: Var) -> Result<(Var, Var)> {
        check_channels(tape, f, self.channels)?;
        let n = tape.shape(f)[0];
        let avg = tape.global_pool(PoolKind::Avg, f)?;
        let avg = tape.reshape(avg, [n, self.channels])?;
        let max = tape.global_pool(PoolKind::Max, f)?;
        let max = tape.reshape(max, [n, self.channels])?;
        let a = self.mlp(tape, avg)?;
        let m = self.mlp(tape, max)?;
        let logits = tape.add(a, m)?;
        let mc = tape.sigmoid(logits);
        let mc = tape.reshape(mc, [n, self.channels, 1, 1])?;
        let fc = tape.mul(f, mc)?;
        Ok((mc, fc))
    }

    /// Per-pixel channel mean and max stacked as N×2×H×W.
    pub fn channel_pool(tape: &mut Tape, f: Var) -> Result<Var> {
        let avg = tape.mean(f, &[1], true)?;
        let max = tape.max(f, &[1], true)?;
        tape.concat(&[avg, max], 1)
    }

    /// Returns the spatial map (N×1×H×W) and the refined features.
    pub fn spatial_attention(&self, tape: &mut Tape, fc: Var) -> Result<(Var, Var)> {
        let s = tape.shape(fc);
        if s.len() != 4 {
            return Err(Error::RankMismatch { expected: 4, shape: s.to_vec() });
        }
        let pooled = Self::channel_pool(tape, fc)?;
        let w = tape.param(&self.spatial);
        let pad = (self.spatial_kernel() - 1) / 2;
        let logits = tape.conv2d(pooled, w, None, [1, 1], [pad, pad])?;
        let ms = tape.sigmoid(logits);
        let fs = tape.mul(fc, ms)?;
        Ok((ms, fs))
    }

    pub fn forward(&self, tape: &mut Tape, f: Var) -> Result<Var> {
        let (_, fc) = self.channel_attention(tape, f)?;
        let (_, fs) = self.spatial_attention(tape, fc)?;
        Ok(fs)
    }
}

impl Parameterized for CbamBlock {
    fn params(&self) -> Vec<&Param> {
        vec![&self.w1, &self.w2, &self.spatial]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w1, &mut self.w2, &mut self.spatial]
    }
}

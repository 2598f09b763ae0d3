use super::check_channels;
use crate::error::Result;
use crate::nn::{Conv1d, Param, Parameterized, PoolKind};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Var};

/// Kernel size `⌈C/γ⌉`, bumped to the next odd number so the 1-D
/// convolution can keep "same" length.
pub fn eca_kernel_size(channels: usize, gamma: usize) -> usize {
    let k = channels.div_ceil(gamma).max(1);
    if k % 2 == 0 {
        k + 1
    } else {
        k
    }
}

/// Efficient channel attention: global average pool, a bias-free 1-D
/// convolution across the channel axis, sigmoid, channel-wise rescale.
#[derive(Debug, Clone)]
pub struct EcaBlock {
    pub channels: usize,
    pub gamma: usize,
    pub conv: Conv1d,
}

impl EcaBlock {
    pub fn new(prefix: &str, channels: usize, gamma: usize, rng: &mut SplitMix64) -> Result<Self> {
        let k = eca_kernel_size(channels, gamma);
        Ok(Self { channels, gamma, conv: Conv1d::new(&format!("{prefix}.conv"), k, rng)? })
    }

    pub fn kernel_size(&self) -> usize {
        self.conv.kernel_size()
    }

    /// Channel gates `s` with shape N×C×1×1.
    pub fn gates(&self, tape: &mut Tape, u: Var) -> Result<Var> {
        check_channels(tape, u, self.channels)?;
        let n = tape.shape(u)[0];
        let z = tape.global_pool(PoolKind::Avg, u)?;
        let z = tape.reshape(z, [n, self.channels])?;
        let s = self.conv.forward(tape, z)?;
        let s = tape.sigmoid(s);
        tape.reshape(s, [n, self.channels, 1, 1])
    }

    pub fn forward(&self, tape: &mut Tape, u: Var) -> Result<Var> {
        let s = self.gates(tape, u)?;
        tape.mul(u, s)
    }
}

impl Parameterized for EcaBlock {
    fn params(&self) -> Vec<&Param> {
        self.conv.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.conv.params_mut()
    }
}

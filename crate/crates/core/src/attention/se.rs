use super::{check_channels, hidden_width};
use crate::error::Result;
use crate::nn::linear::linear_forward;
use crate::nn::{Param, Parameterized, PoolKind};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Var};

/// Squeeze-and-excitation: global average pool, a bias-free
/// C → C/r → C bottleneck (ReLU then sigmoid), channel-wise rescale.
#[derive(Debug, Clone)]
pub struct SeBlock {
    pub channels: usize,
    /// (C/r)×C
    pub w1: Param,
    /// C×(C/r)
    pub w2: Param,
}

impl SeBlock {
    pub fn new(prefix: &str, channels: usize, reduction: usize, rng: &mut SplitMix64) -> Self {
        let hidden = hidden_width(channels, reduction);
        Self {
            channels,
            w1: Param::uniform(format!("{prefix}.w1"), &[hidden, channels], channels, rng),
            w2: Param::uniform(format!("{prefix}.w2"), &[channels, hidden], hidden, rng),
        }
    }

    /// Excitation gates `s` with shape N×C×1×1.
    pub fn excitation(&self, tape: &mut Tape, u: Var) -> Result<Var> {
        check_channels(tape, u, self.channels)?;
        let n = tape.shape(u)[0];
        let z = tape.global_pool(PoolKind::Avg, u)?;
        let z = tape.reshape(z, [n, self.channels])?;
        let w1 = tape.param(&self.w1);
        let w2 = tape.param(&self.w2);
        let h = linear_forward(tape, w1, None, z)?;
        let h = tape.relu(h);
        let s = linear_forward(tape, w2, None, h)?;
        let s = tape.sigmoid(s);
        tape.reshape(s, [n, self.channels, 1, 1])
    }

    pub fn forward(&self, tape: &mut Tape, u: Var) -> Result<Var> {
        let s = self.excitation(tape, u)?;
        tape.mul(u, s)
    }
}

impl Parameterized for SeBlock {
    fn params(&self) -> Vec<&Param> {
        vec![&self.w1, &self.w2]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w1, &mut self.w2]
    }
}

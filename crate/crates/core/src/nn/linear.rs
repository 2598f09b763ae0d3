use super::param::{Param, Parameterized};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Tensor, Var};

/// Fully connected layer, `y = x·Wᵀ + b` with `W` stored out×in.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Param,
    pub bias: Option<Param>,
}

impl Linear {
    pub fn new(name: &str, inputs: usize, outputs: usize, bias: bool, rng: &mut SplitMix64) -> Self {
        Self {
            weight: Param::uniform(format!("{name}.weight"), &[outputs, inputs], inputs, rng),
            bias: bias.then(|| Param::new(format!("{name}.bias"), Tensor::zeros([outputs]))),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(&self.weight);
        let b = self.bias.as_ref().map(|b| tape.param(b));
        linear_forward(tape, w, b, x)
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}

/// `x (N×in) · weightᵀ (in×out) + bias (out)`.
pub fn linear_forward(tape: &mut Tape, weight: Var, bias: Option<Var>, x: Var) -> Result<Var> {
    let (ws, xs) = (tape.shape(weight).to_vec(), tape.shape(x).to_vec());
    if ws.len() != 2 || xs.len() != 2 || ws[1] != xs[1] {
        return Err(Error::InnerDimMismatch { lhs: xs, rhs: ws });
    }
    let wt = tape.transpose(weight)?;
    let y = tape.matmul(x, wt)?;
    match bias {
        Some(b) => tape.add(y, b),
        None => Ok(y),
    }
}

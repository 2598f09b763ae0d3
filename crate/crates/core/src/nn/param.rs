use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Tensor};

/// A named tensor owned by a layer. Buffers (batch-norm running statistics)
/// are checkpointed but never touched by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Option<Tensor>,
    pub trainable: bool,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        Self { name: name.into(), value, grad: None, trainable: true }
    }

    pub fn buffer(name: impl Into<String>, value: Tensor) -> Self {
        Self { name: name.into(), value, grad: None, trainable: false }
    }

    /// Weights drawn uniformly from ±sqrt(1/fan_in).
    pub fn uniform(name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut SplitMix64) -> Self {
        let bound = (1.0 / fan_in as f64).sqrt();
        Self::new(name, Tensor::from_fn(shape.to_vec(), |_| rng.uniform(-bound, bound)))
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

pub trait Parameterized {
    /// All parameters and buffers in a fixed, deterministic order.
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn trainable_count(&self) -> usize {
        self.params().iter().filter(|p| p.trainable).map(|p| p.numel()).sum()
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad = None;
        }
    }

    /// Adds the gradients recorded on `tape` into each parameter's `grad`.
    fn accumulate_grads(&mut self, tape: &Tape) {
        for p in self.params_mut() {
            if !p.trainable {
                continue;
            }
            if let Some(g) = tape.param_grad(&p.name) {
                match &mut p.grad {
                    Some(acc) => acc.add_assign(g),
                    slot => *slot = Some(g.clone()),
                }
            }
        }
    }

    /// Overwrites parameter values from named tensors. The names must match
    /// exactly (no missing or extra entries) and nothing changes on error.
    fn load_named(&mut self, entries: &[(String, Tensor)]) -> Result<()> {
        let mut params = self.params_mut();
        let mut sources = Vec::with_capacity(params.len());
        for p in &params {
            let (_, t) = entries
                .iter()
                .find(|(n, _)| *n == p.name)
                .ok_or_else(|| Error::BadCheckpoint(format!("missing parameter {}", p.name)))?;
            if t.shape() != p.value.shape() {
                return Err(Error::BadCheckpoint(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    p.name,
                    t.shape(),
                    p.value.shape()
                )));
            }
            sources.push(t);
        }
        if let Some((name, _)) = entries.iter().find(|(n, _)| !params.iter().any(|p| p.name == *n)) {
            return Err(Error::BadCheckpoint(format!("unexpected parameter {name}")));
        }
        for (p, t) in params.iter_mut().zip(sources) {
            p.value = t.clone();
        }
        Ok(())
    }
}

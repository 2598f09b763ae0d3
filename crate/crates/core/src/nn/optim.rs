use std::collections::HashMap;

use super::param::Param;
use crate::error::{Error, Result};

/// SGD with classical momentum: `v ← m·v + g`, `p ← p − lr·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    velocity: HashMap<String, Vec<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Self { lr, momentum, velocity: HashMap::new() }
    }

    /// Updates every trainable parameter. Fails before touching anything if
    /// a trainable parameter has no gradient.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>) -> Result<()> {
        let params: Vec<&mut Param> = params.into_iter().filter(|p| p.trainable).collect();
        if let Some(p) = params.iter().find(|p| p.grad.is_none()) {
            return Err(Error::MissingGradient(p.name.clone()));
        }
        for p in params {
            let grad = p.grad.as_ref().expect("checked above");
            let v = self.velocity.entry(p.name.clone()).or_insert_with(|| vec![0.0; grad.len()]);
            for ((pv, vv), &g) in p.value.data_mut().iter_mut().zip(v.iter_mut()).zip(grad.data()) {
                *vv = self.momentum * *vv + g;
                *pv -= self.lr * *vv;
            }
        }
        Ok(())
    }
}

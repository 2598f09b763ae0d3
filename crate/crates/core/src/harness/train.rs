use crate::backbone::{Classifier, ResNet};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nn::{Mode, Parameterized, Sgd};
use crate::rng::SplitMix64;
use crate::tensor::Tape;

/// SGD settings. The defaults are desk-scale choices, not tuned values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.05, momentum: 0.9, batch_size: 32, epochs: 15 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bad.push(format!("train.lr = {} (need > 0)", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            bad.push(format!("train.momentum = {} (need [0, 1))", self.momentum));
        }
        if self.batch_size < 2 {
            bad.push(format!("train.batch_size = {} (need >= 2 for batch norm)", self.batch_size));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join("; ")))
        }
    }
}

/// Mean training loss per epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

/// Trains in place; `shuffle_seed` drives the per-epoch batch order.
/// Trailing batches smaller than two images are skipped (batch norm needs
/// at least two values per channel).
pub fn train_model(model: &mut ResNet, data: &Dataset, cfg: &TrainConfig, shuffle_seed: u64, exec: Exec) -> Result<TrainLog> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = SplitMix64::new(shuffle_seed);
    let mut sgd = Sgd::new(cfg.lr, cfg.momentum);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size).filter(|c| c.len() >= 2) {
            let (x, labels) = data.batch(chunk);
            let mut tape = Tape::with_exec(exec);
            let x = tape.constant(x);
            let logits = model.forward(&mut tape, x, Mode::Train)?;
            let loss = tape.softmax_cross_entropy(logits, &labels)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Diverged { variant: model.config.attention.to_string(), trial: 0, loss: value });
            }
            tape.backward(loss)?;
            model.zero_grad();
            model.accumulate_grads(&tape);
            model.apply_bn_updates(&tape);
            sgd.step(model.params_mut())?;
            total += value * chunk.len() as f64;
            count += chunk.len();
        }
        log.epoch_loss.push(if count > 0 { total / count as f64 } else { 0.0 });
    }
    Ok(log)
}

/// Argmax class per sample (ties go to the lowest index), in eval mode.
pub fn predict<M: Classifier + ?Sized>(model: &M, data: &Dataset, batch_size: usize) -> Result<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut out = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(batch_size) {
        let (x, _) = data.batch(chunk);
        let mut tape = Tape::new();
        let x = tape.constant(x);
        let logits = model.forward(&mut tape, x, Mode::Eval)?;
        let t = tape.value(logits);
        let k = t.shape()[1];
        for row in t.data().chunks(k) {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            out.push(best);
        }
    }
    Ok(out)
}

pub fn top1_accuracy<M: Classifier + ?Sized>(model: &M, data: &Dataset, batch_size: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pred = predict(model, data, batch_size)?;
    let hits = pred.iter().zip(&data.images).filter(|(p, img)| **p == img.label).count();
    Ok(hits as f64 / data.len() as f64)
}

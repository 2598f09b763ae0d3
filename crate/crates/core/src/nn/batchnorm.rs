use super::param::{Param, Parameterized};
use super::Mode;
use crate::error::{Error, Result};
use crate::tensor::{BnUpdate, Op, Tape, Tensor, Var};

/// Per-channel batch normalization over N×C×H×W.
///
/// Train mode normalizes with the biased batch variance and reports the
/// batch statistics through the tape (see [`BatchNorm2d::apply_update`]);
/// eval mode uses the running estimates and is a pure function of its input.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub name: String,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Param,
    pub running_var: Param,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm2d {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            name: name.to_string(),
            gamma: Param::new(format!("{name}.gamma"), Tensor::ones([channels])),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros([channels])),
            running_mean: Param::buffer(format!("{name}.running_mean"), Tensor::zeros([channels])),
            running_var: Param::buffer(format!("{name}.running_var"), Tensor::ones([channels])),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.value.len()
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, mode: Mode) -> Result<Var> {
        let shape = tape.shape(x).to_vec();
        let &[n, c, h, w] = shape.as_slice() else {
            return Err(Error::RankMismatch { expected: 4, shape });
        };
        if c != self.channels() {
            return Err(Error::ChannelMismatch { expected: self.channels(), actual: c });
        }
        let gamma = tape.param(&self.gamma);
        let beta = tape.param(&self.beta);
        let hw = h * w;
        let xv = tape.value(x).data();
        let (gv, bv) = (self.gamma.value.data(), self.beta.value.data());
        match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::BatchTooSmall(n));
                }
                let m = (n * hw) as f64;
                let mut mean = vec![0.0; c];
                let mut var = vec![0.0; c];
                for ch in 0..c {
                    let vals = (0..n).flat_map(|i| &xv[(i * c + ch) * hw..(i * c + ch + 1) * hw]);
                    mean[ch] = vals.clone().sum::<f64>() / m;
                    var[ch] = vals.map(|v| (v - mean[ch]).powi(2)).sum::<f64>() / m;
                }
                let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
                let mut xhat = vec![0.0; xv.len()];
                let mut y = vec![0.0; xv.len()];
                for (idx, (&v, (xh, yo))) in xv.iter().zip(xhat.iter_mut().zip(y.iter_mut())).enumerate() {
                    let ch = (idx / hw) % c;
                    *xh = (v - mean[ch]) * inv_std[ch];
                    *yo = gv[ch] * *xh + bv[ch];
                }
                let unbiased = var.iter().map(|v| v * m / (m - 1.0)).collect();
                tape.record_bn_update(BnUpdate { layer: self.name.clone(), mean, var: unbiased });
                let xhat = Tensor::from_parts(shape.clone(), xhat);
                Ok(tape.push(Tensor::from_parts(shape, y), Op::BatchNormTrain { x, gamma, beta, xhat, inv_std }))
            }
            Mode::Eval => {
                let mean = self.running_mean.value.data().to_vec();
                let inv_std: Vec<f64> = self.running_var.value.data().iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
                let y = xv
                    .iter()
                    .enumerate()
                    .map(|(idx, &v)| {
                        let ch = (idx / hw) % c;
                        gv[ch] * ((v - mean[ch]) * inv_std[ch]) + bv[ch]
                    })
                    .collect();
                Ok(tape.push(Tensor::from_parts(shape, y), Op::BatchNormEval { x, gamma, beta, mean, inv_std }))
            }
        }
    }

    /// Folds observed batch statistics into the running estimates.
    pub fn apply_update(&mut self, update: &BnUpdate) {
        let m = self.momentum;
        for (r, b) in self.running_mean.value.data_mut().iter_mut().zip(&update.mean) {
            *r = (1.0 - m) * *r + m * b;
        }
        for (r, b) in self.running_var.value.data_mut().iter_mut().zip(&update.var) {
            *r = (1.0 - m) * *r + m * b;
        }
    }
}

impl Parameterized for BatchNorm2d {
    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta, &mut self.running_mean, &mut self.running_var]
    }
}

fn channel_sums(g: &[f64], other: Option<&[f64]>, c: usize, hw: usize) -> Vec<f64> {
    let mut s = vec![0.0; c];
    for (idx, &gv) in g.iter().enumerate() {
        s[(idx / hw) % c] += gv * other.map_or(1.0, |o| o[idx]);
    }
    s
}

pub(crate) fn train_backward(g: &Tensor, xhat: &Tensor, inv_std: &[f64], gamma: &Tensor) -> (Tensor, Tensor, Tensor) {
    let shape = g.shape();
    let (n, c, hw) = (shape[0], shape[1], shape[2] * shape[3]);
    let m = (n * hw) as f64;
    let sum_g = channel_sums(g.data(), None, c, hw);
    let sum_gx = channel_sums(g.data(), Some(xhat.data()), c, hw);
    let gm = gamma.data();
    let dx = g
        .data()
        .iter()
        .zip(xhat.data())
        .enumerate()
        .map(|(idx, (&gv, &xh))| {
            let ch = (idx / hw) % c;
            gm[ch] * inv_std[ch] / m * (m * gv - sum_g[ch] - xh * sum_gx[ch])
        })
        .collect();
    (
        Tensor::from_parts(shape.to_vec(), dx),
        Tensor::from_parts(vec![c], sum_gx),
        Tensor::from_parts(vec![c], sum_g),
    )
}

pub(crate) fn eval_backward(g: &Tensor, x: &Tensor, mean: &[f64], inv_std: &[f64], gamma: &Tensor) -> (Tensor, Tensor, Tensor) {
    let shape = g.shape();
    let (c, hw) = (shape[1], shape[2] * shape[3]);
    let xhat: Vec<f64> = x.data().iter().enumerate().map(|(i, &v)| (v - mean[(i / hw) % c]) * inv_std[(i / hw) % c]).collect();
    let gm = gamma.data();
    let dx = g.data().iter().enumerate().map(|(i, &gv)| gv * gm[(i / hw) % c] * inv_std[(i / hw) % c]).collect();
    (
        Tensor::from_parts(shape.to_vec(), dx),
        Tensor::from_parts(vec![c], channel_sums(g.data(), Some(&xhat), c, hw)),
        Tensor::from_parts(vec![c], channel_sums(g.data(), None, c, hw)),
    )
}

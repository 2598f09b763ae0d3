#![allow(dead_code)]

use sar_attention::nn::Parameterized;
use sar_attention::rng::SplitMix64;
use sar_attention::{Result, Tape, Tensor, Var};

pub fn rand_tensor(shape: &[usize], rng: &mut SplitMix64, lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape.to_vec(), |_| rng.uniform(lo, hi))
}

pub fn randn(shape: &[usize], rng: &mut SplitMix64) -> Tensor {
    Tensor::from_fn(shape.to_vec(), |_| rng.normal())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-10 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Outcome of a finite-difference check: worst relative error and the
/// tensor it came from.
#[derive(Debug)]
pub struct GradReport {
    pub worst: f64,
    pub worst_name: String,
    pub checked: usize,
}

/// Central-difference gradient check of `sum(R ⊙ f(inputs, params))` with a
/// fixed random projection `R`. Checks every input element and every
/// trainable parameter element, or at most `max_coords` sampled coordinates
/// per tensor when given.
pub fn grad_check<M, F>(model: &mut M, inputs: &[Tensor], f: F, h: f64, max_coords: Option<usize>, seed: u64) -> Result<GradReport>
where
    M: Parameterized,
    F: Fn(&M, &mut Tape, &[Var]) -> Result<Var>,
{
    let project = |model: &M, inputs: &[Tensor], proj: Option<&Tensor>| -> Result<(f64, Tape, Vec<Var>, Tensor)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(model, &mut tape, &vars)?;
        let r = match proj {
            Some(r) => r.clone(),
            None => randn(tape.shape(out), &mut SplitMix64::new(seed ^ 0x5eed)),
        };
        let rv = tape.constant(r.clone());
        let prod = tape.mul(out, rv)?;
        let loss = tape.sum_all(prod);
        let value = tape.value(loss).item();
        tape.backward(loss)?;
        Ok((value, tape, vars, r))
    };

    let (_, tape, vars, r) = project(&*model, inputs, None)?;
    let mut rng = SplitMix64::new(seed);
    let mut report = GradReport { worst: 0.0, worst_name: String::new(), checked: 0 };
    let pick = |len: usize, rng: &mut SplitMix64| -> Vec<usize> {
        match max_coords {
            Some(k) if k < len => (0..k).map(|_| rng.below(len)).collect(),
            _ => (0..len).collect(),
        }
    };

    let record = |name: String, analytic: Vec<f64>, numeric: Vec<f64>, report: &mut GradReport| {
        let e = rel_error(&analytic, &numeric);
        report.checked += analytic.len();
        if e >= report.worst {
            report.worst = e;
            report.worst_name = name;
        }
    };

    for (i, input) in inputs.iter().enumerate() {
        let g = tape.grad(vars[i]).cloned().unwrap_or_else(|| Tensor::zeros(input.shape().to_vec()));
        let coords = pick(input.len(), &mut rng);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for &c in &coords {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[c] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[c] -= h;
            let fp = project(&*model, &plus, Some(&r))?.0;
            let fm = project(&*model, &minus, Some(&r))?.0;
            analytic.push(g.data()[c]);
            numeric.push((fp - fm) / (2.0 * h));
        }
        record(format!("input {i}"), analytic, numeric, &mut report);
    }

    let names: Vec<(String, usize)> =
        model.params().iter().filter(|p| p.trainable).map(|p| (p.name.clone(), p.numel())).collect();
    for (name, len) in names {
        let g = tape.param_grad(&name).cloned();
        let coords = pick(len, &mut rng);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for &c in &coords {
            let eval = |delta: f64, model: &mut M| -> Result<f64> {
                let p = model.params_mut().into_iter().find(|p| p.name == name).expect("param");
                p.value.data_mut()[c] += delta;
                let v = project(&*model, inputs, Some(&r))?.0;
                let p = model.params_mut().into_iter().find(|p| p.name == name).expect("param");
                p.value.data_mut()[c] -= delta;
                Ok(v)
            };
            let fp = eval(h, model)?;
            let fm = eval(-h, model)?;
            analytic.push(g.as_ref().map(|t| t.data()[c]).unwrap_or(0.0));
            numeric.push((fp - fm) / (2.0 * h));
        }
        record(name, analytic, numeric, &mut report);
    }
    Ok(report)
}

/// A parameter-free stand-in for checks on bare tape operations.
pub struct NoParams;

impl Parameterized for NoParams {
    fn params(&self) -> Vec<&sar_attention::nn::Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut sar_attention::nn::Param> {
        Vec::new()
    }
}
pub mod gradsuite;
pub mod oracles;
pub mod invariants;
pub mod camsuite;
pub mod fuzz;
pub mod tables;

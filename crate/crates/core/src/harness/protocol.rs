use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::perturb::{perturb_dataset, PerturbSpec};
use super::report::{assign_deltas, format_report, TrialReport};
use super::train::{top1_accuracy, train_model};
use crate::attention::AttentionKind;
use crate::backbone::ResNet;
use crate::data::{load_dataset, Dataset, Split};
use crate::error::{Error, Result};
use crate::nn::checkpoint;
use crate::rng::derive_seed;

/// Outcome of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub clean: Vec<TrialReport>,
    pub perturbed: Option<Vec<TrialReport>>,
    /// `(variant, trial, checkpoint bytes)` of every clean-trained model.
    pub checkpoints: Vec<(AttentionKind, usize, Vec<u8>)>,
    /// Training accuracy per (variant, trial), same order as `checkpoints`.
    pub train_accuracy: Vec<f64>,
}

struct TrialResult {
    clean: f64,
    perturbed: Option<f64>,
    train: f64,
    checkpoint: Vec<u8>,
}

fn train_one(cfg: &ExperimentConfig, kind: AttentionKind, seed: u64, train: &Dataset) -> Result<ResNet> {
    let mut model = ResNet::build(&cfg.model.clone().with_attention(kind), seed)?;
    train_model(&mut model, train, &cfg.train, derive_seed(seed, &[1]), cfg.exec)?;
    Ok(model)
}

fn run_trial(cfg: &ExperimentConfig, kind: AttentionKind, trial: usize, train: &Dataset, test: &Dataset) -> Result<TrialResult> {
    let seed = cfg.seed + trial as u64;
    let with_trial = |e: Error| match e {
        Error::Diverged { variant, loss, .. } => Error::Diverged { variant, trial, loss },
        e => e,
    };
    let model = train_one(cfg, kind, seed, train).map_err(with_trial)?;
    let clean = top1_accuracy(&model, test, cfg.eval_batch)?;
    let train_acc = top1_accuracy(&model, train, cfg.eval_batch)?;
    let perturbed = if cfg.perturb_enabled {
        let spec = PerturbSpec { seed: cfg.perturb.seed + trial as u64, ..cfg.perturb };
        let noisy = perturb_dataset(test, &spec);
        let acc = if cfg.reuse_models {
            top1_accuracy(&model, &noisy, cfg.eval_batch)?
        } else {
            let fresh = train_one(cfg, kind, derive_seed(seed, &[2]), train).map_err(with_trial)?;
            top1_accuracy(&fresh, &noisy, cfg.eval_batch)?
        };
        Some(acc)
    } else {
        None
    };
    Ok(TrialResult { clean, perturbed, train: train_acc, checkpoint: checkpoint::to_bytes(&model) })
}

/// Trains and evaluates every variant for `cfg.trials` trials with seed
/// `cfg.seed + trial`. Jobs run in parallel; results are assembled in
/// (variant, trial) order.
pub fn run_protocol(cfg: &ExperimentConfig) -> Result<ProtocolOutput> {
    cfg.validate()?;
    let source = cfg.data_source();
    let size = cfg.model.input_size[0];
    let train = load_dataset(&source, Split::Train, size)?;
    let test = load_dataset(&source, Split::Test, size)?;
    run_protocol_on(cfg, &train, &test)
}

pub fn run_protocol_on(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<ProtocolOutput> {
    cfg.validate()?;
    if train.num_classes() != cfg.model.classes {
        return Err(Error::InvalidConfig(format!(
            "dataset has {} classes but model.classes = {}",
            train.num_classes(),
            cfg.model.classes
        )));
    }
    let jobs: Vec<(AttentionKind, usize)> =
        cfg.variants.iter().flat_map(|&k| (0..cfg.trials).map(move |t| (k, t))).collect();
    let results = cfg.exec.map(jobs.len(), |j| run_trial(cfg, jobs[j].0, jobs[j].1, train, test));
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter();

    let mut clean = Vec::new();
    let mut perturbed = Vec::new();
    let mut checkpoints = Vec::new();
    let mut train_accuracy = Vec::new();
    for &kind in &cfg.variants {
        let mut c = Vec::new();
        let mut p = Vec::new();
        for trial in 0..cfg.trials {
            let r = results.next().expect("one result per job");
            c.push(r.clean);
            p.extend(r.perturbed);
            train_accuracy.push(r.train);
            checkpoints.push((kind, trial, r.checkpoint));
        }
        clean.push(TrialReport::new(kind, c));
        perturbed.push(TrialReport::new(kind, p));
    }
    assign_deltas(&mut clean);
    let perturbed = cfg.perturb_enabled.then(|| {
        assign_deltas(&mut perturbed);
        perturbed
    });
    Ok(ProtocolOutput { clean, perturbed, checkpoints, train_accuracy })
}

/// Full report: resolved config (as `#` comments) followed by the clean and,
/// when present, perturbed tables.
pub fn render_protocol(cfg: &ExperimentConfig, out: &ProtocolOutput) -> String {
    let mut text = String::from("# resolved config\n");
    for line in cfg.to_text().lines() {
        let _ = writeln!(text, "# {line}");
    }
    text.push('\n');
    text.push_str(&format_report("Top-1 accuracy (clean)", &out.clean));
    if let Some(p) = &out.perturbed {
        text.push('\n');
        let title = format!(
            "Top-1 accuracy under N({}, {:.6}) input perturbation ({}, sigma = {:.6})",
            cfg.perturb.mean,
            cfg.perturb.scale,
            cfg.perturb.interpretation,
            cfg.perturb.sigma()
        );
        text.push_str(&format_report(&title, p));
    }
    text
}

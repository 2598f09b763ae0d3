//! Flat `key = value` experiment configuration with `#` comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::perturb::{NoiseScale, PerturbSpec};
use super::train::TrainConfig;
use crate::attention::AttentionKind;
use crate::backbone::ModelConfig;
use crate::data::{DataSource, SynthConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq)]
pub enum DataChoice {
    Synth,
    Mstar(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub data: DataChoice,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub perturb: PerturbSpec,
    pub perturb_enabled: bool,
    /// Evaluate the perturbed set with the clean-trained models rather than
    /// retraining.
    pub reuse_models: bool,
    pub trials: usize,
    pub seed: u64,
    pub variants: Vec<AttentionKind>,
    pub exec: Exec,
    pub eval_batch: usize,
}

impl Default for ExperimentConfig {
    /// Desk-scale protocol on the synthetic set.
    fn default() -> Self {
        Self {
            model: ModelConfig::desk(),
            data: DataChoice::Synth,
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            perturb: PerturbSpec::default(),
            perturb_enabled: true,
            reuse_models: true,
            trials: 3,
            seed: 7,
            variants: AttentionKind::ALL.to_vec(),
            exec: Exec::default(),
            eval_batch: 64,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn data_source(&self) -> DataSource {
        match &self.data {
            DataChoice::Synth => DataSource::Synth(SynthConfig {
                classes: self.model.classes,
                size: self.model.input_size[0],
                ..self.synth.clone()
            }),
            DataChoice::Mstar(dir) => DataSource::MstarDir(dir.clone()),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model.attention" => self.model.attention = v.parse()?,
            "model.insertion" => self.model.insertion = v.parse()?,
            "model.input_size" => {
                let s = parse(key, v)?;
                self.model.input_size = [s, s];
            }
            "model.in_channels" => self.model.in_channels = parse(key, v)?,
            "model.classes" => self.model.classes = parse(key, v)?,
            "model.widths" => self.model.widths = parse_list(key, v)?,
            "model.blocks_per_stage" => self.model.blocks_per_stage = parse(key, v)?,
            "attention.reduction" => self.model.attention_params.reduction = parse(key, v)?,
            "attention.eca_gamma" => self.model.attention_params.eca_gamma = parse(key, v)?,
            "attention.spatial_kernel" => self.model.attention_params.spatial_kernel = parse(key, v)?,
            "data.source" => {
                self.data = match v {
                    "synth" => DataChoice::Synth,
                    "mstar" => DataChoice::Mstar(match &self.data {
                        DataChoice::Mstar(d) => d.clone(),
                        DataChoice::Synth => PathBuf::new(),
                    }),
                    _ => return Err(Error::InvalidConfig(format!("data.source: expected synth or mstar, got {v:?}"))),
                }
            }
            "data.dir" => self.data = DataChoice::Mstar(PathBuf::from(v)),
            "synth.train_per_class" => self.synth.train_per_class = parse(key, v)?,
            "synth.test_per_class" => self.synth.test_per_class = parse(key, v)?,
            "synth.looks" => {
                let looks: f64 = parse(key, v)?;
                self.synth.speckle_looks = (looks > 0.0).then_some(looks);
            }
            "synth.target_level" => self.synth.target_level = parse(key, v)?,
            "synth.background_level" => self.synth.background_level = parse(key, v)?,
            "synth.shadow_level" => self.synth.shadow_level = parse(key, v)?,
            "synth.max_shift" => self.synth.max_shift = parse(key, v)?,
            "synth.max_rotation_deg" => self.synth.max_rotation_deg = parse(key, v)?,
            "synth.shadow_offset" => {
                let o: Vec<f64> = parse_list(key, v)?;
                if o.len() != 2 {
                    return Err(Error::InvalidConfig(format!("{key}: expected two values, got {v:?}")));
                }
                self.synth.shadow_offset = [o[0], o[1]];
            }
            "synth.seed" => self.synth.seed = parse(key, v)?,
            "train.lr" => self.train.lr = parse(key, v)?,
            "train.momentum" => self.train.momentum = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "perturb.enabled" => self.perturb_enabled = parse_bool(key, v)?,
            "perturb.mean" => self.perturb.mean = parse(key, v)?,
            "perturb.scale" => self.perturb.scale = parse(key, v)?,
            "perturb.interpretation" => self.perturb.interpretation = v.parse::<NoiseScale>()?,
            "perturb.seed" => self.perturb.seed = parse(key, v)?,
            "perturb.reuse_models" => self.reuse_models = parse_bool(key, v)?,
            "protocol.trials" => self.trials = parse(key, v)?,
            "protocol.seed" => self.seed = parse(key, v)?,
            "protocol.variants" => self.variants = parse_list(key, v)?,
            "protocol.eval_batch" => self.eval_batch = parse(key, v)?,
            "protocol.exec" => {
                self.exec = match v {
                    "parallel" => Exec::Parallel,
                    "sequential" => Exec::Sequential,
                    _ => return Err(Error::InvalidConfig(format!("{key}: expected parallel or sequential, got {v:?}"))),
                }
            }
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.perturb_enabled {
            self.perturb.validate()?;
        }
        let mut bad = Vec::new();
        if self.trials == 0 {
            bad.push("protocol.trials = 0 (need >= 1)".to_string());
        }
        if self.variants.is_empty() {
            bad.push("protocol.variants is empty".to_string());
        }
        if self.eval_batch == 0 {
            bad.push("protocol.eval_batch = 0".to_string());
        }
        if self.model.input_size[0] != self.model.input_size[1] {
            bad.push("model.input_size must be square".to_string());
        }
        if let DataChoice::Mstar(dir) = &self.data {
            if dir.as_os_str().is_empty() {
                bad.push("data.source = mstar needs data.dir".to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join("; ")))
        }
    }

    /// Every key with its resolved value, in a fixed order. Parsing the
    /// output reproduces the config.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let s = &self.synth;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("model.attention", m.attention.to_string());
        kv("model.insertion", m.insertion.to_string());
        kv("model.input_size", m.input_size[0].to_string());
        kv("model.in_channels", m.in_channels.to_string());
        kv("model.classes", m.classes.to_string());
        kv("model.widths", join(&m.widths));
        kv("model.blocks_per_stage", m.blocks_per_stage.to_string());
        kv("attention.reduction", m.attention_params.reduction.to_string());
        kv("attention.eca_gamma", m.attention_params.eca_gamma.to_string());
        kv("attention.spatial_kernel", m.attention_params.spatial_kernel.to_string());
        match &self.data {
            DataChoice::Synth => kv("data.source", "synth".into()),
            DataChoice::Mstar(d) => kv("data.dir", d.display().to_string()),
        }
        kv("synth.train_per_class", s.train_per_class.to_string());
        kv("synth.test_per_class", s.test_per_class.to_string());
        kv("synth.looks", s.speckle_looks.unwrap_or(0.0).to_string());
        kv("synth.target_level", s.target_level.to_string());
        kv("synth.background_level", s.background_level.to_string());
        kv("synth.shadow_level", s.shadow_level.to_string());
        kv("synth.max_shift", s.max_shift.to_string());
        kv("synth.max_rotation_deg", s.max_rotation_deg.to_string());
        kv("synth.shadow_offset", join(&s.shadow_offset));
        kv("synth.seed", s.seed.to_string());
        kv("train.lr", self.train.lr.to_string());
        kv("train.momentum", self.train.momentum.to_string());
        kv("train.batch_size", self.train.batch_size.to_string());
        kv("train.epochs", self.train.epochs.to_string());
        kv("perturb.enabled", self.perturb_enabled.to_string());
        kv("perturb.mean", self.perturb.mean.to_string());
        kv("perturb.scale", self.perturb.scale.to_string());
        kv("perturb.interpretation", self.perturb.interpretation.to_string());
        kv("perturb.seed", self.perturb.seed.to_string());
        kv("perturb.reuse_models", self.reuse_models.to_string());
        kv("protocol.trials", self.trials.to_string());
        kv("protocol.seed", self.seed.to_string());
        kv("protocol.variants", join(&self.variants));
        kv("protocol.eval_batch", self.eval_batch.to_string());
        kv(
            "protocol.exec",
            match self.exec {
                Exec::Parallel => "parallel",
                Exec::Sequential => "sequential",
            }
            .into(),
        );
        out
    }
}

use super::{Classifier, InsertionMode, ModelConfig};
use crate::attention::AttentionBlock;
use crate::error::{Error, Result};
use crate::nn::{BatchNorm2d, Conv2d, Linear, Mode, Param, Parameterized, PoolKind};
use crate::rng::SplitMix64;
use crate::tensor::{Tape, Var};

/// Two 3×3 conv/BN stages with an identity or 1×1-projection skip path and
/// an optional attention block.
#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub name: String,
    pub conv1: Conv2d,
    pub bn1: BatchNorm2d,
    pub conv2: Conv2d,
    pub bn2: BatchNorm2d,
    pub downsample: Option<(Conv2d, BatchNorm2d)>,
    pub attention: Option<AttentionBlock>,
}

impl BasicBlock {
    pub fn new(name: &str, cin: usize, cout: usize, stride: usize, attention: Option<AttentionBlock>, rng: &mut SplitMix64) -> Self {
        let conv1 = Conv2d::new(&format!("{name}.conv1"), cin, cout, 3, stride, 1, false, rng);
        let bn1 = BatchNorm2d::new(&format!("{name}.bn1"), cout);
        let conv2 = Conv2d::new(&format!("{name}.conv2"), cout, cout, 3, 1, 1, false, rng);
        let bn2 = BatchNorm2d::new(&format!("{name}.bn2"), cout);
        let downsample = (stride != 1 || cin != cout).then(|| {
            (
                Conv2d::new(&format!("{name}.downsample.conv"), cin, cout, 1, stride, 0, false, rng),
                BatchNorm2d::new(&format!("{name}.downsample.bn"), cout),
            )
        });
        Self { name: name.to_string(), conv1, bn1, conv2, bn2, downsample, attention }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, mode: Mode, insertion: InsertionMode) -> Result<Var> {
        let cin = self.conv1.in_channels();
        let s = tape.shape(x);
        if s.len() != 4 || s[1] != cin {
            return Err(Error::ShapeMismatch { lhs: s.to_vec(), rhs: vec![0, cin, 0, 0] });
        }
        let h = self.conv1.forward(tape, x)?;
        let h = self.bn1.forward(tape, h, mode)?;
        let h = tape.relu(h);
        let h = self.conv2.forward(tape, h)?;
        tape.tag(format!("{}.conv2", self.name), h);
        let mut branch = self.bn2.forward(tape, h, mode)?;
        let skip = match &self.downsample {
            Some((conv, bn)) => {
                let d = conv.forward(tape, x)?;
                bn.forward(tape, d, mode)?
            }
            None => x,
        };
        if let (Some(att), InsertionMode::InBlock) = (&self.attention, insertion) {
            branch = att.forward(tape, branch)?;
        }
        let sum = tape.add(skip, branch)?;
        let mut out = tape.relu(sum);
        if let (Some(att), InsertionMode::ResidualWrap) = (&self.attention, insertion) {
            let refined = att.forward(tape, out)?;
            out = tape.add(out, refined)?;
        }
        Ok(out)
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        let mut v = vec![&mut self.bn1, &mut self.bn2];
        v.extend(self.downsample.as_mut().map(|(_, bn)| bn));
        v
    }
}

impl Parameterized for BasicBlock {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.conv1.params();
        v.extend(self.bn1.params());
        v.extend(self.conv2.params());
        v.extend(self.bn2.params());
        if let Some((c, b)) = &self.downsample {
            v.extend(c.params());
            v.extend(b.params());
        }
        if let Some(a) = &self.attention {
            v.extend(a.params());
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.conv1.params_mut();
        v.extend(self.bn1.params_mut());
        v.extend(self.conv2.params_mut());
        v.extend(self.bn2.params_mut());
        if let Some((c, b)) = &mut self.downsample {
            v.extend(c.params_mut());
            v.extend(b.params_mut());
        }
        if let Some(a) = &mut self.attention {
            v.extend(a.params_mut());
        }
        v
    }
}

/// Stem (7×7/2 conv, BN, ReLU, 3×3/2 max pool), residual stages, global
/// average pool and a linear head.
///
/// Tags recorded on the tape: `stem`, `layer{s}.{b}` for each block output
/// and `layer{s}.{b}.conv2` for each second convolution, with `s` counted
/// from 1.
#[derive(Debug, Clone)]
pub struct ResNet {
    pub config: ModelConfig,
    pub stem: Conv2d,
    pub stem_bn: BatchNorm2d,
    pub blocks: Vec<BasicBlock>,
    pub head: Linear,
}

impl ResNet {
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SplitMix64::new(seed);
        let stem = Conv2d::new("stem.conv", config.in_channels, config.widths[0], 7, 2, 3, false, &mut rng);
        let stem_bn = BatchNorm2d::new("stem.bn", config.widths[0]);
        let mut blocks = Vec::new();
        let mut cin = config.widths[0];
        for (stage, &width) in config.widths.iter().enumerate() {
            for b in 0..config.blocks_per_stage {
                let stride = if stage > 0 && b == 0 { 2 } else { 1 };
                let index = blocks.len();
                let att = AttentionBlock::build(
                    config.attention,
                    &format!("att.{index}"),
                    width,
                    &config.attention_params,
                    &mut rng,
                )?;
                blocks.push(BasicBlock::new(&format!("layer{}.{b}", stage + 1), cin, width, stride, att, &mut rng));
                cin = width;
            }
        }
        let head = Linear::new("head", cin, config.classes, true, &mut rng);
        Ok(Self { config: config.clone(), stem, stem_bn, blocks, head })
    }

    /// Folds the batch statistics recorded on `tape` into running estimates.
    pub fn apply_bn_updates(&mut self, tape: &Tape) {
        let mut bns: Vec<&mut BatchNorm2d> = vec![&mut self.stem_bn];
        for b in &mut self.blocks {
            bns.extend(b.batch_norms_mut());
        }
        for update in tape.bn_updates() {
            if let Some(bn) = bns.iter_mut().find(|bn| bn.name == update.layer) {
                bn.apply_update(update);
            }
        }
    }

    pub fn layer_names(&self) -> Vec<String> {
        let mut names = vec!["stem".to_string()];
        for b in &self.blocks {
            names.push(format!("{}.conv2", b.name));
            names.push(b.name.clone());
        }
        names
    }
}

impl Classifier for ResNet {
    fn num_classes(&self) -> usize {
        self.config.classes
    }

    fn forward(&self, tape: &mut Tape, x: Var, mode: Mode) -> Result<Var> {
        let cfg = &self.config;
        let s = tape.shape(x).to_vec();
        if s.len() != 4 || s[1] != cfg.in_channels || [s[2], s[3]] != cfg.input_size {
            return Err(Error::ShapeMismatch { lhs: s, rhs: vec![0, cfg.in_channels, cfg.input_size[0], cfg.input_size[1]] });
        }
        let n = s[0];
        let h = self.stem.forward(tape, x)?;
        let h = self.stem_bn.forward(tape, h, mode)?;
        let h = tape.relu(h);
        let mut h = tape.pool2d(PoolKind::Max, h, [3, 3], [2, 2], [1, 1])?;
        tape.tag("stem", h);
        for block in &self.blocks {
            h = block.forward(tape, h, mode, cfg.insertion)?;
            tape.tag(block.name.clone(), h);
        }
        let pooled = tape.global_pool(PoolKind::Avg, h)?;
        let width = tape.shape(pooled)[1];
        let flat = tape.reshape(pooled, [n, width])?;
        self.head.forward(tape, flat)
    }
}

impl Parameterized for ResNet {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.stem.params();
        v.extend(self.stem_bn.params());
        for b in &self.blocks {
            v.extend(b.params());
        }
        v.extend(self.head.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.stem.params_mut();
        v.extend(self.stem_bn.params_mut());
        for b in &mut self.blocks {
            v.extend(b.params_mut());
        }
        v.extend(self.head.params_mut());
        v
    }
}

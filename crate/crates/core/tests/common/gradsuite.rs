//! The finite-difference gradient suite, shared by `gradcheck` and
//! `acceptance`.

use sar_attention::attention::{AttentionBlock, AttentionKind, AttentionParams, CbamBlock, EcaBlock, SeBlock};
use sar_attention::backbone::{BasicBlock, Classifier, InsertionMode, ModelConfig, ResNet};
use sar_attention::nn::{BatchNorm2d, Conv1d, Conv2d, Linear, Mode, PoolKind};
use sar_attention::rng::SplitMix64;
use sar_attention::tensor::ReduceKind;
use sar_attention::{Result, Tensor};

use super::{grad_check, rand_tensor, randn, GradReport, NoParams};

pub const H: f64 = 1e-6;
pub const LAYER_TOL: f64 = 1e-4;
pub const MODEL_TOL: f64 = 1e-3;

pub struct Case {
    pub name: String,
    pub report: GradReport,
    pub tol: f64,
}

impl Case {
    pub fn passed(&self) -> bool {
        self.report.worst < self.tol
    }
}

fn case(name: &str, report: Result<GradReport>, tol: f64) -> Case {
    Case { name: name.to_string(), report: report.unwrap_or_else(|e| panic!("{name}: {e}")), tol }
}

/// Every layer and tape op on inputs no larger than 4×8×8.
pub fn layer_cases() -> Vec<Case> {
    let mut rng = SplitMix64::new(2024);
    let mut out = Vec::new();
    let x4 = randn(&[2, 3, 6, 5], &mut rng);

    let mut conv = Conv2d::new("conv", 3, 4, 3, 2, 1, true, &mut rng);
    out.push(case(
        "conv2d 3x3 stride 2 pad 1 + bias",
        grad_check(&mut conv, &[x4.clone()], |m, t, v| m.forward(t, v[0]), H, None, 1),
        LAYER_TOL,
    ));
    let mut conv = Conv2d::new("conv", 3, 2, 2, 1, 0, false, &mut rng);
    out.push(case(
        "conv2d 2x2 stride 1 no bias",
        grad_check(&mut conv, &[x4.clone()], |m, t, v| m.forward(t, v[0]), H, None, 2),
        LAYER_TOL,
    ));
    let mut conv1 = Conv1d::new("c1", 5, &mut rng).unwrap();
    out.push(case(
        "conv1d k=5",
        grad_check(&mut conv1, &[randn(&[3, 8], &mut rng)], |m, t, v| m.forward(t, v[0]), H, None, 3),
        LAYER_TOL,
    ));
    let mut lin = Linear::new("fc", 6, 4, true, &mut rng);
    out.push(case(
        "linear",
        grad_check(&mut lin, &[randn(&[3, 6], &mut rng)], |m, t, v| m.forward(t, v[0]), H, None, 4),
        LAYER_TOL,
    ));
    let mut bn = BatchNorm2d::new("bn", 3);
    for (i, g) in bn.gamma.value.data_mut().iter_mut().enumerate() {
        *g = 0.5 + 0.3 * i as f64;
    }
    for (i, b) in bn.beta.value.data_mut().iter_mut().enumerate() {
        *b = 0.1 * i as f64 - 0.1;
    }
    out.push(case(
        "batchnorm train",
        grad_check(&mut bn, &[x4.clone()], |m, t, v| m.forward(t, v[0], Mode::Train), H, None, 5),
        LAYER_TOL,
    ));
    bn.running_mean.value = Tensor::new([3], vec![0.1, -0.2, 0.3]).unwrap();
    bn.running_var.value = Tensor::new([3], vec![0.5, 1.5, 2.0]).unwrap();
    out.push(case(
        "batchnorm eval",
        grad_check(&mut bn, &[x4.clone()], |m, t, v| m.forward(t, v[0], Mode::Eval), H, None, 6),
        LAYER_TOL,
    ));
    let mut none = NoParams;
    for (name, kind, win, stride, pad) in [
        ("max pool 3x3 s2 p1", PoolKind::Max, [3, 3], [2, 2], [1, 1]),
        ("max pool 2x2 s2", PoolKind::Max, [2, 2], [2, 2], [0, 0]),
        ("avg pool 3x3 s1 p1", PoolKind::Avg, [3, 3], [1, 1], [1, 1]),
        ("avg pool 2x3 s2", PoolKind::Avg, [2, 3], [2, 2], [0, 0]),
    ] {
        out.push(case(
            name,
            grad_check(&mut none, &[x4.clone()], |_, t, v| t.pool2d(kind, v[0], win, stride, pad), H, None, 7),
            LAYER_TOL,
        ));
    }
    out.push(case(
        "global avg pool",
        grad_check(&mut none, &[x4.clone()], |_, t, v| t.global_pool(PoolKind::Avg, v[0]), H, None, 8),
        LAYER_TOL,
    ));
    out.push(case(
        "global max pool",
        grad_check(&mut none, &[x4.clone()], |_, t, v| t.global_pool(PoolKind::Max, v[0]), H, None, 9),
        LAYER_TOL,
    ));
    out.push(case(
        "relu",
        grad_check(&mut none, &[x4.clone()], |_, t, v| Ok(t.relu(v[0])), H, None, 10),
        LAYER_TOL,
    ));
    out.push(case(
        "sigmoid",
        grad_check(&mut none, &[x4.clone()], |_, t, v| Ok(t.sigmoid(v[0])), H, None, 11),
        LAYER_TOL,
    ));
    let b = randn(&[3, 1, 1], &mut rng);
    out.push(case(
        "broadcast add/sub/mul",
        grad_check(
            &mut none,
            &[x4.clone(), b],
            |_, t, v| {
                let s = t.add(v[0], v[1])?;
                let d = t.sub(s, v[1])?;
                let d = t.scale(d, 0.5);
                t.mul(d, v[1])
            },
            H,
            None,
            12,
        ),
        LAYER_TOL,
    ));
    out.push(case(
        "matmul + transpose",
        grad_check(
            &mut none,
            &[randn(&[3, 4], &mut rng), randn(&[3, 5], &mut rng)],
            |_, t, v| {
                let at = t.transpose(v[0])?;
                t.matmul(at, v[1])
            },
            H,
            None,
            13,
        ),
        LAYER_TOL,
    ));
    for (name, kind) in [("sum", ReduceKind::Sum), ("mean", ReduceKind::Mean), ("max", ReduceKind::Max)] {
        out.push(case(
            &format!("reduce {name} over channels"),
            grad_check(&mut none, &[x4.clone()], |_, t, v| t.reduce(kind, v[0], &[1], true), H, None, 14),
            LAYER_TOL,
        ));
    }
    out.push(case(
        "concat + reshape",
        grad_check(
            &mut none,
            &[randn(&[2, 1, 3, 3], &mut rng), randn(&[2, 2, 3, 3], &mut rng)],
            |_, t, v| {
                let c = t.concat(&[v[0], v[1]], 1)?;
                t.reshape(c, [2, 27])
            },
            H,
            None,
            15,
        ),
        LAYER_TOL,
    ));
    out.push(case(
        "softmax cross-entropy",
        grad_check(&mut none, &[randn(&[4, 3], &mut rng)], |_, t, v| t.softmax_cross_entropy(v[0], &[0, 2, 1, 2]), H, None, 16),
        LAYER_TOL,
    ));

    let u = randn(&[2, 8, 5, 4], &mut rng);
    let mut se = SeBlock::new("se", 8, 4, &mut rng);
    out.push(case("SE block", grad_check(&mut se, &[u.clone()], |m, t, v| m.forward(t, v[0]), H, None, 17), LAYER_TOL));
    let mut eca = EcaBlock::new("eca", 8, 2, &mut rng).unwrap();
    out.push(case("ECA block", grad_check(&mut eca, &[u.clone()], |m, t, v| m.forward(t, v[0]), H, None, 18), LAYER_TOL));
    let mut cbam = CbamBlock::new("cbam", 8, 4, 3, &mut rng).unwrap();
    out.push(case(
        "CBAM channel attention",
        grad_check(&mut cbam, &[u.clone()], |m, t, v| Ok(m.channel_attention(t, v[0])?.1), H, None, 19),
        LAYER_TOL,
    ));
    out.push(case(
        "CBAM spatial attention",
        grad_check(&mut cbam, &[u.clone()], |m, t, v| Ok(m.spatial_attention(t, v[0])?.1), H, None, 20),
        LAYER_TOL,
    ));
    out.push(case("CBAM full", grad_check(&mut cbam, &[u.clone()], |m, t, v| m.forward(t, v[0]), H, None, 21), LAYER_TOL));

    let hp = AttentionParams { reduction: 4, eca_gamma: 2, spatial_kernel: 3 };
    for (kind, insertion) in [
        (AttentionKind::None, InsertionMode::InBlock),
        (AttentionKind::Cbam, InsertionMode::InBlock),
        (AttentionKind::Se, InsertionMode::ResidualWrap),
    ] {
        let att = AttentionBlock::build(kind, "att.0", 6, &hp, &mut rng).unwrap();
        let mut block = BasicBlock::new("layer1.0", 4, 6, 2, att, &mut rng);
        let x = rand_tensor(&[2, 4, 6, 6], &mut rng, -1.0, 1.0);
        out.push(case(
            &format!("basic block ({kind}, {insertion}, downsample)"),
            grad_check(&mut block, &[x], |m, t, v| m.forward(t, v[0], Mode::Train, insertion), H, None, 22),
            LAYER_TOL,
        ));
    }
    out
}

/// Whole desk-config models, batch of 4, train mode, sampled coordinates.
pub fn model_cases() -> Vec<Case> {
    let mut rng = SplitMix64::new(77);
    let x = rand_tensor(&[4, 1, 32, 32], &mut rng, 0.0, 1.0);
    let labels = [0, 1, 2, 1];
    AttentionKind::ALL
        .iter()
        .map(|&kind| {
            let mut model = ResNet::build(&ModelConfig::desk().with_attention(kind), 11).unwrap();
            let report = grad_check(
                &mut model,
                &[x.clone()],
                |m, t, v| {
                    let logits = m.forward(t, v[0], Mode::Train)?;
                    t.softmax_cross_entropy(logits, &labels)
                },
                H,
                Some(3),
                31,
            );
            case(&format!("desk model end-to-end ({kind})"), report, MODEL_TOL)
        })
        .collect()
}

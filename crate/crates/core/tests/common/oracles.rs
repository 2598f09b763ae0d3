//! Naive-loop and hand-staged reference implementations.

use sar_attention::attention::{EcaBlock, SeBlock};
use sar_attention::nn::PoolKind;
use sar_attention::rng::SplitMix64;
use sar_attention::{Tape, Tensor};

use super::randn;

pub struct ConvCase {
    pub x: Tensor,
    pub w: Tensor,
    pub b: Option<Tensor>,
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

pub fn random_conv_case(rng: &mut SplitMix64) -> ConvCase {
    loop {
        let (n, ci, co) = (1 + rng.below(3), 1 + rng.below(4), 1 + rng.below(4));
        let (h, w) = (2 + rng.below(8), 2 + rng.below(8));
        let (kh, kw) = (1 + rng.below(4), 1 + rng.below(4));
        let stride = [1 + rng.below(3), 1 + rng.below(3)];
        let padding = [rng.below(3), rng.below(3)];
        if h + 2 * padding[0] < kh || w + 2 * padding[1] < kw {
            continue;
        }
        let bias = rng.below(2) == 1;
        return ConvCase {
            x: randn(&[n, ci, h, w], rng),
            w: randn(&[co, ci, kh, kw], rng),
            b: bias.then(|| randn(&[co], rng)),
            stride,
            padding,
        };
    }
}

/// Direct seven-loop convolution with zero padding.
pub fn naive_conv2d(c: &ConvCase) -> Tensor {
    let [n, ci, h, w] = c.x.shape().try_into().unwrap();
    let [co, _, kh, kw] = c.w.shape().try_into().unwrap();
    let oh = (h + 2 * c.padding[0] - kh) / c.stride[0] + 1;
    let ow = (w + 2 * c.padding[1] - kw) / c.stride[1] + 1;
    let x = c.x.data();
    let wt = c.w.data();
    let mut out = vec![0.0; n * co * oh * ow];
    for b in 0..n {
        for o in 0..co {
            for y in 0..oh {
                for xo in 0..ow {
                    let mut acc = 0.0;
                    for i in 0..ci {
                        for p in 0..kh {
                            for q in 0..kw {
                                let iy = (y * c.stride[0] + p) as isize - c.padding[0] as isize;
                                let ix = (xo * c.stride[1] + q) as isize - c.padding[1] as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                acc += x[((b * ci + i) * h + iy as usize) * w + ix as usize]
                                    * wt[((o * ci + i) * kh + p) * kw + q];
                            }
                        }
                    }
                    if let Some(bias) = &c.b {
                        acc += bias.data()[o];
                    }
                    out[((b * co + o) * oh + y) * ow + xo] = acc;
                }
            }
        }
    }
    Tensor::new([n, co, oh, ow], out).unwrap()
}

pub fn library_conv2d(c: &ConvCase) -> Tensor {
    let mut tape = Tape::new();
    let x = tape.constant(c.x.clone());
    let w = tape.constant(c.w.clone());
    let b = c.b.as_ref().map(|b| tape.constant(b.clone()));
    let y = tape.conv2d(x, w, b, c.stride, c.padding).unwrap();
    tape.value(y).clone()
}

pub struct PoolCase {
    pub x: Tensor,
    pub kind: PoolKind,
    pub window: [usize; 2],
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

pub fn random_pool_case(rng: &mut SplitMix64) -> PoolCase {
    loop {
        let (n, c) = (1 + rng.below(3), 1 + rng.below(4));
        let (h, w) = (2 + rng.below(8), 2 + rng.below(8));
        let window = [1 + rng.below(4), 1 + rng.below(4)];
        let stride = [1 + rng.below(3), 1 + rng.below(3)];
        // padding smaller than the window so no window is pure padding
        let padding = [rng.below(window[0].min(3)), rng.below(window[1].min(3))];
        if h + 2 * padding[0] < window[0] || w + 2 * padding[1] < window[1] {
            continue;
        }
        let kind = if rng.below(2) == 0 { PoolKind::Max } else { PoolKind::Avg };
        return PoolCase { x: randn(&[n, c, h, w], rng), kind, window, stride, padding };
    }
}

/// Max ignores padded cells; average divides by the full window area.
pub fn naive_pool2d(c: &PoolCase) -> Tensor {
    let [n, ch, h, w] = c.x.shape().try_into().unwrap();
    let oh = (h + 2 * c.padding[0] - c.window[0]) / c.stride[0] + 1;
    let ow = (w + 2 * c.padding[1] - c.window[1]) / c.stride[1] + 1;
    let x = c.x.data();
    let mut out = Vec::with_capacity(n * ch * oh * ow);
    for plane in 0..n * ch {
        for y in 0..oh {
            for xo in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for p in 0..c.window[0] {
                    for q in 0..c.window[1] {
                        let iy = (y * c.stride[0] + p) as isize - c.padding[0] as isize;
                        let ix = (xo * c.stride[1] + q) as isize - c.padding[1] as isize;
                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                            continue;
                        }
                        let v = x[(plane * h + iy as usize) * w + ix as usize];
                        best = best.max(v);
                        sum += v;
                    }
                }
                out.push(match c.kind {
                    PoolKind::Max => best,
                    PoolKind::Avg => sum / (c.window[0] * c.window[1]) as f64,
                });
            }
        }
    }
    Tensor::new([n, ch, oh, ow], out).unwrap()
}

pub fn library_pool2d(c: &PoolCase) -> Tensor {
    let mut tape = Tape::new();
    let x = tape.constant(c.x.clone());
    let y = tape.pool2d(c.kind, x, c.window, c.stride, c.padding).unwrap();
    tape.value(y).clone()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn channel_means(u: &Tensor) -> Vec<Vec<f64>> {
    let [n, c, h, w] = u.shape().try_into().unwrap();
    (0..n)
        .map(|b| (0..c).map(|k| u.data()[(b * c + k) * h * w..(b * c + k + 1) * h * w].iter().sum::<f64>() / (h * w) as f64).collect())
        .collect()
}

fn rescale(u: &Tensor, gates: &[Vec<f64>]) -> Tensor {
    let [n, c, h, w] = u.shape().try_into().unwrap();
    let hw = h * w;
    Tensor::from_fn([n, c, h, w], |i| u.data()[i] * gates[i / (c * hw)][(i / hw) % c])
}

/// Squeeze (mean), W1, ReLU, W2, sigmoid, rescale — each stage by hand.
pub fn staged_se(block: &SeBlock, u: &Tensor) -> Tensor {
    let w1 = &block.w1.value;
    let w2 = &block.w2.value;
    let (hidden, c) = (w1.shape()[0], w1.shape()[1]);
    let gates: Vec<Vec<f64>> = channel_means(u)
        .iter()
        .map(|z| {
            let h: Vec<f64> =
                (0..hidden).map(|j| (0..c).map(|k| w1.data()[j * c + k] * z[k]).sum::<f64>().max(0.0)).collect();
            (0..c).map(|k| sigmoid((0..hidden).map(|j| w2.data()[k * hidden + j] * h[j]).sum())).collect()
        })
        .collect();
    rescale(u, &gates)
}

/// Squeeze (mean), zero-padded 1-D convolution across channels, sigmoid,
/// rescale.
pub fn staged_eca(block: &EcaBlock, u: &Tensor) -> Tensor {
    let k = block.conv.weight.value.data();
    let half = k.len() / 2;
    let gates: Vec<Vec<f64>> = channel_means(u)
        .iter()
        .map(|z| {
            (0..z.len())
                .map(|i| {
                    let mut acc = 0.0;
                    for (j, &kv) in k.iter().enumerate() {
                        let src = i as isize + j as isize - half as isize;
                        if src >= 0 && (src as usize) < z.len() {
                            acc += kv * z[src as usize];
                        }
                    }
                    sigmoid(acc)
                })
                .collect()
        })
        .collect();
    rescale(u, &gates)
}

pub fn library_block(forward: impl Fn(&mut Tape, sar_attention::Var) -> sar_attention::Result<sar_attention::Var>, u: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let x = tape.constant(u.clone());
    let y = forward(&mut tape, x).unwrap();
    tape.value(y).clone()
}

/// Worst absolute differences over `configs` random cases:
/// (conv2d, pool2d, SE, ECA).
pub fn oracle_suite(configs: usize, seed: u64) -> [f64; 4] {
    let mut rng = SplitMix64::new(seed);
    let mut worst = [0.0f64; 4];
    for _ in 0..configs {
        let c = random_conv_case(&mut rng);
        worst[0] = worst[0].max(naive_conv2d(&c).max_abs_diff(&library_conv2d(&c)));
        let p = random_pool_case(&mut rng);
        worst[1] = worst[1].max(naive_pool2d(&p).max_abs_diff(&library_pool2d(&p)));

        let (n, c, h, w) = (1 + rng.below(3), 1 + rng.below(40), 1 + rng.below(6), 1 + rng.below(6));
        let u = randn(&[n, c, h, w], &mut rng);
        let se = SeBlock::new("se", c, 1 + rng.below(16), &mut rng);
        worst[2] = worst[2].max(staged_se(&se, &u).max_abs_diff(&library_block(|t, x| se.forward(t, x), &u)));
        let eca = EcaBlock::new("eca", c, 1 + rng.below(16), &mut rng).unwrap();
        worst[3] = worst[3].max(staged_eca(&eca, &u).max_abs_diff(&library_block(|t, x| eca.forward(t, x), &u)));
    }
    worst
}

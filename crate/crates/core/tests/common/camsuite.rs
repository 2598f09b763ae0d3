//! Grad-CAM contract checks, shared by the explain tests and the
//! acceptance run.

use sar_attention::backbone::{Classifier, ModelConfig, ResNet};
use sar_attention::explain::gradcam_map;
use sar_attention::nn::{Mode, Param, PoolKind};
use sar_attention::rng::SplitMix64;
use sar_attention::{Result, Tape, Tensor, Var};

/// Single-channel probe: `A = pool(x)·p` (tagged "feat", with `p = 1` a
/// parameter so A carries gradients), logits `y_k = v_k · mean(A) + b_k`.
pub struct Probe {
    pub pool: usize,
    pub negate: bool,
    pub gain: Param,
    pub v: Vec<f64>,
}

impl Probe {
    pub fn new(pool: usize, negate: bool, v: Vec<f64>) -> Self {
        Self { pool, negate, gain: Param::new("gain", Tensor::ones([1])), v }
    }
}

impl Classifier for Probe {
    fn num_classes(&self) -> usize {
        self.v.len()
    }

    fn forward(&self, tape: &mut Tape, x: Var, _mode: Mode) -> Result<Var> {
        let mut a = if self.pool > 1 { tape.pool2d(PoolKind::Avg, x, [self.pool; 2], [self.pool; 2], [0, 0])? } else { x };
        if self.negate {
            let neg = tape.scale(a, -1.0);
            a = tape.relu(neg);
        }
        let g = tape.param(&self.gain);
        let a = tape.mul(a, g)?;
        tape.tag("feat", a);
        let n = tape.shape(a)[0];
        let m = tape.global_pool(PoolKind::Avg, a)?;
        let m = tape.reshape(m, [n, 1])?;
        let k = self.v.len();
        let v = tape.constant(Tensor::new([1, k], self.v.clone()).unwrap());
        let y = tape.matmul(m, v)?;
        let b = tape.constant(Tensor::from_fn([1, k], |i| 0.1 * i as f64));
        tape.add(y, b)
    }
}

pub fn random_image(size: usize, rng: &mut SplitMix64) -> Tensor {
    Tensor::from_fn([1, 1, size, size], |_| rng.next_f64())
}

/// Half-pixel bilinear resampling with clamped edges, written from the
/// definition.
pub fn reference_resize(src: &[f64], from: usize, to: usize) -> Vec<f64> {
    let scale = from as f64 / to as f64;
    let coord = |o: usize| ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (from - 1) as f64);
    let mut out = Vec::with_capacity(to * to);
    for oy in 0..to {
        let y = coord(oy);
        let (y0, ty) = (y.floor() as usize, y - y.floor());
        let y1 = (y0 + 1).min(from - 1);
        for ox in 0..to {
            let x = coord(ox);
            let (x0, tx) = (x.floor() as usize, x - x.floor());
            let x1 = (x0 + 1).min(from - 1);
            let top = src[y0 * from + x0] * (1.0 - tx) + src[y0 * from + x1] * tx;
            let bottom = src[y1 * from + x0] * (1.0 - tx) + src[y1 * from + x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// Largest map value when the chosen layer is identically zero.
pub fn zero_layer_max(seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let probe = Probe::new(2, true, vec![1.0, 2.0, 0.5]);
    let img = random_image(16, &mut rng);
    let map = gradcam_map(&probe, &img, 1, "feat").unwrap();
    map.values.iter().cloned().fold(0.0, f64::max)
}

/// Worst deviation from the analytic map over `trials` images: with a
/// positive-weighted average head, α is a positive constant and the map is
/// the normalized (upsampled) activation plane. Pool sizes 1 and 4.
pub fn analytic_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let pool = if t % 2 == 0 { 1 } else { 4 };
        let probe = Probe::new(pool, false, vec![0.7, 1.3, 2.0]);
        let img = random_image(16, &mut rng);
        let class = t % 3;
        let map = gradcam_map(&probe, &img, class, "feat").unwrap();
        let side = 16 / pool;
        let act: Vec<f64> = (0..side * side)
            .map(|i| {
                let (y, x) = (i / side, i % side);
                let mut s = 0.0;
                for p in 0..pool {
                    for q in 0..pool {
                        s += img.data()[(y * pool + p) * 16 + x * pool + q];
                    }
                }
                s / (pool * pool) as f64
            })
            .collect();
        let expect = min_max(&reference_resize(&act, side, 16));
        for (a, b) in map.values.iter().zip(&expect) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Worst change of the normalized map when the target-class head row is
/// scaled by each λ, on a desk model at several layers.
pub fn scale_invariance_error(seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for kind in sar_attention::attention::AttentionKind::ALL {
        let model = ResNet::build(&ModelConfig::desk().with_attention(kind), seed).unwrap();
        let img = random_image(32, &mut rng);
        for layer in ["layer1.1", "layer2.1", "layer3.0.conv2"] {
            for class in 0..3 {
                let base = gradcam_map(&model, &img, class, layer).unwrap();
                for lambda in [1e-3, 0.5, 3.0, 250.0] {
                    let mut scaled = model.clone();
                    let inputs = scaled.head.weight.value.shape()[1];
                    for w in &mut scaled.head.weight.value.data_mut()[class * inputs..(class + 1) * inputs] {
                        *w *= lambda;
                    }
                    let m = gradcam_map(&scaled, &img, class, layer).unwrap();
                    for (a, b) in base.values.iter().zip(&m.values) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Checks the normalization contract (values in [0,1]; max 1 or all zero)
/// on random desk models, images, classes and layers.
pub fn range_contract(samples: usize, seed: u64) -> std::result::Result<(), String> {
    let mut rng = SplitMix64::new(seed);
    let layers = ["stem", "layer1.0", "layer2.1.conv2", "layer3.1", "layer4.1"];
    for s in 0..samples {
        let kind = sar_attention::attention::AttentionKind::ALL[s % 4];
        let model = ResNet::build(&ModelConfig::desk().with_attention(kind), rng.next_u64()).unwrap();
        let img = random_image(32, &mut rng);
        let layer = layers[rng.below(layers.len())];
        let map = gradcam_map(&model, &img, rng.below(3), layer).unwrap();
        if map.values.len() != 32 * 32 {
            return Err(format!("sample {s}: extent {}", map.values.len()));
        }
        if map.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("sample {s}: value outside [0, 1]"));
        }
        let max = map.values.iter().cloned().fold(0.0, f64::max);
        if max != 1.0 && max != 0.0 {
            return Err(format!("sample {s}: max {max}"));
        }
        if max == 0.0 && map.values.iter().any(|&v| v != 0.0) {
            return Err(format!("sample {s}: zero max with non-zero values"));
        }
        if map.raw.data().iter().any(|&v| v < 0.0) {
            return Err(format!("sample {s}: negative raw map"));
        }
    }
    Ok(())
}

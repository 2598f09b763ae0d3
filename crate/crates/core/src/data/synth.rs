//! Synthetic SAR-like chips: a bright class template with a displaced
//! shadow, multiplied by unit-mean gamma speckle.

use super::SarImage;
use crate::rng::{derive_seed, SplitMix64};

const BASE_SHAPES: [&str; 5] = ["ellipse", "square", "cross", "triangle", "ring"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub size: usize,
    /// Gamma shape (number of looks); `None` disables speckle.
    pub speckle_looks: Option<f64>,
    pub target_level: f64,
    pub background_level: f64,
    pub shadow_level: f64,
    /// Shadow displacement in normalized image units (image spans [-1, 1]).
    pub shadow_offset: [f64; 2],
    /// Maximum center jitter, normalized units.
    pub max_shift: f64,
    pub max_rotation_deg: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 3,
            train_per_class: 100,
            test_per_class: 50,
            size: 32,
            speckle_looks: Some(1.0),
            target_level: 0.85,
            background_level: 0.15,
            shadow_level: 0.03,
            shadow_offset: [0.0, 0.3],
            max_shift: 0.1,
            max_rotation_deg: 15.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn clean(mut self) -> Self {
        self.speckle_looks = None;
        self.max_shift = 0.0;
        self.max_rotation_deg = 0.0;
        self
    }

    pub fn class_name(class_id: usize) -> String {
        let base = BASE_SHAPES[class_id % BASE_SHAPES.len()];
        match class_id / BASE_SHAPES.len() {
            0 => base.to_string(),
            k => format!("{base}_{k}"),
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes).map(Self::class_name).collect()
    }

    /// Seed of sample `index` of `class_id`; the split salt keeps train and
    /// test streams apart.
    pub fn sample_seed(&self, split_salt: u64, class_id: usize, index: usize) -> u64 {
        derive_seed(self.seed, &[split_salt, class_id as u64, index as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background,
    Target,
    Shadow,
}

/// Template membership in local coordinates; later shape cycles shrink.
fn inside(class_id: usize, u: f64, v: f64) -> bool {
    let s = 0.75f64.powi((class_id / BASE_SHAPES.len()) as i32);
    let (u, v) = (u / s, v / s);
    match class_id % BASE_SHAPES.len() {
        0 => (u / 0.42).powi(2) + (v / 0.2).powi(2) <= 1.0,
        1 => u.abs() <= 0.28 && v.abs() <= 0.28,
        2 => (u.abs() <= 0.4 && v.abs() <= 0.1) || (u.abs() <= 0.1 && v.abs() <= 0.4),
        3 => v >= -0.3 && v <= 0.3 && u.abs() <= 0.6 * (v + 0.3),
        _ => {
            let r = (u * u + v * v).sqrt();
            (0.18..=0.36).contains(&r)
        }
    }
}

/// Renders one sample and its region mask.
pub fn synth_sample_regions(cfg: &SynthConfig, class_id: usize, rng: &mut SplitMix64) -> (SarImage, Vec<Region>) {
    assert!(class_id < cfg.classes, "class {class_id} out of range for {} classes", cfg.classes);
    let n = cfg.size;
    let cx = rng.uniform(-cfg.max_shift, cfg.max_shift);
    let cy = rng.uniform(-cfg.max_shift, cfg.max_shift);
    let theta = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg).to_radians();
    let (sin, cos) = theta.sin_cos();
    let local = |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        (cos * dx + sin * dy, -sin * dx + cos * dy)
    };
    let mut values = Vec::with_capacity(n * n);
    let mut regions = Vec::with_capacity(n * n);
    for py in 0..n {
        for px in 0..n {
            let x = (px as f64 + 0.5) / n as f64 * 2.0 - 1.0;
            let y = (py as f64 + 0.5) / n as f64 * 2.0 - 1.0;
            let (u, v) = local(x, y);
            let (su, sv) = local(x - cfg.shadow_offset[0], y - cfg.shadow_offset[1]);
            let (region, level) = if inside(class_id, u, v) {
                (Region::Target, cfg.target_level)
            } else if inside(class_id, su, sv) {
                (Region::Shadow, cfg.shadow_level)
            } else {
                (Region::Background, cfg.background_level)
            };
            let speckle = match cfg.speckle_looks {
                Some(looks) => rng.gamma(looks) / looks,
                None => 1.0,
            };
            values.push((level * speckle).clamp(0.0, 1.0));
            regions.push(region);
        }
    }
    let image = SarImage { height: n, width: n, values, label: class_id, source: String::new() };
    (image, regions)
}

pub fn synth_sample(cfg: &SynthConfig, class_id: usize, rng: &mut SplitMix64) -> SarImage {
    synth_sample_regions(cfg, class_id, rng).0
}

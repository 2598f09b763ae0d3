//! Dataset plumbing: MSTAR Phoenix files, the synthetic speckle generator,
//! PGM/PPM images and split handling.

pub mod dataset;
pub mod image;
pub mod phoenix;
pub mod synth;

pub use dataset::{load_dataset, load_split_dir, DataSource, Dataset, Split};
pub use image::{GrayImage, Image, RgbImage};
pub use phoenix::{parse_mstar_phoenix, PhoenixFile};
pub use synth::{synth_sample, SynthConfig};

/// One magnitude chip in [0, 1] with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub label: usize,
    pub source: String,
}

impl SarImage {
    pub fn to_gray(&self) -> GrayImage {
        GrayImage { width: self.width, height: self.height, values: self.values.clone() }
    }
}

/// Per-image min-max normalization to [0, 1]; a constant image maps to zeros.
pub fn min_max_normalize(values: &mut [f64]) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range > 0.0 && range.is_finite() {
        values.iter_mut().for_each(|v| *v = (*v - min) / range);
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Center-crops (or zero-pads) an H×W image to `target`×`target`.
pub fn fit_to_size(values: &[f64], height: usize, width: usize, target: usize) -> Vec<f64> {
    let dy = (height as isize - target as isize).div_euclid(2);
    let dx = (width as isize - target as isize).div_euclid(2);
    let mut out = vec![0.0; target * target];
    for y in 0..target {
        let sy = y as isize + dy;
        if sy < 0 || sy >= height as isize {
            continue;
        }
        for x in 0..target {
            let sx = x as isize + dx;
            if sx >= 0 && sx < width as isize {
                out[y * target + x] = values[sy as usize * width + sx as usize];
            }
        }
    }
    out
}

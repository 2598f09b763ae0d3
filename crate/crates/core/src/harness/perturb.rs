use std::fmt;
use std::str::FromStr;

use crate::data::{Dataset, SarImage};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{derive_seed, SplitMix64};

/// How the noise scale is read: as a standard deviation or as a variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScale {
    StdDev,
    Variance,
}

impl NoiseScale {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseScale::StdDev => "std_dev",
            NoiseScale::Variance => "variance",
        }
    }
}

impl fmt::Display for NoiseScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std_dev" | "std" => Ok(NoiseScale::StdDev),
            "variance" | "var" => Ok(NoiseScale::Variance),
            _ => Err(Error::InvalidConfig(format!("unknown noise interpretation {s:?} (std_dev, variance)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbSpec {
    pub mean: f64,
    pub scale: f64,
    pub interpretation: NoiseScale,
    pub clamp: [f64; 2],
    pub seed: u64,
}

impl Default for PerturbSpec {
    /// N(0, 3/255) read as a standard deviation.
    fn default() -> Self {
        Self { mean: 0.0, scale: 3.0 / 255.0, interpretation: NoiseScale::StdDev, clamp: [0.0, 1.0], seed: 0 }
    }
}

impl PerturbSpec {
    pub fn sigma(&self) -> f64 {
        match self.interpretation {
            NoiseScale::StdDev => self.scale,
            NoiseScale::Variance => self.scale.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("perturb.scale = {} (need > 0)", self.scale)));
        }
        if !(self.clamp[0] < self.clamp[1]) {
            return Err(Error::InvalidConfig(format!("perturb clamp range {:?} is empty", self.clamp)));
        }
        Ok(())
    }
}

pub fn perturb_gaussian(image: &SarImage, spec: &PerturbSpec, rng: &mut SplitMix64) -> SarImage {
    let sigma = spec.sigma();
    let [lo, hi] = spec.clamp;
    let values = image.values.iter().map(|&v| (v + spec.mean + sigma * rng.normal()).clamp(lo, hi)).collect();
    SarImage { values, ..image.clone() }
}

/// Perturbs every image with its own stream, `derive_seed(spec.seed, [i])`.
pub fn perturb_dataset(data: &Dataset, spec: &PerturbSpec) -> Dataset {
    let images = Exec::default().map(data.len(), |i| {
        perturb_gaussian(&data.images[i], spec, &mut SplitMix64::new(derive_seed(spec.seed, &[i as u64])))
    });
    Dataset { images, ..data.clone() }
}

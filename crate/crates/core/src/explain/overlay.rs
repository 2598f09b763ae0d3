use super::SaliencyMap;
use crate::data::image::{GrayImage, RgbImage};
use crate::error::{Error, Result};

/// Piecewise-linear blue → green → red map of a value in [0, 1].
pub fn colormap(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let u = t / 0.5;
        [0.0, 255.0 * u, 255.0 * (1.0 - u)]
    } else {
        let u = (t - 0.5) / 0.5;
        [255.0 * u, 255.0 * (1.0 - u), 0.0]
    }
}

/// Blends `(1 − alpha)·gray + alpha·colormap(map)` per pixel.
pub fn overlay_heatmap(base: &GrayImage, map: &SaliencyMap, alpha: f64) -> Result<RgbImage> {
    if [base.height, base.width] != [map.height, map.width] {
        return Err(Error::ExtentMismatch([base.height, base.width], [map.height, map.width]));
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let pixels = base
        .values
        .iter()
        .zip(&map.values)
        .map(|(&g, &m)| {
            let gray = g.clamp(0.0, 1.0) * 255.0;
            let heat = colormap(m);
            heat.map(|h| ((1.0 - alpha) * gray + alpha * h).round().clamp(0.0, 255.0) as u8)
        })
        .collect();
    Ok(RgbImage { width: base.width, height: base.height, pixels })
}

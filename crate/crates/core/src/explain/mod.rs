//! Grad-CAM saliency maps and heatmap overlays.

mod gradcam;
mod overlay;

pub use gradcam::{bilinear_resize, gradcam_map, SaliencyMap};
pub use overlay::{colormap, overlay_heatmap};

use crate::backbone::Classifier;
use crate::error::{Error, Result};
use crate::nn::Mode;
use crate::tensor::{Tape, Tensor};

/// H×W map in [0, 1]; either identically zero or with maximum exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub layer: String,
    pub class: usize,
    /// Gradient-weighted map at the layer's own resolution, after ReLU.
    pub raw: Tensor,
}

impl SaliencyMap {
    pub fn argmax(&self) -> usize {
        first_argmax(&self.values)
    }
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Half-pixel bilinear resampling with edge clamping.
pub fn bilinear_resize(src: &[f64], from: [usize; 2], to: [usize; 2]) -> Vec<f64> {
    let axis = |dst: usize, n_in: usize, n_out: usize| {
        let x = ((dst as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = x.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, x - i0 as f64)
    };
    let mut out = Vec::with_capacity(to[0] * to[1]);
    for y in 0..to[0] {
        let (y0, y1, fy) = axis(y, from[0], to[0]);
        for x in 0..to[1] {
            let (x0, x1, fx) = axis(x, from[1], to[1]);
            let top = src[y0 * from[1] + x0] * (1.0 - fx) + src[y0 * from[1] + x1] * fx;
            let bottom = src[y1 * from[1] + x0] * (1.0 - fx) + src[y1 * from[1] + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn normalize(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else if max == min {
        values.iter_mut().for_each(|v| *v = 1.0);
    } else {
        let range = max - min;
        values.iter_mut().for_each(|v| *v = (*v - min) / range);
    }
}

/// Grad-CAM for one image (1×C×H×W) against `target_class`, using the
/// feature map the model tagged as `layer`.
pub fn gradcam_map<M: Classifier + ?Sized>(model: &M, image: &Tensor, target_class: usize, layer: &str) -> Result<SaliencyMap> {
    let &[1, _, height, width] = image.shape() else {
        return Err(Error::ShapeMismatch { lhs: image.shape().to_vec(), rhs: vec![1, 0, 0, 0] });
    };
    let classes = model.num_classes();
    if target_class >= classes {
        return Err(Error::LabelOutOfRange { label: target_class, classes });
    }
    let mut tape = Tape::new();
    let x = tape.constant(image.clone());
    let logits = model.forward(&mut tape, x, Mode::Eval)?;
    let act = tape.tagged(layer).ok_or_else(|| Error::UnknownLayer {
        name: layer.to_string(),
        available: tape.tag_names().collect::<Vec<_>>().join(", "),
    })?;
    let &[_, k, h, w] = tape.shape(act) else {
        return Err(Error::RankMismatch { expected: 4, shape: tape.shape(act).to_vec() });
    };
    tape.retain_grad(act);
    let score = tape.pick(logits, target_class)?;
    if tape.requires_grad(score) {
        tape.backward(score)?;
    }
    let a = tape.value(act).data();
    let hw = h * w;
    let grads = tape.grad(act).map(|g| g.data().to_vec()).unwrap_or_else(|| vec![0.0; k * hw]);
    let mut raw = vec![0.0; hw];
    for ch in 0..k {
        let alpha = grads[ch * hw..(ch + 1) * hw].iter().sum::<f64>() / hw as f64;
        for (r, &av) in raw.iter_mut().zip(&a[ch * hw..(ch + 1) * hw]) {
            *r += alpha * av;
        }
    }
    raw.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut values = bilinear_resize(&raw, [h, w], [height, width]);
    normalize(&mut values);
    Ok(SaliencyMap {
        height,
        width,
        values,
        layer: layer.to_string(),
        class: target_class,
        raw: Tensor::from_parts(vec![h, w], raw),
    })
}

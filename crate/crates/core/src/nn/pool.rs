use crate::error::{Error, Result};
use crate::tensor::{Op, Tape, Tensor, Var, Window2d};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Avg,
}

fn dims(x: &Tensor) -> Result<[usize; 4]> {
    match *x.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        _ => Err(Error::RankMismatch { expected: 4, shape: x.shape().to_vec() }),
    }
}

pub(crate) fn avg_pool_backward(in_shape: &[usize], g: &Tensor, win: Window2d) -> Tensor {
    let [h, w] = [in_shape[2], in_shape[3]];
    let [oh, ow] = [g.shape()[2], g.shape()[3]];
    let planes = in_shape[0] * in_shape[1];
    let inv = 1.0 / (win.kernel[0] * win.kernel[1]) as f64;
    let mut dx = vec![0.0; planes * h * w];
    for pl in 0..planes {
        for oy in 0..oh {
            for ox in 0..ow {
                let gv = g.data()[(pl * oh + oy) * ow + ox] * inv;
                for ky in 0..win.kernel[0] {
                    let iy = (oy * win.stride[0] + ky) as isize - win.padding[0] as isize;
                    for kx in 0..win.kernel[1] {
                        let ix = (ox * win.stride[1] + kx) as isize - win.padding[1] as isize;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            dx[(pl * h + iy as usize) * w + ix as usize] += gv;
                        }
                    }
                }
            }
        }
    }
    Tensor::from_parts(in_shape.to_vec(), dx)
}

impl Tape {
    /// Windowed max/average pooling over N×C×H×W. Padding cells never win a
    /// max and count as zeros in an average. Max routes its gradient to the
    /// first maximal cell in scan order.
    pub fn pool2d(&mut self, kind: PoolKind, x: Var, window: [usize; 2], stride: [usize; 2], padding: [usize; 2]) -> Result<Var> {
        let [n, c, h, w] = dims(self.value(x))?;
        let win = Window2d { kernel: window, stride, padding };
        let padded = [h + 2 * padding[0], w + 2 * padding[1]];
        if window[0] > padded[0] || window[1] > padded[1] {
            return Err(Error::WindowTooLarge { window, input: padded });
        }
        let [oh, ow] = win.output_extent([h, w])?;
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(n * c * oh * ow);
        let mut argmax = Vec::new();
        for pl in 0..n * c {
            let plane = &xd[pl * h * w..(pl + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_at = usize::MAX;
                    let mut sum = 0.0;
                    for ky in 0..window[0] {
                        let iy = (oy * stride[0] + ky) as isize - padding[0] as isize;
                        for kx in 0..window[1] {
                            let ix = (ox * stride[1] + kx) as isize - padding[1] as isize;
                            if iy < 0 || ix < 0 || iy as usize >= h || ix as usize >= w {
                                continue;
                            }
                            let at = iy as usize * w + ix as usize;
                            let v = plane[at];
                            sum += v;
                            if best_at == usize::MAX || v > best || (v.is_nan() && !best.is_nan()) {
                                best = v;
                                best_at = pl * h * w + at;
                            }
                        }
                    }
                    match kind {
                        PoolKind::Max => {
                            out.push(best);
                            argmax.push(best_at);
                        }
                        PoolKind::Avg => out.push(sum / (window[0] * window[1]) as f64),
                    }
                }
            }
        }
        let value = Tensor::from_parts(vec![n, c, oh, ow], out);
        let op = match kind {
            PoolKind::Max => Op::MaxPool2d { x, argmax },
            PoolKind::Avg => Op::AvgPool2d { x, window: win },
        };
        Ok(self.push(value, op))
    }

    /// Pools each channel over its whole spatial extent: N×C×H×W → N×C×1×1.
    pub fn global_pool(&mut self, kind: PoolKind, x: Var) -> Result<Var> {
        let [_, _, h, w] = dims(self.value(x))?;
        self.pool2d(kind, x, [h, w], [1, 1], [0, 0])
    }
}

use super::param::{Param, Parameterized};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::SplitMix64;
use crate::tensor::{Op, Tape, Tensor, Var};

pub use crate::tensor::Window2d;

/// Lowers one image (Cin×H×W) to a (Cin·Kh·Kw)×(Ho·Wo) column matrix.
fn im2col(x: &[f64], cin: usize, hw: [usize; 2], win: Window2d, out: [usize; 2], cols: &mut [f64]) {
    let [h, w] = hw;
    let [kh, kw] = win.kernel;
    let p = out[0] * out[1];
    for ci in 0..cin {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ci * kh + ki) * kw + kj) * p;
                for oy in 0..out[0] {
                    let iy = (oy * win.stride[0] + ki) as isize - win.padding[0] as isize;
                    for ox in 0..out[1] {
                        let ix = (ox * win.stride[1] + kj) as isize - win.padding[1] as isize;
                        cols[row + oy * out[1] + ox] = if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            x[(ci * h + iy as usize) * w + ix as usize]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], cin: usize, hw: [usize; 2], win: Window2d, out: [usize; 2], dx: &mut [f64]) {
    let [h, w] = hw;
    let [kh, kw] = win.kernel;
    let p = out[0] * out[1];
    for ci in 0..cin {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ci * kh + ki) * kw + kj) * p;
                for oy in 0..out[0] {
                    let iy = (oy * win.stride[0] + ki) as isize - win.padding[0] as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for ox in 0..out[1] {
                        let ix = (ox * win.stride[1] + kj) as isize - win.padding[1] as isize;
                        if ix >= 0 && (ix as usize) < w {
                            dx[(ci * h + iy as usize) * w + ix as usize] += cols[row + oy * out[1] + ox];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv2d_forward_kernel(x: &Tensor, w: &Tensor, bias: Option<&Tensor>, win: Window2d, exec: Exec) -> Result<Tensor> {
    let &[n, cin, h, wd] = x.shape() else {
        return Err(Error::RankMismatch { expected: 4, shape: x.shape().to_vec() });
    };
    let &[cout, wcin, kh, kw] = w.shape() else {
        return Err(Error::RankMismatch { expected: 4, shape: w.shape().to_vec() });
    };
    if wcin != cin {
        return Err(Error::ChannelMismatch { expected: wcin, actual: cin });
    }
    if win.kernel != [kh, kw] {
        return Err(Error::ShapeMismatch { lhs: win.kernel.to_vec(), rhs: vec![kh, kw] });
    }
    let out = win.output_extent([h, wd])?;
    let p = out[0] * out[1];
    let k = cin * kh * kw;
    let mut data = vec![0.0; n * cout * p];
    let (xd, wdata) = (x.data(), w.data());
    exec.for_each_chunk(&mut data, cout * p, |item, y| {
        let mut cols = vec![0.0; k * p];
        im2col(&xd[item * cin * h * wd..(item + 1) * cin * h * wd], cin, [h, wd], win, out, &mut cols);
        for co in 0..cout {
            let yrow = &mut y[co * p..(co + 1) * p];
            for kk in 0..k {
                let wv = wdata[co * k + kk];
                for (o, &c) in yrow.iter_mut().zip(&cols[kk * p..(kk + 1) * p]) {
                    *o += wv * c;
                }
            }
            if let Some(b) = bias {
                let bv = b.data()[co];
                yrow.iter_mut().for_each(|o| *o += bv);
            }
        }
    });
    Ok(Tensor::from_parts(vec![n, cout, out[0], out[1]], data))
}

/// Returns (dx, dw, dbias). Per-item weight gradients are summed in item order.
pub(crate) fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    g: &Tensor,
    win: Window2d,
    want_dx: bool,
    want_bias: bool,
    exec: Exec,
) -> (Option<Tensor>, Tensor, Option<Tensor>) {
    let [n, cin, h, wd] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]];
    let cout = w.shape()[0];
    let out = [g.shape()[2], g.shape()[3]];
    let p = out[0] * out[1];
    let k = cin * win.kernel[0] * win.kernel[1];
    let (xd, wdata, gd) = (x.data(), w.data(), g.data());
    let per_item = exec.map(n, |item| {
        let mut cols = vec![0.0; k * p];
        im2col(&xd[item * cin * h * wd..(item + 1) * cin * h * wd], cin, [h, wd], win, out, &mut cols);
        let gi = &gd[item * cout * p..(item + 1) * cout * p];
        let mut dw = vec![0.0; cout * k];
        for co in 0..cout {
            let grow = &gi[co * p..(co + 1) * p];
            for kk in 0..k {
                dw[co * k + kk] = grow.iter().zip(&cols[kk * p..(kk + 1) * p]).map(|(a, b)| a * b).sum();
            }
        }
        let dx = want_dx.then(|| {
            let mut dcols = vec![0.0; k * p];
            for co in 0..cout {
                let grow = &gi[co * p..(co + 1) * p];
                for kk in 0..k {
                    let wv = wdata[co * k + kk];
                    for (d, &gv) in dcols[kk * p..(kk + 1) * p].iter_mut().zip(grow) {
                        *d += wv * gv;
                    }
                }
            }
            let mut dx = vec![0.0; cin * h * wd];
            col2im(&dcols, cin, [h, wd], win, out, &mut dx);
            dx
        });
        (dx, dw)
    });
    let mut dw = vec![0.0; cout * k];
    let mut dx = want_dx.then(|| Vec::with_capacity(n * cin * h * wd));
    for (item_dx, item_dw) in per_item {
        dw.iter_mut().zip(&item_dw).for_each(|(a, b)| *a += b);
        if let (Some(acc), Some(d)) = (dx.as_mut(), item_dx) {
            acc.extend_from_slice(&d);
        }
    }
    let db = want_bias.then(|| {
        let mut db = vec![0.0; cout];
        for item in 0..n {
            for (co, d) in db.iter_mut().enumerate() {
                *d += gd[(item * cout + co) * p..(item * cout + co + 1) * p].iter().sum::<f64>();
            }
        }
        Tensor::from_parts(vec![cout], db)
    });
    (
        dx.map(|d| Tensor::from_parts(x.shape().to_vec(), d)),
        Tensor::from_parts(w.shape().to_vec(), dw),
        db,
    )
}

/// Same-padded 1-D cross-correlation along the last axis.
pub(crate) fn conv1d_forward_kernel(x: &Tensor, w: &[f64]) -> Tensor {
    let len = *x.shape().last().expect("rank checked by caller");
    let k = w.len();
    let pad = (k - 1) / 2;
    let mut out = vec![0.0; x.len()];
    for (xr, yr) in x.data().chunks(len).zip(out.chunks_mut(len)) {
        for (i, y) in yr.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &wv) in w.iter().enumerate() {
                let src = i as isize + j as isize - pad as isize;
                if src >= 0 && (src as usize) < len {
                    acc += wv * xr[src as usize];
                }
            }
            *y = acc;
        }
    }
    Tensor::from_parts(x.shape().to_vec(), out)
}

pub(crate) fn conv1d_backward(x: &Tensor, w: &Tensor, g: &Tensor) -> (Tensor, Tensor) {
    let len = *x.shape().last().expect("rank checked at forward");
    let wd = w.data();
    let k = wd.len();
    let pad = (k - 1) / 2;
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; k];
    for ((xr, gr), dxr) in x.data().chunks(len).zip(g.data().chunks(len)).zip(dx.chunks_mut(len)) {
        for (i, &gv) in gr.iter().enumerate() {
            for (j, &wv) in wd.iter().enumerate() {
                let src = i as isize + j as isize - pad as isize;
                if src >= 0 && (src as usize) < len {
                    dxr[src as usize] += wv * gv;
                    dw[j] += xr[src as usize] * gv;
                }
            }
        }
    }
    (Tensor::from_parts(x.shape().to_vec(), dx), Tensor::from_parts(w.shape().to_vec(), dw))
}

impl Tape {
    /// 2-D cross-correlation (no kernel flip) of N×Cin×H×W by Cout×Cin×Kh×Kw.
    pub fn conv2d(&mut self, x: Var, w: Var, bias: Option<Var>, stride: [usize; 2], padding: [usize; 2]) -> Result<Var> {
        let ws = self.shape(w);
        if ws.len() != 4 {
            return Err(Error::RankMismatch { expected: 4, shape: ws.to_vec() });
        }
        let window = Window2d { kernel: [ws[2], ws[3]], stride, padding };
        let out = conv2d_forward_kernel(self.value(x), self.value(w), bias.map(|b| self.value(b)), window, self.exec())?;
        Ok(self.push(out, Op::Conv2d { x, w, bias, window }))
    }

    /// Same-padded 1-D convolution along the last axis of `x`.
    pub fn conv1d(&mut self, x: Var, w: Var) -> Result<Var> {
        let k = self.value(w).len();
        if k % 2 == 0 {
            return Err(Error::EvenKernel(k));
        }
        if self.value(x).rank() == 0 {
            return Err(Error::RankMismatch { expected: 1, shape: vec![] });
        }
        let out = conv1d_forward_kernel(self.value(x), self.value(w).data());
        Ok(self.push(out, Op::Conv1d { x, w }))
    }
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Param,
    pub bias: Option<Param>,
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
        rng: &mut SplitMix64,
    ) -> Self {
        let fan_in = cin * kernel * kernel;
        Self {
            weight: Param::uniform(format!("{name}.weight"), &[cout, cin, kernel, kernel], fan_in, rng),
            bias: bias.then(|| Param::new(format!("{name}.bias"), Tensor::zeros([cout]))),
            stride: [stride; 2],
            padding: [padding; 2],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(&self.weight);
        let b = self.bias.as_ref().map(|b| tape.param(b));
        tape.conv2d(x, w, b, self.stride, self.padding)
    }
}

impl Parameterized for Conv2d {
    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}

/// 1-D convolution with a single 1×1×k kernel and "same" zero padding.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Param,
}

impl Conv1d {
    pub fn new(name: &str, kernel: usize, rng: &mut SplitMix64) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::EvenKernel(kernel));
        }
        Ok(Self { weight: Param::uniform(format!("{name}.weight"), &[1, 1, kernel], kernel, rng) })
    }

    pub fn from_weights(name: &str, weights: &[f64]) -> Result<Self> {
        if weights.len() % 2 == 0 {
            return Err(Error::EvenKernel(weights.len()));
        }
        Ok(Self { weight: Param::new(format!("{name}.weight"), Tensor::new([1, 1, weights.len()], weights.to_vec())?) })
    }

    pub fn kernel_size(&self) -> usize {
        self.weight.value.len()
    }

    pub fn forward(&self, tape: &mut Tape, z: Var) -> Result<Var> {
        let w = tape.param(&self.weight);
        tape.conv1d(z, w)
    }
}

impl Parameterized for Conv1d {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight]
    }
}

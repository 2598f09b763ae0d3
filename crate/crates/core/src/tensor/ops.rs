use super::tape::{Op, ReduceKind};
use super::{broadcast_shapes, broadcast_strides, numel, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Largest double strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub(crate) fn broadcast_binary(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        return Ok(Tensor::from_parts(a.shape().to_vec(), data));
    }
    let out_shape = broadcast_shapes(a.shape(), b.shape())
        .ok_or_else(|| Error::ShapeMismatch { lhs: a.shape().to_vec(), rhs: b.shape().to_vec() })?;
    let sa = broadcast_strides(a.shape(), &out_shape);
    let sb = broadcast_strides(b.shape(), &out_shape);
    let n = numel(&out_shape);
    let mut data = Vec::with_capacity(n);
    let mut idx = vec![0usize; out_shape.len()];
    let (mut oa, mut ob) = (0usize, 0usize);
    for _ in 0..n {
        data.push(f(a.data()[oa], b.data()[ob]));
        for ax in (0..out_shape.len()).rev() {
            idx[ax] += 1;
            oa += sa[ax];
            ob += sb[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            oa -= sa[ax] * idx[ax];
            ob -= sb[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
    Ok(Tensor::from_parts(out_shape, data))
}

/// Row-major `a (m×k) · b (k×n)`. Each output element sums over `k` in
/// ascending order regardless of the execution policy.
pub(crate) fn matmul_kernel(a: &Tensor, b: &Tensor, exec: Exec) -> Tensor {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    exec.for_each_chunk(&mut out, n, |i, row| {
        for p in 0..k {
            let aip = ad[i * k + p];
            let brow = &bd[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    });
    Tensor::from_parts(vec![m, n], out)
}

pub(crate) fn transpose2(a: &Tensor) -> Tensor {
    let (m, n) = (a.shape()[0], a.shape()[1]);
    let d = a.data();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = d[i * n + j];
        }
    }
    Tensor::from_parts(vec![n, m], out)
}

pub(crate) fn split_axis(g: &Tensor, shapes: &[&[usize]], axis: usize) -> Vec<Tensor> {
    let outer: usize = g.shape()[..axis].iter().product();
    let inner: usize = g.shape()[axis + 1..].iter().product();
    let total = g.shape()[axis];
    let mut parts: Vec<Vec<f64>> = shapes.iter().map(|s| Vec::with_capacity(numel(s))).collect();
    for o in 0..outer {
        let mut start = 0;
        for (part, s) in parts.iter_mut().zip(shapes) {
            let ext = s[axis];
            let base = (o * total + start) * inner;
            part.extend_from_slice(&g.data()[base..base + ext * inner]);
            start += ext;
        }
    }
    parts.into_iter().zip(shapes).map(|(d, s)| Tensor::from_parts(s.to_vec(), d)).collect()
}

fn kept_shape(shape: &[usize], axes: &[usize]) -> Vec<usize> {
    shape.iter().enumerate().map(|(i, &d)| if axes.contains(&i) { 1 } else { d }).collect()
}

pub(crate) fn reduce_backward(g: &Tensor, in_shape: &[usize], kind: ReduceKind, axes: &[usize], argmax: &[usize]) -> Tensor {
    if kind == ReduceKind::Max {
        let mut gx = Tensor::zeros(in_shape.to_vec());
        for (&src, &gy) in argmax.iter().zip(g.data()) {
            gx.data_mut()[src] += gy;
        }
        return gx;
    }
    let kshape = kept_shape(in_shape, axes);
    let count: usize = axes.iter().map(|&a| in_shape[a]).product();
    let scale = if kind == ReduceKind::Mean { 1.0 / count as f64 } else { 1.0 };
    let gk = Tensor::from_parts(kshape, g.data().to_vec());
    broadcast_binary(&Tensor::zeros(in_shape.to_vec()), &gk, |_, y| y * scale)
        .expect("kept shape always broadcasts to input")
}

impl Tape {
    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: fn(Var, Var) -> Op) -> Result<Var> {
        let out = broadcast_binary(self.value(a), self.value(b), f)?;
        Ok(self.push(out, op(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x - y, Op::Sub)
    }

    /// Pointwise product with broadcasting; this is the `⊗` recalibration.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 {
            return Err(Error::RankMismatch { expected: 2, shape: sa });
        }
        if sb.len() != 2 {
            return Err(Error::RankMismatch { expected: 2, shape: sb });
        }
        if sa[1] != sb[0] {
            return Err(Error::InnerDimMismatch { lhs: sa, rhs: sb });
        }
        let out = matmul_kernel(self.value(a), self.value(b), self.exec());
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        if self.value(a).rank() != 2 {
            return Err(Error::RankMismatch { expected: 2, shape: self.shape(a).to_vec() });
        }
        let out = transpose2(self.value(a));
        Ok(self.push(out, Op::Transpose(a)))
    }

    pub fn reshape(&mut self, a: Var, shape: impl Into<Vec<usize>>) -> Result<Var> {
        let out = self.value(a).reshape(shape)?;
        Ok(self.push(out, Op::Reshape(a)))
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = self.shape(inputs[0]).to_vec();
        if axis >= first.len() {
            return Err(Error::InvalidAxis { axis, rank: first.len() });
        }
        let mut total = 0;
        for &v in inputs {
            let s = self.shape(v);
            let compatible = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(Error::ShapeMismatch { lhs: first.clone(), rhs: s.to_vec() });
            }
            total += s[axis];
        }
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &v in inputs {
                let t = self.value(v);
                let ext = t.shape()[axis];
                data.extend_from_slice(&t.data()[o * ext * inner..(o + 1) * ext * inner]);
            }
        }
        let mut shape = first;
        shape[axis] = total;
        Ok(self.push(Tensor::from_parts(shape, data), Op::Concat { inputs: inputs.to_vec(), axis }))
    }

    /// Reduces over `axes`. Max routes its gradient to the first maximal
    /// element in scan order.
    pub fn reduce(&mut self, kind: ReduceKind, x: Var, axes: &[usize], keep_dims: bool) -> Result<Var> {
        let in_shape = self.shape(x).to_vec();
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if let Some(&bad) = axes.iter().find(|&&a| a >= in_shape.len()) {
            return Err(Error::InvalidAxis { axis: bad, rank: in_shape.len() });
        }
        let kshape = kept_shape(&in_shape, &axes);
        let out_n = numel(&kshape);
        let os = broadcast_strides(&kshape, &in_shape);
        let input = self.value(x).data();
        let mut acc = vec![0.0; out_n];
        let mut argmax = Vec::new();
        let mut idx = vec![0usize; in_shape.len()];
        let mut off = 0usize;
        if kind == ReduceKind::Max {
            acc.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
            argmax = vec![usize::MAX; out_n];
        }
        for (flat, &v) in input.iter().enumerate() {
            match kind {
                ReduceKind::Sum | ReduceKind::Mean => acc[off] += v,
                ReduceKind::Max => {
                    if argmax[off] == usize::MAX || v > acc[off] || (v.is_nan() && !acc[off].is_nan()) {
                        acc[off] = v;
                        argmax[off] = flat;
                    }
                }
            }
            for ax in (0..in_shape.len()).rev() {
                idx[ax] += 1;
                off += os[ax];
                if idx[ax] < in_shape[ax] {
                    break;
                }
                off -= os[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
        if kind == ReduceKind::Mean {
            let count: usize = axes.iter().map(|&a| in_shape[a]).product();
            let inv = count as f64;
            acc.iter_mut().for_each(|v| *v /= inv);
        }
        let out_shape = if keep_dims {
            kshape
        } else {
            in_shape.iter().enumerate().filter(|(i, _)| !axes.contains(i)).map(|(_, &d)| d).collect()
        };
        Ok(self.push(Tensor::from_parts(out_shape, acc), Op::Reduce { x, kind, axes, argmax }))
    }

    pub fn sum(&mut self, x: Var, axes: &[usize], keep_dims: bool) -> Result<Var> {
        self.reduce(ReduceKind::Sum, x, axes, keep_dims)
    }

    pub fn mean(&mut self, x: Var, axes: &[usize], keep_dims: bool) -> Result<Var> {
        self.reduce(ReduceKind::Mean, x, axes, keep_dims)
    }

    pub fn max(&mut self, x: Var, axes: &[usize], keep_dims: bool) -> Result<Var> {
        self.reduce(ReduceKind::Max, x, axes, keep_dims)
    }

    /// Sum over every element to a rank-0 scalar.
    pub fn sum_all(&mut self, x: Var) -> Var {
        let axes: Vec<usize> = (0..self.value(x).rank()).collect();
        self.sum(x, &axes, false).expect("all axes are valid")
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v.is_nan() || v > 0.0 { v } else { 0.0 });
        self.push(out, Op::Relu(x))
    }

    /// Logistic sigmoid, clamped so that the result stays strictly inside (0, 1).
    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x))
    }

    /// Selects one element (by flat index) as a rank-0 scalar.
    pub fn pick(&mut self, x: Var, index: usize) -> Result<Var> {
        let n = self.value(x).len();
        if index >= n {
            return Err(Error::InvalidAxis { axis: index, rank: n });
        }
        let v = self.value(x).data()[index];
        Ok(self.push(Tensor::scalar(v), Op::Pick { x, index }))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

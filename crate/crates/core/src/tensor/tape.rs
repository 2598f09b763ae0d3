use std::collections::HashMap;

use super::{reduce_to_shape, Tensor};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nn::Param;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

/// Geometry shared by the 2-D window ops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window2d {
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

impl Window2d {
    pub fn output_extent(&self, input: [usize; 2]) -> Result<[usize; 2]> {
        let mut out = [0; 2];
        for a in 0..2 {
            let padded = input[a] + 2 * self.padding[a];
            if self.stride[a] == 0 || padded < self.kernel[a] || self.kernel[a] == 0 {
                return Err(Error::DegenerateOutput {
                    input,
                    kernel: self.kernel,
                    stride: self.stride,
                    padding: self.padding,
                });
            }
            out[a] = (padded - self.kernel[a]) / self.stride[a] + 1;
        }
        Ok(out)
    }
}

/// The recorded operation that produced a node, with whatever the backward
/// rule needs beyond the input values.
#[derive(Debug, Clone)]
pub enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Concat { inputs: Vec<Var>, axis: usize },
    Reduce { x: Var, kind: ReduceKind, axes: Vec<usize>, argmax: Vec<usize> },
    Relu(Var),
    Sigmoid(Var),
    Pick { x: Var, index: usize },
    Conv2d { x: Var, w: Var, bias: Option<Var>, window: Window2d },
    Conv1d { x: Var, w: Var },
    MaxPool2d { x: Var, argmax: Vec<usize> },
    AvgPool2d { x: Var, window: Window2d },
    BatchNormTrain { x: Var, gamma: Var, beta: Var, xhat: Tensor, inv_std: Vec<f64> },
    BatchNormEval { x: Var, gamma: Var, beta: Var, mean: Vec<f64>, inv_std: Vec<f64> },
    CrossEntropy { logits: Var, labels: Vec<usize>, probs: Tensor },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    keep_grad: bool,
    grad: Option<Tensor>,
}

/// Batch statistics observed by a train-mode batch norm, to be folded into
/// the layer's running estimates once the step is done.
#[derive(Debug, Clone)]
pub struct BnUpdate {
    pub layer: String,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Records every differentiable op in creation order; `backward` walks it in
/// reverse. A tape lives on a single thread.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<String, Var>,
    param_order: Vec<String>,
    tags: Vec<(String, Var)>,
    bn_updates: Vec<BnUpdate>,
    exec: Exec,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_exec(exec: Exec) -> Self {
        Self { exec, ..Self::default() }
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(&mut self, value: Tensor, op: Op) -> Var {
        let requires_grad = op_inputs(&op).iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad, keep_grad: false, grad: None });
        Var(self.nodes.len() - 1)
    }

    /// A leaf whose gradient is accumulated by `backward`.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true, keep_grad: true, grad: None });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that takes no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false, keep_grad: false, grad: None });
        Var(self.nodes.len() - 1)
    }

    /// Registers a parameter as a gradient leaf. A parameter used more than
    /// once in a pass maps to a single leaf, so its uses accumulate.
    pub fn param(&mut self, p: &Param) -> Var {
        if let Some(&v) = self.params.get(&p.name) {
            return v;
        }
        let v = self.leaf(p.value.clone());
        self.params.insert(p.name.clone(), v);
        self.param_order.push(p.name.clone());
        v
    }

    pub fn param_var(&self, name: &str) -> Option<Var> {
        self.params.get(name).copied()
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_order
    }

    pub fn param_grad(&self, name: &str) -> Option<&Tensor> {
        self.param_var(name).and_then(|v| self.grad(v))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn op(&self, v: Var) -> &Op {
        &self.nodes[v.0].op
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a gradient leaf or retained intermediate.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Keep the gradient of an intermediate node after `backward`.
    pub fn retain_grad(&mut self, v: Var) {
        self.nodes[v.0].keep_grad = true;
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// Names an intermediate so it can be looked up after the pass.
    pub fn tag(&mut self, name: impl Into<String>, v: Var) {
        self.tags.push((name.into(), v));
    }

    pub fn tagged(&self, name: &str) -> Option<Var> {
        self.tags.iter().rev().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn tag_names(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(|(n, _)| n.as_str())
    }

    pub(crate) fn record_bn_update(&mut self, update: BnUpdate) {
        self.bn_updates.push(update);
    }

    pub fn bn_updates(&self) -> &[BnUpdate] {
        &self.bn_updates
    }

    /// Reverse-mode sweep from a single-element `loss`. Gradients accumulate
    /// additively into leaves and retained nodes.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyTape);
        }
        let loss_value = &self.nodes[loss.0].value;
        if loss_value.len() != 1 {
            return Err(Error::NonScalarLoss(loss_value.shape().to_vec()));
        }
        let mut adjoints: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adjoints[loss.0] = Some(Tensor::ones(loss_value.shape().to_vec()));
        for i in (0..=loss.0).rev() {
            let Some(g) = adjoints[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            for (v, contrib) in self.op_backward(i, &g)? {
                if !self.nodes[v.0].requires_grad {
                    continue;
                }
                match &mut adjoints[v.0] {
                    Some(acc) => acc.add_assign(&contrib),
                    slot => *slot = Some(contrib),
                }
            }
            let node = &mut self.nodes[i];
            if node.keep_grad {
                match &mut node.grad {
                    Some(acc) => acc.add_assign(&g),
                    slot => *slot = Some(g),
                }
            }
        }
        Ok(())
    }

    fn op_backward(&self, i: usize, g: &Tensor) -> Result<Vec<(Var, Tensor)>> {
        let node = &self.nodes[i];
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let mut out = Vec::with_capacity(2);
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if needs(*a) {
                    out.push((*a, reduce_to_shape(g, val(*a).shape())));
                }
                if needs(*b) {
                    out.push((*b, reduce_to_shape(g, val(*b).shape())));
                }
            }
            Op::Sub(a, b) => {
                if needs(*a) {
                    out.push((*a, reduce_to_shape(g, val(*a).shape())));
                }
                if needs(*b) {
                    out.push((*b, reduce_to_shape(&g.map(|x| -x), val(*b).shape())));
                }
            }
            Op::Mul(a, b) => {
                if needs(*a) {
                    let ga = super::ops::broadcast_binary(g, val(*b), |x, y| x * y)?;
                    out.push((*a, reduce_to_shape(&ga, val(*a).shape())));
                }
                if needs(*b) {
                    let gb = super::ops::broadcast_binary(g, val(*a), |x, y| x * y)?;
                    out.push((*b, reduce_to_shape(&gb, val(*b).shape())));
                }
            }
            Op::Scale(a, c) => out.push((*a, g.map(|x| x * c))),
            Op::MatMul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                if needs(*a) {
                    out.push((*a, super::ops::matmul_kernel(g, &super::ops::transpose2(bv), self.exec)));
                }
                if needs(*b) {
                    out.push((*b, super::ops::matmul_kernel(&super::ops::transpose2(av), g, self.exec)));
                }
            }
            Op::Transpose(a) => out.push((*a, super::ops::transpose2(g))),
            Op::Reshape(a) => out.push((*a, Tensor::from_parts(val(*a).shape().to_vec(), g.data().to_vec()))),
            Op::Concat { inputs, axis } => {
                let shapes: Vec<&[usize]> = inputs.iter().map(|v| val(*v).shape()).collect();
                for (v, part) in inputs.iter().zip(super::ops::split_axis(g, &shapes, *axis)) {
                    out.push((*v, part));
                }
            }
            Op::Reduce { x, kind, axes, argmax } => {
                out.push((*x, super::ops::reduce_backward(g, val(*x).shape(), *kind, axes, argmax)));
            }
            Op::Relu(a) => {
                let data = val(*a).data().iter().zip(g.data()).map(|(&x, &gy)| if x > 0.0 { gy } else { 0.0 }).collect();
                out.push((*a, Tensor::from_parts(g.shape().to_vec(), data)));
            }
            Op::Sigmoid(a) => {
                let data = node.value.data().iter().zip(g.data()).map(|(&s, &gy)| gy * s * (1.0 - s)).collect();
                out.push((*a, Tensor::from_parts(g.shape().to_vec(), data)));
            }
            Op::Pick { x, index } => {
                let mut t = Tensor::zeros(val(*x).shape().to_vec());
                t.data_mut()[*index] = g.item();
                out.push((*x, t));
            }
            Op::Conv2d { x, w, bias, window } => {
                let (gx, gw, gb) = crate::nn::conv::conv2d_backward(
                    val(*x),
                    val(*w),
                    g,
                    *window,
                    needs(*x),
                    bias.is_some(),
                    self.exec,
                );
                if let Some(gx) = gx {
                    out.push((*x, gx));
                }
                out.push((*w, gw));
                if let (Some(b), Some(gb)) = (bias, gb) {
                    out.push((*b, gb));
                }
            }
            Op::Conv1d { x, w } => {
                let (gx, gw) = crate::nn::conv::conv1d_backward(val(*x), val(*w), g);
                out.push((*x, gx));
                out.push((*w, gw));
            }
            Op::MaxPool2d { x, argmax } => {
                let mut gx = Tensor::zeros(val(*x).shape().to_vec());
                for (&src, &gy) in argmax.iter().zip(g.data()) {
                    gx.data_mut()[src] += gy;
                }
                out.push((*x, gx));
            }
            Op::AvgPool2d { x, window } => {
                out.push((*x, crate::nn::pool::avg_pool_backward(val(*x).shape(), g, *window)));
            }
            Op::BatchNormTrain { x, gamma, beta, xhat, inv_std } => {
                let (gx, gg, gb) = crate::nn::batchnorm::train_backward(g, xhat, inv_std, val(*gamma));
                out.push((*x, gx));
                out.push((*gamma, gg));
                out.push((*beta, gb));
            }
            Op::BatchNormEval { x, gamma, beta, mean, inv_std } => {
                let (gx, gg, gb) = crate::nn::batchnorm::eval_backward(g, val(*x), mean, inv_std, val(*gamma));
                out.push((*x, gx));
                out.push((*gamma, gg));
                out.push((*beta, gb));
            }
            Op::CrossEntropy { logits, labels, probs } => {
                let n = labels.len();
                let k = probs.shape()[1];
                let scale = g.item() / n as f64;
                let mut d = probs.data().to_vec();
                for (row, &l) in labels.iter().enumerate() {
                    d[row * k + l] -= 1.0;
                }
                d.iter_mut().for_each(|x| *x *= scale);
                out.push((*logits, Tensor::from_parts(probs.shape().to_vec(), d)));
            }
        }
        Ok(out)
    }
}

fn op_inputs(op: &Op) -> Vec<Var> {
    match op {
        Op::Leaf => vec![],
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::MatMul(a, b) => vec![*a, *b],
        Op::Scale(a, _) | Op::Transpose(a) | Op::Reshape(a) | Op::Relu(a) | Op::Sigmoid(a) => vec![*a],
        Op::Concat { inputs, .. } => inputs.clone(),
        Op::Reduce { x, .. } | Op::Pick { x, .. } | Op::MaxPool2d { x, .. } | Op::AvgPool2d { x, .. } => vec![*x],
        Op::Conv2d { x, w, bias, .. } => {
            let mut v = vec![*x, *w];
            v.extend(bias);
            v
        }
        Op::Conv1d { x, w } => vec![*x, *w],
        Op::BatchNormTrain { x, gamma, beta, .. } | Op::BatchNormEval { x, gamma, beta, .. } => {
            vec![*x, *gamma, *beta]
        }
        Op::CrossEntropy { logits, .. } => vec![*logits],
    }
}

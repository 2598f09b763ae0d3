use crate::error::{Error, Result};
use crate::tensor::{Op, Tape, Tensor, Var};

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let k = logits.shape()[1];
    let mut out = logits.data().to_vec();
    for row in out.chunks_mut(k) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    Tensor::from_parts(logits.shape().to_vec(), out)
}

impl Tape {
    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        let &[n, k] = lv.shape() else {
            return Err(Error::RankMismatch { expected: 2, shape: lv.shape().to_vec() });
        };
        if labels.len() != n {
            return Err(Error::ShapeMismatch { lhs: vec![n], rhs: vec![labels.len()] });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label: bad, classes: k });
        }
        let mut total = 0.0;
        for (row, &l) in lv.data().chunks(k).zip(labels) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[l];
        }
        let probs = softmax_rows(lv);
        Ok(self.push(Tensor::scalar(total / n as f64), Op::CrossEntropy { logits, labels: labels.to_vec(), probs }))
    }
}

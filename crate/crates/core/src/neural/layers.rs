//! Building blocks with explicit forward and backward passes.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    /// Used by the gradient-check variant where every layer is linear.
    Identity,
}

impl Activation {
    pub fn apply(self, x: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => x.mapv(|v| v.max(0.0)),
            Activation::Identity => x.clone(),
        }
    }

    /// Multiplies `grad` by the derivative at `pre`; ReLU'(0) = 0.
    pub fn backprop(self, pre: &Array2<f64>, grad: &mut Array2<f64>) {
        if self == Activation::Relu {
            grad.zip_mut_with(pre, |g, &p| {
                if p <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
}

fn check_finite(name: &str, x: ArrayView2<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{name} contains non-finite values")))
    }
}

/// `max(0, Q·Z·W)`.
pub fn quantum_conv_forward(q: &Array2<f64>, z: &Array2<f64>, w: &Array2<f64>) -> Result<Array2<f64>> {
    if q.nrows() != q.ncols() || q.ncols() != z.nrows() || z.ncols() != w.nrows() {
        return Err(Error::Shape(format!(
            "Q {:?}, Z {:?}, W {:?}",
            q.shape(),
            z.shape(),
            w.shape()
        )));
    }
    check_finite("Q", q.view())?;
    check_finite("Z", z.view())?;
    check_finite("W", w.view())?;
    Ok(Activation::Relu.apply(&q.dot(z).dot(w)))
}

/// Row `i` computed as `max(0, Σ_j Q_ij (Z W)_j)`, one grid vertex at a time.
pub fn quantum_conv_rowwise(q: &Array2<f64>, z: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let y = z.dot(w);
    let mut out = Array2::zeros((q.nrows(), w.ncols()));
    for i in 0..q.nrows() {
        let mut acc = Array1::<f64>::zeros(w.ncols());
        for j in 0..q.ncols() {
            acc.scaled_add(q[[i, j]], &y.row(j));
        }
        out.row_mut(i).assign(&acc.mapv(|v| v.max(0.0)));
    }
    out
}

/// Output of a conv stack: per-layer activations and their running
/// column-wise concatenations.
#[derive(Debug, Clone)]
pub struct StackOutput {
    /// `Z_0 .. Z_T`.
    pub layers: Vec<Array2<f64>>,
    /// `Z_{0:0} .. Z_{0:T}`.
    pub concatenations: Vec<Array2<f64>>,
}

/// `Z_{t+1} = max(0, Q Z_t W_t)` for every weight matrix in turn.
pub fn conv_stack_forward(q: &Array2<f64>, z0: &Array2<f64>, weights: &[Array2<f64>]) -> Result<StackOutput> {
    let mut layers = vec![z0.clone()];
    for (t, w) in weights.iter().enumerate() {
        let prev = layers.last().unwrap();
        if prev.ncols() != w.nrows() {
            return Err(Error::Shape(format!(
                "layer {t}: input has {} channels, weight expects {}",
                prev.ncols(),
                w.nrows()
            )));
        }
        layers.push(quantum_conv_forward(q, prev, w)?);
    }
    let concatenations = (0..layers.len())
        .map(|t| {
            let views: Vec<_> = layers[..=t].iter().map(|z| z.view()).collect();
            concatenate(Axis(1), &views).unwrap()
        })
        .collect();
    Ok(StackOutput {
        layers,
        concatenations,
    })
}

/// Filter bank of a 1-D convolution over the grid-vertex sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    /// `(kernel * in_channels) × out_channels`; row `tap * in_channels + c`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Conv1dParams {
    pub fn kernel(&self, in_channels: usize) -> usize {
        self.weight.nrows() / in_channels
    }
}

/// Sliding windows of width `kernel`, flattened tap-major.
pub fn im2col(input: &Array2<f64>, kernel: usize) -> Array2<f64> {
    let (len, ch) = input.dim();
    let out_len = len + 1 - kernel;
    let mut cols = Array2::zeros((out_len, kernel * ch));
    for i in 0..out_len {
        for tap in 0..kernel {
            cols.slice_mut(ndarray::s![i, tap * ch..(tap + 1) * ch])
                .assign(&input.row(i + tap));
        }
    }
    cols
}

fn col2im(dcols: &Array2<f64>, len: usize, ch: usize, kernel: usize) -> Array2<f64> {
    let mut dx = Array2::zeros((len, ch));
    for i in 0..dcols.nrows() {
        for tap in 0..kernel {
            let mut row = dx.row_mut(i + tap);
            row += &dcols.slice(ndarray::s![i, tap * ch..(tap + 1) * ch]);
        }
    }
    dx
}

/// Valid (unpadded) stride-1 cross-correlation plus bias.
pub fn conv1d_forward(input: &Array2<f64>, params: &Conv1dParams, kernel: usize) -> Result<Array2<f64>> {
    let (len, ch) = input.dim();
    if len < kernel {
        return Err(Error::Shape(format!("sequence length {len} shorter than kernel {kernel}")));
    }
    if params.weight.nrows() != kernel * ch || params.bias.len() != params.weight.ncols() {
        return Err(Error::Shape(format!(
            "filter bank {:?} does not fit kernel {kernel} × {ch} channels",
            params.weight.shape()
        )));
    }
    Ok(im2col(input, kernel).dot(&params.weight) + &params.bias)
}

/// Gradients of a conv layer given the upstream gradient of its
/// pre-activation output.
pub fn conv1d_backward(
    cols: &Array2<f64>,
    params: &Conv1dParams,
    dpre: &Array2<f64>,
    in_len: usize,
    in_ch: usize,
    kernel: usize,
) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let dw = cols.t().dot(dpre);
    let db = dpre.sum_axis(Axis(0));
    let dcols = dpre.dot(&params.weight.t());
    (dw, db, col2im(&dcols, in_len, in_ch, kernel))
}

/// Channel-wise max over disjoint windows; a trailing partial window is
/// dropped. Returns the pooled sequence and the source row of each max
/// (first occurrence wins ties).
pub fn maxpool1d(input: &Array2<f64>, width: usize) -> Result<(Array2<f64>, Array2<usize>)> {
    let (len, ch) = input.dim();
    if width == 0 || len < width {
        return Err(Error::Shape(format!("cannot pool length {len} with width {width}")));
    }
    let out_len = len / width;
    let mut out = Array2::zeros((out_len, ch));
    let mut arg = Array2::zeros((out_len, ch));
    for i in 0..out_len {
        for c in 0..ch {
            let mut best = i * width;
            for r in (i * width + 1)..(i * width + width) {
                if input[[r, c]] > input[[best, c]] {
                    best = r;
                }
            }
            out[[i, c]] = input[[best, c]];
            arg[[i, c]] = best;
        }
    }
    Ok((out, arg))
}

pub fn maxpool1d_backward(dout: &Array2<f64>, argmax: &Array2<usize>, in_len: usize) -> Array2<f64> {
    let mut dx = Array2::zeros((in_len, dout.ncols()));
    for ((i, c), &g) in dout.indexed_iter() {
        dx[[argmax[[i, c]], c]] += g;
    }
    dx
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    /// `in × out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseParams {
    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Numerically stable softmax, normalised so the entries sum to 1.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.mapv(|v| (v - max).exp());
    let s = e.sum();
    e / s
}

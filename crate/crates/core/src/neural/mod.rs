//! Quantum spatial graph convolution network with per-branch 1-D CNN heads.
//!
//! The input is an aligned grid (M×c features) and the grid's average
//! mixing matrix Q. A stack of `T` layers computes `Z_{t+1} = act(Q Z_t W_t)`;
//! every prefix concatenation `Z_{0:t}` is read as a length-M sequence of
//! channel vectors by its own CNN head (conv/pool layers, then a dense
//! layer). Head outputs are concatenated, passed through dropout and a
//! final dense layer, and normalised by softmax.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use layers::{
    conv1d_forward, conv_stack_forward, maxpool1d, quantum_conv_forward, quantum_conv_rowwise,
    softmax, Activation, Conv1dParams, DenseParams, StackOutput,
};

/// One stage of a CNN head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadLayer {
    /// Convolution with this many output channels.
    Conv(usize),
    /// Max pooling with this window and stride.
    Pool(usize),
    /// Flatten then fully connect to this many units. Always last.
    Dense(usize),
}

/// A head written as e.g. `C64-P2-C64-P2-C64-F64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadSpec(pub Vec<HeadLayer>);

impl HeadSpec {
    pub fn output_units(&self) -> usize {
        match self.0.last() {
            Some(HeadLayer::Dense(u)) => *u,
            _ => 0,
        }
    }
}

impl FromStr for HeadSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let layers = s
            .split('-')
            .map(|tok| {
                let tok = tok.trim();
                let (kind, num) = if let Some(rest) = tok.strip_prefix("FC") {
                    ('F', rest)
                } else {
                    let mut chars = tok.chars();
                    (chars.next().unwrap_or(' '), chars.as_str())
                };
                let n: usize = num
                    .parse()
                    .map_err(|_| Error::Config(format!("bad head layer {tok:?}")))?;
                if n == 0 {
                    return Err(Error::Config(format!("zero-sized head layer {tok:?}")));
                }
                match kind {
                    'C' => Ok(HeadLayer::Conv(n)),
                    'P' => Ok(HeadLayer::Pool(n)),
                    'F' => Ok(HeadLayer::Dense(n)),
                    _ => Err(Error::Config(format!("bad head layer {tok:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let dense_at = layers.iter().position(|l| matches!(l, HeadLayer::Dense(_)));
        if dense_at != Some(layers.len() - 1) {
            return Err(Error::Config(format!(
                "head {s:?} must end with exactly one dense layer"
            )));
        }
        Ok(HeadSpec(layers))
    }
}

impl fmt::Display for HeadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| match l {
                HeadLayer::Conv(n) => format!("C{n}"),
                HeadLayer::Pool(n) => format!("P{n}"),
                HeadLayer::Dense(n) => format!("F{n}"),
            })
            .collect();
        write!(f, "{}", parts.join("-"))
    }
}

impl Serialize for HeadSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HeadSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Grid size M (number of prototypes).
    pub grid_size: usize,
    pub input_channels: usize,
    /// Output channels of each quantum conv layer; `T = conv_widths.len()`.
    pub conv_widths: Vec<usize>,
    pub head: HeadSpec,
    pub kernel: usize,
    pub classes: usize,
    pub dropout: f64,
    pub activation: Activation,
}

impl ModelConfig {
    /// Default architecture: T quantum conv layers of `channels` each and a
    /// `C64-P2-C64-P2-C64-F64` head with width-5 filters on every branch.
    pub fn standard(grid_size: usize, input_channels: usize, layers: usize, channels: usize, classes: usize) -> Self {
        ModelConfig {
            grid_size,
            input_channels,
            conv_widths: vec![channels; layers],
            head: "C64-P2-C64-P2-C64-F64".parse().unwrap(),
            kernel: 5,
            classes,
            dropout: 0.5,
            activation: Activation::Relu,
        }
    }

    /// Small network used for gradient checking (M=8, T=2, 4 channels,
    /// 2 classes).
    pub fn tiny() -> Self {
        ModelConfig {
            grid_size: 8,
            input_channels: 3,
            conv_widths: vec![4, 4],
            head: "C4-P2-F4".parse().unwrap(),
            kernel: 5,
            classes: 2,
            dropout: 0.0,
            activation: Activation::Relu,
        }
    }

    pub fn layers(&self) -> usize {
        self.conv_widths.len()
    }

    /// Channel count of `Z_{0:t}`.
    pub fn branch_channels(&self, t: usize) -> usize {
        self.input_channels + self.conv_widths[..t].iter().sum::<usize>()
    }

    /// Sequence length and channel count after every head stage before the
    /// dense layer; errors when the grid is too short for the head.
    pub fn head_shapes(&self, in_channels: usize) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(self.grid_size, in_channels)];
        for layer in &self.head.0 {
            let (len, ch) = *shapes.last().unwrap();
            let next = match *layer {
                HeadLayer::Conv(out) => {
                    if len < self.kernel {
                        return Err(Error::Config(format!(
                            "grid size {} too small for head {} (length {len} < kernel {})",
                            self.grid_size, self.head, self.kernel
                        )));
                    }
                    (len + 1 - self.kernel, out)
                }
                HeadLayer::Pool(w) => {
                    if len < w {
                        return Err(Error::Config(format!(
                            "grid size {} too small for head {} (length {len} < pool {w})",
                            self.grid_size, self.head
                        )));
                    }
                    (len / w, ch)
                }
                HeadLayer::Dense(_) => break,
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 || self.input_channels == 0 || self.classes == 0 || self.kernel == 0 {
            return Err(Error::Config("grid size, channels, classes and kernel must be positive".into()));
        }
        if self.conv_widths.contains(&0) {
            return Err(Error::Config("conv layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        self.head_shapes(self.input_channels).map(|_| ())
    }
}

/// A head stage's parameters; pooling has none.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadStage {
    Conv(Conv1dParams),
    Pool(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchHeadParams {
    pub stages: Vec<HeadStage>,
    pub dense: DenseParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// `W_t`, shape `c_t × c_{t+1}`.
    pub stack: Vec<Array2<f64>>,
    /// One head per branch `t = 0..=T`, weights not shared.
    pub heads: Vec<BranchHeadParams>,
    pub classifier: DenseParams,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl NetworkParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![cfg.input_channels];
        widths.extend(&cfg.conv_widths);
        let stack = widths
            .windows(2)
            .map(|w| glorot(&mut rng, w[0], w[1], w[0], w[1]))
            .collect();
        let mut heads = Vec::with_capacity(cfg.layers() + 1);
        for t in 0..=cfg.layers() {
            let shapes = cfg.head_shapes(cfg.branch_channels(t))?;
            let mut stages = Vec::new();
            for (i, layer) in cfg.head.0.iter().enumerate() {
                let (_, in_ch) = shapes[i];
                match *layer {
                    HeadLayer::Conv(out) => {
                        let k = cfg.kernel;
                        stages.push(HeadStage::Conv(Conv1dParams {
                            weight: glorot(&mut rng, k * in_ch, out, k * in_ch, k * out),
                            bias: Array1::zeros(out),
                        }));
                    }
                    HeadLayer::Pool(w) => stages.push(HeadStage::Pool(w)),
                    HeadLayer::Dense(_) => {}
                }
            }
            let (len, ch) = *shapes.last().unwrap();
            let units = cfg.head.output_units();
            let dense = DenseParams {
                weight: glorot(&mut rng, len * ch, units, len * ch, units),
                bias: Array1::zeros(units),
            };
            heads.push(BranchHeadParams { stages, dense });
        }
        let feat = cfg.head.output_units() * (cfg.layers() + 1);
        let classifier = DenseParams {
            weight: glorot(&mut rng, feat, cfg.classes, feat, cfg.classes),
            bias: Array1::zeros(cfg.classes),
        };
        Ok(NetworkParams {
            stack,
            heads,
            classifier,
        })
    }

    /// Every tensor as (shape, values) in a fixed order.
    pub fn tensors(&self) -> Vec<(Vec<usize>, &[f64])> {
        let mut out: Vec<(Vec<usize>, &[f64])> = Vec::new();
        fn push2<'a>(out: &mut Vec<(Vec<usize>, &'a [f64])>, a: &'a Array2<f64>) {
            out.push((a.shape().to_vec(), a.as_slice().expect("standard layout")));
        }
        fn push1<'a>(out: &mut Vec<(Vec<usize>, &'a [f64])>, a: &'a Array1<f64>) {
            out.push((a.shape().to_vec(), a.as_slice().expect("standard layout")));
        }
        for w in &self.stack {
            push2(&mut out, w);
        }
        for h in &self.heads {
            for st in &h.stages {
                if let HeadStage::Conv(c) = st {
                    push2(&mut out, &c.weight);
                    push1(&mut out, &c.bias);
                }
            }
            push2(&mut out, &h.dense.weight);
            push1(&mut out, &h.dense.bias);
        }
        push2(&mut out, &self.classifier.weight);
        push1(&mut out, &self.classifier.bias);
        out
    }

    /// Mutable views of every tensor, in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for w in &mut self.stack {
            out.push(w.as_slice_mut().unwrap());
        }
        for h in &mut self.heads {
            for st in &mut h.stages {
                if let HeadStage::Conv(c) = st {
                    out.push(c.weight.as_slice_mut().unwrap());
                    out.push(c.bias.as_slice_mut().unwrap());
                }
            }
            out.push(h.dense.weight.as_slice_mut().unwrap());
            out.push(h.dense.bias.as_slice_mut().unwrap());
        }
        out.push(self.classifier.weight.as_slice_mut().unwrap());
        out.push(self.classifier.bias.as_slice_mut().unwrap());
        out
    }

    /// Rewrites every tensor in row-major layout; matrix products with
    /// transposed operands may return column-major arrays.
    fn standardize(&mut self) {
        fn fix(a: &mut Array2<f64>) {
            if !a.is_standard_layout() {
                *a = a.as_standard_layout().into_owned();
            }
        }
        self.stack.iter_mut().for_each(fix);
        for h in &mut self.heads {
            for st in &mut h.stages {
                if let HeadStage::Conv(c) = st {
                    fix(&mut c.weight);
                }
            }
            fix(&mut h.dense.weight);
        }
        fix(&mut self.classifier.weight);
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, v)| v.len()).sum()
    }

    /// Same structure with every tensor empty.
    fn skeleton(&self) -> Self {
        let empty = || DenseParams {
            weight: Array2::zeros((0, 0)),
            bias: Array1::zeros(0),
        };
        NetworkParams {
            stack: vec![Array2::zeros((0, 0)); self.stack.len()],
            heads: self
                .heads
                .iter()
                .map(|h| BranchHeadParams {
                    stages: h
                        .stages
                        .iter()
                        .map(|st| match st {
                            HeadStage::Conv(_) => {
                                let e = empty();
                                HeadStage::Conv(Conv1dParams {
                                    weight: e.weight,
                                    bias: e.bias,
                                })
                            }
                            HeadStage::Pool(w) => HeadStage::Pool(*w),
                        })
                        .collect(),
                    dense: empty(),
                })
                .collect(),
            classifier: empty(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn add_assign(&mut self, other: &NetworkParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b.1) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, v)| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, v)| v.iter().all(|x| x.is_finite()))
    }
}

/// Cached values of one head stage.
#[derive(Debug, Clone)]
enum StageTrace {
    Conv { cols: Array2<f64>, pre: Array2<f64>, in_shape: (usize, usize) },
    Pool { argmax: Array2<usize>, in_len: usize },
}

#[derive(Debug, Clone)]
struct HeadTrace {
    stages: Vec<StageTrace>,
    flat: Array1<f64>,
    dense_pre: Array2<f64>,
    output: Array1<f64>,
}

/// All intermediates of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    q: Array2<f64>,
    /// `Z_0..Z_T`.
    pub z: Vec<Array2<f64>>,
    /// `Q Z_t` and pre-activations `Q Z_t W_t` for each conv layer.
    qz: Vec<Array2<f64>>,
    stack_pre: Vec<Array2<f64>>,
    heads: Vec<HeadTrace>,
    /// Concatenated head outputs before dropout.
    pub features: Array1<f64>,
    /// Scaled inverted-dropout mask, present in train mode.
    pub dropout_mask: Option<Array1<f64>>,
    pub logits: Array1<f64>,
    pub probabilities: Array1<f64>,
    generation: u64,
}

impl ForwardTrace {
    pub fn concatenation(&self, t: usize) -> Array2<f64> {
        let views: Vec<_> = self.z[..=t].iter().map(|z| z.view()).collect();
        concatenate(Axis(1), &views).unwrap()
    }

    pub fn head_output(&self, t: usize) -> &Array1<f64> {
        &self.heads[t].output
    }
}

#[derive(Debug)]
pub enum Mode<'a> {
    Eval,
    /// Dropout masks are drawn from this generator.
    Train(&'a mut ChaCha8Rng),
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: NetworkParams,
    generation: u64,
}

fn row_vector(x: &Array1<f64>) -> Array2<f64> {
    x.clone().insert_axis(Axis(0))
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = NetworkParams::init(&config, seed)?;
        Ok(Model {
            config,
            params,
            generation: 0,
        })
    }

    pub fn from_params(config: ModelConfig, params: NetworkParams) -> Result<Self> {
        config.validate()?;
        let expected = NetworkParams::init(&config, 0)?;
        let shapes = |p: &NetworkParams| p.tensors().into_iter().map(|(s, _)| s).collect::<Vec<_>>();
        if shapes(&expected) != shapes(&params) {
            return Err(Error::Shape("parameter shapes do not match the model config".into()));
        }
        Ok(Model {
            config,
            params,
            generation: 0,
        })
    }

    /// Counter bumped on every parameter update; traces from older
    /// generations are rejected by [`backward`](Self::backward).
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn params_mut(&mut self) -> &mut NetworkParams {
        self.generation += 1;
        &mut self.params
    }

    pub fn forward(&self, q: &Array2<f64>, x: &Array2<f64>, mode: Mode<'_>) -> Result<ForwardTrace> {
        let cfg = &self.config;
        let m = cfg.grid_size;
        if q.dim() != (m, m) || x.dim() != (m, cfg.input_channels) {
            return Err(Error::Shape(format!(
                "model expects Q {m}x{m} and grid {m}x{}, got {:?} and {:?}",
                cfg.input_channels,
                q.shape(),
                x.shape()
            )));
        }
        if q.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite model input".into()));
        }
        let act = cfg.activation;

        let mut z = vec![x.clone()];
        let mut qz = Vec::with_capacity(cfg.layers());
        let mut stack_pre = Vec::with_capacity(cfg.layers());
        for w in &self.params.stack {
            let propagated = q.dot(z.last().unwrap());
            let pre = propagated.dot(w);
            z.push(act.apply(&pre));
            qz.push(propagated);
            stack_pre.push(pre);
        }

        let mut heads = Vec::with_capacity(cfg.layers() + 1);
        for (t, hp) in self.params.heads.iter().enumerate() {
            let views: Vec<_> = z[..=t].iter().map(|a| a.view()).collect();
            let input = concatenate(Axis(1), &views).unwrap();
            heads.push(self.head_forward(hp, input)?);
        }
        let outputs: Vec<_> = heads.iter().map(|h| h.output.view()).collect();
        let features = concatenate(Axis(0), &outputs).unwrap();

        let dropout_mask = match mode {
            Mode::Train(rng) if cfg.dropout > 0.0 => {
                let keep = 1.0 - cfg.dropout;
                Some(Array1::from_shape_simple_fn(features.len(), || {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                }))
            }
            _ => None,
        };
        let dropped = match &dropout_mask {
            Some(mask) => &features * mask,
            None => features.clone(),
        };
        let logits = self.params.classifier.forward(&dropped);
        let probabilities = softmax(&logits);
        Ok(ForwardTrace {
            q: q.clone(),
            z,
            qz,
            stack_pre,
            heads,
            features,
            dropout_mask,
            logits,
            probabilities,
            generation: self.generation,
        })
    }

    fn head_forward(&self, hp: &BranchHeadParams, input: Array2<f64>) -> Result<HeadTrace> {
        let act = self.config.activation;
        let kernel = self.config.kernel;
        let mut x = input;
        let mut stages = Vec::with_capacity(hp.stages.len());
        for st in &hp.stages {
            match st {
                HeadStage::Conv(p) => {
                    let in_shape = x.dim();
                    if in_shape.0 < kernel || p.weight.nrows() != kernel * in_shape.1 {
                        return Err(Error::Shape(format!("head input {in_shape:?} does not fit its filters")));
                    }
                    let cols = layers::im2col(&x, kernel);
                    let pre = cols.dot(&p.weight) + &p.bias;
                    x = act.apply(&pre);
                    stages.push(StageTrace::Conv { cols, pre, in_shape });
                }
                HeadStage::Pool(w) => {
                    let in_len = x.nrows();
                    let (out, argmax) = maxpool1d(&x, *w)?;
                    x = out;
                    stages.push(StageTrace::Pool { argmax, in_len });
                }
            }
        }
        let flat = Array1::from_iter(x.iter().copied());
        let dense_pre = row_vector(&hp.dense.forward(&flat));
        let output = act.apply(&dense_pre).row(0).to_owned();
        Ok(HeadTrace {
            stages,
            flat,
            dense_pre,
            output,
        })
    }

    /// Class probabilities in eval mode.
    pub fn predict(&self, q: &Array2<f64>, x: &Array2<f64>) -> Result<Array1<f64>> {
        Ok(self.forward(q, x, Mode::Eval)?.probabilities)
    }

    /// Gradients of `-ln p[label]` with respect to every parameter. The
    /// mixing matrix and grid are constants.
    pub fn backward(&self, trace: &ForwardTrace, label: usize) -> Result<NetworkParams> {
        if trace.generation != self.generation {
            return Err(Error::Config(format!(
                "stale forward trace (generation {} vs model {})",
                trace.generation, self.generation
            )));
        }
        let cfg = &self.config;
        if label >= cfg.classes {
            return Err(Error::InvalidData(format!("label {label} >= {} classes", cfg.classes)));
        }
        let act = cfg.activation;
        // every tensor below is overwritten, so start from empty arrays
        let mut grads = self.params.skeleton();

        let mut dlogits = trace.probabilities.clone();
        dlogits[label] -= 1.0;
        let dropped = match &trace.dropout_mask {
            Some(mask) => &trace.features * mask,
            None => trace.features.clone(),
        };
        grads.classifier.weight = row_vector(&dropped).t().dot(&row_vector(&dlogits));
        grads.classifier.bias = dlogits.clone();
        let mut dfeatures = self.params.classifier.weight.dot(&dlogits);
        if let Some(mask) = &trace.dropout_mask {
            dfeatures *= mask;
        }

        let units = cfg.head.output_units();
        let mut dz: Vec<Array2<f64>> = trace.z.iter().map(|z| Array2::zeros(z.dim())).collect();
        for (t, (hp, ht)) in self.params.heads.iter().zip(&trace.heads).enumerate() {
            let dout = dfeatures.slice(s![t * units..(t + 1) * units]).to_owned();
            let dinput = head_backward(hp, ht, &dout, act, cfg.kernel, &mut grads.heads[t]);
            let mut col = 0;
            for (z, dzz) in trace.z[..=t].iter().zip(dz.iter_mut()) {
                let w = z.ncols();
                *dzz += &dinput.slice(s![.., col..col + w]);
                col += w;
            }
        }

        for t in (0..cfg.layers()).rev() {
            let mut dpre = dz[t + 1].clone();
            act.backprop(&trace.stack_pre[t], &mut dpre);
            grads.stack[t] = trace.qz[t].t().dot(&dpre);
            if t > 0 {
                let back = trace.q.t().dot(&dpre.dot(&self.params.stack[t].t()));
                dz[t] += &back;
            }
        }
        grads.standardize();
        Ok(grads)
    }
}

fn head_backward(
    hp: &BranchHeadParams,
    ht: &HeadTrace,
    dout: &Array1<f64>,
    act: Activation,
    kernel: usize,
    grads: &mut BranchHeadParams,
) -> Array2<f64> {
    let mut dpre = row_vector(dout);
    act.backprop(&ht.dense_pre, &mut dpre);
    grads.dense.weight = row_vector(&ht.flat).t().dot(&dpre);
    grads.dense.bias = dpre.row(0).to_owned();
    let dflat = hp.dense.weight.dot(&dpre.row(0));

    let last_shape = match ht.stages.last() {
        None => None,
        Some(StageTrace::Conv { pre, .. }) => Some(pre.dim()),
        Some(StageTrace::Pool { argmax, .. }) => Some(argmax.dim()),
    };
    let (len, ch) = last_shape.unwrap_or((dflat.len(), 1));
    let mut dx = dflat.into_shape_with_order((len, ch)).expect("flatten shape");

    for (st, (params, grad)) in ht
        .stages
        .iter()
        .zip(hp.stages.iter().zip(grads.stages.iter_mut()))
        .rev()
    {
        match (st, params, grad) {
            (StageTrace::Conv { cols, pre, in_shape }, HeadStage::Conv(p), HeadStage::Conv(g)) => {
                act.backprop(pre, &mut dx);
                let (dw, db, dinput) = layers::conv1d_backward(cols, p, &dx, in_shape.0, in_shape.1, kernel);
                g.weight = dw;
                g.bias = db;
                dx = dinput;
            }
            (StageTrace::Pool { argmax, in_len }, HeadStage::Pool(_), HeadStage::Pool(_)) => {
                dx = layers::maxpool1d_backward(&dx, argmax, *in_len);
            }
            _ => unreachable!("trace and parameters describe the same head"),
        }
    }
    dx
}

/// `-ln p[label]`, with the probability clamped to at least 1e-12.
pub fn cross_entropy(probabilities: &Array1<f64>, label: usize) -> f64 {
    -probabilities[label].max(1e-12).ln()
}

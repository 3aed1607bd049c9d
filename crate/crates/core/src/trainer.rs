//! Cross-validation harness, Adam, and metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{debug, info, warn};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentConfig;
use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::neural::{cross_entropy, Mode, Model, ModelConfig, NetworkParams};
use crate::pipeline::{prepare, DatasetInputs, Prepared, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub prototypes: usize,
    pub layers: usize,
    pub channels: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
    pub transductive: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            prototypes: 64,
            layers: 5,
            channels: 32,
            depth: 10,
            learning_rate: 5e-5,
            dropout: 0.5,
            epochs: 100,
            batch_size: 32,
            folds: 10,
            seed: 0,
            transductive: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("prototypes", self.prototypes),
            ("layers", self.layers),
            ("channels", self.channels),
            ("depth", self.depth),
            ("epochs", self.epochs),
            ("batch size", self.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if self.folds < 2 {
            return Err(Error::Config("at least 2 folds required".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, input_channels: usize, classes: usize) -> ModelConfig {
        let mut cfg = ModelConfig::standard(self.prototypes, input_channels, self.layers, self.channels, classes);
        cfg.dropout = self.dropout;
        cfg
    }

    pub fn alignment_config(&self) -> AlignmentConfig {
        AlignmentConfig {
            prototypes: self.prototypes,
            depth: self.depth,
            seed: self.seed,
            ..AlignmentConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified shuffled k-fold partition. Members of each class are shuffled
/// and dealt round-robin; the dealing position carries over between
/// classes so overall fold sizes also differ by at most one.
pub fn kfold_split(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if folds < 2 || folds > n {
        return Err(Error::Config(format!("cannot split {n} graphs into {folds} folds")));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests = vec![Vec::new(); folds];
    let mut next = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            warn!("class {c} has {} graphs, fewer than {folds} folds", members.len());
        }
        members.shuffle(&mut rng);
        for i in members {
            tests[next].push(i);
            next = (next + 1) % folds;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. A non-finite gradient aborts the step
/// before anything is modified.
pub fn adam_step(params: &mut NetworkParams, grads: &NetworkParams, state: &mut AdamState, lr: f64) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::Numeric(format!("non-finite gradient at Adam step {}", state.step + 1)));
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let grads = grads.tensors();
    for (((p, m), v), (_, g)) in params
        .tensors_mut()
        .into_iter()
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
        .zip(grads)
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    /// Row = true class, column = predicted class.
    pub confusion: Array2<usize>,
    pub predictions: Vec<usize>,
}

/// Index of the largest entry, first one on ties.
pub fn argmax(values: &ndarray::Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Accuracy and confusion matrix of `(true, predicted)` pairs.
pub fn confusion_summary(pairs: &[(usize, usize)], classes: usize) -> (f64, Array2<usize>) {
    let mut confusion = Array2::zeros((classes, classes));
    let mut correct = 0;
    for &(t, p) in pairs {
        confusion[[t, p]] += 1;
        correct += usize::from(t == p);
    }
    let accuracy = if pairs.is_empty() { 0.0 } else { correct as f64 / pairs.len() as f64 };
    (accuracy, confusion)
}

pub fn evaluate(model: &Model, samples: &[&Sample]) -> Result<Evaluation> {
    let probs = samples
        .par_iter()
        .map(|s| model.predict(&s.mixing, &s.features))
        .collect::<Result<Vec<_>>>()?;
    let predictions: Vec<usize> = probs.iter().map(argmax).collect();
    let pairs: Vec<(usize, usize)> = samples.iter().map(|s| s.label).zip(predictions.iter().copied()).collect();
    let (accuracy, confusion) = confusion_summary(&pairs, model.config.classes);
    let loss = if samples.is_empty() {
        0.0
    } else {
        samples.iter().zip(&probs).map(|(s, p)| cross_entropy(p, s.label)).sum::<f64>() / samples.len() as f64
    };
    Ok(Evaluation {
        accuracy,
        loss,
        confusion,
        predictions,
    })
}

/// Per-epoch progress passed to [`fit`] observers.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
}

/// Mini-batch Adam on `train` for up to `epochs` epochs. The observer runs
/// after every epoch and may stop training early by returning `false`.
/// Per-graph gradients may be computed in parallel but are summed in batch
/// order, so the result does not depend on the thread count.
pub fn fit(
    model: &mut Model,
    train: &[&Sample],
    cfg: &TrainConfig,
    seed: u64,
    mut observer: impl FnMut(EpochStats, &Model) -> bool,
) -> Result<Vec<EpochStats>> {
    if train.is_empty() {
        return Err(Error::InvalidData("empty training set".into()));
    }
    let mut state = AdamState::new(&model.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .map(|&i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD50F_u64);
                    rng.set_stream((epoch * train.len() + i) as u64);
                    let s = train[i];
                    let trace = model.forward(&s.mixing, &s.features, Mode::Train(&mut rng))?;
                    let loss = cross_entropy(&trace.probabilities, s.label);
                    Ok((model.backward(&trace, s.label)?, loss))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = model.params.zeros_like();
            let mut batch_loss = 0.0;
            for (g, l) in &results {
                grads.add_assign(g);
                batch_loss += l;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            grads.scale(1.0 / batch.len() as f64);
            loss_sum += batch_loss;
            adam_step(model.params_mut(), &grads, &mut state, cfg.learning_rate)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {b}: {e}")))?;
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / train.len() as f64,
        };
        debug!("epoch {} loss {:.6}", stats.epoch, stats.loss);
        history.push(stats);
        if !observer(stats, model) {
            break;
        }
    }
    Ok(history)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub accuracy: f64,
    pub loss_final: f64,
    pub epochs: usize,
    pub confusion: Array2<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub folds: Vec<FoldResult>,
    pub models: Vec<Model>,
    /// Prototypes fitted per fold in inductive mode.
    pub fold_alignments: Vec<Prepared>,
}

impl TrainOutcome {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }

    pub fn mean(&self) -> f64 {
        mean_stderr(&self.accuracies()).0
    }

    pub fn stderr(&self) -> f64 {
        mean_stderr(&self.accuracies()).1
    }
}

/// Sample mean and standard error of the mean (n−1 denominator; 0 for n<2).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(fold as u64 + 1)
}

/// Trains one fold from a fresh model and evaluates it on the test split.
pub fn train_fold(
    samples: &[Sample],
    fold_index: usize,
    fold: &Fold,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<(Model, FoldResult)> {
    let input_channels = samples
        .first()
        .map(|s| s.features.ncols())
        .ok_or_else(|| Error::InvalidData("no samples".into()))?;
    let seed = fold_seed(cfg.seed, fold_index);
    let mut model = Model::new(cfg.model_config(input_channels, classes), seed)?;
    let train: Vec<&Sample> = fold.train.iter().map(|&i| &samples[i]).collect();
    let test: Vec<&Sample> = fold.test.iter().map(|&i| &samples[i]).collect();
    let history = fit(&mut model, &train, cfg, seed, |_, _| true)?;
    let eval = evaluate(&model, &test)?;
    let result = FoldResult {
        fold: fold_index,
        accuracy: eval.accuracy,
        loss_final: history.last().map_or(0.0, |h| h.loss),
        epochs: history.len(),
        confusion: eval.confusion,
    };
    info!(
        "fold {fold_index}: accuracy {:.4}, final training loss {:.6}",
        result.accuracy, result.loss_final
    );
    Ok((model, result))
}

/// Cross-validation on precomputed (transductive) inputs.
pub fn train_prepared(samples: &[Sample], classes: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let folds = kfold_split(&labels, cfg.folds, cfg.seed)?;
    let mut outcome = TrainOutcome {
        folds: Vec::new(),
        models: Vec::new(),
        fold_alignments: Vec::new(),
    };
    for (k, fold) in folds.iter().enumerate() {
        let (model, result) = train_fold(samples, k, fold, classes, cfg)?;
        outcome.models.push(model);
        outcome.folds.push(result);
    }
    Ok(outcome)
}

/// Full cross-validation from raw graphs. Transductive mode aligns once
/// with prototypes from all graphs; inductive mode refits prototypes on
/// each fold's training graphs.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let inputs = DatasetInputs::compute(dataset, cfg.depth)?;
    let classes = dataset.num_classes();
    let acfg = cfg.alignment_config();
    if cfg.transductive {
        let prepared = prepare(dataset, &inputs, &acfg, None)?;
        return train_prepared(&prepared.samples(&dataset.class_labels), classes, cfg);
    }
    train_inductive(dataset, &inputs, cfg)
}

pub fn train_inductive(dataset: &Dataset, inputs: &DatasetInputs, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let folds = kfold_split(&dataset.class_labels, cfg.folds, cfg.seed)?;
    let mut outcome = TrainOutcome {
        folds: Vec::new(),
        models: Vec::new(),
        fold_alignments: Vec::new(),
    };
    for (k, fold) in folds.iter().enumerate() {
        let prepared = prepare(dataset, inputs, &cfg.alignment_config(), Some(&fold.train))?;
        let samples = prepared.samples(&dataset.class_labels);
        let (model, result) = train_fold(&samples, k, fold, dataset.num_classes(), cfg)?;
        outcome.models.push(model);
        outcome.folds.push(result);
        outcome.fold_alignments.push(prepared);
    }
    Ok(outcome)
}

/// Metrics text: a `fold,accuracy,loss_final,epochs` table, then a
/// `mean,stderr` table with one row. Values use shortest round-trip
/// formatting so identical runs give identical files.
pub fn format_metrics(folds: &[FoldResult]) -> String {
    let mut out = String::from("fold,accuracy,loss_final,epochs\n");
    for f in folds {
        let _ = writeln!(out, "{},{},{},{}", f.fold, f.accuracy, f.loss_final, f.epochs);
    }
    let (mean, se) = mean_stderr(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
    let _ = writeln!(out, "mean,stderr\n{mean},{se}");
    out
}

pub fn write_metrics(path: impl AsRef<Path>, folds: &[FoldResult]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_metrics(folds)).map_err(|e| Error::io(path, e))
}

/// Parsed metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFile {
    /// (fold, accuracy, loss_final, epochs).
    pub folds: Vec<(usize, f64, f64, usize)>,
    pub mean: f64,
    pub stderr: f64,
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<MetricsFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.first() != Some(&"fold,accuracy,loss_final,epochs") {
        return Err(Error::parse(path, 1, "missing metrics header"));
    }
    let split = lines
        .iter()
        .position(|l| *l == "mean,stderr")
        .ok_or_else(|| Error::parse(path, lines.len(), "missing mean,stderr summary"))?;
    let num = |s: &str, ln: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::parse(path, ln, format!("bad number {s:?}")))
    };
    let mut folds = Vec::new();
    for (i, line) in lines[1..split].iter().enumerate() {
        let ln = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::parse(path, ln, "expected 4 fields"));
        }
        let fold = f[0].parse().map_err(|_| Error::parse(path, ln, "bad fold index"))?;
        let epochs = f[3].parse().map_err(|_| Error::parse(path, ln, "bad epoch count"))?;
        folds.push((fold, num(f[1], ln)?, num(f[2], ln)?, epochs));
    }
    let summary = lines
        .get(split + 1)
        .ok_or_else(|| Error::parse(path, split + 2, "missing summary values"))?;
    let (m, s) = summary
        .split_once(',')
        .ok_or_else(|| Error::parse(path, split + 2, "expected mean,stderr"))?;
    Ok(MetricsFile {
        folds,
        mean: num(m, split + 2)?,
        stderr: num(s, split + 2)?,
    })
}

/// Aggregate over repeated cross-validation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionSummary {
    pub runs: usize,
    /// Mean of the per-run mean accuracies.
    pub mean: f64,
    /// Standard error across run means.
    pub stderr_runs: f64,
    /// Standard error across all folds of all runs.
    pub stderr_folds: f64,
}

pub fn summarize_runs(runs: &[MetricsFile]) -> RepetitionSummary {
    let means: Vec<f64> = runs.iter().map(|r| r.mean).collect();
    let all: Vec<f64> = runs.iter().flat_map(|r| r.folds.iter().map(|f| f.1)).collect();
    let (mean, stderr_runs) = mean_stderr(&means);
    RepetitionSummary {
        runs: runs.len(),
        mean,
        stderr_runs,
        stderr_folds: mean_stderr(&all).1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn folds_partition() {
        let labels: Vec<usize> = (0..188).map(|i| usize::from(i % 3 != 0)).collect();
        let folds = kfold_split(&labels, 10, 7).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [18, 18, 19, 19, 19, 19, 19, 19, 19, 19]);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..188).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train.len() + f.test.len(), 188);
            for c in 0..2 {
                let per: Vec<usize> = folds
                    .iter()
                    .map(|g| g.test.iter().filter(|&&i| labels[i] == c).count())
                    .collect();
                assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }
        assert_eq!(folds, kfold_split(&labels, 10, 7).unwrap());
    }

    #[test]
    fn singleton_folds() {
        let folds = kfold_split(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 10, 0).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 1 && f.train.len() == 9));
        assert!(kfold_split(&[0, 1], 3, 0).is_err());
        assert!(kfold_split(&[0, 1], 1, 0).is_err());
    }

    fn scalar_params(v: f64) -> NetworkParams {
        let mut p = NetworkParams::init(&ModelConfig::tiny(), 0).unwrap();
        for t in p.tensors_mut() {
            t.fill(v);
        }
        p
    }

    #[test]
    fn adam_first_step_magnitude() {
        let mut params = scalar_params(0.0);
        let mut grads = scalar_params(0.0);
        grads.stack[0][[0, 0]] = 3.0;
        grads.stack[0][[0, 1]] = 6.0;
        grads.stack[0][[0, 2]] = -0.01;
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, 1e-3).unwrap();
        assert_abs_diff_eq!(params.stack[0][[0, 0]], -1e-3, epsilon = 1e-9);
        assert_abs_diff_eq!(params.stack[0][[0, 1]], -1e-3, epsilon = 1e-9);
        assert_abs_diff_eq!(params.stack[0][[0, 2]], 1e-3, epsilon = 1e-8);
        assert_eq!(params.stack[0][[1, 0]], 0.0);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_zero_gradient_decays_moments() {
        let mut params = scalar_params(0.5);
        let before = params.clone();
        let mut state = AdamState::new(&params);
        state.m = scalar_params(1.0);
        state.v = scalar_params(1.0);
        adam_step(&mut params, &scalar_params(0.0), &mut state, 1e-3).unwrap();
        assert_abs_diff_eq!(state.m.stack[0][[0, 0]], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(state.v.stack[0][[0, 0]], 0.999, epsilon = 1e-15);
        // moments were nonzero, so parameters still move
        assert!(params.stack[0][[0, 0]] < before.stack[0][[0, 0]]);

        let mut fresh = AdamState::new(&params);
        let snapshot = params.clone();
        adam_step(&mut params, &scalar_params(0.0), &mut fresh, 1e-3).unwrap();
        assert_eq!(params, snapshot);
    }

    #[test]
    fn adam_rejects_nan() {
        let mut params = scalar_params(0.0);
        let mut grads = scalar_params(0.0);
        grads.classifier.bias[0] = f64::NAN;
        let mut state = AdamState::new(&params);
        assert!(matches!(adam_step(&mut params, &grads, &mut state, 1e-3), Err(Error::Numeric(_))));
        assert_eq!(state.step, 0);
        assert_eq!(params, scalar_params(0.0));
    }

    #[test]
    fn confusion_examples() {
        let (acc, c) = confusion_summary(&[(0, 0), (1, 1), (1, 1)], 2);
        assert_eq!(acc, 1.0);
        assert_eq!(c, array![[1, 0], [0, 2]]);
        let (acc, _) = confusion_summary(&[(0, 0), (0, 0), (1, 0), (1, 0)], 2);
        assert_eq!(acc, 0.5);
        let (acc, _) = confusion_summary(&[(0, 0), (1, 1), (1, 1), (0, 1)], 2);
        assert_eq!(acc, 0.75);
    }

    #[test]
    fn argmax_matches_logits() {
        let logits = array![0.3, 2.0, -1.0, 2.0];
        assert_eq!(argmax(&logits), 1);
        assert_eq!(argmax(&crate::neural::softmax(&logits)), 1);
        assert_eq!(argmax(&logits.mapv(|v| (3.0 * v).exp())), 1);
    }

    #[test]
    fn metrics_round_trip() {
        let folds: Vec<FoldResult> = (0..3)
            .map(|k| FoldResult {
                fold: k,
                accuracy: [0.9, 0.8, 0.85][k],
                loss_final: 0.1 * k as f64,
                epochs: 5,
                confusion: Array2::zeros((2, 2)),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics(&p, &folds).unwrap();
        let back = read_metrics(&p).unwrap();
        assert_eq!(back.folds.len(), 3);
        assert_eq!(back.folds[1], (1, 0.8, 0.1, 5));
        assert_abs_diff_eq!(back.mean, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(back.stderr, 0.05 / 3f64.sqrt(), epsilon = 1e-12);

        let s = summarize_runs(&[back.clone(), back]);
        assert_eq!(s.runs, 2);
        assert_eq!(s.stderr_runs, 0.0);
        assert!(s.stderr_folds > 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig { folds: 1, ..Default::default() },
            TrainConfig { dropout: 1.0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { channels: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}

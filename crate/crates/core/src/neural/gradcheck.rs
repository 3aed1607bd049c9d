//! Central finite-difference check of [`Model::backward`].

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cross_entropy, Mode, Model, ModelConfig};
use crate::error::Result;
use crate::graph::Graph;
use crate::quantum_walk::{average_mixing_matrix, DEFAULT_GROUP_TOL};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter with the largest error: (tensor index, flat offset).
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// A random connected graph on `m` vertices and its mixing matrix.
pub fn random_mixing(m: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let mut edges: Vec<(usize, usize)> = (1..m).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..m {
        let a = rng.random_range(0..m);
        let b = rng.random_range(0..m);
        if a != b {
            edges.push((a, b));
        }
    }
    let g = Graph::from_edges(m, &edges, None)?;
    Ok(average_mixing_matrix(&g.adjacency(), DEFAULT_GROUP_TOL)?.0)
}

fn loss(model: &Model, q: &Array2<f64>, x: &Array2<f64>, label: usize) -> Result<f64> {
    Ok(cross_entropy(&model.forward(q, x, Mode::Eval)?.probabilities, label))
}

/// Compares analytic gradients against `(L(θ+ε) - L(θ-ε)) / 2ε` for every
/// parameter of a freshly initialised model on a random input. The error
/// of each parameter is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn finite_difference_check(config: &ModelConfig, seed: u64, eps: f64) -> Result<GradCheckReport> {
    let mut cfg = config.clone();
    cfg.dropout = 0.0;
    let mut model = Model::new(cfg.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let q = random_mixing(cfg.grid_size, &mut rng)?;
    let x = Array2::from_shape_simple_fn((cfg.grid_size, cfg.input_channels), || rng.random_range(-1.0..1.0));
    let label = rng.random_range(0..cfg.classes);

    let trace = model.forward(&q, &x, Mode::Eval)?;
    let grads = model.backward(&trace, label)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|(_, v)| v.to_vec()).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for (ti, a_tensor) in analytic.iter().enumerate() {
        for (k, &a) in a_tensor.iter().enumerate() {
            let orig = model.params.tensors()[ti].1[k];
            model.params_mut().tensors_mut()[ti][k] = orig + eps;
            let up = loss(&model, &q, &x, label)?;
            model.params_mut().tensors_mut()[ti][k] = orig - eps;
            let down = loss(&model, &q, &x, label)?;
            model.params_mut().tensors_mut()[ti][k] = orig;
            let n = (up - down) / (2.0 * eps);
            let err = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (ti, k);
                report.analytic = a;
                report.numeric = n;
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

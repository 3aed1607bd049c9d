//! Continuous-time quantum walks: the average mixing matrix and its
//! time-averaged numeric estimate.
//!
//! For a real symmetric Hamiltonian `H = Σ_j λ_j P_j` (distinct eigenvalues,
//! orthogonal eigenprojectors) the Cesàro mean of `U(t) ∘ U(-t)` with
//! `U(t) = exp(iHt)` is `Q = Σ_j P_j ∘ P_j`. Cross terms between distinct
//! eigenvalues oscillate and average out, so the eigenvalue grouping is the
//! only delicate step.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Relative eigenvalue grouping tolerance (scaled by `max(1, ρ(H))`).
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_EIGEN_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct eigenvalues, ascending. A grouped eigenvalue is the mean of
    /// its members.
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Orthogonal projector onto each eigenspace, same order as `eigenvalues`.
    pub projectors: Vec<Array2<f64>>,
}

impl SpectralDecomposition {
    /// `Σ_j λ_j P_j`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let n = self.dim();
        let mut h = Array2::zeros((n, n));
        for (l, p) in self.eigenvalues.iter().zip(&self.projectors) {
            h.scaled_add(*l, p);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

fn check_hamiltonian(h: &Array2<f64>) -> Result<()> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Shape(format!("Hamiltonian is {}x{}", n, h.ncols())));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("Hamiltonian has non-finite entries".into()));
    }
    let scale = h.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (h[[i, j]] - h[[j, i]]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidData(format!(
                    "Hamiltonian not symmetric at ({i}, {j}): {} vs {}",
                    h[[i, j]],
                    h[[j, i]]
                )));
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, sorted ascending.
pub fn symmetric_eigenpairs(h: &Array2<f64>) -> Result<Eigenpairs> {
    check_hamiltonian(h)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(Eigenpairs {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let m = DMatrix::from_fn(n, n, |i, j| h[[i, j]]);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, MAX_EIGEN_ITER)
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge (n={n})")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, c)| eig.eigenvectors[(i, order[c])]);
    Ok(Eigenpairs { values, vectors })
}

/// Groups eigenpairs into distinct eigenspaces and forms their projectors.
///
/// Consecutive sorted eigenvalues whose gap is at most
/// `group_tol * max(1, spectral radius)` share an eigenspace.
pub fn spectral_decomposition(h: &Array2<f64>, group_tol: f64) -> Result<SpectralDecomposition> {
    if !(group_tol > 0.0) {
        return Err(Error::Config(format!("group_tol must be positive, got {group_tol}")));
    }
    let pairs = symmetric_eigenpairs(h)?;
    let n = pairs.values.len();
    let radius = pairs.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap_tol = group_tol * radius.max(1.0);

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || pairs.values[k] - pairs.values[k - 1] > gap_tol {
            groups.push((start, k));
            start = k;
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut multiplicities = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for (lo, hi) in groups {
        let block = pairs.vectors.slice(ndarray::s![.., lo..hi]);
        projectors.push(block.dot(&block.t()));
        eigenvalues.push(pairs.values.slice(ndarray::s![lo..hi]).mean().unwrap());
        multiplicities.push(hi - lo);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        multiplicities,
        projectors,
    })
}

/// `Q[i][j]`: long-run average probability that a walk started at `i` is
/// observed at `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(pub Array2<f64>);

impl MixingMatrix {
    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn stochastic_defect(&self) -> f64 {
        let rows = self.0.sum_axis(Axis(1));
        let cols = self.0.sum_axis(Axis(0));
        rows.iter()
            .chain(cols.iter())
            .fold(0.0f64, |m, s| m.max((s - 1.0).abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let q = &self.0;
        let mut worst = 0.0f64;
        for i in 0..q.nrows() {
            for j in (i + 1)..q.ncols() {
                worst = worst.max((q[[i, j]] - q[[j, i]]).abs());
            }
        }
        worst
    }

    /// Doubly-stochastic, symmetric and entrywise within `[-tol, 1 + tol]`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let defect = self.stochastic_defect();
        if !(defect <= tol) {
            return Err(Error::Numeric(format!(
                "mixing matrix row/column sums deviate from 1 by {defect:e}"
            )));
        }
        let asym = self.asymmetry();
        if !(asym <= tol) {
            return Err(Error::Numeric(format!("mixing matrix asymmetry {asym:e}")));
        }
        if let Some(x) = self.0.iter().find(|&&x| !(-tol..=1.0 + tol).contains(&x)) {
            return Err(Error::Numeric(format!("mixing matrix entry {x} outside [0, 1]")));
        }
        Ok(())
    }
}

/// `Q = Σ_j P_j ∘ P_j` over the eigenprojectors of `h`.
pub fn average_mixing_matrix(h: &Array2<f64>, group_tol: f64) -> Result<MixingMatrix> {
    let sd = spectral_decomposition(h, group_tol)?;
    Ok(mixing_from_decomposition(&sd, h.nrows()))
}

pub fn mixing_from_decomposition(sd: &SpectralDecomposition, n: usize) -> MixingMatrix {
    let mut q = Array2::zeros((n, n));
    for p in &sd.projectors {
        q.zip_mut_with(p, |acc, &x| *acc += x * x);
    }
    MixingMatrix(q)
}

/// Trapezoidal estimate of `(1/T) ∫_0^T U(t) ∘ U(-t) dt` on `steps` uniform
/// samples, with `U(t) = Σ_k e^{iλ_k t} v_k v_kᵀ` built from the raw
/// (ungrouped) eigenvectors.
pub fn cesaro_mixing_estimate(h: &Array2<f64>, horizon: f64, steps: usize) -> Result<Array2<f64>> {
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if steps < 2 {
        return Err(Error::Config(format!("need at least 2 quadrature samples, got {steps}")));
    }
    let pairs = symmetric_eigenpairs(h)?;
    let n = pairs.values.len();
    let v = &pairs.vectors;
    let vt = v.t();
    let dt = horizon / (steps - 1) as f64;

    let mut acc = Array2::<f64>::zeros((n, n));
    let mut scaled = Array2::<f64>::zeros((n, n));
    for s in 0..steps {
        let t = s as f64 * dt;
        let weight = if s == 0 || s == steps - 1 { 0.5 } else { 1.0 };
        // U(-t) is the entrywise conjugate of U(t), so U(t) ∘ U(-t) = |U(t)|².
        let mut re = Array2::<f64>::zeros((n, n));
        let mut im = Array2::<f64>::zeros((n, n));
        for (phase_part, out) in [(0, &mut re), (1, &mut im)] {
            for c in 0..n {
                let theta = pairs.values[c] * t;
                let f = if phase_part == 0 { theta.cos() } else { theta.sin() };
                for r in 0..n {
                    scaled[[r, c]] = v[[r, c]] * f;
                }
            }
            *out = scaled.dot(&vt);
        }
        acc.zip_mut_with(&re, |a, &x| *a += weight * x * x);
        acc.zip_mut_with(&im, |a, &x| *a += weight * x * x);
    }
    acc.mapv_inplace(|x| x * dt / horizon);
    Ok(acc)
}

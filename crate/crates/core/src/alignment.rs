//! Transitive vertex alignment against k-means prototype representations,
//! and the fixed-size aligned grids built from it.
//!
//! Every vertex of every graph is matched to its nearest prototype at each
//! depth level. Vertices sharing a prototype are aligned to each other, so
//! alignment is an equivalence over all graphs at once. Pushing a graph's
//! features and adjacency through its 0/1 correspondence matrix yields
//! M-row structures whose rows mean the same thing for every graph.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::depth::DbMatrix;
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph};

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    /// Dimension K of each centroid.
    pub depth: usize,
    /// M×K, one centroid per row.
    pub centroids: Array2<f64>,
    pub order_applied: bool,
}

impl PrototypeSet {
    pub fn len(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.nrows() == 0
    }

    /// Reorders rows so that new row `r` is old row `perm[r]`.
    pub fn apply_order(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.len());
        self.centroids = self.centroids.select(Axis(0), perm);
        self.order_applied = true;
    }

    /// Sorted by descending prototype-graph degree.
    pub fn into_ordered(mut self) -> Self {
        let perm = prototype_order(&self);
        self.apply_order(&perm);
        self
    }
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub prototypes: PrototypeSet,
    /// Point-to-cluster assignment after the last iteration.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Fewer distinct points than clusters; some centroids are duplicates.
    pub distinct_exhausted: bool,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices attaining the maximum (`largest`) or minimum of `values`, exactly.
fn extreme_indices(values: &[f64], largest: bool) -> Vec<usize> {
    let best = values.iter().copied().fold(
        if largest { f64::NEG_INFINITY } else { f64::INFINITY },
        |m, x| if largest { m.max(x) } else { m.min(x) },
    );
    values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x == best)
        .map(|(i, _)| i)
        .collect()
}

fn nearest(point: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.outer_iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Farthest-point seeding from the point nearest the global mean. The RNG
/// only breaks exact distance ties.
fn farthest_point_seeds(points: ArrayView2<f64>, m: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let mean = points.mean_axis(Axis(0)).expect("non-empty points");
    let to_mean: Vec<f64> = points.outer_iter().map(|p| sq_dist(p, mean.view())).collect();
    let pick = |cands: Vec<usize>, rng: &mut ChaCha8Rng| cands[rng.random_range(0..cands.len())];

    let first = pick(extreme_indices(&to_mean, false), rng);
    let mut seeds = vec![first];
    let mut min_d: Vec<f64> = points
        .outer_iter()
        .map(|p| sq_dist(p, points.row(first)))
        .collect();
    let mut exhausted = false;
    while seeds.len() < m {
        let cands = extreme_indices(&min_d, true);
        let next = pick(cands, rng);
        if min_d[next] == 0.0 {
            exhausted = true;
        }
        seeds.push(next);
        for (i, p) in points.outer_iter().enumerate() {
            min_d[i] = min_d[i].min(sq_dist(p, points.row(next)));
        }
    }
    (seeds, exhausted)
}

/// Lloyd's k-means with deterministic farthest-point initialisation.
/// Returned prototypes are unordered.
pub fn kmeans_prototypes(
    points: ArrayView2<f64>,
    m: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansOutcome> {
    let n = points.nrows();
    let k = points.ncols();
    if m == 0 {
        return Err(Error::Config("number of prototypes must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidData("k-means needs at least one point".into()));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite vertex representation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (seeds, mut exhausted) = farthest_point_seeds(points, m, &mut rng);
    let mut centroids = points.select(Axis(0), &seeds);

    let mut assignment = vec![0usize; n];
    let mut dist = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for (i, p) in points.outer_iter().enumerate() {
            (assignment[i], dist[i]) = nearest(p, &centroids);
        }
        history.push(dist.iter().sum());

        let mut sums = Array2::<f64>::zeros((m, k));
        let mut counts = vec![0usize; m];
        for (i, p) in points.outer_iter().enumerate() {
            let mut row = sums.row_mut(assignment[i]);
            row += &p;
            counts[assignment[i]] += 1;
        }
        let mut updated = centroids.clone();
        for j in 0..m {
            if counts[j] > 0 {
                let mean = sums.row(j).mapv(|x| x / counts[j] as f64);
                updated.row_mut(j).assign(&mean);
            }
        }
        // Re-seed empty clusters at the points worst served by their centroid.
        let mut taken = vec![false; n];
        for j in (0..m).filter(|&j| counts[j] == 0) {
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in points.outer_iter().enumerate() {
                if taken[i] {
                    continue;
                }
                let d = sq_dist(p, updated.row(assignment[i]));
                if d > 0.0 && best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((i, d));
                }
            }
            match best {
                Some((i, _)) => {
                    taken[i] = true;
                    updated.row_mut(j).assign(&points.row(i));
                }
                None => exhausted = true,
            }
        }

        let shift = centroids
            .outer_iter()
            .zip(updated.outer_iter())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = updated;
        if shift < tol {
            converged = true;
            break;
        }
    }
    for (i, p) in points.outer_iter().enumerate() {
        assignment[i] = nearest(p, &centroids).0;
    }
    if exhausted {
        log::warn!("k-means: {m} prototypes requested but fewer distinct points available; duplicate centroids kept");
    }
    Ok(KMeansOutcome {
        prototypes: PrototypeSet {
            depth: k,
            centroids,
            order_applied: false,
        },
        assignment,
        objective_history: history,
        iterations,
        converged,
        distinct_exhausted: exhausted,
    })
}

/// Euclidean distance from each vertex representation (row) to each
/// prototype.
pub fn affinity_matrix(vertex_reps: ArrayView2<f64>, prototypes: &PrototypeSet) -> Result<Array2<f64>> {
    if vertex_reps.ncols() != prototypes.depth || prototypes.centroids.ncols() != prototypes.depth {
        return Err(Error::Shape(format!(
            "vertex representations have {} columns, prototypes have depth {}",
            vertex_reps.ncols(),
            prototypes.depth
        )));
    }
    let mut out = Array2::zeros((vertex_reps.nrows(), prototypes.len()));
    for (i, r) in vertex_reps.outer_iter().enumerate() {
        for (j, c) in prototypes.centroids.outer_iter().enumerate() {
            out[[i, j]] = sq_dist(r, c).sqrt();
        }
    }
    Ok(out)
}

/// Vertex-to-prototype assignment; the dense form is a 0/1 matrix with one
/// 1 per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMatrix {
    pub assignment: Vec<usize>,
    pub prototypes: usize,
}

impl CorrespondenceMatrix {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut c = Array2::zeros((self.assignment.len(), self.prototypes));
        for (i, &j) in self.assignment.iter().enumerate() {
            c[[i, j]] = 1.0;
        }
        c
    }
}

/// Row-wise argmin of the affinity matrix, ties toward the smallest column.
pub fn correspondence_matrix(affinity: &Array2<f64>) -> Result<CorrespondenceMatrix> {
    if affinity.ncols() == 0 {
        return Err(Error::Shape("affinity matrix has no columns".into()));
    }
    if affinity.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric("NaN in affinity matrix".into()));
    }
    let assignment = affinity
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &x) in row.iter().enumerate() {
                if x < row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    Ok(CorrespondenceMatrix {
        assignment,
        prototypes: affinity.ncols(),
    })
}

/// Degree of each prototype in the similarity graph
/// `s(a, b) = exp(-‖a - b‖ / K)`, self-similarity included.
pub fn prototype_degrees(prototypes: &PrototypeSet) -> Vec<f64> {
    let k = prototypes.depth.max(1) as f64;
    let c = &prototypes.centroids;
    c.outer_iter()
        .map(|a| {
            c.outer_iter()
                .map(|b| (-sq_dist(a, b).sqrt() / k).exp())
                .sum()
        })
        .collect()
}

/// Permutation sorting prototypes by descending degree, ties by index.
pub fn prototype_order(prototypes: &PrototypeSet) -> Vec<usize> {
    let degrees = prototype_degrees(prototypes);
    let mut perm: Vec<usize> = (0..prototypes.len()).collect();
    perm.sort_by(|&a, &b| degrees[b].total_cmp(&degrees[a]).then(a.cmp(&b)));
    perm
}

/// `(CᵀX, CᵀAC)` for one depth level.
pub fn aligned_grid_level(
    features: &FeatureMatrix,
    graph: &Graph,
    c: &CorrespondenceMatrix,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = c.assignment.len();
    if features.rows() != n || graph.n() != n {
        return Err(Error::Shape(format!(
            "correspondence has {n} rows, features {} and adjacency {}",
            features.rows(),
            graph.n()
        )));
    }
    let m = c.prototypes;
    let mut x_hat = Array2::zeros((m, features.cols()));
    for (i, row) in features.0.outer_iter().enumerate() {
        let mut target = x_hat.row_mut(c.assignment[i]);
        target += &row;
    }
    let mut a_hat = Array2::zeros((m, m));
    for i in 0..n {
        for &(j, w) in graph.row(i) {
            a_hat[[c.assignment[i], c.assignment[j]]] += w;
        }
    }
    Ok((x_hat, a_hat))
}

/// Level-averaged aligned grid of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedGrid {
    /// M×c.
    pub features: Array2<f64>,
    /// M×M, symmetric and nonnegative.
    pub adjacency: Array2<f64>,
    pub graph_index: usize,
}

/// Prototype sets for depth levels 1..=L, each sorted by its own degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub levels: Vec<PrototypeSet>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AlignmentConfig {
    pub prototypes: usize,
    pub depth: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            prototypes: 64,
            depth: 10,
            seed: 0,
            max_iter: 300,
            tol: 1e-10,
        }
    }
}

impl Alignment {
    /// Clusters the depth-truncated representations of `fit_graphs` (all
    /// graphs when `None`) independently at each level.
    pub fn fit(db: &DbMatrix, fit_graphs: Option<&[usize]>, cfg: &AlignmentConfig) -> Result<Self> {
        if cfg.depth == 0 || cfg.depth > db.depth() {
            return Err(Error::Config(format!(
                "alignment depth {} not in 1..={}",
                cfg.depth,
                db.depth()
            )));
        }
        let rows: Vec<usize> = match fit_graphs {
            None => (0..db.values.nrows()).collect(),
            Some(gs) => gs
                .iter()
                .flat_map(|&p| db.offsets[p]..db.offsets[p + 1])
                .collect(),
        };
        let points = db.values.select(Axis(0), &rows);
        let levels = (1..=cfg.depth)
            .map(|k| {
                let level_seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
                let out = kmeans_prototypes(
                    points.slice(s![.., ..k]),
                    cfg.prototypes,
                    level_seed,
                    cfg.max_iter,
                    cfg.tol,
                )?;
                Ok(out.prototypes.into_ordered())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Alignment {
            levels,
            seed: cfg.seed,
        })
    }

    pub fn prototypes(&self) -> usize {
        self.levels.first().map_or(0, PrototypeSet::len)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// One correspondence per level for a graph whose depth-L vertex
    /// representations are the rows of `reps`.
    pub fn correspondences(&self, reps: ArrayView2<f64>) -> Result<Vec<CorrespondenceMatrix>> {
        if reps.ncols() < self.depth() {
            return Err(Error::Shape(format!(
                "representations have depth {}, alignment needs {}",
                reps.ncols(),
                self.depth()
            )));
        }
        self.levels
            .iter()
            .map(|ps| correspondence_matrix(&affinity_matrix(reps.slice(s![.., ..ps.depth]), ps)?))
            .collect()
    }

    pub fn grid(
        &self,
        graph_index: usize,
        graph: &Graph,
        reps: ArrayView2<f64>,
        features: &FeatureMatrix,
    ) -> Result<AlignedGrid> {
        let cs = self.correspondences(reps)?;
        average_levels(graph_index, graph, features, &cs)
    }
}

/// Averages the per-level grids `(CᵀX, CᵀAC)` over all correspondences.
pub fn average_levels(
    graph_index: usize,
    graph: &Graph,
    features: &FeatureMatrix,
    correspondences: &[CorrespondenceMatrix],
) -> Result<AlignedGrid> {
    let Some(first) = correspondences.first() else {
        return Err(Error::Config("at least one depth level required".into()));
    };
    let m = first.prototypes;
    if correspondences.iter().any(|c| c.prototypes != m) {
        return Err(Error::Shape("prototype count differs across levels".into()));
    }
    let mut x = Array2::zeros((m, features.cols()));
    let mut a = Array2::zeros((m, m));
    for c in correspondences {
        let (xk, ak) = aligned_grid_level(features, graph, c)?;
        x += &xk;
        a += &ak;
    }
    let l = correspondences.len() as f64;
    x.mapv_inplace(|v| v / l);
    a.mapv_inplace(|v| v / l);
    Ok(AlignedGrid {
        features: x,
        adjacency: a,
        graph_index,
    })
}

/// Aligned grid of graph `graph_index` given ordered per-level prototypes.
pub fn aligned_grid(
    graph_index: usize,
    dataset: &crate::graph::Dataset,
    prototypes_per_level: &[PrototypeSet],
    features: &FeatureMatrix,
) -> Result<AlignedGrid> {
    let graph = dataset
        .graphs
        .get(graph_index)
        .ok_or_else(|| Error::InvalidData(format!("graph index {graph_index} out of range")))?;
    let Some(first) = prototypes_per_level.first() else {
        return Err(Error::Config("at least one depth level required".into()));
    };
    if prototypes_per_level.iter().any(|p| p.len() != first.len()) {
        return Err(Error::Shape("prototype count differs across levels".into()));
    }
    let depth = prototypes_per_level.iter().map(|p| p.depth).max().unwrap();
    let mut reps = Array2::zeros((graph.n(), depth));
    for v in 0..graph.n() {
        let r = crate::depth::db_representation(graph, v, depth);
        reps.row_mut(v).assign(&ndarray::Array1::from(r.values));
    }
    let cs = prototypes_per_level
        .iter()
        .map(|ps| correspondence_matrix(&affinity_matrix(reps.slice(s![.., ..ps.depth]), ps)?))
        .collect::<Result<Vec<_>>>()?;
    average_levels(graph_index, graph, features, &cs)
}

const PROTOTYPE_MAGIC: &str = "# qsgcnn prototypes v1";

/// Text serialisation: a magic line, then per level a header
/// `K=<k> M=<m> L=<l> seed=<seed>` followed by M lines of K decimals.
pub fn write_prototypes(alignment: &Alignment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "{PROTOTYPE_MAGIC}");
    let l = alignment.depth();
    for ps in &alignment.levels {
        let _ = writeln!(out, "K={} M={} L={l} seed={}", ps.depth, ps.len(), alignment.seed);
        for row in ps.centroids.outer_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_prototypes(path: impl AsRef<Path>) -> Result<Alignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == PROTOTYPE_MAGIC => {}
        _ => return Err(Error::parse(path, 1, "missing prototype file header")),
    }
    let mut levels = Vec::new();
    let mut seed = 0;
    let mut expected_levels = None;
    while let Some((ln, header)) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let mut fields = std::collections::HashMap::new();
        for tok in header.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(path, ln, format!("bad header token {tok:?}")))?;
            let val: u64 = val
                .parse()
                .map_err(|_| Error::parse(path, ln, format!("bad header value {tok:?}")))?;
            fields.insert(key.to_string(), val);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::parse(path, ln, format!("header lacks {k}")))
        };
        let (k, m) = (get("K")? as usize, get("M")? as usize);
        expected_levels = Some(get("L")? as usize);
        seed = get("seed")?;
        let mut centroids = Array2::zeros((m, k));
        for r in 0..m {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| Error::parse(path, ln, "truncated centroid block"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, ln, "non-numeric centroid entry"))?;
            if vals.len() != k {
                return Err(Error::parse(path, ln, format!("expected {k} values, got {}", vals.len())));
            }
            centroids.row_mut(r).assign(&ndarray::Array1::from(vals));
        }
        levels.push(PrototypeSet {
            depth: k,
            centroids,
            order_applied: true,
        });
    }
    if expected_levels != Some(levels.len()) {
        return Err(Error::parse(path, 0, "level count does not match header L"));
    }
    Ok(Alignment { levels, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = array![[0., 0.], [2., 0.], [4., 3.]];
        let out = kmeans_prototypes(pts.view(), 1, 7, 100, 1e-12).unwrap();
        assert_abs_diff_eq!(out.prototypes.centroids, array![[2., 1.]], epsilon = 1e-12);
    }

    #[test]
    fn one_cluster_per_distinct_point() {
        let pts = array![[0.], [5.], [1.], [9.]];
        let out = kmeans_prototypes(pts.view(), 4, 3, 100, 1e-12).unwrap();
        let mut c: Vec<f64> = out.prototypes.centroids.iter().copied().collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0., 1., 5., 9.]);
        assert_eq!(*out.objective_history.last().unwrap(), 0.0);
        assert!(!out.distinct_exhausted);
    }

    #[test]
    fn duplicates_after_exhaustion() {
        let pts = array![[1.], [1.], [2.]];
        let out = kmeans_prototypes(pts.view(), 3, 0, 50, 1e-12).unwrap();
        assert!(out.distinct_exhausted);
        assert!(out.prototypes.centroids.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn affinity_rows() {
        let ps = PrototypeSet {
            depth: 1,
            centroids: array![[0.], [3.]],
            order_applied: false,
        };
        assert_eq!(affinity_matrix(array![[0.]].view(), &ps).unwrap(), array![[0., 3.]]);
        let ps = PrototypeSet {
            depth: 2,
            centroids: array![[0., 0.], [2., 2.]],
            order_applied: false,
        };
        let a = affinity_matrix(array![[1., 1.]].view(), &ps).unwrap();
        assert_abs_diff_eq!(a, array![[2f64.sqrt(), 2f64.sqrt()]], epsilon = 1e-15);
        assert!(affinity_matrix(array![[1.]].view(), &ps).is_err());
    }

    #[test]
    fn argmin_with_ties() {
        let c = correspondence_matrix(&array![[0.5, 0.1, 0.9], [0.3, 0.3, 1.0]]).unwrap();
        assert_eq!(c.assignment, vec![1, 0]);
        assert_eq!(c.to_dense(), array![[0., 1., 0.], [1., 0., 0.]]);
        assert!(correspondence_matrix(&array![[f64::NAN, 1.0]]).is_err());
    }

    #[test]
    fn degree_ordering() {
        let one = PrototypeSet {
            depth: 1,
            centroids: array![[4.]],
            order_applied: false,
        };
        assert_eq!(prototype_order(&one), vec![0]);
        let two = PrototypeSet {
            depth: 3,
            centroids: array![[0., 1., 2.], [5., 1., 0.]],
            order_applied: false,
        };
        assert_eq!(prototype_order(&two), vec![0, 1]);
        let line = PrototypeSet {
            depth: 1,
            centroids: array![[0.], [1.], [10.]],
            order_applied: false,
        };
        let d = prototype_degrees(&line);
        let e = f64::exp;
        assert_abs_diff_eq!(d[0], 1.0 + e(-1.0) + e(-10.0), epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 1.0 + e(-1.0) + e(-9.0), epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 1.0 + e(-10.0) + e(-9.0), epsilon = 1e-15);
        assert_eq!(prototype_order(&line), vec![1, 0, 2]);
        let ordered = line.into_ordered();
        assert!(ordered.order_applied);
        assert_eq!(ordered.centroids, array![[1.], [0.], [10.]]);
    }

    #[test]
    fn grid_level_cases() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], None).unwrap();
        let x = FeatureMatrix(array![[1., 0.], [0., 1.], [1., 1.]]);

        let id = CorrespondenceMatrix { assignment: vec![0, 1, 2], prototypes: 3 };
        let (xh, ah) = aligned_grid_level(&x, &g, &id).unwrap();
        assert_eq!(xh, x.0);
        assert_eq!(ah, g.adjacency());

        let all0 = CorrespondenceMatrix { assignment: vec![0, 0, 0], prototypes: 2 };
        let (xh, ah) = aligned_grid_level(&x, &g, &all0).unwrap();
        assert_eq!(xh, array![[2., 2.], [0., 0.]]);
        assert_eq!(ah, array![[4., 0.], [0., 0.]]);

        let e = Graph::from_edges(2, &[(0, 1)], None).unwrap();
        let x2 = FeatureMatrix(array![[1., 2.], [3., 4.]]);
        let swap = CorrespondenceMatrix { assignment: vec![1, 0], prototypes: 2 };
        let (xh, ah) = aligned_grid_level(&x2, &e, &swap).unwrap();
        assert_eq!(xh, array![[3., 4.], [1., 2.]]);
        assert_eq!(ah, array![[0., 1.], [1., 0.]]);

        // dense CᵀX and CᵀAC agree with the scatter form
        let c = CorrespondenceMatrix { assignment: vec![1, 0, 1], prototypes: 2 };
        let cd = c.to_dense();
        let (xh, ah) = aligned_grid_level(&x, &g, &c).unwrap();
        assert_eq!(xh, cd.t().dot(&x.0));
        assert_eq!(ah, cd.t().dot(&g.adjacency()).dot(&cd));

        assert!(aligned_grid_level(&x2, &g, &id).is_err());
    }

    #[test]
    fn level_average() {
        let e = Graph::from_edges(2, &[(0, 1)], None).unwrap();
        let x = FeatureMatrix(array![[1., 0.], [0., 1.]]);
        let a = CorrespondenceMatrix { assignment: vec![0, 1], prototypes: 2 };
        let b = CorrespondenceMatrix { assignment: vec![1, 0], prototypes: 2 };
        let g = average_levels(0, &e, &x, &[a.clone()]).unwrap();
        assert_eq!(g.features, x.0);
        assert_eq!(g.adjacency, e.adjacency());
        let same = average_levels(0, &e, &x, &[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(same, g);
        let mixed = average_levels(0, &e, &x, &[a, b]).unwrap();
        assert_eq!(mixed.features, array![[0.5, 0.5], [0.5, 0.5]]);
        assert_eq!(mixed.adjacency, array![[0., 1.], [1., 0.]]);
        let bad = CorrespondenceMatrix { assignment: vec![0, 1], prototypes: 3 };
        let ok = CorrespondenceMatrix { assignment: vec![0, 1], prototypes: 2 };
        assert!(average_levels(0, &e, &x, &[ok, bad]).is_err());
    }

    #[test]
    fn prototype_file_round_trip() {
        let alignment = Alignment {
            levels: vec![
                PrototypeSet { depth: 1, centroids: array![[0.1], [1.0 / 3.0]], order_applied: true },
                PrototypeSet {
                    depth: 2,
                    centroids: array![[1e-300, 2.5], [f64::MAX, -0.0]],
                    order_applied: true,
                },
            ],
            seed: 42,
        };
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("protos.txt");
        write_prototypes(&alignment, &p).unwrap();
        assert_eq!(read_prototypes(&p).unwrap(), alignment);
    }
}

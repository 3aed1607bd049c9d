//! Depth-based vertex representations: entropies of nested k-hop balls.

use std::collections::VecDeque;

use ndarray::Array2;
use rayon::prelude::*;

use crate::graph::{Dataset, Graph};

/// Entropy of each k-layer expansion subgraph around one vertex, k = 1..K.
#[derive(Debug, Clone, PartialEq)]
pub struct DbRepresentation {
    pub vertex_id: usize,
    pub values: Vec<f64>,
}

/// Shannon entropy (natural log) of the degree-proportional distribution.
/// Terms are summed in ascending degree order so the result depends only on
/// the degree multiset.
fn entropy_from_degrees(degrees: &mut [usize]) -> f64 {
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return 0.0;
    }
    degrees.sort_unstable();
    let total = total as f64;
    degrees
        .iter()
        .filter(|&&d| d > 0)
        .map(|&d| {
            let p = d as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Entropy of the stationary random-walk distribution `π_v = d_v / Σ d`.
pub fn steady_state_entropy(graph: &Graph) -> f64 {
    let mut degrees: Vec<usize> = (0..graph.n()).map(|v| graph.degree(v)).collect();
    entropy_from_degrees(&mut degrees)
}

/// BFS distances from `root`, truncated at `max_depth`; `usize::MAX` marks
/// unreached vertices. Returns the distances and vertices in BFS order.
fn bfs_ball(graph: &Graph, root: usize, max_depth: usize) -> (Vec<usize>, Vec<usize>) {
    let mut dist = vec![usize::MAX; graph.n()];
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    dist[root] = 0;
    while let Some(v) = queue.pop_front() {
        if dist[v] == max_depth {
            continue;
        }
        for u in graph.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                order.push(u);
                queue.push_back(u);
            }
        }
    }
    (dist, order)
}

/// Vertex-induced subgraph on every vertex within `k` hops of `root`
/// (vertices listed in BFS order, root first).
pub fn expansion_subgraph(graph: &Graph, root: usize, k: usize) -> Graph {
    assert!(root < graph.n(), "root {root} out of range");
    assert!(k >= 1, "expansion depth must be at least 1");
    let (_, order) = bfs_ball(graph, root, k);
    graph.induced_subgraph(&order)
}

pub fn db_representation(graph: &Graph, root: usize, depth: usize) -> DbRepresentation {
    assert!(root < graph.n(), "root {root} out of range");
    let (dist, order) = bfs_ball(graph, root, depth);
    let mut values = Vec::with_capacity(depth);
    let mut degrees = Vec::with_capacity(order.len());
    // BFS order is sorted by distance, so each ball is a prefix of `order`.
    let mut end = 0;
    for k in 1..=depth {
        while end < order.len() && dist[order[end]] <= k {
            end += 1;
        }
        degrees.clear();
        degrees.extend(
            order[..end]
                .iter()
                .map(|&v| graph.neighbors(v).filter(|&u| dist[u] <= k).count()),
        );
        values.push(entropy_from_degrees(&mut degrees));
    }
    DbRepresentation {
        vertex_id: root,
        values,
    }
}

/// Depth-based representations of all vertices of all graphs.
#[derive(Debug, Clone)]
pub struct DbMatrix {
    /// One row per vertex, `depth` columns.
    pub values: Array2<f64>,
    /// Row -> (graph index, vertex index).
    pub index: Vec<(usize, usize)>,
    /// First row of each graph; `offsets[p]..offsets[p + 1]` are its rows.
    pub offsets: Vec<usize>,
}

impl DbMatrix {
    pub fn graph_rows(&self, graph: usize) -> ndarray::ArrayView2<'_, f64> {
        self.values
            .slice(ndarray::s![self.offsets[graph]..self.offsets[graph + 1], ..])
    }

    pub fn depth(&self) -> usize {
        self.values.ncols()
    }
}

pub fn dataset_db_representations(dataset: &Dataset, depth: usize) -> DbMatrix {
    assert!(depth >= 1, "depth must be at least 1");
    let per_graph: Vec<Vec<Vec<f64>>> = dataset
        .graphs
        .par_iter()
        .map(|g| (0..g.n()).map(|v| db_representation(g, v, depth).values).collect())
        .collect();
    let total = dataset.total_vertices();
    let mut values = Array2::zeros((total, depth));
    let mut index = Vec::with_capacity(total);
    let mut offsets = Vec::with_capacity(dataset.len() + 1);
    let mut row = 0;
    for (p, reps) in per_graph.into_iter().enumerate() {
        offsets.push(row);
        for (v, rep) in reps.into_iter().enumerate() {
            for (k, x) in rep.into_iter().enumerate() {
                values[[row, k]] = x;
            }
            index.push((p, v));
            row += 1;
        }
    }
    offsets.push(row);
    DbMatrix {
        values,
        index,
        offsets,
    }
}

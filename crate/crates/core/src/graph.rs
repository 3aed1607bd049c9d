//! Graphs, datasets, TU-format ingestion and vertex feature encoding.
//!
//! The TU benchmark layout is a directory with `<name>_A.txt` (one `i, j`
//! edge per line, 1-based global vertex ids), `<name>_graph_indicator.txt`
//! (graph id of vertex k on line k), `<name>_graph_labels.txt` (class of
//! graph g on line g) and optionally `<name>_node_labels.txt`.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Sparse row storage of an n×n real matrix.
///
/// Input graphs are simple and undirected, but the storage can hold any
/// matrix so that `validate_graph` has something to report on.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    rows: Vec<Vec<(usize, f64)>>,
    vertex_labels: Option<Vec<i64>>,
}

impl Graph {
    /// Simple undirected graph from an edge list. Duplicate and reversed
    /// edges collapse into one undirected edge.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        vertex_labels: Option<Vec<i64>>,
    ) -> Result<Self> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidData(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidData(format!("self-loop on vertex {u}")));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        if let Some(labels) = &vertex_labels {
            if labels.len() != n {
                return Err(Error::InvalidData(format!(
                    "{} vertex labels for {n} vertices",
                    labels.len()
                )));
            }
        }
        let rows = sets
            .into_iter()
            .map(|s| s.into_iter().map(|j| (j, 1.0)).collect())
            .collect();
        Ok(Graph {
            rows,
            vertex_labels,
        })
    }

    /// Wraps an arbitrary square matrix without checking any invariant.
    pub fn from_dense(adjacency: &Array2<f64>, vertex_labels: Option<Vec<i64>>) -> Self {
        assert_eq!(adjacency.nrows(), adjacency.ncols(), "adjacency must be square");
        let rows = adjacency
            .outer_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        Graph {
            rows,
            vertex_labels,
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn vertex_labels(&self) -> Option<&[i64]> {
        self.vertex_labels.as_deref()
    }

    /// Stored (column, weight) entries of row `v`, sorted by column.
    pub fn row(&self, v: usize) -> &[(usize, f64)] {
        &self.rows[v]
    }

    /// Vertices adjacent to `v` (positive off-diagonal entries).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[v]
            .iter()
            .filter(move |&&(j, w)| j != v && w > 0.0)
            .map(|&(j, _)| j)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    /// Number of undirected edges (upper-triangle positive entries).
    pub fn edge_count(&self) -> usize {
        (0..self.n())
            .map(|v| self.neighbors(v).filter(|&j| j > v).count())
            .sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .flat_map(|v| self.neighbors(v).filter(move |&j| j > v).map(move |j| (v, j)))
            .collect()
    }

    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.n();
        let mut a = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                a[[i, j]] = w;
            }
        }
        a
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Vertex-induced subgraph on `vertices`, in the given order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let rows = vertices
            .iter()
            .map(|&v| {
                let mut r: Vec<(usize, f64)> = self.rows[v]
                    .iter()
                    .filter(|&&(j, _)| local[j] != usize::MAX)
                    .map(|&(j, w)| (local[j], w))
                    .collect();
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        let vertex_labels = self
            .vertex_labels
            .as_ref()
            .map(|l| vertices.iter().map(|&v| l[v]).collect());
        Graph {
            rows,
            vertex_labels,
        }
    }

    /// Relabels vertices so that old vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let mut rows = vec![Vec::new(); n];
        for (v, row) in self.rows.iter().enumerate() {
            let mut r: Vec<(usize, f64)> = row.iter().map(|&(j, w)| (perm[j], w)).collect();
            r.sort_by_key(|&(j, _)| j);
            rows[perm[v]] = r;
        }
        let vertex_labels = self.vertex_labels.as_ref().map(|l| {
            let mut out = vec![0; n];
            for (v, &lab) in l.iter().enumerate() {
                out[perm[v]] = lab;
            }
            out
        });
        Graph {
            rows,
            vertex_labels,
        }
    }
}

/// A violated `Graph` invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Asymmetric { i: usize, j: usize, a_ij: f64, a_ji: f64 },
    Negative { i: usize, j: usize, value: f64 },
    NonFinite { i: usize, j: usize },
    NonzeroDiagonal { i: usize, value: f64 },
    LabelLength { expected: usize, actual: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Asymmetric { i, j, a_ij, a_ji } => {
                write!(f, "asymmetric: A[{i}][{j}]={a_ij} but A[{j}][{i}]={a_ji}")
            }
            Diagnostic::Negative { i, j, value } => write!(f, "negative entry A[{i}][{j}]={value}"),
            Diagnostic::NonFinite { i, j } => write!(f, "non-finite entry A[{i}][{j}]"),
            Diagnostic::NonzeroDiagonal { i, value } => {
                write!(f, "nonzero diagonal A[{i}][{i}]={value}")
            }
            Diagnostic::LabelLength { expected, actual } => {
                write!(f, "label length {actual}, expected {expected}")
            }
        }
    }
}

/// Lists every invariant violation of `graph`; empty means valid.
pub fn validate_graph(graph: &Graph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for i in 0..graph.n() {
        for &(j, w) in graph.row(i) {
            if !w.is_finite() {
                out.push(Diagnostic::NonFinite { i, j });
                continue;
            }
            if w < 0.0 {
                out.push(Diagnostic::Negative { i, j, value: w });
            }
            if i == j {
                out.push(Diagnostic::NonzeroDiagonal { i, value: w });
            } else if i < j || graph.entry(j, i) == 0.0 {
                // each unordered pair reported once
                let back = graph.entry(j, i);
                if back != w {
                    out.push(Diagnostic::Asymmetric {
                        i,
                        j,
                        a_ij: w,
                        a_ji: back,
                    });
                }
            }
        }
    }
    if let Some(labels) = graph.vertex_labels() {
        if labels.len() != graph.n() {
            out.push(Diagnostic::LabelLength {
                expected: graph.n(),
                actual: labels.len(),
            });
        }
    }
    out
}

/// Per-vertex feature rows, in the vertex order of the graph's adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(pub Array2<f64>);

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Contiguous 0-based class indices.
    pub class_labels: Vec<usize>,
    /// Raw class value for each class index, ascending.
    pub class_values: Vec<i64>,
    /// Sorted distinct vertex labels; empty for unattributed datasets.
    pub label_alphabet: Vec<i64>,
}

impl Dataset {
    /// Builds a dataset from graphs and raw class values, remapping classes
    /// to 0-based indices in sorted order of the raw values.
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, raw_classes: &[i64]) -> Result<Self> {
        if graphs.len() != raw_classes.len() {
            return Err(Error::InvalidData(format!(
                "{} graphs but {} class labels",
                graphs.len(),
                raw_classes.len()
            )));
        }
        let class_values: Vec<i64> = raw_classes
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let class_labels = raw_classes
            .iter()
            .map(|c| class_values.binary_search(c).unwrap())
            .collect();
        let labelled = graphs.iter().filter(|g| g.vertex_labels().is_some()).count();
        if labelled != 0 && labelled != graphs.len() {
            return Err(Error::InvalidData(
                "vertex labels present on some graphs but not others".into(),
            ));
        }
        let label_alphabet = graphs
            .iter()
            .filter_map(|g| g.vertex_labels())
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Dataset {
            name: name.into(),
            graphs,
            class_labels,
            class_values,
            label_alphabet,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_values.len()
    }

    pub fn has_vertex_labels(&self) -> bool {
        !self.label_alphabet.is_empty()
    }

    pub fn total_vertices(&self) -> usize {
        self.graphs.iter().map(Graph::n).sum()
    }

    /// Sorted distinct vertex degrees over the whole dataset.
    pub fn degree_alphabet(&self) -> Vec<usize> {
        self.graphs
            .iter()
            .flat_map(|g| (0..g.n()).map(move |v| g.degree(v)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Feature matrices for every graph: one-hot vertex labels when the
    /// dataset is attributed, one-hot degrees otherwise.
    pub fn vertex_features(&self) -> Result<Vec<FeatureMatrix>> {
        if self.has_vertex_labels() {
            (0..self.len()).map(|p| one_hot_features(self, p)).collect()
        } else {
            let alphabet = self.degree_alphabet();
            Ok(self
                .graphs
                .iter()
                .map(|g| degree_one_hot(g, &alphabet))
                .collect())
        }
    }

    pub fn feature_dim(&self) -> usize {
        if self.has_vertex_labels() {
            self.label_alphabet.len()
        } else {
            self.degree_alphabet().len()
        }
    }
}

/// One-hot encoding of vertex labels over the dataset's label alphabet.
pub fn one_hot_features(dataset: &Dataset, graph_index: usize) -> Result<FeatureMatrix> {
    let graph = graph_at(dataset, graph_index)?;
    let labels = graph.vertex_labels().ok_or_else(|| {
        Error::InvalidData(format!("graph {graph_index} carries no vertex labels"))
    })?;
    let alphabet = &dataset.label_alphabet;
    let mut x = Array2::zeros((graph.n(), alphabet.len()));
    for (i, lab) in labels.iter().enumerate() {
        let col = alphabet.binary_search(lab).map_err(|_| {
            Error::InvalidData(format!("vertex label {lab} absent from the label alphabet"))
        })?;
        x[[i, col]] = 1.0;
    }
    Ok(FeatureMatrix(x))
}

/// One-hot encoding of vertex degree over the dataset-wide degree alphabet.
pub fn degree_features(dataset: &Dataset, graph_index: usize) -> Result<FeatureMatrix> {
    let graph = graph_at(dataset, graph_index)?;
    Ok(degree_one_hot(graph, &dataset.degree_alphabet()))
}

fn degree_one_hot(graph: &Graph, alphabet: &[usize]) -> FeatureMatrix {
    let mut x = Array2::zeros((graph.n(), alphabet.len()));
    for v in 0..graph.n() {
        let col = alphabet
            .binary_search(&graph.degree(v))
            .expect("degree alphabet covers the dataset");
        x[[v, col]] = 1.0;
    }
    FeatureMatrix(x)
}

fn graph_at(dataset: &Dataset, graph_index: usize) -> Result<&Graph> {
    dataset.graphs.get(graph_index).ok_or_else(|| {
        Error::InvalidData(format!(
            "graph index {graph_index} out of range (dataset has {})",
            dataset.len()
        ))
    })
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_int(path: &Path, line: usize, tok: &str) -> Result<i64> {
    tok.trim()
        .parse::<i64>()
        .map_err(|_| Error::parse(path, line, format!("non-integer token {tok:?}")))
}

fn read_int_column(path: &Path) -> Result<Vec<i64>> {
    read_lines(path)?
        .into_iter()
        .map(|(ln, l)| parse_int(path, ln, &l))
        .collect()
}

/// Loads `<dir>/<name>_*.txt` in the TU benchmark format.
pub fn load_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
    let a_path = file("A");
    let ind_path = file("graph_indicator");
    let gl_path = file("graph_labels");
    let nl_path = file("node_labels");
    for p in [&a_path, &ind_path, &gl_path] {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }

    let raw_classes = read_int_column(&gl_path)?;
    let num_graphs = raw_classes.len();

    let indicator = read_int_column(&ind_path)?;
    let mut graph_of = Vec::with_capacity(indicator.len());
    let mut local_of = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; num_graphs];
    for (k, &g) in indicator.iter().enumerate() {
        if g < 1 || g as usize > num_graphs {
            return Err(Error::InvalidData(format!(
                "vertex {} assigned to graph {g}, which does not exist (have {num_graphs} graphs)",
                k + 1
            )));
        }
        let g = g as usize - 1;
        graph_of.push(g);
        local_of.push(sizes[g]);
        sizes[g] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidData(format!("graph {} has no vertices", empty + 1)));
    }

    let node_labels = if nl_path.is_file() {
        let labels = read_int_column(&nl_path)?;
        if labels.len() != indicator.len() {
            return Err(Error::InvalidData(format!(
                "{} node labels for {} vertices",
                labels.len(),
                indicator.len()
            )));
        }
        Some(labels)
    } else {
        None
    };

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (ln, l) in read_lines(&a_path)? {
        let mut toks = l.split(',');
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::parse(&a_path, ln, format!("expected `i, j`, got {l:?}")));
        };
        let (a, b) = (parse_int(&a_path, ln, a)?, parse_int(&a_path, ln, b)?);
        let vertex = |x: i64| -> Result<usize> {
            if x < 1 || x as usize > indicator.len() {
                Err(Error::parse(&a_path, ln, format!("edge references unknown vertex {x}")))
            } else {
                Ok(x as usize - 1)
            }
        };
        let (a, b) = (vertex(a)?, vertex(b)?);
        if a == b {
            return Err(Error::parse(&a_path, ln, format!("self-loop on vertex {}", a + 1)));
        }
        if graph_of[a] != graph_of[b] {
            return Err(Error::parse(
                &a_path,
                ln,
                format!("edge ({}, {}) crosses graphs", a + 1, b + 1),
            ));
        }
        edges[graph_of[a]].push((local_of[a], local_of[b]));
    }

    let mut per_graph_labels: Vec<Vec<i64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    if let Some(labels) = &node_labels {
        for (k, &lab) in labels.iter().enumerate() {
            per_graph_labels[graph_of[k]].push(lab);
        }
    }
    let graphs = edges
        .iter()
        .zip(per_graph_labels)
        .zip(&sizes)
        .map(|((e, labs), &n)| Graph::from_edges(n, e, node_labels.as_ref().map(|_| labs)))
        .collect::<Result<Vec<_>>>()?;

    Dataset::new(name, graphs, &raw_classes)
}

/// Writes `dataset` in TU format; each undirected edge is listed in both
/// directions, vertices are numbered graph by graph.
pub fn write_tu_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &dataset.name;
    let mut a = String::new();
    let mut ind = String::new();
    let mut nl = String::new();
    let mut offset = 0;
    for (p, g) in dataset.graphs.iter().enumerate() {
        for v in 0..g.n() {
            for u in g.neighbors(v) {
                a.push_str(&format!("{}, {}\n", offset + v + 1, offset + u + 1));
            }
            ind.push_str(&format!("{}\n", p + 1));
            if let Some(labels) = g.vertex_labels() {
                nl.push_str(&format!("{}\n", labels[v]));
            }
        }
        offset += g.n();
    }
    let gl: String = dataset
        .class_labels
        .iter()
        .map(|&c| format!("{}\n", dataset.class_values[c]))
        .collect();
    let mut files = vec![("A", a), ("graph_indicator", ind), ("graph_labels", gl)];
    if dataset.has_vertex_labels() {
        files.push(("node_labels", nl));
    }
    for (suffix, body) in files {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
    }

    #[test]
    fn splits_edges_by_indicator() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, "T", "A", "1, 2\n2, 3\n4, 5\n2, 1\n");
        write(d, "T", "graph_indicator", "1\n1\n1\n2\n2\n");
        write(d, "T", "graph_labels", "1\n-1\n");
        let ds = load_tu_dataset(d, "T").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs[0].n(), 3);
        assert_eq!(ds.graphs[1].n(), 2);
        assert_eq!(
            ds.graphs[0].adjacency(),
            array![[0., 1., 0.], [1., 0., 1.], [0., 1., 0.]]
        );
        assert_eq!(ds.graphs[1].adjacency(), array![[0., 1.], [1., 0.]]);
        // -1 < 1, so class indices follow raw order
        assert_eq!(ds.class_labels, vec![1, 0]);
        assert!(!ds.has_vertex_labels());
    }

    #[test]
    fn single_vertex_graph() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, "S", "A", "");
        write(d, "S", "graph_indicator", "1\n");
        write(d, "S", "graph_labels", "0\n");
        let ds = load_tu_dataset(d, "S").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].n(), 1);
        assert_eq!(ds.graphs[0].edge_count(), 0);
    }

    #[test]
    fn loader_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, "E", "graph_indicator", "1\n1\n");
        write(d, "E", "graph_labels", "0\n");
        assert!(matches!(load_tu_dataset(d, "E"), Err(Error::MissingFile(p)) if p.ends_with("E_A.txt")));

        write(d, "E", "A", "1, 3\n");
        assert!(matches!(load_tu_dataset(d, "E"), Err(Error::Parse { .. })));

        write(d, "E", "A", "1, x\n");
        assert!(matches!(load_tu_dataset(d, "E"), Err(Error::Parse { line: 1, .. })));

        write(d, "E", "A", "1, 1\n");
        assert!(load_tu_dataset(d, "E").is_err());

        write(d, "E", "A", "1, 2\n");
        write(d, "E", "graph_indicator", "1\n3\n");
        assert!(matches!(load_tu_dataset(d, "E"), Err(Error::InvalidData(_))));
    }

    #[test]
    fn one_hot_rows() {
        let g = Graph::from_edges(2, &[(0, 1)], Some(vec![20, 10])).unwrap();
        let h = Graph::from_edges(1, &[], Some(vec![30])).unwrap();
        let ds = Dataset::new("x", vec![g, h], &[0, 1]).unwrap();
        let x = one_hot_features(&ds, 0).unwrap();
        assert_eq!(x.0, array![[0., 1., 0.], [1., 0., 0.]]);

        let g = Graph::from_edges(3, &[(0, 1)], Some(vec![7, 7, 7])).unwrap();
        let ds = Dataset::new("y", vec![g], &[0]).unwrap();
        assert_eq!(one_hot_features(&ds, 0).unwrap().0, array![[1.], [1.], [1.]]);
    }

    #[test]
    fn degree_rows() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)], None).unwrap();
        let ds = Dataset::new("p", vec![path], &[0]).unwrap();
        assert_eq!(ds.degree_alphabet(), vec![1, 2]);
        assert_eq!(
            degree_features(&ds, 0).unwrap().0,
            array![[1., 0.], [0., 1.], [1., 0.]]
        );

        let empty = Graph::from_edges(2, &[], None).unwrap();
        let ds = Dataset::new("e", vec![empty], &[0]).unwrap();
        assert_eq!(degree_features(&ds, 0).unwrap().0, array![[1.], [1.]]);

        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap();
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], None).unwrap();
        let ds = Dataset::new("t", vec![tri, star], &[0, 1]).unwrap();
        assert_eq!(ds.degree_alphabet(), vec![1, 2, 3]);
        let x = degree_features(&ds, 0).unwrap();
        for row in x.0.outer_iter() {
            assert_eq!(row.to_vec(), vec![0., 1., 0.]);
        }
        assert!(degree_features(&ds, 5).is_err());
    }

    #[test]
    fn validation_diagnostics() {
        let ok = Graph::from_dense(&array![[0., 1.], [1., 0.]], None);
        assert!(validate_graph(&ok).is_empty());

        let asym = Graph::from_dense(&array![[0., 1.], [0., 0.]], None);
        let d = validate_graph(&asym);
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Diagnostic::Asymmetric { i: 0, j: 1, .. }));

        let labels = Graph::from_dense(&array![[0., 1.], [1., 0.]], Some(vec![3]));
        assert_eq!(
            validate_graph(&labels),
            vec![Diagnostic::LabelLength { expected: 2, actual: 1 }]
        );

        let bad = Graph::from_dense(&array![[1., -1.], [-1., 0.]], None);
        let d = validate_graph(&bad);
        assert!(d.iter().any(|x| matches!(x, Diagnostic::NonzeroDiagonal { i: 0, .. })));
        assert_eq!(d.iter().filter(|x| matches!(x, Diagnostic::Negative { .. })).count(), 2);
    }

    #[test]
    fn permutation_moves_labels_and_edges() {
        let g = Graph::from_edges(3, &[(0, 1)], Some(vec![5, 6, 7])).unwrap();
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.vertex_labels().unwrap(), &[6, 7, 5]);
        assert_eq!(p.edges(), vec![(0, 2)]);
    }
}

//! Preprocessing: graphs to aligned grids and their mixing matrices.

use ndarray::Array2;
use rayon::prelude::*;

use crate::alignment::{AlignedGrid, Alignment, AlignmentConfig};
use crate::depth::{dataset_db_representations, DbMatrix};
use crate::error::{Error, Result};
use crate::graph::{Dataset, FeatureMatrix};
use crate::quantum_walk::{average_mixing_matrix, DEFAULT_GROUP_TOL};

/// Network input for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Aligned grid features, M×c.
    pub features: Array2<f64>,
    /// Average mixing matrix of the grid adjacency, M×M.
    pub mixing: Array2<f64>,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub alignment: Alignment,
    pub grids: Vec<AlignedGrid>,
    pub mixing: Vec<Array2<f64>>,
}

impl Prepared {
    pub fn samples(&self, labels: &[usize]) -> Vec<Sample> {
        self.grids
            .iter()
            .zip(&self.mixing)
            .zip(labels)
            .map(|((g, q), &label)| Sample {
                features: g.features.clone(),
                mixing: q.clone(),
                label,
            })
            .collect()
    }
}

/// Inputs shared by every alignment of one dataset.
#[derive(Debug, Clone)]
pub struct DatasetInputs {
    pub db: DbMatrix,
    pub features: Vec<FeatureMatrix>,
}

impl DatasetInputs {
    pub fn compute(dataset: &Dataset, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        Ok(DatasetInputs {
            db: dataset_db_representations(dataset, depth),
            features: dataset.vertex_features()?,
        })
    }
}

/// Fits prototypes on `fit_graphs` (all graphs when `None`) and aligns every
/// graph of the dataset.
pub fn prepare(
    dataset: &Dataset,
    inputs: &DatasetInputs,
    cfg: &AlignmentConfig,
    fit_graphs: Option<&[usize]>,
) -> Result<Prepared> {
    let alignment = Alignment::fit(&inputs.db, fit_graphs, cfg)?;
    apply_alignment(dataset, inputs, alignment)
}

/// Aligns every graph of the dataset to already fitted prototypes.
pub fn apply_alignment(dataset: &Dataset, inputs: &DatasetInputs, alignment: Alignment) -> Result<Prepared> {
    if inputs.db.depth() < alignment.depth() {
        return Err(Error::Mismatch(format!(
            "prototypes use depth {}, representations only {}",
            alignment.depth(),
            inputs.db.depth()
        )));
    }
    let pairs = (0..dataset.len())
        .into_par_iter()
        .map(|p| {
            let grid = alignment.grid(p, &dataset.graphs[p], inputs.db.graph_rows(p), &inputs.features[p])?;
            let q = average_mixing_matrix(&grid.adjacency, DEFAULT_GROUP_TOL)?;
            Ok((grid, q.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let (grids, mixing) = pairs.into_iter().unzip();
    Ok(Prepared {
        alignment,
        grids,
        mixing,
    })
}

/// Transductive preprocessing: prototypes from all graphs.
pub fn preprocess(dataset: &Dataset, cfg: &AlignmentConfig) -> Result<Prepared> {
    let inputs = DatasetInputs::compute(dataset, cfg.depth)?;
    prepare(dataset, &inputs, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn toy() -> Dataset {
        let graphs = vec![
            Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], Some(vec![0, 0, 1])).unwrap(),
            Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], Some(vec![1, 0, 0, 1])).unwrap(),
            Graph::from_edges(2, &[(0, 1)], Some(vec![0, 1])).unwrap(),
        ];
        Dataset::new("toy", graphs, &[1, -1, 1]).unwrap()
    }

    #[test]
    fn shapes_and_stochasticity() {
        let ds = toy();
        let cfg = AlignmentConfig {
            prototypes: 4,
            depth: 2,
            ..AlignmentConfig::default()
        };
        let prep = preprocess(&ds, &cfg).unwrap();
        assert_eq!(prep.grids.len(), 3);
        for (g, q) in prep.grids.iter().zip(&prep.mixing) {
            assert_eq!(g.features.dim(), (4, 2));
            assert_eq!(q.dim(), (4, 4));
            for s in q.sum_axis(ndarray::Axis(1)) {
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
        let samples = prep.samples(&ds.class_labels);
        assert_eq!(samples[1].label, 0);
        assert_eq!(samples[0].label, 1);
    }

    #[test]
    fn deterministic() {
        let ds = toy();
        let cfg = AlignmentConfig {
            prototypes: 3,
            depth: 3,
            ..AlignmentConfig::default()
        };
        let a = preprocess(&ds, &cfg).unwrap();
        let b = preprocess(&ds, &cfg).unwrap();
        assert_eq!(a.grids, b.grids);
        assert_eq!(a.mixing, b.mixing);
    }
}

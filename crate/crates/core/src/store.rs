//! On-disk artifacts: matrix caches and the run manifest.
//!
//! Matrices are stored as rows (u64 LE), cols (u64 LE), then rows·cols
//! row-major f64 LE values. A grid file holds the feature matrix followed by
//! the adjacency matrix; a Q file holds one matrix.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignedGrid;
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

fn encode(buf: &mut Vec<u8>, a: &Array2<f64>) {
    buf.extend_from_slice(&(a.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(a.ncols() as u64).to_le_bytes());
    for v in a.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn decode(path: &Path, data: &[u8], pos: &mut usize) -> Result<Array2<f64>> {
    let mut word = || -> Result<[u8; 8]> {
        let bytes = data
            .get(*pos..*pos + 8)
            .ok_or_else(|| Error::InvalidData(format!("{}: truncated matrix file", path.display())))?;
        *pos += 8;
        Ok(bytes.try_into().unwrap())
    };
    let rows = u64::from_le_bytes(word()?) as usize;
    let cols = u64::from_le_bytes(word()?) as usize;
    let len = rows
        .checked_mul(cols)
        .filter(|&l| l <= data.len() / 8)
        .ok_or_else(|| Error::InvalidData(format!("{}: implausible shape {rows}x{cols}", path.display())))?;
    let values = (0..len)
        .map(|_| word().map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    Ok(Array2::from_shape_vec((rows, cols), values).unwrap())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

fn write_bytes(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

pub fn write_matrix(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * a.len());
    encode(&mut buf, a);
    write_bytes(path.as_ref(), &buf)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let data = read_bytes(path)?;
    let mut pos = 0;
    let m = decode(path, &data, &mut pos)?;
    if pos != data.len() {
        return Err(Error::InvalidData(format!("{}: trailing bytes", path.display())));
    }
    Ok(m)
}

pub fn write_grid(path: impl AsRef<Path>, grid: &AlignedGrid) -> Result<()> {
    let mut buf = Vec::new();
    encode(&mut buf, &grid.features);
    encode(&mut buf, &grid.adjacency);
    write_bytes(path.as_ref(), &buf)
}

pub fn read_grid(path: impl AsRef<Path>, graph_index: usize) -> Result<AlignedGrid> {
    let path = path.as_ref();
    let data = read_bytes(path)?;
    let mut pos = 0;
    let features = decode(path, &data, &mut pos)?;
    let adjacency = decode(path, &data, &mut pos)?;
    if pos != data.len() {
        return Err(Error::InvalidData(format!("{}: trailing bytes", path.display())));
    }
    if adjacency.nrows() != features.nrows() || !adjacency.is_square() {
        return Err(Error::Shape(format!(
            "{}: grid features {:?} and adjacency {:?} disagree",
            path.display(),
            features.shape(),
            adjacency.shape()
        )));
    }
    Ok(AlignedGrid {
        features,
        adjacency,
        graph_index,
    })
}

/// Fixed artifact names under `<out>/<name>/`.
#[derive(Debug, Clone)]
pub struct ArtifactLayout {
    pub root: PathBuf,
}

impl ArtifactLayout {
    pub fn new(out: impl AsRef<Path>, name: &str) -> Self {
        ArtifactLayout {
            root: out.as_ref().join(name),
        }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn prototypes(&self) -> PathBuf {
        self.root.join("prototypes.txt")
    }

    pub fn fold_prototypes(&self, fold: usize) -> PathBuf {
        self.root.join("prototypes").join(format!("fold_{fold:02}.txt"))
    }

    pub fn labels(&self) -> PathBuf {
        self.root.join("labels.txt")
    }

    pub fn grid(&self, p: usize) -> PathBuf {
        self.root.join("grids").join(format!("{p:05}.bin"))
    }

    pub fn mixing(&self, p: usize) -> PathBuf {
        self.root.join("q").join(format!("{p:05}.bin"))
    }

    pub fn checkpoint(&self, fold: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("fold_{fold:02}.ckpt"))
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessRecord {
    pub prototypes: usize,
    pub depth: usize,
    pub seed: u64,
    pub graphs: usize,
    pub feature_dim: usize,
    pub classes: usize,
    /// Raw class value of each class index.
    pub class_values: Vec<i64>,
    pub prototypes_file: PathBuf,
    pub grid_dir: PathBuf,
    pub mixing_dir: PathBuf,
    pub labels_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub config: TrainConfig,
    pub metrics_file: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub mean_accuracy: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_name: String,
    pub dataset_path: PathBuf,
    pub tool_version: String,
    pub created_unix: u64,
    pub updated_unix: u64,
    pub preprocess: PreprocessRecord,
    pub train: Option<TrainRecord>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = read_bytes(path)?;
        serde_json::from_slice(&data).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidData(e.to_string()))?;
        write_bytes(path.as_ref(), text.as_bytes())
    }
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    write_bytes(path.as_ref(), text.as_bytes())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let data = read_bytes(path)?;
    let text = String::from_utf8(data).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad class index {l:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/m.bin");
        let a = array![[1.0, -2.5, 3.0], [0.1, f64::MIN_POSITIVE, 1e300]];
        write_matrix(&p, &a).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), a);
        assert_eq!(fs::read(&p).unwrap().len(), 16 + 6 * 8);
    }

    #[test]
    fn grid_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.bin");
        let g = AlignedGrid {
            features: array![[1.0, 0.0], [0.5, 2.0]],
            adjacency: array![[0.0, 1.0], [1.0, 0.0]],
            graph_index: 4,
        };
        write_grid(&p, &g).unwrap();
        assert_eq!(read_grid(&p, 4).unwrap(), g);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
        assert!(read_grid(&p, 4).is_err());
        assert!(matches!(read_matrix(dir.path().join("nope")), Err(Error::MissingFile(_))));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.txt");
        write_labels(&p, &[0, 1, 1, 2]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![0, 1, 1, 2]);
    }
}

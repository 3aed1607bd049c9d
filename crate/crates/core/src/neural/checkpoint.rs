//! Binary model checkpoints.
//!
//! Layout: magic `QSGCNNCK`, format version (u32 LE), header length (u32 LE),
//! a JSON header with the model config, then every parameter tensor as
//! rank (u32), dims (u64 each) and values (f64), all little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, NetworkParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"QSGCNNCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub epoch: usize,
    pub fold: Option<usize>,
}

pub fn save_checkpoint(model: &Model, epoch: usize, fold: Option<usize>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = serde_json::to_vec(&CheckpointHeader {
        config: model.config.clone(),
        epoch,
        fold,
    })
    .map_err(|e| Error::InvalidData(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    for (shape, values) in model.params.tensors() {
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::InvalidData("truncated checkpoint".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, CheckpointHeader)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut data = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::InvalidData(format!("{} is not a checkpoint", path.display())));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::InvalidData(format!("unsupported checkpoint version {version}")));
    }
    let hlen = cur.u32()? as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(cur.take(hlen)?).map_err(|e| Error::InvalidData(format!("checkpoint header: {e}")))?;

    let mut params = NetworkParams::init(&header.config, 0)?;
    let expected: Vec<Vec<usize>> = params.tensors().into_iter().map(|(s, _)| s).collect();
    for (shape, slot) in expected.iter().zip(params.tensors_mut()) {
        let rank = cur.u32()? as usize;
        let dims = (0..rank).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(Error::Shape(format!("checkpoint tensor {dims:?}, model expects {shape:?}")));
        }
        for v in slot.iter_mut() {
            *v = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        }
    }
    if cur.pos != data.len() {
        return Err(Error::InvalidData("trailing bytes in checkpoint".into()));
    }
    Ok((Model::from_params(header.config.clone(), params)?, header))
}

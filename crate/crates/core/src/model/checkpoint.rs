//! Binary checkpoints.
//!
//! Layout: the 8-byte magic `BETAECK1`, a little-endian `u32` header
//! length, a JSON header, then every parameter tensor as little-endian
//! `f64` in [`BetaModel::tensors`] order, then (optionally) the optimizer's
//! first and second moments in the same order.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BetaModel, ModelConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BETAECK1";

/// Adam moments, one vector per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: BetaModel,
    pub optimizer: Option<OptimizerState>,
    /// Free-form training metadata (step, seed, learning rate, ...).
    pub meta: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    num_entities: usize,
    num_relations: usize,
    tensor_lengths: Vec<usize>,
    optimizer_step: Option<u64>,
    meta: serde_json::Value,
}

impl Checkpoint {
    /// Fails unless the checkpoint was trained for these graph dimensions
    /// (and, if given, this embedding size).
    pub fn ensure_compatible(&self, num_entities: usize, num_relations: usize, dim: Option<usize>) -> Result<()> {
        let m = &self.model;
        if m.num_entities != num_entities {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} entities, graph has {num_entities}",
                m.num_entities
            )));
        }
        if m.num_relations != num_relations {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} relations, graph has {num_relations}",
                m.num_relations
            )));
        }
        if let Some(n) = dim {
            if m.dim() != n {
                return Err(Error::Checkpoint(format!("checkpoint has dimension {}, expected {n}", m.dim())));
            }
        }
        Ok(())
    }
}

fn write_tensor(w: &mut impl Write, t: &[f64]) -> std::io::Result<()> {
    for x in t {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let model = &ckpt.model;
    let header = Header {
        config: model.config.clone(),
        num_entities: model.num_entities,
        num_relations: model.num_relations,
        tensor_lengths: model.tensors().iter().map(|t| t.len()).collect(),
        optimizer_step: ckpt.optimizer.as_ref().map(|o| o.step),
        meta: ckpt.meta.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    // write to a sibling file and rename so a crash never leaves a torn checkpoint
    let tmp = path.with_extension("tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        for t in model.tensors() {
            write_tensor(&mut w, t)?;
        }
        if let Some(opt) = &ckpt.optimizer {
            for t in opt.m.iter().chain(&opt.v) {
                write_tensor(&mut w, t)?;
            }
        }
        w.flush()
    };
    write().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_tensor(r: &mut impl Read, len: usize, path: &Path) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf).map_err(|_| Error::Checkpoint(format!("{}: truncated tensor data", path.display())))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("file too short"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|_| bad("file too short"))?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| bad(&format!("invalid header: {e}")))?;
    let mut model = BetaModel::new(header.config, header.num_entities, header.num_relations, 0)?;
    let expected: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    if expected != header.tensor_lengths {
        return Err(bad("tensor shapes do not match the recorded configuration"));
    }
    for t in model.tensors_mut() {
        let len = t.len();
        *t = read_tensor(&mut r, len, path)?;
    }
    let optimizer = match header.optimizer_step {
        None => None,
        Some(step) => {
            let m = expected.iter().map(|&l| read_tensor(&mut r, l, path)).collect::<Result<Vec<_>>>()?;
            let v = expected.iter().map(|&l| read_tensor(&mut r, l, path)).collect::<Result<Vec<_>>>()?;
            Some(OptimizerState { step, m, v })
        }
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(bad("trailing bytes after tensor data"));
    }
    Ok(Checkpoint { model, optimizer, meta: header.meta })
}

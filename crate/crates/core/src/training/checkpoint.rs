//! Binary checkpoint format.
//!
//! Layout (little-endian):
//!
//! ```text
//! "SBND"  magic, 4 bytes
//! u32     version (1)
//! u32×5   n, k, M, T, D
//! f32…    per cell: input weights, recurrent weights, bias
//!         (each gate-ordered update/reset/candidate), then dense weights
//!         (k×hidden) and dense bias (k)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorParams};

const MAGIC: &[u8; 4] = b"SBND";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 6;

pub fn checkpoint_bytes(params: &EstimatorParams<f32>) -> Vec<u8> {
    let c = params.config();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * params.num_params());
    out.extend_from_slice(MAGIC);
    for v in [VERSION as usize, c.n, c.k, c.scale, c.time_steps, c.depth] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for block in params.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<EstimatorParams<f32>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    if word(0) != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {}", word(0))));
    }
    let cfg = EstimatorConfig::new(word(1), word(2), word(3), word(4), word(5))
        .map_err(|e| Error::Checkpoint(format!("invalid header: {e}")))?;
    let expected = HEADER_LEN + 4 * cfg.num_params();
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes for {cfg:?}, found {}",
            bytes.len()
        )));
    }
    let mut params = EstimatorParams::<f32>::zeros(cfg);
    let mut chunks = bytes[HEADER_LEN..].chunks_exact(4);
    for block in params.blocks_mut() {
        for (v, c) in block.iter_mut().zip(chunks.by_ref()) {
            *v = f32::from_le_bytes(c.try_into().unwrap());
        }
    }
    Ok(params)
}

pub fn save_checkpoint(params: &EstimatorParams<f32>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, checkpoint_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EstimatorParams<f32>> {
    parse_checkpoint(&std::fs::read(path)?)
}

//! Adapter-only checkpoints: a short text header followed by the adapter
//! values as little-endian `f64`.

use std::io;
use std::path::{Path, PathBuf};

use super::model::{AdapterLayout, ModelError, ToyModel};
use crate::util::write_atomic;

const MAGIC: &str = "hdlbugs-adapter-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterCheckpoint {
    pub iteration: usize,
    pub validation_loss: f64,
    pub weight_decay: f64,
    pub cfg_digest: String,
    pub layout: AdapterLayout,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl AdapterCheckpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!(
            "{MAGIC}\niteration={}\nvalidation_loss={:?}\nweight_decay={:?}\ncfg_digest={}\nlayout={}\n",
            self.iteration, self.validation_loss, self.weight_decay, self.cfg_digest, self.layout
        )
        .into_bytes();
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut rest = bytes;
        let mut next_line = || -> Result<&str, String> {
            let end = rest.iter().position(|&b| b == b'\n').ok_or("truncated header")?;
            let line = std::str::from_utf8(&rest[..end]).map_err(|_| "header is not UTF-8")?;
            rest = &rest[end + 1..];
            Ok(line)
        };
        if next_line()? != MAGIC {
            return Err("not an adapter checkpoint".into());
        }
        let mut field = |key: &str| -> Result<String, String> {
            let line = next_line()?;
            line.strip_prefix(key)
                .and_then(|l| l.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| format!("expected {key}=, found {line:?}"))
        };
        let iteration = field("iteration")?.parse().map_err(|_| "bad iteration")?;
        let validation_loss = field("validation_loss")?.parse().map_err(|_| "bad validation_loss")?;
        let weight_decay = field("weight_decay")?.parse().map_err(|_| "bad weight_decay")?;
        let cfg_digest = field("cfg_digest")?;
        let layout: AdapterLayout = field("layout")?.parse()?;
        if rest.len() != 8 * layout.len() {
            return Err(format!("payload has {} bytes, layout needs {}", rest.len(), 8 * layout.len()));
        }
        let values = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        Ok(Self { iteration, validation_loss, weight_decay, cfg_digest, layout, values })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        write_atomic(path, &self.to_bytes()).map_err(|source| CheckpointError::Io { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.into(), source })?;
        Self::from_bytes(&bytes).map_err(|msg| CheckpointError::Format { path: path.into(), msg })
    }

    /// Conventional file name inside a checkpoint directory.
    pub fn file_name(iteration: usize) -> String {
        format!("adapter-iter{iteration:06}.ckpt")
    }
}

/// Overwrites the adapter values of `model`; frozen weights are not touched.
pub fn restore_checkpoint(mut model: ToyModel, ckpt: &AdapterCheckpoint) -> Result<ToyModel, ModelError> {
    let layout = model.adapter_layout().ok_or(ModelError::NoAdapters)?;
    if layout != ckpt.layout {
        return Err(ModelError::LayoutMismatch { expected: layout.to_string(), found: ckpt.layout.to_string() });
    }
    model.set_adapter_values(&ckpt.values)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckpt() -> AdapterCheckpoint {
        AdapterCheckpoint {
            iteration: 50,
            validation_loss: 0.1 + 0.2,
            weight_decay: 0.01,
            cfg_digest: "abc".into(),
            layout: AdapterLayout { layer_widths: vec![2, 1], prompt_len: 1, prompt_dim: 2 },
            values: vec![1.0, -0.5, f64::MIN_POSITIVE, 3.25, 0.0, 1e-300, 7.0, -7.0],
        }
    }

    #[test]
    fn bytes_round_trip() {
        let c = ckpt();
        assert_eq!(AdapterCheckpoint::from_bytes(&c.to_bytes()).unwrap(), c);
        let mut short = c.to_bytes();
        short.pop();
        assert!(AdapterCheckpoint::from_bytes(&short).is_err());
        assert!(AdapterCheckpoint::from_bytes(b"something else\n").is_err());
    }
}

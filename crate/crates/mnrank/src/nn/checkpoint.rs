//! Checkpoint files: one JSON header line (graph metadata, tensor
//! shapes, payload checksum) followed by the raw little-endian f32
//! parameter payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tensor::Tensor;
use super::{NnError, ParamVisitor};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    shapes: Vec<Vec<usize>>,
    payload_sha256: String,
    meta: serde_json::Value,
}

/// An on-disk snapshot of a model's parameters plus caller metadata
/// (topology, seed, training config — whatever `meta` carries).
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    /// Snapshots the model's current parameters.
    pub fn from_model(model: &mut dyn ParamVisitor, meta: serde_json::Value) -> Self {
        let mut tensors = Vec::new();
        model.visit_params(&mut |p, _| tensors.push(p.clone()));
        Self { meta, tensors }
    }

    /// Copies the stored parameters back into a model with the same
    /// parameter layout.
    pub fn load_into(&self, model: &mut dyn ParamVisitor) -> Result<(), NnError> {
        let mut idx = 0;
        let mut err = None;
        model.visit_params(&mut |p, _| {
            if err.is_some() {
                return;
            }
            match self.tensors.get(idx) {
                Some(t) if t.shape == p.shape => p.data.copy_from_slice(&t.data),
                Some(t) => {
                    err = Some(format!(
                        "tensor {idx}: stored shape {:?}, model expects {:?}",
                        t.shape, p.shape
                    ))
                }
                None => err = Some(format!("checkpoint has only {} tensors", self.tensors.len())),
            }
            idx += 1;
        });
        if err.is_none() && idx != self.tensors.len() {
            err = Some(format!(
                "checkpoint has {} tensors, model has {idx}",
                self.tensors.len()
            ));
        }
        match err {
            Some(e) => Err(NnError::Checkpoint(e)),
            None => Ok(()),
        }
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), NnError> {
    let mut payload = Vec::new();
    for t in &checkpoint.tensors {
        for &v in &t.data {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        shapes: checkpoint.tensors.iter().map(|t| t.shape.clone()).collect(),
        payload_sha256: hex(&Sha256::digest(&payload)),
        meta: checkpoint.meta.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)
        .map_err(|e| NnError::Checkpoint(format!("header serialization: {e}")))?;
    w.write_all(b"\n")?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(NnError::Checkpoint("missing header terminator".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| NnError::Checkpoint(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expected: usize = header
        .shapes
        .iter()
        .map(|s| s.iter().product::<usize>() * 4)
        .sum();
    if payload.len() != expected {
        return Err(NnError::Checkpoint(format!(
            "payload is {} bytes, header describes {expected}",
            payload.len()
        )));
    }
    if hex(&Sha256::digest(&payload)) != header.payload_sha256 {
        return Err(NnError::Checkpoint("payload checksum mismatch".into()));
    }

    let mut tensors = Vec::new();
    let mut offset = 0;
    for shape in header.shapes {
        let n: usize = shape.iter().product();
        let data = payload[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        offset += 4 * n;
        tensors.push(Tensor::from_vec(shape, data));
    }
    Ok(Checkpoint {
        meta: header.meta,
        tensors,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::DenseLayer;
    use crate::rng::SplitMix64;
    use serde_json::json;

    #[test]
    fn round_trip_preserves_params_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = SplitMix64::new(17);
        let mut layer = DenseLayer::new(3, 2, &mut rng);
        let meta = json!({"graph": "dense", "seed": 17});
        save_checkpoint(&path, &Checkpoint::from_model(&mut layer, meta)).unwrap();

        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.meta["seed"], 17);
        let mut restored = DenseLayer::new(3, 2, &mut SplitMix64::new(0));
        loaded.load_into(&mut restored).unwrap();
        for (a, b) in layer.weight.data.iter().zip(&restored.weight.data) {
            assert!((a - b).abs() <= (*a as f32).abs() as f64 * 1e-7 + 1e-12);
        }
    }

    #[test]
    fn corrupted_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = SplitMix64::new(1);
        let mut layer = DenseLayer::new(2, 2, &mut rng);
        save_checkpoint(&path, &Checkpoint::from_model(&mut layer, serde_json::Value::Null))
            .unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(matches!(err, NnError::Checkpoint(_)), "{err}");
    }

    #[test]
    fn topology_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = SplitMix64::new(1);
        let mut layer = DenseLayer::new(2, 2, &mut rng);
        save_checkpoint(&path, &Checkpoint::from_model(&mut layer, serde_json::Value::Null))
            .unwrap();

        let loaded = load_checkpoint(&path).unwrap();
        let mut other = DenseLayer::new(3, 2, &mut SplitMix64::new(0));
        assert!(loaded.load_into(&mut other).is_err());
    }
}

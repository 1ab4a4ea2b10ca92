//! Binary checkpoint format for trained networks.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"AQFN"
//! u32    format version (currently 1)
//! u32    definition length, then that many bytes of network-definition JSON
//! u32    metadata length, then that many bytes of training-metadata JSON
//! f32…   parameter values, node order, weight before bias
//! ```
//!
//! Parameters are stored as `f32` regardless of the working scalar, so an
//! `f32` network round-trips bit-exactly and an `f64` network loses only
//! the precision it never persisted.

use super::graph::{Network, NetworkDef};
use super::NnError;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"AQFN";
const VERSION: u32 = 1;

/// Provenance of a trained model: what it is, what it serves, how it was
/// trained. Stored verbatim in the checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    /// `"classifier"` or `"enhancer"`.
    pub kind: String,
    /// Enhancer identifier, when the model is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhancer: Option<String>,
    /// Degradation class codes this model serves.
    #[serde(default)]
    pub serves: Vec<u8>,
    /// Square input side the model was built for.
    pub input_side: usize,
    /// Training epochs completed.
    pub epochs: usize,
    /// Master seed of the training run.
    pub seed: u64,
    /// Final epoch losses, oldest first (at most five).
    #[serde(default)]
    pub loss_tail: Vec<f64>,
}

/// Writes a checkpoint for `net` with its metadata.
pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    net: &Network<T>,
    meta: &TrainMeta,
) -> Result<(), NnError> {
    let def_json = serde_json::to_vec(net.def())?;
    let meta_json = serde_json::to_vec(meta)?;
    let mut buf = Vec::with_capacity(
        4 + 4 + 8 + def_json.len() + meta_json.len() + net.param_count() * 4,
    );
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(def_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&def_json);
    buf.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta_json);
    for slice in net.param_views() {
        for &v in slice {
            buf.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&buf).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a checkpoint back into a runnable network and its metadata.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Network<T>, TrainMeta), NnError> {
    let mut file = fs::File::open(path).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |msg: &str| NnError::BadCheckpoint(format!("{}: {msg}", path.display()));

    if buf.len() < 8 || &buf[0..4] != MAGIC {
        return Err(bad("missing magic"));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut pos = 8usize;
    let mut take_block = |buf: &[u8]| -> Result<(usize, usize), NnError> {
        if pos + 4 > buf.len() {
            return Err(bad("truncated length header"));
        }
        let len = u32::from_le_bytes(buf[pos..pos + 4].try_into().expect("4 bytes")) as usize;
        pos += 4;
        if pos + len > buf.len() {
            return Err(bad("truncated block"));
        }
        let span = (pos, pos + len);
        pos += len;
        Ok(span)
    };
    let (d0, d1) = take_block(&buf)?;
    let (m0, m1) = take_block(&buf)?;
    let def: NetworkDef = serde_json::from_slice(&buf[d0..d1])?;
    let meta: TrainMeta = serde_json::from_slice(&buf[m0..m1])?;

    let mut net = Network::<T>::compile(def)?;
    let want = net.param_count() * 4;
    let blob = &buf[pos..];
    if blob.len() != want {
        return Err(bad(&format!(
            "parameter blob holds {} bytes, network wants {want}",
            blob.len()
        )));
    }
    let mut offset = 0usize;
    for slice in net.param_views_mut() {
        for v in slice.iter_mut() {
            let raw = f32::from_le_bytes(blob[offset..offset + 4].try_into().expect("4 bytes"));
            *v = T::of_f32(raw);
            offset += 4;
        }
    }
    Ok((net, meta))
}

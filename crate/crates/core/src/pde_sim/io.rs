//! Snapshots: `A` then `H` as little-endian f64, row-major, in `<stem>.bin`,
//! with a JSON sidecar `<stem>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Field2D, SimState};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "spikelab/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub format: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: f64,
    pub time: f64,
    pub fields: Vec<String>,
    pub dtype: String,
}

fn sidecar(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<path>` (binary) and its `.json` sidecar.
pub fn write_snapshot(path: &Path, state: &SimState) -> Result<SnapshotMeta> {
    let a = &state.a;
    let meta = SnapshotMeta {
        format: FORMAT_TAG.into(),
        nx: a.nx,
        ny: a.ny,
        h: a.h,
        origin: a.origin,
        time: state.t,
        fields: vec!["A".into(), "H".into()],
        dtype: "f64le".into(),
    };
    let mut bytes = Vec::with_capacity(16 * a.values.len());
    for v in a.values.iter().chain(&state.h.values) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    fs::write(sidecar(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotMeta, SimState)> {
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(sidecar(path))?)?;
    if meta.format != FORMAT_TAG {
        return Err(Error::Config(format!("unsupported snapshot format {:?}", meta.format)));
    }
    let bytes = fs::read(path)?;
    let n = meta.nx * meta.ny;
    if bytes.len() != 16 * n {
        return Err(Error::Config(format!(
            "snapshot has {} bytes, expected {}",
            bytes.len(),
            16 * n
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = |v: &[f64]| Field2D {
        nx: meta.nx,
        ny: meta.ny,
        h: meta.h,
        origin: meta.origin,
        values: v.to_vec(),
    };
    let state = SimState {
        t: meta.time,
        a: field(&vals[..n]),
        h: field(&vals[n..]),
    };
    Ok((meta, state))
}

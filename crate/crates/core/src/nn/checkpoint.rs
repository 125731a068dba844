//! Checkpoint container: `manifest.json` plus a little-endian f32 blob `params.bin`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::{ParamStore, Tensor};
use super::NnError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "params.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: Vec<ManifestEntry>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Writes every parameter of `store` into `dir`, with free-form `meta`.
pub fn save(dir: &Path, store: &ParamStore, meta: serde_json::Value) -> Result<(), NnError> {
    fs::create_dir_all(dir)?;
    let mut blob = Vec::with_capacity(store.num_values() * 4);
    let mut params = Vec::with_capacity(store.len());
    for (name, t) in store.iter() {
        params.push(ManifestEntry {
            name: name.to_string(),
            shape: t.shape.clone(),
            dtype: "f32".into(),
            offset: blob.len(),
        });
        for v in &t.data {
            blob.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    let manifest = Manifest { params, meta };
    fs::write(dir.join(BLOB_FILE), blob)?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, NnError> {
    let text = fs::read(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_slice(&text)?)
}

/// All tensors stored in `dir`, in manifest order.
pub fn load_tensors(dir: &Path) -> Result<(Manifest, Vec<(String, Tensor)>), NnError> {
    let manifest = read_manifest(dir)?;
    let blob = fs::read(dir.join(BLOB_FILE))?;
    let mut out = Vec::with_capacity(manifest.params.len());
    for e in &manifest.params {
        if e.dtype != "f32" {
            return Err(NnError::Checkpoint(format!("{}: unsupported dtype {}", e.name, e.dtype)));
        }
        let n: usize = e.shape.iter().product();
        let end = e.offset + 4 * n;
        if end > blob.len() {
            return Err(NnError::Checkpoint(format!("{}: blob too short", e.name)));
        }
        let data = blob[e.offset..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        out.push((e.name.clone(), Tensor::new(e.shape.clone(), data)?));
    }
    Ok((manifest, out))
}

/// Overwrites the parameters of `store` from `dir`, validating names and shapes.
pub fn load_into(dir: &Path, store: &mut ParamStore) -> Result<serde_json::Value, NnError> {
    let (manifest, tensors) = load_tensors(dir)?;
    if tensors.len() != store.len() {
        return Err(NnError::Checkpoint(format!(
            "checkpoint has {} parameters, model has {}",
            tensors.len(),
            store.len()
        )));
    }
    for (name, t) in tensors {
        let id = store
            .id(&name)
            .ok_or_else(|| NnError::Checkpoint(format!("unknown parameter {name}")))?;
        let dst = store.get_mut(id);
        if dst.shape != t.shape {
            return Err(NnError::Checkpoint(format!(
                "{name}: shape {:?} does not match model {:?}",
                t.shape, dst.shape
            )));
        }
        dst.data = t.data;
    }
    Ok(manifest.meta)
}

//! Parameter checkpoint file: an 8-byte little-endian manifest length, a JSON
//! manifest listing `(name, shape, byte offset)`, then one raw little-endian
//! f64 blob. Round trips byte-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::param::{Layout, ParamVector, Segment};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    rows: usize,
    cols: usize,
    byte_offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    segments: Vec<ManifestEntry>,
}

const FORMAT: &str = "xembod-params-v1";

pub fn save_checkpoint(pv: &ParamVector, path: &Path) -> Result<()> {
    let mut entries = Vec::new();
    let mut offset = 0u64;
    for seg in pv.layout().segments() {
        entries.push(ManifestEntry {
            name: seg.name.clone(),
            rows: seg.rows,
            cols: seg.cols,
            byte_offset: offset,
        });
        offset += (seg.len() * 8) as u64;
    }
    let manifest = serde_json::to_vec(&Manifest { format: FORMAT.into(), segments: entries })?;
    let mut bytes = Vec::with_capacity(8 + manifest.len() + pv.values().len() * 8);
    bytes.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&manifest);
    for v in pv.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParamVector> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::CorruptDataset(format!("{}: truncated header", path.display())));
    }
    let mlen = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + mlen {
        return Err(Error::CorruptDataset(format!("{}: truncated manifest", path.display())));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[8..8 + mlen])?;
    if manifest.format != FORMAT {
        return Err(Error::CorruptDataset(format!(
            "{}: unknown format `{}`",
            path.display(),
            manifest.format
        )));
    }
    let segs: Vec<Segment> = manifest
        .segments
        .iter()
        .map(|e| Segment::new(e.name.clone(), e.rows, e.cols))
        .collect();
    let layout = Layout::new(segs)?;
    let blob = &bytes[8 + mlen..];
    if blob.len() != layout.total_len() * 8 {
        return Err(Error::CorruptDataset(format!(
            "{}: blob is {} bytes, expected {}",
            path.display(),
            blob.len(),
            layout.total_len() * 8
        )));
    }
    for (e, seg) in manifest.segments.iter().zip(layout.segments()) {
        let expect = (layout.offset(layout.segment_index(&seg.name).unwrap()) * 8) as u64;
        if e.byte_offset != expect {
            return Err(Error::CorruptDataset(format!(
                "{}: segment `{}` at offset {}, expected {}",
                path.display(),
                e.name,
                e.byte_offset,
                expect
            )));
        }
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ParamVector::from_values(layout, values)
}

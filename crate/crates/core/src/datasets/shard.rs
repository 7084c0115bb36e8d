use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "xembod-shard-v1";

/// CRC32 (IEEE 802.3 polynomial, reflected), table-driven.
pub fn crc32(bytes: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *slot = c;
        }
        t
    });
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

/// All transitions of one robot in columnar form. Row `i` of every column
/// belongs to transition `i`; `episode_starts` lists the first row of each
/// episode (strictly increasing, starting at 0).
#[derive(Debug, Clone, PartialEq)]
pub struct RobotShard {
    pub robot_id: String,
    pub n_joints: usize,
    pub n_feet: usize,
    /// `[c, v, v-c]` per row
    pub o_g: Array2<f64>,
    /// `[q, qdot, prev_action]` per joint, row-major `(n, J*3)`
    pub o_j: Array2<f64>,
    /// `[q, w*qdot]` per foot, `(n, F*2)`
    pub o_f: Array2<f64>,
    pub action: Array2<f64>,
    pub reward: Vec<f64>,
    pub done: Vec<bool>,
    pub next_o_g: Array2<f64>,
    pub next_o_j: Array2<f64>,
    pub next_o_f: Array2<f64>,
    /// static joint descriptors `(J, 4)`
    pub d_j: Array2<f64>,
    /// static foot descriptors `(F, 2)`
    pub d_f: Array2<f64>,
    pub episode_starts: Vec<usize>,
    /// per-episode tag: collected in the low-gain phase of the sweep
    pub early_phase: Vec<bool>,
}

/// One transition pulled out of a shard (row view, owned).
#[derive(Debug, Clone)]
pub struct Transition {
    pub robot_id: String,
    pub o_g: Vec<f64>,
    pub o_j: Vec<f64>,
    pub o_f: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub next_o_g: Vec<f64>,
    pub next_o_j: Vec<f64>,
    pub next_o_f: Vec<f64>,
}

impl RobotShard {
    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn transition(&self, i: usize) -> Transition {
        Transition {
            robot_id: self.robot_id.clone(),
            o_g: self.o_g.row(i).to_vec(),
            o_j: self.o_j.row(i).to_vec(),
            o_f: self.o_f.row(i).to_vec(),
            action: self.action.row(i).to_vec(),
            reward: self.reward[i],
            done: self.done[i],
            next_o_g: self.next_o_g.row(i).to_vec(),
            next_o_j: self.next_o_j.row(i).to_vec(),
            next_o_f: self.next_o_f.row(i).to_vec(),
        }
    }

    /// Episode row ranges `(start, end_exclusive)`.
    pub fn episodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.episode_starts.len());
        for (k, &s) in self.episode_starts.iter().enumerate() {
            let e = self.episode_starts.get(k + 1).copied().unwrap_or(self.len());
            out.push((s, e));
        }
        out
    }

    pub fn episode_return(&self, ep: usize) -> f64 {
        let (s, e) = self.episodes()[ep];
        self.reward[s..e].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantTag {
    Expert,
    Replay,
    Mixture,
}

/// Dataset-level manifest serialized as `manifest.json` next to the shards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub variant: VariantTag,
    /// +1 forward, -1 backward
    pub command: f64,
    pub mixture_fraction: f64,
    pub seed: u64,
    /// robot id -> transition count
    pub counts: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct ColumnEntry {
    name: String,
    rows: usize,
    cols: usize,
    byte_offset: u64,
    crc32: u32,
}

#[derive(Serialize, Deserialize)]
struct ShardHeader {
    format_version: String,
    robot_id: String,
    n_joints: usize,
    n_feet: usize,
    episode_starts: Vec<usize>,
    early_phase: Vec<bool>,
    columns: Vec<ColumnEntry>,
}

fn blob_of(m: &Array2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.len() * 8);
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn matrix_from(blob: &[u8], rows: usize, cols: usize) -> Array2<f64> {
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), values).expect("column shape")
}

fn shard_columns(shard: &RobotShard) -> Vec<(&'static str, Array2<f64>)> {
    let n = shard.len();
    let as_col = |v: &[f64]| Array2::from_shape_vec((n, 1), v.to_vec()).unwrap();
    vec![
        ("o_g", shard.o_g.clone()),
        ("o_j", shard.o_j.clone()),
        ("o_f", shard.o_f.clone()),
        ("action", shard.action.clone()),
        ("reward", as_col(&shard.reward)),
        ("done", as_col(&shard.done.iter().map(|d| *d as u8 as f64).collect::<Vec<_>>())),
        ("next_o_g", shard.next_o_g.clone()),
        ("next_o_j", shard.next_o_j.clone()),
        ("next_o_f", shard.next_o_f.clone()),
        ("d_j", shard.d_j.clone()),
        ("d_f", shard.d_f.clone()),
    ]
}

fn write_shard(shard: &RobotShard, path: &Path) -> Result<()> {
    let columns = shard_columns(shard);
    let mut entries = Vec::new();
    let mut blobs = Vec::new();
    let mut offset = 0u64;
    for (name, matrix) in &columns {
        let blob = blob_of(matrix);
        entries.push(ColumnEntry {
            name: name.to_string(),
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            byte_offset: offset,
            crc32: crc32(&blob),
        });
        offset += blob.len() as u64;
        blobs.push(blob);
    }
    let header = serde_json::to_vec(&ShardHeader {
        format_version: FORMAT_VERSION.into(),
        robot_id: shard.robot_id.clone(),
        n_joints: shard.n_joints,
        n_feet: shard.n_feet,
        episode_starts: shard.episode_starts.clone(),
        early_phase: shard.early_phase.clone(),
        columns: entries,
    })?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for blob in blobs {
        bytes.extend_from_slice(&blob);
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_shard(path: &Path) -> Result<RobotShard> {
    let bytes = fs::read(path)?;
    let corrupt = |what: &str| Error::CorruptDataset(format!("{}: {what}", path.display()));
    if bytes.len() < 8 {
        return Err(corrupt("truncated header length"));
    }
    let hlen = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + hlen {
        return Err(corrupt("truncated header"));
    }
    let header: ShardHeader = serde_json::from_slice(&bytes[8..8 + hlen])?;
    if header.format_version != FORMAT_VERSION {
        return Err(corrupt(&format!("unknown format `{}`", header.format_version)));
    }
    let body = &bytes[8 + hlen..];
    let mut cols: BTreeMap<String, Array2<f64>> = BTreeMap::new();
    for entry in &header.columns {
        let start = entry.byte_offset as usize;
        let len = entry.rows * entry.cols * 8;
        if start + len > body.len() {
            return Err(corrupt(&format!("column `{}` out of bounds", entry.name)));
        }
        let blob = &body[start..start + len];
        if crc32(blob) != entry.crc32 {
            return Err(corrupt(&format!("column `{}` checksum mismatch", entry.name)));
        }
        cols.insert(entry.name.clone(), matrix_from(blob, entry.rows, entry.cols));
    }
    let take = |name: &str| -> Result<Array2<f64>> {
        cols.get(name).cloned().ok_or_else(|| corrupt(&format!("missing column `{name}`")))
    };
    let reward = take("reward")?.iter().cloned().collect::<Vec<f64>>();
    let done = take("done")?.iter().map(|v| *v != 0.0).collect::<Vec<bool>>();
    Ok(RobotShard {
        robot_id: header.robot_id,
        n_joints: header.n_joints,
        n_feet: header.n_feet,
        o_g: take("o_g")?,
        o_j: take("o_j")?,
        o_f: take("o_f")?,
        action: take("action")?,
        reward,
        done,
        next_o_g: take("next_o_g")?,
        next_o_j: take("next_o_j")?,
        next_o_f: take("next_o_f")?,
        d_j: take("d_j")?,
        d_f: take("d_f")?,
        episode_starts: header.episode_starts,
        early_phase: header.early_phase,
    })
}

/// Writes `manifest.json` plus one `<robot_id>.shard` per robot into `dir`.
pub fn save_dataset(shards: &[RobotShard], manifest: &DatasetManifest, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for shard in shards {
        if manifest.counts.get(&shard.robot_id) != Some(&shard.len()) {
            return Err(Error::CorruptDataset(format!(
                "manifest count for `{}` does not match shard ({} rows)",
                shard.robot_id,
                shard.len()
            )));
        }
        write_shard(shard, &dir.join(format!("{}.shard", shard.robot_id)))?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(manifest)?)?;
    Ok(())
}

/// Loads and validates a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<(Vec<RobotShard>, DatasetManifest)> {
    let manifest: DatasetManifest =
        serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::CorruptDataset(format!(
            "{}: unknown format `{}`",
            dir.display(),
            manifest.format_version
        )));
    }
    let mut shards = Vec::new();
    for (id, &count) in &manifest.counts {
        let shard = read_shard(&dir.join(format!("{id}.shard")))?;
        if shard.robot_id != *id || shard.len() != count {
            return Err(Error::CorruptDataset(format!(
                "{}: shard `{id}` has {} rows, manifest says {count}",
                dir.display(),
                shard.len()
            )));
        }
        shards.push(shard);
    }
    Ok((shards, manifest))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    #[test]
    fn crc32_known_vectors() {
        assert_eq!(crc32(b""), 0);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b"The quick brown fox jumps over the lazy dog"), 0x414F_A339);
    }

    pub(crate) fn tiny_shard(id: &str, n: usize) -> RobotShard {
        let j = 2;
        let f = 1;
        let fill = |cols: usize, scale: f64| {
            Array2::from_shape_fn((n, cols), |(r, c)| scale * (r * cols + c) as f64)
        };
        RobotShard {
            robot_id: id.into(),
            n_joints: j,
            n_feet: f,
            o_g: fill(3, 0.1),
            o_j: fill(j * 3, 0.01),
            o_f: fill(f * 2, 0.02),
            action: fill(j, 0.3),
            reward: (0..n).map(|i| i as f64 * 0.5).collect(),
            done: (0..n).map(|i| i + 1 == n).collect(),
            next_o_g: fill(3, 0.11),
            next_o_j: fill(j * 3, 0.012),
            next_o_f: fill(f * 2, 0.022),
            d_j: Array2::from_shape_fn((j, 4), |(r, c)| 0.2 + 0.1 * (r * 4 + c) as f64),
            d_f: Array2::from_shape_fn((f, 2), |(r, c)| (r + c) as f64),
            episode_starts: vec![0],
            early_phase: vec![false],
        }
    }

    fn tiny_dataset() -> (Vec<RobotShard>, DatasetManifest) {
        let shards = vec![tiny_shard("alpha", 5), tiny_shard("beta", 7)];
        let counts = shards.iter().map(|s| (s.robot_id.clone(), s.len())).collect();
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION.into(),
            variant: VariantTag::Expert,
            command: 1.0,
            mixture_fraction: 0.0,
            seed: 0,
            counts,
        };
        (shards, manifest)
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (shards, manifest) = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        let d1 = dir.path().join("a");
        let d2 = dir.path().join("b");
        save_dataset(&shards, &manifest, &d1).unwrap();
        let (loaded, m2) = load_dataset(&d1).unwrap();
        assert_eq!(loaded, shards);
        assert_eq!(m2, manifest);
        save_dataset(&loaded, &m2, &d2).unwrap();
        for name in ["manifest.json", "alpha.shard", "beta.shard"] {
            assert_eq!(
                fs::read(d1.join(name)).unwrap(),
                fs::read(d2.join(name)).unwrap(),
                "{name} differs"
            );
        }
    }

    #[test]
    fn truncated_shard_rejected() {
        let (shards, manifest) = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&shards, &manifest, dir.path()).unwrap();
        let p = dir.path().join("alpha.shard");
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::CorruptDataset(_))));
    }

    #[test]
    fn corrupted_blob_fails_checksum() {
        let (shards, manifest) = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&shards, &manifest, dir.path()).unwrap();
        let p = dir.path().join("beta.shard");
        let mut bytes = fs::read(&p).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xFF;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::CorruptDataset(_))));
    }

    #[test]
    fn manifest_count_mismatch_rejected() {
        let (shards, mut manifest) = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&shards, &manifest, dir.path()).unwrap();
        *manifest.counts.get_mut("alpha").unwrap() += 1;
        fs::write(
            dir.path().join("manifest.json"),
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::CorruptDataset(_))));
    }
}

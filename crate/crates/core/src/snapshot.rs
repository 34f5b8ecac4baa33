//! OFLX1 snapshot files and their JSON sidecars.
//!
//! Layout (little-endian): `"OFLX1"`, version byte `0x01`, `nx, ny, nz_half`
//! as u32, `Lz` and `time` as f64, support tag u8 followed by two f64
//! parameters, then the three component arrays as f64 in storage order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::{Grid3, Region};

pub const MAGIC: &[u8; 5] = b"OFLX1";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 5 + 1 + 12 + 16 + 1 + 16;

/// Metadata mirrored into the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotMeta {
    pub format: String,
    pub version: u8,
    pub nx: usize,
    pub ny: usize,
    pub nz_half: usize,
    pub lz: f64,
    pub time: f64,
    pub support: Region,
    /// Generator parameters or other origin data, when known.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub source: serde_json::Value,
}

impl SnapshotMeta {
    pub fn of(f: &VectorField, source: serde_json::Value) -> Self {
        let g = f.grid();
        Self {
            format: "OFLX1".into(),
            version: VERSION,
            nx: g.nx,
            ny: g.ny,
            nz_half: g.nz_half,
            lz: g.lz,
            time: f.time(),
            support: f.support(),
            source,
        }
    }
}

pub fn encode(f: &VectorField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * g.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for n in [g.nx, g.ny, g.nz_half] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.lz.to_le_bytes());
    out.extend_from_slice(&f.time().to_le_bytes());
    let support = f.support();
    out.push(support.tag());
    let (p0, p1) = support.params();
    out.extend_from_slice(&p0.to_le_bytes());
    out.extend_from_slice(&p1.to_le_bytes());
    for c in f.comps().iter() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<VectorField> {
    let bad = |m: &str| Error::Format(m.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(bad("snapshot shorter than its header"));
    }
    if &bytes[..5] != MAGIC {
        return Err(bad("bad magic bytes, expected OFLX1"));
    }
    if bytes[5] != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {}", bytes[5])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny, nzh) = (u32_at(6), u32_at(10), u32_at(14));
    let lz = f64_at(18);
    let time = f64_at(26);
    let support = Region::from_tag(bytes[34], f64_at(35), f64_at(43))?;
    let grid = Grid3::new(nx, ny, nzh, lz).map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
    let n = grid.len();
    if bytes.len() != HEADER_LEN + 24 * n {
        return Err(Error::Format(format!(
            "snapshot payload has {} bytes, header implies {}",
            bytes.len() - HEADER_LEN,
            24 * n
        )));
    }
    let comps = std::array::from_fn(|c| {
        let base = HEADER_LEN + 8 * n * c;
        (0..n).map(|m| f64_at(base + 8 * m)).collect()
    });
    VectorField::new(grid, comps, support, time)
}

/// Sidecar path: the snapshot path with `.json` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the snapshot and its sidecar.
pub fn write_snapshot(path: &Path, f: &VectorField, source: serde_json::Value) -> Result<()> {
    fs::write(path, encode(f))?;
    let meta = SnapshotMeta::of(f, source);
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<VectorField> {
    decode(&fs::read(path)?)
}

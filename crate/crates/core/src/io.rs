//! Framed files and trajectory export.
//!
//! A framed file is one line of compact UTF-8 JSON (the manifest, which
//! always carries `payload_len` and `crc32`) terminated by `\n`, followed by
//! exactly `payload_len` raw bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::field::{Field, Trajectory};
use crate::{Error, Result};

/// Longest manifest line accepted before giving up on finding `\n`.
const MAX_MANIFEST_BYTES: usize = 1 << 24;

#[derive(Serialize, Deserialize)]
struct Frame<M> {
    #[serde(flatten)]
    meta: M,
    payload_len: u64,
    crc32: u32,
}

pub fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

pub fn encode_framed<M: Serialize>(meta: &M, payload: &[u8]) -> Result<Vec<u8>> {
    let frame = Frame {
        meta,
        payload_len: payload.len() as u64,
        crc32: crc32(payload),
    };
    let mut out = serde_json::to_vec(&frame).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    out.push(b'\n');
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn write_framed<M: Serialize>(path: &Path, meta: &M, payload: &[u8]) -> Result<()> {
    let bytes = encode_framed(meta, payload)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

/// Splits and validates a framed buffer. `expected_len` receives the parsed
/// manifest and returns the payload size it implies; a disagreement with the
/// stored `payload_len` is a malformed header.
pub fn decode_framed<M, F>(bytes: &[u8], expected_len: F) -> Result<(M, Vec<u8>)>
where
    M: DeserializeOwned,
    F: FnOnce(&M) -> Result<u64>,
{
    let search = &bytes[..bytes.len().min(MAX_MANIFEST_BYTES)];
    let newline = search
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("no manifest line terminator".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|e| Error::MalformedHeader(format!("manifest is not UTF-8: {e}")))?;
    let frame: Frame<M> =
        serde_json::from_str(header).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let implied = expected_len(&frame.meta)?;
    if implied != frame.payload_len {
        return Err(Error::MalformedHeader(format!(
            "payload_len {} disagrees with the {} bytes implied by the manifest",
            frame.payload_len, implied
        )));
    }
    let payload = &bytes[newline + 1..];
    let found = payload.len() as u64;
    if found < frame.payload_len {
        return Err(Error::TruncatedPayload {
            expected: frame.payload_len,
            found,
        });
    }
    if found > frame.payload_len {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after the payload",
            found - frame.payload_len
        )));
    }
    let actual = crc32(payload);
    if actual != frame.crc32 {
        return Err(Error::ChecksumMismatch {
            expected: frame.crc32,
            actual,
        });
    }
    Ok((frame.meta, payload.to_vec()))
}

pub fn read_framed<M, F>(path: &Path, expected_len: F) -> Result<(M, Vec<u8>)>
where
    M: DeserializeOwned,
    F: FnOnce(&M) -> Result<u64>,
{
    let bytes = fs::read(path)?;
    decode_framed(&bytes, expected_len)
}

/// Consumes fields from a payload in order.
pub(crate) struct PayloadReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::TruncatedPayload {
                expected: (self.pos + n) as u64,
                found: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn field(&mut self, rows: usize, cols: usize) -> Result<Field> {
        Field::from_le_bytes(rows, cols, self.take(rows * cols * 8)?)
    }
}

pub const TRAJECTORY_VERSION: &str = "TRJ1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectoryManifest {
    version: String,
    rows: usize,
    cols: usize,
    time_indices: Vec<usize>,
}

/// `time_index,i,j,value` rows in time, then row-major order.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time_index,i,j,value\n");
    for (t, state) in traj.iter() {
        for i in 0..state.rows() {
            for j in 0..state.cols() {
                out.push_str(&format!("{t},{i},{j},{}\n", state.get(i, j)));
            }
        }
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj))?;
    Ok(())
}

/// Framed file: manifest with shape and time indices, then every state in
/// the core field layout.
pub fn write_trajectory_bin(traj: &Trajectory, path: &Path) -> Result<()> {
    let (rows, cols) = traj
        .shape()
        .ok_or_else(|| Error::InvalidParameter("cannot export an empty trajectory".into()))?;
    let manifest = TrajectoryManifest {
        version: TRAJECTORY_VERSION.into(),
        rows,
        cols,
        time_indices: traj.times().to_vec(),
    };
    let mut payload = Vec::with_capacity(traj.len() * rows * cols * 8);
    for state in traj.states() {
        state.write_le_bytes(&mut payload);
    }
    write_framed(path, &manifest, &payload)
}

pub fn read_trajectory_bin(path: &Path) -> Result<Trajectory> {
    let (manifest, payload): (TrajectoryManifest, _) = read_framed(path, |m: &TrajectoryManifest| {
        if m.version != TRAJECTORY_VERSION {
            return Err(Error::MalformedHeader(format!("unknown version {:?}", m.version)));
        }
        Ok((m.time_indices.len() * m.rows * m.cols * 8) as u64)
    })?;
    let mut reader = PayloadReader::new(&payload);
    let mut entries = Vec::with_capacity(manifest.time_indices.len());
    for &t in &manifest.time_indices {
        entries.push((t, reader.field(manifest.rows, manifest.cols)?));
    }
    Trajectory::new(entries)
}

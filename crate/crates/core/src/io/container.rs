//! Binary embedding container.
//!
//! A container is a concatenation of little-endian records:
//!
//! | field        | type                        |
//! |--------------|-----------------------------|
//! | magic        | `b"CFEB"`                   |
//! | version      | u32 (= 1)                   |
//! | grid_h       | u32                         |
//! | grid_w       | u32                         |
//! | dim          | u32                         |
//! | id length    | u64                         |
//! | frame id     | UTF-8 bytes                 |
//! | timestamp_s  | f64                         |
//! | global       | `dim` x f32                 |
//! | patches      | `grid_h * grid_w * dim` f32 |
//!
//! Patches are row-major over the grid. Vectors are re-normalised when a
//! record becomes an [`EmbeddedFrame`].

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::FormatError;
use crate::model::{EmbeddedFrame, ModelError};

pub const CONTAINER_MAGIC: [u8; 4] = *b"CFEB";
pub const CONTAINER_VERSION: u32 = 1;

const FIXED_HEADER: usize = 4 + 4 + 4 + 4 + 4 + 8;

/// A record exactly as stored, with f32 payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub frame_id: String,
    pub timestamp_s: f64,
    pub grid_h: u32,
    pub grid_w: u32,
    pub dim: u32,
    pub global: Vec<f32>,
    pub patches: Vec<f32>,
}

struct Header {
    grid_h: u32,
    grid_w: u32,
    dim: u32,
    frame_id: String,
    timestamp_s: f64,
    /// Bytes from record start to the first payload float.
    payload_start: usize,
    /// Total record length in bytes.
    len: u64,
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn need(bytes: &[u8], upto: u64, base: u64) -> Result<(), FormatError> {
    if (bytes.len() as u64) < upto {
        return Err(FormatError::Truncated {
            offset: base + bytes.len() as u64,
            needed: upto - bytes.len() as u64,
            available: 0,
        });
    }
    Ok(())
}

/// Parse the header of the record starting at `bytes[0]`; `base` is its
/// position in the enclosing stream, used in error positions.
fn parse_header(bytes: &[u8], base: u64) -> Result<Header, FormatError> {
    need(bytes, 4, base)?;
    if bytes[..4] != CONTAINER_MAGIC {
        return Err(FormatError::BadMagic { offset: base });
    }
    need(bytes, FIXED_HEADER as u64, base)?;
    let version = u32_at(bytes, 4);
    if version != CONTAINER_VERSION {
        return Err(FormatError::UnsupportedVersion {
            version,
            offset: base + 4,
        });
    }
    let (grid_h, grid_w, dim) = (u32_at(bytes, 8), u32_at(bytes, 12), u32_at(bytes, 16));
    if grid_h == 0 || grid_w == 0 || dim < 2 {
        return Err(FormatError::DimMismatch {
            offset: base + 8,
            detail: format!("grid {grid_h}x{grid_w} with dim {dim}"),
        });
    }
    let id_len = u64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    let ts_at = (FIXED_HEADER as u64).checked_add(id_len).ok_or(FormatError::Truncated {
        offset: base + 20,
        needed: id_len,
        available: bytes.len() as u64,
    })?;
    need(bytes, ts_at + 8, base)?;
    let ts_at = ts_at as usize;
    let frame_id = std::str::from_utf8(&bytes[FIXED_HEADER..ts_at])
        .map_err(|e| FormatError::InvalidRecord {
            offset: base + FIXED_HEADER as u64,
            detail: format!("frame id is not UTF-8: {e}"),
        })?
        .to_string();
    let timestamp_s = f64::from_le_bytes(bytes[ts_at..ts_at + 8].try_into().expect("8 bytes"));
    if !timestamp_s.is_finite() {
        return Err(FormatError::NonFinite {
            offset: base + ts_at as u64,
        });
    }
    if timestamp_s < 0.0 {
        return Err(FormatError::InvalidRecord {
            offset: base + ts_at as u64,
            detail: format!("negative timestamp {timestamp_s}"),
        });
    }
    let floats = (grid_h as u64 * grid_w as u64 + 1) * dim as u64;
    let payload_start = ts_at + 8;
    let len = payload_start as u64 + floats * 4;
    Ok(Header {
        grid_h,
        grid_w,
        dim,
        frame_id,
        timestamp_s,
        payload_start,
        len,
    })
}

impl EmbeddingRecord {
    /// Store a frame's (already normalised) vectors as f32.
    pub fn from_frame(frame: &EmbeddedFrame) -> Self {
        let (h, w) = frame.grid();
        Self {
            frame_id: frame.frame_id().to_string(),
            timestamp_s: frame.timestamp_s(),
            grid_h: h as u32,
            grid_w: w as u32,
            dim: frame.dim() as u32,
            global: frame.global().iter().map(|&v| v as f32).collect(),
            patches: frame.patches().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER + self.frame_id.len() + 8 + 4 * (self.global.len() + self.patches.len())
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.reserve(self.encoded_len());
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&self.grid_h.to_le_bytes());
        out.extend_from_slice(&self.grid_w.to_le_bytes());
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&(self.frame_id.len() as u64).to_le_bytes());
        out.extend_from_slice(self.frame_id.as_bytes());
        out.extend_from_slice(&self.timestamp_s.to_le_bytes());
        for v in self.global.iter().chain(&self.patches) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    /// Decode one record from the start of `bytes`. Returns the record and
    /// the number of bytes it occupied.
    pub fn decode(bytes: &[u8], base: u64) -> Result<(Self, usize), FormatError> {
        let h = parse_header(bytes, base)?;
        if (bytes.len() as u64) < h.len {
            return Err(FormatError::Truncated {
                offset: base + bytes.len() as u64,
                needed: h.len - bytes.len() as u64,
                available: 0,
            });
        }
        let len = h.len as usize;
        let mut floats = Vec::with_capacity((len - h.payload_start) / 4);
        for (i, chunk) in bytes[h.payload_start..len].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            if !v.is_finite() {
                return Err(FormatError::NonFinite {
                    offset: base + (h.payload_start + 4 * i) as u64,
                });
            }
            floats.push(v);
        }
        let patches = floats.split_off(h.dim as usize);
        Ok((
            Self {
                frame_id: h.frame_id,
                timestamp_s: h.timestamp_s,
                grid_h: h.grid_h,
                grid_w: h.grid_w,
                dim: h.dim,
                global: floats,
                patches,
            },
            len,
        ))
    }

    /// Widen to f64 and normalise into a frame.
    pub fn into_frame(self, base: u64) -> Result<EmbeddedFrame, FormatError> {
        let global: Vec<f64> = self.global.iter().map(|&v| v as f64).collect();
        let patches: Vec<f64> = self.patches.iter().map(|&v| v as f64).collect();
        EmbeddedFrame::new(
            self.frame_id,
            self.timestamp_s,
            self.grid_h as usize,
            self.grid_w as usize,
            &global,
            &patches,
        )
        .map_err(|e| match e {
            ModelError::DimMismatch { .. } | ModelError::InvalidGeometry(_) => FormatError::DimMismatch {
                offset: base,
                detail: e.to_string(),
            },
            other => FormatError::InvalidRecord {
                offset: base,
                detail: other.to_string(),
            },
        })
    }
}

/// Decode and normalise a single record.
pub fn read_embedding_record(bytes: &[u8]) -> Result<EmbeddedFrame, FormatError> {
    let (rec, _) = EmbeddingRecord::decode(bytes, 0)?;
    rec.into_frame(0)
}

/// Decode every record of an in-memory container.
pub fn read_container_bytes(bytes: &[u8]) -> Result<Vec<EmbeddedFrame>, FormatError> {
    let mut out = Vec::new();
    let mut at = 0usize;
    let mut dim: Option<u32> = None;
    while at < bytes.len() {
        let (rec, used) = EmbeddingRecord::decode(&bytes[at..], at as u64)?;
        check_dim(&mut dim, rec.dim, at as u64)?;
        if let Some(prev) = out.last().map(EmbeddedFrame::timestamp_s) {
            if rec.timestamp_s < prev {
                return Err(FormatError::NonMonotoneManifest { index: out.len() });
            }
        }
        out.push(rec.into_frame(at as u64)?);
        at += used;
    }
    Ok(out)
}

fn check_dim(expected: &mut Option<u32>, dim: u32, offset: u64) -> Result<(), FormatError> {
    match *expected {
        Some(d) if d != dim => Err(FormatError::DimMismatch {
            offset,
            detail: format!("record dim {dim}, container dim {d}"),
        }),
        _ => {
            *expected = Some(dim);
            Ok(())
        }
    }
}

/// Write frames as a container stream.
pub fn write_container<W: Write>(mut w: W, frames: &[EmbeddedFrame]) -> Result<(), FormatError> {
    let mut buf = Vec::new();
    for f in frames {
        buf.clear();
        EmbeddingRecord::from_frame(f).encode_into(&mut buf);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub frame_id: String,
    pub timestamp_s: f64,
    pub offset: u64,
    pub len: u64,
    pub grid: (usize, usize),
}

/// A container file indexed by a manifest; records are read on demand and
/// `read_frame` may be called from several threads at once.
#[derive(Debug)]
pub struct EmbeddingContainer {
    file: File,
    manifest: Vec<ManifestEntry>,
    dim: Option<usize>,
}

#[cfg(unix)]
fn read_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(windows)]
fn read_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(std::io::ErrorKind::UnexpectedEof.into()),
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

impl EmbeddingContainer {
    /// Scan record headers and build the manifest.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let file = File::open(path)?;
        let size = file.metadata()?.len();
        let mut manifest: Vec<ManifestEntry> = Vec::new();
        let mut dim = None;
        let mut at = 0u64;
        let mut head = Vec::new();
        while at < size {
            // fixed header first, then enough to cover the id and timestamp
            let mut want = (FIXED_HEADER as u64).min(size - at) as usize;
            loop {
                head.resize(want, 0);
                read_at(&file, &mut head, at)?;
                match parse_header(&head, at) {
                    Err(FormatError::Truncated { .. }) if (want as u64) < size - at && want >= FIXED_HEADER => {
                        let id_len = u64::from_le_bytes(head[20..28].try_into().expect("8 bytes"));
                        let full = (FIXED_HEADER as u64).saturating_add(id_len).saturating_add(8);
                        if full <= want as u64 || full > size - at {
                            return Err(FormatError::Truncated {
                                offset: size,
                                needed: full.saturating_sub(size - at),
                                available: 0,
                            });
                        }
                        want = full as usize;
                    }
                    Err(e) => return Err(e),
                    Ok(h) => {
                        if h.len > size - at {
                            return Err(FormatError::Truncated {
                                offset: size,
                                needed: h.len - (size - at),
                                available: 0,
                            });
                        }
                        check_dim(&mut dim, h.dim, at)?;
                        if manifest.last().is_some_and(|m| h.timestamp_s < m.timestamp_s) {
                            return Err(FormatError::NonMonotoneManifest { index: manifest.len() });
                        }
                        manifest.push(ManifestEntry {
                            frame_id: h.frame_id,
                            timestamp_s: h.timestamp_s,
                            offset: at,
                            len: h.len,
                            grid: (h.grid_h as usize, h.grid_w as usize),
                        });
                        at += h.len;
                        break;
                    }
                }
            }
        }
        Ok(Self {
            file,
            manifest,
            dim: dim.map(|d| d as usize),
        })
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.manifest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn read_record(&self, i: usize) -> Result<EmbeddingRecord, FormatError> {
        let m = &self.manifest[i];
        let mut buf = vec![0u8; m.len as usize];
        read_at(&self.file, &mut buf, m.offset)?;
        Ok(EmbeddingRecord::decode(&buf, m.offset)?.0)
    }

    pub fn read_frame(&self, i: usize) -> Result<EmbeddedFrame, FormatError> {
        self.read_record(i)?.into_frame(self.manifest[i].offset)
    }

    pub fn read_all(&self) -> Result<Vec<EmbeddedFrame>, FormatError> {
        (0..self.len()).map(|i| self.read_frame(i)).collect()
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<EmbeddedFrame, FormatError>> + '_ {
        (0..self.len()).map(|i| self.read_frame(i))
    }
}

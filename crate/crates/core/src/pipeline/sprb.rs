// SPDX-License-Identifier: MIT OR Apache-2.0

//! SPRB hidden-state files.
//!
//! ```text
//! "SPRB" | u32 version (1) | u32 dim | u64 record_count
//! record_count x ( u16 id_len | id (UTF-8) | u32 layer | dim x f32 )
//! ```
//!
//! All integers and floats are little-endian. Vectors are stored at single
//! precision and widened on load.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, ErrorKind, Read};
use std::path::Path;

use super::json::write_atomic;
use crate::error::{Error, Result};
use crate::probing::HiddenStateRecord;
use crate::scalar::Scalar;

pub const SPRB_MAGIC: [u8; 4] = *b"SPRB";
pub const SPRB_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SprbHeader {
    pub version: u32,
    pub dim: u32,
    pub record_count: u64,
}

/// Serializes records; every vector must have length `dim`.
pub fn encode_hidden_states<T: Scalar>(dim: u32, records: &[HiddenStateRecord<T>]) -> Result<Vec<u8>> {
    if dim == 0 {
        return Err(Error::invalid("hidden-state dimension must be positive"));
    }
    let mut out = Vec::with_capacity(20 + records.len() * (10 + 4 * dim as usize));
    out.extend_from_slice(&SPRB_MAGIC);
    out.extend_from_slice(&SPRB_VERSION.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        if r.vector.len() != dim as usize {
            return Err(Error::invalid(format!(
                "hidden state `{}` layer {} has dimension {} (header says {dim})",
                r.question_id,
                r.layer,
                r.vector.len()
            )));
        }
        let id_len = u16::try_from(r.question_id.len())
            .map_err(|_| Error::invalid(format!("question id `{}` longer than 65535 bytes", r.question_id)))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(r.question_id.as_bytes());
        out.extend_from_slice(&r.layer.to_le_bytes());
        for &x in &r.vector {
            let x = x.to_f32().unwrap_or(f32::NAN);
            if !x.is_finite() {
                return Err(Error::invalid(format!(
                    "hidden state `{}` has a non-finite entry",
                    r.question_id
                )));
            }
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_hidden_states<T: Scalar>(path: &Path, dim: u32, records: &[HiddenStateRecord<T>]) -> Result<()> {
    write_atomic(path, &encode_hidden_states(dim, records)?)
}

/// Streaming reader; yields records widened to `f64`.
pub struct SprbReader<R> {
    inner: R,
    source: String,
    header: SprbHeader,
    read: u64,
    layers: Option<BTreeSet<u32>>,
    buf: Vec<u8>,
    failed: bool,
}

impl SprbReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufReader::new(file), path.display().to_string())
    }
}

impl<R: Read> SprbReader<R> {
    pub fn new(mut inner: R, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let mut head = [0u8; 20];
        inner.read_exact(&mut head).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::format(source.clone(), "file shorter than the 20-byte header"),
            _ => Error::io(&source, e),
        })?;
        if head[..4] != SPRB_MAGIC {
            return Err(Error::format(
                source,
                format!(
                    "bad magic {:?} (expected \"SPRB\")",
                    String::from_utf8_lossy(&head[..4])
                ),
            ));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
        if version != SPRB_VERSION {
            return Err(Error::Version {
                found: version.into(),
                expected: SPRB_VERSION.into(),
            });
        }
        let dim = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes"));
        if dim == 0 {
            return Err(Error::format(source, "header declares dimension 0"));
        }
        let record_count = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes"));
        Ok(Self {
            inner,
            source,
            header: SprbHeader {
                version,
                dim,
                record_count,
            },
            read: 0,
            layers: None,
            buf: vec![0; 4 * dim as usize],
            failed: false,
        })
    }

    /// Only yield records whose layer is in `layers`; other vectors are
    /// skipped without being decoded.
    pub fn with_layers(mut self, layers: BTreeSet<u32>) -> Self {
        self.layers = Some(layers);
        self
    }

    pub fn header(&self) -> SprbHeader {
        self.header
    }

    fn truncated(&self) -> Error {
        Error::format(
            self.source.clone(),
            format!(
                "truncated: header declares {} records, file ends inside record {}",
                self.header.record_count,
                self.read + 1
            ),
        )
    }

    fn fill(&mut self, len: usize) -> Result<()> {
        self.buf.resize(len.max(self.buf.len()), 0);
        match self.inner.read_exact(&mut self.buf[..len]) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => Err(self.truncated()),
            Err(e) => Err(Error::io(&self.source, e)),
        }
    }

    fn next_record(&mut self) -> Result<Option<HiddenStateRecord<f64>>> {
        self.fill(2)?;
        let id_len = u16::from_le_bytes([self.buf[0], self.buf[1]]) as usize;
        self.fill(id_len)?;
        let question_id = std::str::from_utf8(&self.buf[..id_len])
            .map_err(|_| {
                Error::format(
                    self.source.clone(),
                    format!("record {}: question id is not UTF-8", self.read + 1),
                )
            })?
            .to_owned();
        self.fill(4)?;
        let layer = u32::from_le_bytes(self.buf[..4].try_into().expect("4 bytes"));
        let bytes = 4 * self.header.dim as usize;
        self.fill(bytes)?;
        self.read += 1;
        if self.layers.as_ref().is_some_and(|l| !l.contains(&layer)) {
            return Ok(None);
        }
        let mut vector = Vec::with_capacity(self.header.dim as usize);
        for chunk in self.buf[..bytes].chunks_exact(4) {
            let x = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            if !x.is_finite() {
                return Err(Error::format(
                    self.source.clone(),
                    format!("record `{question_id}` layer {layer}: non-finite entry"),
                ));
            }
            vector.push(f64::from(x));
        }
        Ok(Some(HiddenStateRecord {
            question_id,
            layer,
            vector,
        }))
    }

    fn check_trailing(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe) {
            Ok(0) => Ok(()),
            Ok(_) => Err(Error::format(
                self.source.clone(),
                format!("trailing bytes after the {} declared records", self.header.record_count),
            )),
            Err(e) => Err(Error::io(&self.source, e)),
        }
    }
}

impl<R: Read> Iterator for SprbReader<R> {
    type Item = Result<HiddenStateRecord<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.failed {
            if self.read == self.header.record_count {
                self.failed = true;
                return self.check_trailing().err().map(Err);
            }
            match self.next_record() {
                Ok(Some(r)) => return Some(Ok(r)),
                Ok(None) => continue,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

/// Reads every record (optionally only some layers) from a file.
pub fn read_hidden_states(
    path: &Path,
    layers: Option<BTreeSet<u32>>,
) -> Result<(SprbHeader, Vec<HiddenStateRecord<f64>>)> {
    let mut reader = SprbReader::open(path)?;
    if let Some(l) = layers {
        reader = reader.with_layers(l);
    }
    let header = reader.header();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

/// Decodes from memory.
pub fn decode_hidden_states(
    bytes: &[u8],
    layers: Option<BTreeSet<u32>>,
) -> Result<(SprbHeader, Vec<HiddenStateRecord<f64>>)> {
    let mut reader = SprbReader::new(io::Cursor::new(bytes), "<memory>")?;
    if let Some(l) = layers {
        reader = reader.with_layers(l);
    }
    let header = reader.header();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Vec<HiddenStateRecord<f32>> {
        let mut out = Vec::new();
        for layer in 0..2u32 {
            for q in 0..3 {
                out.push(HiddenStateRecord {
                    question_id: format!("q{q}"),
                    layer,
                    vector: (0..4).map(|k| (layer * 100 + q * 10 + k) as f32 * 0.5).collect(),
                });
            }
        }
        out
    }

    #[test]
    fn layout_is_bit_exact() {
        let rec = [HiddenStateRecord {
            question_id: "ab".to_owned(),
            layer: 3,
            vector: vec![1.0f32, -2.0],
        }];
        let bytes = encode_hidden_states(2, &rec).unwrap();
        let mut expected = b"SPRB".to_vec();
        expected.extend([1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend([2, 0, b'a', b'b', 3, 0, 0, 0]);
        expected.extend(1.0f32.to_le_bytes());
        expected.extend((-2.0f32).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn round_trip_and_layer_filter() {
        let bytes = encode_hidden_states(4, &fixture()).unwrap();
        let (header, all) = decode_hidden_states(&bytes, None).unwrap();
        assert_eq!(
            header,
            SprbHeader {
                version: 1,
                dim: 4,
                record_count: 6
            }
        );
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|r| r.vector.len() == 4));
        assert_eq!(all[4].vector, vec![110.0 * 0.5, 111.0 * 0.5, 112.0 * 0.5, 113.0 * 0.5]);
        let (_, layer1) = decode_hidden_states(&bytes, Some([1].into())).unwrap();
        assert_eq!(layer1.len(), 3);
        assert!(layer1.iter().all(|r| r.layer == 1));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_hidden_states(4, &fixture()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        let err = decode_hidden_states(&bytes, None).unwrap_err();
        assert!(
            matches!(err, Error::Format { .. }) && err.to_string().contains("magic"),
            "{err}"
        );
        let mut bytes = encode_hidden_states(4, &fixture()).unwrap();
        bytes[4] = 2;
        assert!(matches!(
            decode_hidden_states(&bytes, None).unwrap_err(),
            Error::Version { found: 2, expected: 1 }
        ));
    }

    #[test]
    fn truncation_cites_counts() {
        let bytes = encode_hidden_states(4, &fixture()).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        let err = decode_hidden_states(cut, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("declares 6 records") && msg.contains("record 6"), "{msg}");
        assert!(decode_hidden_states(&bytes[..10], None).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_hidden_states(&long, None)
            .unwrap_err()
            .to_string()
            .contains("trailing"));
    }

    #[test]
    fn rejects_mismatched_dimension_on_write() {
        assert!(encode_hidden_states(3, &fixture()).is_err());
        assert!(encode_hidden_states::<f32>(0, &[]).is_err());
    }

    #[test]
    fn widening_is_exact() {
        let rec = [HiddenStateRecord {
            question_id: "q".to_owned(),
            layer: 0,
            vector: vec![0.1f64],
        }];
        let (_, back) = decode_hidden_states(&encode_hidden_states(1, &rec).unwrap(), None).unwrap();
        assert_eq!(back[0].vector[0], f64::from(0.1f32));
    }
}

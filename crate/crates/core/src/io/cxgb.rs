//! CXGB: a little-endian container for an embedding matrix and its row ids.
//!
//! ```text
//! magic    4 bytes  "CXGB"
//! version  u32      1
//! n        u64      rows
//! d        u64      columns
//! values   n*d f32  row-major
//! ids      n x (u16 byte length, UTF-8 bytes)
//! ```

use std::collections::{HashMap, HashSet};
use std::io::{BufReader, BufWriter, ErrorKind as IoErrorKind, Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub const CXGB_MAGIC: [u8; 4] = *b"CXGB";
pub const CXGB_VERSION: u32 = 1;

/// Upper bound on speculative preallocation when the header is untrusted.
const MAX_PREALLOC: usize = 1 << 24;

/// An `n x d` feature matrix with one sample id per row.
///
/// Values are stored as `f32`; every metric widens them to `f64` before
/// arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
    sample_ids: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f32>, sample_ids: Vec<String>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::LengthMismatch(values.len(), n * d));
        }
        if sample_ids.len() != n {
            return Err(Error::IdCountMismatch {
                expected: n,
                found: sample_ids.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: pos / d.max(1),
                col: pos % d.max(1),
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        Ok(Self {
            n,
            d,
            values,
            sample_ids,
        })
    }

    /// Builds a matrix from `f64` rows, naming samples `{prefix}{index}`.
    pub fn from_rows(rows: &[Vec<f64>], prefix: &str) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch(r.len(), d));
            }
            values.extend(r.iter().map(|&v| v as f32));
        }
        let ids = (0..rows.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(rows.len(), d, values, ids)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.sample_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    /// New matrix holding `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.row(r));
            ids.push(self.sample_ids[r].clone());
        }
        Self {
            n: rows.len(),
            d: self.d,
            values,
            sample_ids: ids,
        }
    }

    /// Keeps the rows whose ids are in `ids`, preserving this matrix's row
    /// order. Fails if an id is absent.
    pub fn restrict_to<'a, I>(&self, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let index = self.id_index();
        let mut rows = Vec::new();
        for id in ids {
            match index.get(id) {
                Some(&r) => rows.push(r),
                None => return Err(Error::IdAlignment(id.to_string())),
            }
        }
        rows.sort_unstable();
        rows.dedup();
        Ok(self.select_rows(&rows))
    }
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(m, &mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(BufReader::new(file))
}

/// Serializes `m` into `w` in CXGB layout.
pub fn encode<W: Write>(m: &EmbeddingMatrix, w: &mut W) -> Result<()> {
    let io = |e| Error::io("<cxgb writer>", e);
    w.write_all(&CXGB_MAGIC).map_err(io)?;
    w.write_all(&CXGB_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(m.n as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(m.d as u64).to_le_bytes()).map_err(io)?;
    for v in &m.values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    for (row, id) in m.sample_ids.iter().enumerate() {
        let len = u16::try_from(id.len()).map_err(|_| Error::IdTooLong(row))?;
        w.write_all(&len.to_le_bytes()).map_err(io)?;
        w.write_all(id.as_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Parses a CXGB stream.
pub fn decode<R: Read>(mut r: R) -> Result<EmbeddingMatrix> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != CXGB_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != CXGB_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let mut b8 = [0u8; 8];
    read_exact(&mut r, &mut b8, "header")?;
    let n = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::TruncatedFile("header"))?;
    read_exact(&mut r, &mut b8, "header")?;
    let d = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::TruncatedFile("header"))?;
    let count = n.checked_mul(d).ok_or(Error::TruncatedFile("values"))?;

    let mut values = Vec::with_capacity(count.min(MAX_PREALLOC));
    let mut buf = vec![0u8; 4 * 4096];
    let mut remaining = count;
    while remaining > 0 {
        let take = remaining.min(4096);
        let bytes = &mut buf[..take * 4];
        read_exact(&mut r, bytes, "values")?;
        values.extend(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        remaining -= take;
    }

    let mut ids = Vec::with_capacity(n.min(MAX_PREALLOC));
    for row in 0..n {
        let mut len = [0u8; 2];
        match fill(&mut r, &mut len)? {
            0 => {
                return Err(Error::IdCountMismatch {
                    expected: n,
                    found: row,
                })
            }
            2 => {}
            _ => return Err(Error::TruncatedFile("id table")),
        }
        let mut bytes = vec![0u8; usize::from(u16::from_le_bytes(len))];
        read_exact(&mut r, &mut bytes, "id table")?;
        ids.push(String::from_utf8(bytes).map_err(|_| Error::BadIdEncoding(row))?);
    }
    let mut probe = [0u8; 1];
    if fill(&mut r, &mut probe)? != 0 {
        let mut extra = 0usize;
        while fill(&mut r, &mut [0u8; 2])? == 2 {
            extra += 1;
        }
        return Err(Error::IdCountMismatch {
            expected: n,
            found: n + extra.max(1),
        });
    }
    EmbeddingMatrix::new(n, d, values, ids)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        IoErrorKind::UnexpectedEof => Error::TruncatedFile(what),
        _ => Error::io("<cxgb reader>", e),
    })
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn fill<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == IoErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("<cxgb reader>", e)),
        }
    }
    Ok(got)
}

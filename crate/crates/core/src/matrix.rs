//! The `WN2V` distance matrix file.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size        | field                                              |
//! |--------|-------------|----------------------------------------------------|
//! | 0      | 4           | magic `WN2V`                                       |
//! | 4      | 4           | format version, `1`                                |
//! | 8      | 8           | node count `n`                                     |
//! | 16     | 32          | graph fingerprint (SHA-256 of the `WNG1` cache)    |
//! | 48     | 1           | largest finite distance in the payload             |
//! | 49     | 1           | complete flag, `1` once every row is written       |
//! | 50     | 6           | reserved, zero                                     |
//! | 56     | 8           | payload offset `P`                                 |
//! | 64     | 8 × (n + 1) | lemma byte offsets into the string blob            |
//! | ...    | offsets[n]  | string blob: concatenated UTF-8 lemmas, vocab order |
//! | P      | n × n       | payload: row-major hop counts, `255` = unreachable |
//!
//! Row `i` starts at `P + i·n`. The file length is exactly `P + n²`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::WordGraph;
use crate::ingest::normalize_lemma;

pub const MATRIX_MAGIC: &[u8; 4] = b"WN2V";
pub const MATRIX_VERSION: u32 = 1;
/// Stored distance for target nodes outside the source's component.
pub const UNREACHABLE: u8 = 255;

const FIXED_HEADER: u64 = 64;
const MAX_DISTANCE_AT: u64 = 48;
const COMPLETE_AT: u64 = 49;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?} (expected \"WN2V\")")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported matrix format version {0} (expected {MATRIX_VERSION})")]
    UnsupportedVersion(u32),
    #[error("matrix file length {actual} does not match header-implied length {expected}")]
    Length { expected: u64, actual: u64 },
    #[error("matrix header is corrupt: {0}")]
    Corrupt(String),
    #[error("matrix file is incomplete; resume the APSP run that produced it")]
    Incomplete,
    #[error("matrix was built from graph {found}, expected graph {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("row {row} out of range for {n}-node matrix")]
    RowOutOfRange { row: u64, n: u64 },
}

#[cfg(unix)]
fn read_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(unix)]
fn write_at(file: &File, buf: &[u8], offset: u64) -> std::io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.write_all_at(buf, offset)
}

#[cfg(windows)]
fn read_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(std::io::ErrorKind::UnexpectedEof.into()),
            k => {
                buf = &mut buf[k..];
                offset += k as u64;
            }
        }
    }
    Ok(())
}

#[cfg(windows)]
fn write_at(file: &File, mut buf: &[u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        let k = file.seek_write(buf, offset)?;
        buf = &buf[k..];
        offset += k as u64;
    }
    Ok(())
}

/// Header bytes up to (but excluding) the payload.
pub(crate) fn encode_header(
    vocab: &[String],
    fingerprint: &[u8; 32],
    max_distance: u8,
    complete: bool,
) -> Vec<u8> {
    let n = vocab.len() as u64;
    let blob_len: u64 = vocab.iter().map(|l| l.len() as u64).sum();
    let payload_offset = FIXED_HEADER + 8 * (n + 1) + blob_len;
    let mut out = Vec::with_capacity(payload_offset as usize);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(fingerprint);
    out.push(max_distance);
    out.push(complete as u8);
    out.extend_from_slice(&[0; 6]);
    out.extend_from_slice(&payload_offset.to_le_bytes());
    let mut acc = 0u64;
    out.extend_from_slice(&acc.to_le_bytes());
    for l in vocab {
        acc += l.len() as u64;
        out.extend_from_slice(&acc.to_le_bytes());
    }
    for l in vocab {
        out.extend_from_slice(l.as_bytes());
    }
    debug_assert_eq!(out.len() as u64, payload_offset);
    out
}

struct Header {
    n: u64,
    fingerprint: [u8; 32],
    max_distance: u8,
    complete: bool,
    payload_offset: u64,
    vocab: Vec<String>,
}

fn read_header(file: &File, path: &Path) -> Result<Header, MatrixError> {
    let io = |source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    };
    let actual = file.metadata().map_err(io)?.len();
    if actual < 4 {
        return Err(MatrixError::Length {
            expected: FIXED_HEADER,
            actual,
        });
    }
    let mut fixed = [0u8; FIXED_HEADER as usize];
    let avail = actual.min(FIXED_HEADER) as usize;
    read_at(file, &mut fixed[..avail], 0).map_err(io)?;
    let magic: [u8; 4] = fixed[0..4].try_into().unwrap();
    if &magic != MATRIX_MAGIC {
        return Err(MatrixError::BadMagic { found: magic });
    }
    if avail < FIXED_HEADER as usize {
        return Err(MatrixError::Length {
            expected: FIXED_HEADER,
            actual,
        });
    }
    let le64 = |at: usize| u64::from_le_bytes(fixed[at..at + 8].try_into().unwrap());
    let version = u32::from_le_bytes(fixed[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(MatrixError::UnsupportedVersion(version));
    }
    let n = le64(8);
    let fingerprint: [u8; 32] = fixed[16..48].try_into().unwrap();
    let max_distance = fixed[MAX_DISTANCE_AT as usize];
    let complete = match fixed[COMPLETE_AT as usize] {
        0 => false,
        1 => true,
        other => return Err(MatrixError::Corrupt(format!("complete flag {other}"))),
    };
    let payload_offset = le64(56);

    let offsets_len = n
        .checked_add(1)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| MatrixError::Corrupt(format!("node count {n}")))?;
    let payload_len = n
        .checked_mul(n)
        .ok_or_else(|| MatrixError::Corrupt(format!("node count {n}")))?;
    if FIXED_HEADER + offsets_len > actual || payload_offset > actual {
        return Err(MatrixError::Length {
            expected: payload_offset.saturating_add(payload_len),
            actual,
        });
    }
    let mut raw_offsets = vec![0u8; offsets_len as usize];
    read_at(file, &mut raw_offsets, FIXED_HEADER).map_err(io)?;
    let offsets: Vec<u64> = raw_offsets
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let blob_len = offsets[n as usize];
    if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(MatrixError::Corrupt(
            "lemma offsets are not monotone".into(),
        ));
    }
    if FIXED_HEADER + offsets_len + blob_len != payload_offset {
        return Err(MatrixError::Corrupt(format!(
            "payload offset {payload_offset} disagrees with vocab block end {}",
            FIXED_HEADER + offsets_len + blob_len
        )));
    }
    let expected = payload_offset + payload_len;
    if actual != expected {
        return Err(MatrixError::Length { expected, actual });
    }
    let mut blob = vec![0u8; blob_len as usize];
    read_at(file, &mut blob, FIXED_HEADER + offsets_len).map_err(io)?;
    let mut vocab = Vec::with_capacity(n as usize);
    for w in offsets.windows(2) {
        let lemma = std::str::from_utf8(&blob[w[0] as usize..w[1] as usize])
            .map_err(|_| MatrixError::Corrupt("lemma is not UTF-8".into()))?;
        vocab.push(lemma.to_string());
    }
    if vocab.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MatrixError::Corrupt("vocab is not sorted".into()));
    }
    Ok(Header {
        n,
        fingerprint,
        max_distance,
        complete,
        payload_offset,
        vocab,
    })
}

/// Read-only handle onto a complete `WN2V` file. Rows are read with
/// positioned I/O on demand; the payload is never loaded as a whole.
#[derive(Debug)]
pub struct DistanceMatrix {
    path: PathBuf,
    file: File,
    n: u64,
    fingerprint: [u8; 32],
    max_distance: u8,
    payload_offset: u64,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVector {
    pub lemma: String,
    pub index: u32,
    pub values: Vec<u8>,
}

pub fn open_matrix(path: &Path) -> Result<DistanceMatrix, MatrixError> {
    let file = File::open(path).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let header = read_header(&file, path)?;
    if !header.complete {
        return Err(MatrixError::Incomplete);
    }
    let index = header
        .vocab
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i as u32))
        .collect();
    Ok(DistanceMatrix {
        path: path.to_path_buf(),
        file,
        n: header.n,
        fingerprint: header.fingerprint,
        max_distance: header.max_distance,
        payload_offset: header.payload_offset,
        vocab: header.vocab,
        index,
    })
}

/// Opens `path` and checks it was built from `graph`.
pub fn open_matrix_for(path: &Path, graph: &WordGraph) -> Result<DistanceMatrix, MatrixError> {
    let m = open_matrix(path)?;
    m.verify_fingerprint(&graph.fingerprint())?;
    Ok(m)
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n as usize
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Largest finite hop count stored anywhere in the payload.
    pub fn max_distance(&self) -> u8 {
        self.max_distance
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn verify_fingerprint(&self, expected: &[u8; 32]) -> Result<(), MatrixError> {
        if &self.fingerprint != expected {
            return Err(MatrixError::FingerprintMismatch {
                expected: hex::encode(expected),
                found: hex::encode(self.fingerprint),
            });
        }
        Ok(())
    }

    /// Node index of an exact, already-normalized lemma.
    pub fn index_of(&self, lemma: &str) -> Option<u32> {
        self.index.get(lemma).copied()
    }

    pub fn read_row_into(&self, row: u32, buf: &mut [u8]) -> Result<(), MatrixError> {
        if row as u64 >= self.n {
            return Err(MatrixError::RowOutOfRange {
                row: row as u64,
                n: self.n,
            });
        }
        assert_eq!(buf.len() as u64, self.n, "row buffer length");
        read_at(&self.file, buf, self.payload_offset + row as u64 * self.n).map_err(|source| {
            MatrixError::Io {
                path: self.path.clone(),
                source,
            }
        })
    }

    pub fn row(&self, row: u32) -> Result<Vec<u8>, MatrixError> {
        let mut buf = vec![0; self.n as usize];
        self.read_row_into(row, &mut buf)?;
        Ok(buf)
    }

    /// Word vector for `lemma` after normalization, or `None` when the lemma
    /// is not in the vocabulary.
    pub fn lookup(&self, lemma: &str) -> Result<Option<WordVector>, MatrixError> {
        let lemma = normalize_lemma(lemma);
        let Some(index) = self.index_of(&lemma) else {
            return Ok(None);
        };
        Ok(Some(WordVector {
            values: self.row(index)?,
            lemma,
            index,
        }))
    }
}

/// Writer side used by the APSP engine. Rows may be written from many threads
/// concurrently as long as they target different rows.
#[derive(Debug)]
pub(crate) struct MatrixWriter {
    path: PathBuf,
    file: File,
    n: u64,
    payload_offset: u64,
}

impl MatrixWriter {
    fn io(&self) -> impl Fn(std::io::Error) -> MatrixError + '_ {
        move |source| MatrixError::Io {
            path: self.path.clone(),
            source,
        }
    }

    /// Creates (or truncates) `path` with an incomplete header and a
    /// zero-filled payload of the final size.
    pub(crate) fn create(path: &Path, graph: &WordGraph) -> Result<Self, MatrixError> {
        let io = |source| MatrixError::Io {
            path: path.to_path_buf(),
            source,
        };
        let header = encode_header(graph.vocab(), &graph.fingerprint(), 0, false);
        let n = graph.node_count() as u64;
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)
            .map_err(io)?;
        write_at(&file, &header, 0).map_err(io)?;
        file.set_len(header.len() as u64 + n * n).map_err(io)?;
        Ok(MatrixWriter {
            path: path.to_path_buf(),
            file,
            n,
            payload_offset: header.len() as u64,
        })
    }

    /// Reopens a partially written file for resumption. The header must match
    /// `graph` exactly.
    pub(crate) fn reopen(path: &Path, graph: &WordGraph) -> Result<Self, MatrixError> {
        let io = |source| MatrixError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .open(path)
            .map_err(io)?;
        let header = read_header(&file, path)?;
        let expected = graph.fingerprint();
        if header.fingerprint != expected {
            return Err(MatrixError::FingerprintMismatch {
                expected: hex::encode(expected),
                found: hex::encode(header.fingerprint),
            });
        }
        if header.vocab != graph.vocab() {
            return Err(MatrixError::Corrupt("vocab differs from graph".into()));
        }
        let writer = MatrixWriter {
            path: path.to_path_buf(),
            file,
            n: header.n,
            payload_offset: header.payload_offset,
        };
        if header.complete {
            writer.set_complete(false, 0)?;
        }
        Ok(writer)
    }

    pub(crate) fn write_row(&self, row: u32, data: &[u8]) -> Result<(), MatrixError> {
        debug_assert_eq!(data.len() as u64, self.n);
        write_at(&self.file, data, self.payload_offset + row as u64 * self.n).map_err(self.io())
    }

    pub(crate) fn read_row(&self, row: u32, buf: &mut [u8]) -> Result<(), MatrixError> {
        read_at(&self.file, buf, self.payload_offset + row as u64 * self.n).map_err(self.io())
    }

    pub(crate) fn sync(&self) -> Result<(), MatrixError> {
        self.file.sync_data().map_err(self.io())
    }

    fn set_complete(&self, complete: bool, max_distance: u8) -> Result<(), MatrixError> {
        write_at(&self.file, &[max_distance, complete as u8], MAX_DISTANCE_AT).map_err(self.io())
    }

    pub(crate) fn finish(self, max_distance: u8) -> Result<(), MatrixError> {
        self.sync()?;
        self.set_complete(true, max_distance)?;
        self.sync()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_encoding_offsets() {
        let vocab = vec!["a".to_string(), "bc".to_string()];
        let h = encode_header(&vocab, &[7; 32], 3, true);
        assert_eq!(&h[0..4], b"WN2V");
        assert_eq!(u32::from_le_bytes(h[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(h[8..16].try_into().unwrap()), 2);
        assert_eq!(&h[16..48], &[7; 32][..]);
        assert_eq!(h[48], 3);
        assert_eq!(h[49], 1);
        // 64 fixed + 3 offsets * 8 + 3 blob bytes
        assert_eq!(u64::from_le_bytes(h[56..64].try_into().unwrap()), 91);
        assert_eq!(h.len(), 91);
        assert_eq!(&h[88..91], b"abc");
    }

    #[test]
    fn short_files_report_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wn2v");
        std::fs::write(&p, b"WN").unwrap();
        assert!(matches!(open_matrix(&p), Err(MatrixError::Length { .. })));
        std::fs::write(&p, b"WN2V\x01\0\0\0").unwrap();
        assert!(matches!(open_matrix(&p), Err(MatrixError::Length { .. })));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wn2v");
        let mut h = encode_header(&["a".to_string()], &[0; 32], 0, true);
        h.push(0);
        h[4] = 2;
        std::fs::write(&p, &h).unwrap();
        assert!(matches!(
            open_matrix(&p),
            Err(MatrixError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn incomplete_files_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wn2v");
        let mut h = encode_header(&["a".to_string()], &[0; 32], 0, false);
        h.push(0);
        std::fs::write(&p, &h).unwrap();
        assert!(matches!(open_matrix(&p), Err(MatrixError::Incomplete)));
    }
}

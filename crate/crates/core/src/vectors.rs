//! `WNDV` document-vector files: vectorized documents with labels and
//! domains, written once by the vectorize stage and read by training and
//! evaluation.
//!
//! Layout (little-endian):
//!
//! ```text
//! "WNDV" | version u32 | n_docs u64 | n_features u64
//! matrix fingerprint [32] | config digest [32] | seed u64
//! n_domains u32 | n_domains × (u32 len + utf-8 bytes)
//! n_docs × (label u8 | domain u32 | matched u64 | n_features × u64)
//! ```
//!
//! Label 255 means unlabeled.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::learn::{FeatureMatrix, LabeledDataset, LearnError, SentimentClass};
use crate::text::{Document, DocumentVector};

pub const VECTORS_MAGIC: &[u8; 4] = b"WNDV";
pub const VECTORS_VERSION: u32 = 1;
const NO_LABEL: u8 = 255;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a document-vector file (magic {found:?})")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported document-vector version {0}")]
    UnsupportedVersion(u32),
    #[error("document-vector file is truncated")]
    Truncated,
    #[error("corrupt document-vector file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorRecord {
    pub label: Option<SentimentClass>,
    /// Index into [`VectorSet::domains`].
    pub domain: u32,
    pub vector: DocumentVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSet {
    pub n_features: usize,
    pub matrix_fingerprint: [u8; 32],
    pub config_digest: [u8; 32],
    pub seed: u64,
    pub domains: Vec<String>,
    pub records: Vec<VectorRecord>,
}

impl VectorSet {
    pub fn new(
        n_features: usize,
        matrix_fingerprint: [u8; 32],
        config_digest: [u8; 32],
        seed: u64,
    ) -> Self {
        VectorSet {
            n_features,
            matrix_fingerprint,
            config_digest,
            seed,
            domains: Vec::new(),
            records: Vec::new(),
        }
    }

    fn domain_index(&mut self, name: &str) -> u32 {
        match self.domains.iter().position(|d| d == name) {
            Some(i) => i as u32,
            None => {
                self.domains.push(name.to_string());
                (self.domains.len() - 1) as u32
            }
        }
    }

    /// Appends documents with their vectors. Documents without a domain get
    /// `default_domain`.
    pub fn extend(
        &mut self,
        docs: &[Document],
        vectors: Vec<DocumentVector>,
        default_domain: &str,
    ) {
        assert_eq!(docs.len(), vectors.len());
        for (doc, vector) in docs.iter().zip(vectors) {
            assert_eq!(vector.values.len(), self.n_features, "vector width");
            let domain = self.domain_index(doc.domain.as_deref().unwrap_or(default_domain));
            self.records.push(VectorRecord {
                label: doc.label,
                domain,
                vector,
            });
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(VECTORS_MAGIC)?;
        w.write_all(&VECTORS_VERSION.to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        w.write_all(&(self.n_features as u64).to_le_bytes())?;
        w.write_all(&self.matrix_fingerprint)?;
        w.write_all(&self.config_digest)?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.domains.len() as u32).to_le_bytes())?;
        for d in &self.domains {
            w.write_all(&(d.len() as u32).to_le_bytes())?;
            w.write_all(d.as_bytes())?;
        }
        for r in &self.records {
            w.write_all(&[r.label.map_or(NO_LABEL, |l| l.index() as u8)])?;
            w.write_all(&r.domain.to_le_bytes())?;
            w.write_all(&r.vector.matched_lemma_count.to_le_bytes())?;
            for v in &r.vector.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorError> {
        let io = |source| VectorError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, VectorError> {
        let bytes = std::fs::read(path).map_err(|source| VectorError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, VectorError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &magic != VECTORS_MAGIC {
            return Err(VectorError::BadMagic { found: magic });
        }
        let version = r.u32()?;
        if version != VECTORS_VERSION {
            return Err(VectorError::UnsupportedVersion(version));
        }
        let n_docs = r.u64()? as usize;
        let n_features = r.u64()? as usize;
        let matrix_fingerprint = r.take(32)?.try_into().unwrap();
        let config_digest = r.take(32)?.try_into().unwrap();
        let seed = r.u64()?;
        let n_domains = r.u32()? as usize;
        let mut domains = Vec::with_capacity(n_domains.min(1 << 16));
        for _ in 0..n_domains {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| VectorError::Corrupt("domain name is not utf-8".into()))?;
            domains.push(name.to_string());
        }
        let record_len = 13 + 8 * n_features;
        if r.remaining()
            != n_docs
                .checked_mul(record_len)
                .ok_or(VectorError::Truncated)?
        {
            return Err(if r.remaining() < n_docs * record_len {
                VectorError::Truncated
            } else {
                VectorError::Corrupt("trailing bytes after records".into())
            });
        }
        let mut records = Vec::with_capacity(n_docs);
        for i in 0..n_docs {
            let label =
                match r.take(1)?[0] {
                    NO_LABEL => None,
                    l => Some(SentimentClass::from_index(l as usize).ok_or_else(|| {
                        VectorError::Corrupt(format!("record {i}: label byte {l}"))
                    })?),
                };
            let domain = r.u32()?;
            if domain as usize >= domains.len() {
                return Err(VectorError::Corrupt(format!(
                    "record {i}: domain index {domain}"
                )));
            }
            let matched_lemma_count = r.u64()?;
            let values = (0..n_features).map(|_| r.u64()).collect::<Result<_, _>>()?;
            records.push(VectorRecord {
                label,
                domain,
                vector: DocumentVector {
                    values,
                    matched_lemma_count,
                },
            });
        }
        Ok(VectorSet {
            n_features,
            matrix_fingerprint,
            config_digest,
            seed,
            domains,
            records,
        })
    }

    /// One labeled dataset per domain, in domain-table order. Unlabeled
    /// records are skipped.
    pub fn datasets(&self) -> Result<Vec<LabeledDataset>, VectorError> {
        let mut out = Vec::with_capacity(self.domains.len());
        for (d, name) in self.domains.iter().enumerate() {
            let mut data = Vec::new();
            let mut labels = Vec::new();
            for r in self.records.iter().filter(|r| r.domain as usize == d) {
                if let Some(l) = r.label {
                    data.extend(r.vector.values.iter().map(|&v| v as f64));
                    labels.push(l);
                }
            }
            let features = FeatureMatrix::new(labels.len(), self.n_features, data);
            out.push(LabeledDataset::new(features, labels, name.clone())?);
        }
        Ok(out)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], VectorError> {
        let end = self.pos.checked_add(n).ok_or(VectorError::Truncated)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(VectorError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, VectorError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, VectorError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

//! Simplified word graph.
//!
//! Every lemma becomes a node. Two distinct lemmas are joined by one
//! unlabeled, undirected edge when any of the following holds:
//!
//! 1. a lexical relation links the two word forms,
//! 2. a semantic relation links two synsets containing them (every lemma of
//!    the source synset is joined to every lemma of the target synset),
//! 3. they are members of the same synset.
//!
//! Adjacency is stored in CSR form with sorted neighbor lists. Node ids are
//! positions in the lexicographically sorted vocabulary.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{LexicalDatabase, Synset};

pub const GRAPH_MAGIC: &[u8; 4] = b"WNG1";

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("word index {index} out of range for synset {synset} with {len} lemma(s)")]
    WordIndexOutOfRange {
        synset: String,
        index: u16,
        len: usize,
    },
    #[error("graph has {0} nodes; node ids are limited to 32 bits")]
    TooLarge(usize),
    #[error("vocabulary must be sorted and duplicate-free (at position {0})")]
    UnsortedVocab(usize),
    #[error("edge ({0}, {1}) references a node outside the vocabulary")]
    NodeOutOfRange(NodeId, NodeId),
    #[error("graph cache has bad magic {0:?}, expected WNG1")]
    BadMagic([u8; 4]),
    #[error("graph cache is corrupt: {0}")]
    Corrupt(String),
    #[error("graph cache I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordGraph {
    vocab: Vec<String>,
    offsets: Vec<u32>,
    neighbors: Vec<NodeId>,
}

impl WordGraph {
    /// Builds a graph from a sorted vocabulary and an edge list. Self-loops
    /// and duplicate edges are dropped; edge direction is ignored.
    pub fn from_edges(
        vocab: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        if vocab.len() > u32::MAX as usize {
            return Err(GraphError::TooLarge(vocab.len()));
        }
        if let Some(i) = vocab.windows(2).position(|w| w[0] >= w[1]) {
            return Err(GraphError::UnsortedVocab(i + 1));
        }
        let n = vocab.len() as u32;
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v));
            }
            if u != v {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        Ok(Self::from_canonical_pairs(vocab, pairs))
    }

    /// `pairs` hold `(min, max)` with `min != max`, in any order.
    fn from_canonical_pairs(vocab: Vec<String>, mut pairs: Vec<(NodeId, NodeId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let n = vocab.len();
        let mut degree = vec![0u32; n];
        for &(u, v) in &pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0u32;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        let mut neighbors = vec![0; acc as usize];
        for &(u, v) in &pairs {
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        for u in 0..n {
            neighbors[offsets[u] as usize..offsets[u + 1] as usize].sort_unstable();
        }
        WordGraph {
            vocab,
            offsets,
            neighbors,
        }
    }

    pub fn node_count(&self) -> usize {
        self.vocab.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn lemma(&self, id: NodeId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn node_id(&self, lemma: &str) -> Option<NodeId> {
        self.vocab
            .binary_search_by(|l| l.as_str().cmp(lemma))
            .ok()
            .map(|i| i as NodeId)
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.neighbors[self.offsets[u] as usize..self.offsets[u + 1] as usize]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.neighbors(u).len()
    }

    /// Iterates undirected edges once each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// Canonical `WNG1` cache encoding. All integers are little-endian:
    ///
    /// ```text
    /// "WNG1" | n: u64 | vocab_len: u64 | n × (len: u32, utf8 bytes)
    ///        | offsets: (n + 1) × u32 | neighbors: offsets[n] × u32
    /// ```
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let vocab_len: usize = self.vocab.iter().map(|l| 4 + l.len()).sum();
        let mut out =
            Vec::with_capacity(20 + vocab_len + 4 * (self.offsets.len() + self.neighbors.len()));
        out.extend_from_slice(GRAPH_MAGIC);
        out.extend_from_slice(&(self.vocab.len() as u64).to_le_bytes());
        out.extend_from_slice(&(vocab_len as u64).to_le_bytes());
        for lemma in &self.vocab {
            out.extend_from_slice(&(lemma.len() as u32).to_le_bytes());
            out.extend_from_slice(lemma.as_bytes());
        }
        for o in &self.offsets {
            out.extend_from_slice(&o.to_le_bytes());
        }
        for v in &self.neighbors {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self, GraphError> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &magic != GRAPH_MAGIC {
            return Err(GraphError::BadMagic(magic));
        }
        let n = r.u64()? as usize;
        let vocab_len = r.u64()? as usize;
        let vocab_end = r
            .pos
            .checked_add(vocab_len)
            .ok_or_else(|| corrupt("vocab length"))?;
        let mut vocab = Vec::with_capacity(n.min(bytes.len()));
        for _ in 0..n {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            let lemma =
                std::str::from_utf8(raw).map_err(|_| corrupt("vocab entry is not UTF-8"))?;
            vocab.push(lemma.to_string());
        }
        if r.pos != vocab_end {
            return Err(corrupt("vocab block length mismatch"));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            offsets.push(r.u32()?);
        }
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(corrupt("offsets are not monotone from zero"));
        }
        let m = offsets[n] as usize;
        let mut neighbors = Vec::with_capacity(m);
        for _ in 0..m {
            neighbors.push(r.u32()?);
        }
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes after adjacency"));
        }
        let g = WordGraph {
            vocab,
            offsets,
            neighbors,
        };
        g.check_invariants().map_err(GraphError::Corrupt)?;
        Ok(g)
    }

    /// SHA-256 over the canonical cache bytes.
    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(self.to_cache_bytes()).into()
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        fs::write(path, self.to_cache_bytes()).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let bytes = fs::read(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_cache_bytes(&bytes)
    }

    /// Checks sortedness, symmetry, and absence of self-loops and duplicates.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(i) = self.vocab.windows(2).position(|w| w[0] >= w[1]) {
            return Err(format!("vocab unsorted at {}", i + 1));
        }
        let n = self.node_count() as NodeId;
        for u in 0..n {
            let adj = self.neighbors(u);
            if adj.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("adjacency of {u} not strictly sorted"));
            }
            for &v in adj {
                if v >= n {
                    return Err(format!("neighbor {v} of {u} out of range"));
                }
                if v == u {
                    return Err(format!("self-loop on {u}"));
                }
                if self.neighbors(v).binary_search(&u).is_err() {
                    return Err(format!("edge {u}->{v} has no reverse"));
                }
            }
        }
        Ok(())
    }
}

fn corrupt(msg: &str) -> GraphError {
    GraphError::Corrupt(msg.to_string())
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], GraphError> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, GraphError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn resolve_word(s: &Synset, index: u16) -> Result<&str, GraphError> {
    s.lemmas
        .get((index as usize).wrapping_sub(1))
        .map(String::as_str)
        .ok_or_else(|| GraphError::WordIndexOutOfRange {
            synset: s.id.to_string(),
            index,
            len: s.lemmas.len(),
        })
}

pub fn build_word_graph(db: &LexicalDatabase) -> Result<WordGraph, GraphError> {
    let mut vocab: Vec<String> = db
        .synsets()
        .iter()
        .flat_map(|s| s.lemmas.iter().cloned())
        .collect();
    vocab.sort_unstable();
    vocab.dedup();
    if vocab.len() > u32::MAX as usize {
        return Err(GraphError::TooLarge(vocab.len()));
    }
    let ids: HashMap<&str, NodeId> = vocab
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as NodeId))
        .collect();
    let members: Vec<Vec<NodeId>> = db
        .synsets()
        .iter()
        .map(|s| s.lemmas.iter().map(|l| ids[l.as_str()]).collect())
        .collect();

    let mut pairs = Vec::new();
    let mut push = |u: NodeId, v: NodeId| {
        if u != v {
            pairs.push((u.min(v), u.max(v)));
        }
    };

    // synonyms
    for m in &members {
        for (i, &u) in m.iter().enumerate() {
            for &v in &m[i + 1..] {
                push(u, v);
            }
        }
    }

    for r in db.relations() {
        // Endpoints are guaranteed by LexicalDatabase validation.
        let si = db.synset_index(&r.source).expect("validated source");
        let ti = db.synset_index(&r.target).expect("validated target");
        match r.words {
            Some((sw, tw)) => {
                let u = resolve_word(&db.synsets()[si], sw)?;
                let v = resolve_word(&db.synsets()[ti], tw)?;
                push(ids[u], ids[v]);
            }
            None => {
                for &u in &members[si] {
                    for &v in &members[ti] {
                        push(u, v);
                    }
                }
            }
        }
    }

    Ok(WordGraph::from_canonical_pairs(vocab, pairs))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// degree -> number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    /// Connected component sizes, largest first.
    pub component_sizes: Vec<usize>,
}

pub fn graph_stats(g: &WordGraph) -> GraphStats {
    let n = g.node_count();
    let mut degree_histogram = BTreeMap::new();
    for u in 0..n as NodeId {
        *degree_histogram.entry(g.degree(u)).or_insert(0) += 1;
    }
    let mut component_sizes = Vec::new();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start as NodeId);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in g.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        component_sizes.push(size);
    }
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    GraphStats {
        node_count: n,
        edge_count: g.edge_count(),
        degree_histogram,
        component_sizes,
    }
}
